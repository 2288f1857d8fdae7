#pragma once

// Time stepping: discrete gradient methods (first, second and fourth
// order, derivative-free or dual-number backed), the Newton solver with
// the initialization and termination policy used throughout, the RK4
// comparator and a step-halving reference solution.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddg/autodiff.hpp"
#include "ddg/discrete_gradient.hpp"
#include "ddg/finite_diff.hpp"
#include "ddg/linalg.hpp"
#include "ddg/systems.hpp"

namespace ddg {

enum class MethodKind { IA_DF, SIA_DF, SIA4_DF, IA_AD, SIA_AD, SIA4_AD, RK4 };

inline bool is_derivative_free(MethodKind m) {
    return m == MethodKind::IA_DF || m == MethodKind::SIA_DF || m == MethodKind::SIA4_DF;
}
inline bool uses_s4(MethodKind m) {
    return m == MethodKind::SIA4_DF || m == MethodKind::SIA4_AD;
}
inline DiscreteGradientKind dg_kind(MethodKind m) {
    return (m == MethodKind::IA_DF || m == MethodKind::IA_AD) ? DiscreteGradientKind::IA
                                                              : DiscreteGradientKind::SIA;
}

inline const char* method_name(MethodKind m) {
    switch (m) {
        case MethodKind::IA_DF: return "ia-df";
        case MethodKind::SIA_DF: return "sia-df";
        case MethodKind::SIA4_DF: return "sia4-df";
        case MethodKind::IA_AD: return "ia-ad";
        case MethodKind::SIA_AD: return "sia-ad";
        case MethodKind::SIA4_AD: return "sia4-ad";
        case MethodKind::RK4: return "rk4";
    }
    return "?";
}

struct NewtonConfig {
    double tol = 1e-11;
    int max_iter = 20;
    std::uint64_t seed = 0;
    FDConfig fd;
    // The derivative-free residual carries a roundoff floor of roughly
    // h * eps_bar^(2/3) * |grad H|, which can sit slightly above tol for
    // larger h. Once the residual stops improving near that floor, more
    // iterations only sample the noise, so the best iterate is accepted
    // provided its residual is within stagnation_factor * tol.
    int stagnation_window = 5;
    double stagnation_factor = 100.0;
};

struct StepResult {
    Vec xnext;
    int iterations = 0;
    double residual = 0.0;
    long long evals = 0;
};

struct MaxIterationsExceeded : std::runtime_error {
    double best_residual;
    explicit MaxIterationsExceeded(double res)
        : std::runtime_error("Newton iterations exceeded limit, best residual " +
                             std::to_string(res)),
          best_residual(res) {}
};

/// Skew part of the transposed-minus-original Jacobian of a discrete
/// gradient: Q = 0.5 * (D2^T - D2). Exactly skew-symmetric.
template <class T>
Matrix<T> q_matrix(const Matrix<T>& d2) {
    return skew_part(transpose(d2));
}

template <class Base>
Matrix<Base> to_matrix(const Matrix<double>& m) {
    Matrix<Base> r(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) r(i, j) = Base(m(i, j));
    return r;
}

/// Fourth-order correction matrix
///   S4 = S + (h/2) S [Q(x, (x+2xh)/3) - Q(xh, (2x+xh)/3)] S
///          - (h^2/12) S Hess(xb) S Hess(xb) S,   xb = (x+xh)/2,
/// given providers for D2 of the discrete gradient and the Hessian. The
/// result is skew-projected so skew-symmetry holds exactly in floating
/// point.
template <class Base, class D2Provider, class HessProvider>
Matrix<Base> s4(const Matrix<Base>& structure, std::span<const Base> x,
                std::span<const Base> xhat, double h, D2Provider&& d2_provider,
                HessProvider&& hess_provider) {
    const std::size_t n = x.size();
    std::vector<Base> a(n), b(n), mid(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = (x[i] + 2.0 * xhat[i]) / 3.0;
        b[i] = (2.0 * x[i] + xhat[i]) / 3.0;
        mid[i] = 0.5 * (x[i] + xhat[i]);
    }
    Matrix<Base> q1 = q_matrix(d2_provider(std::span<const Base>(x), std::span<const Base>(a)));
    Matrix<Base> q2 = q_matrix(d2_provider(std::span<const Base>(xhat), std::span<const Base>(b)));
    Matrix<Base> sh = structure * hess_provider(std::span<const Base>(mid));
    Matrix<Base> out = structure + (0.5 * h) * (structure * (q1 - q2) * structure) -
                       (h * h / 12.0) * (sh * sh * structure);
    return skew_part(out);
}

/// S4 with dual-number providers (the automatic-differentiation route).
template <class Base = double>
Matrix<Base> s4_ad(const HamiltonianSystem& sys, std::span<const Base> x,
                   std::span<const Base> xhat, double h, double tau1 = 1e-5) {
    Matrix<Base> structure = to_matrix<Base>(sys.structure);
    auto d2p = [&](std::span<const Base> p, std::span<const Base> q) {
        return d2_dg_ad<Base>(DiscreteGradientKind::SIA, sys, p, q, tau1);
    };
    auto hp = [&](std::span<const Base> p) { return hess_ad<Base>(sys, p); };
    return s4(structure, x, xhat, h, d2p, hp);
}

/// S4 with finite-difference providers; 9n^2 - 5n + 1 energy evaluations
/// (one Hessian, two off-diagonal D2 of the SIA discrete gradient).
template <class System>
Matrix<double> s4_tau(const System& sys, std::span<const double> x, std::span<const double> xhat,
                      double h, const FDConfig& fd, EvalCounter& c) {
    fd.validate();
    auto d2p = [&](std::span<const double> p, std::span<const double> q) {
        return fd_d2_sia(sys, p, q, fd.tau1, c, /*include_diagonal=*/false);
    };
    auto hp = [&](std::span<const double> p) { return fd_hessian(sys, p, fd.tau2, c); };
    return s4(structure_of(sys), x, xhat, h, d2p, hp);
}

namespace detail {

template <class System>
Matrix<double> method_sbar(const System& sys, MethodKind m, std::span<const double> x,
                           std::span<const double> xhat, double h, const NewtonConfig& cfg,
                           EvalCounter& c) {
    if (m == MethodKind::SIA4_DF) return s4_tau(sys, x, xhat, h, cfg.fd, c);
    if (m == MethodKind::SIA4_AD) return s4_ad<double>(clean_system(sys), x, xhat, h, cfg.fd.tau1);
    return structure_of(sys);
}

template <class System>
DGEval method_dg(const System& sys, MethodKind m, std::span<const double> x,
                 std::span<const double> xhat, const NewtonConfig& cfg, EvalCounter& c) {
    return dg_kind(m) == DiscreteGradientKind::IA ? ia_dg(sys, x, xhat, c, cfg.fd.tau1)
                                                  : sia_dg(sys, x, xhat, c, cfg.fd.tau1);
}

template <class System>
Matrix<double> method_d2(const System& sys, MethodKind m, std::span<const double> x,
                         std::span<const double> xhat, const NewtonConfig& cfg, EvalCounter& c) {
    switch (m) {
        case MethodKind::IA_DF:
            return fd_d2_ia(sys, x, xhat, cfg.fd.tau1, c);
        case MethodKind::SIA_DF:
        case MethodKind::SIA4_DF:
            return fd_d2_sia(sys, x, xhat, cfg.fd.tau1, c, /*include_diagonal=*/true);
        default:
            return d2_dg_ad<double>(dg_kind(m), clean_system(sys), x, xhat, cfg.fd.tau1);
    }
}

}  // namespace detail

/// Newton initialization policy: a seeded normal perturbation of size h for
/// the very first step (the discrete gradient needs xhat != x), linear
/// extrapolation afterwards.
inline Vec initial_guess(int step_index, std::span<const double> x_n,
                         std::optional<std::span<const double>> x_prev, double h,
                         std::mt19937_64& rng) {
    Vec g(x_n.begin(), x_n.end());
    if (step_index == 0) {
        std::normal_distribution<double> normal(0.0, 1.0);
        for (double& v : g) v += h * normal(rng);
    } else {
        if (!x_prev) throw std::invalid_argument("initial_guess: previous state required");
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = 2.0 * x_n[i] - (*x_prev)[i];
    }
    return g;
}

inline Vec initial_guess(int step_index, std::span<const double> x_n,
                         std::optional<std::span<const double>> x_prev, double h,
                         std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return initial_guess(step_index, x_n, x_prev, h, rng);
}

/// One implicit step: solve F(xh) = xh - x - h * Sbar * dg(x, xh) = 0 with
/// Newton iterations using the approximate Jacobian I - h * Sbar * D2.
/// Sbar and D2 are recomputed at every iterate.
template <class System>
StepResult newton_solve(const System& sys, MethodKind method, std::span<const double> x,
                        std::span<const double> guess, double h, const NewtonConfig& cfg,
                        EvalCounter& c) {
    if (h == 0.0) throw std::invalid_argument("newton_solve: h must be nonzero");
    if (cfg.tol <= 0.0 || cfg.max_iter < 1) throw std::invalid_argument("invalid Newton config");
    const std::size_t n = x.size();
    const long long evals_before = c.count;
    Vec xh(guess.begin(), guess.end());
    Vec best_x(xh);
    double best = std::numeric_limits<double>::infinity();
    int best_iter = 0;
    for (int iter = 0;; ++iter) {
        Matrix<double> sbar = detail::method_sbar(sys, method, x, xh, h, cfg, c);
        DGEval dg = detail::method_dg(sys, method, x, xh, cfg, c);
        Vec sdg = sbar * dg.value;
        Vec f(n);
        for (std::size_t i = 0; i < n; ++i) f[i] = xh[i] - x[i] - h * sdg[i];
        const double res = norm2(f);
        if (res < 0.9 * best) {
            best = res;
            best_x = xh;
            best_iter = iter;
        }
        if (res <= cfg.tol)
            return {std::move(xh), iter, res, c.count - evals_before};
        const bool stagnated = iter - best_iter >= cfg.stagnation_window || iter >= cfg.max_iter;
        if (stagnated && best <= cfg.stagnation_factor * cfg.tol)
            return {std::move(best_x), iter, best, c.count - evals_before};
        if (iter >= cfg.max_iter) throw MaxIterationsExceeded(best);
        Matrix<double> d2 = detail::method_d2(sys, method, x, xh, cfg, c);
        Matrix<double> jac = Matrix<double>::identity(n) - h * (sbar * d2);
        for (double& v : f) v = -v;
        Vec delta = lu_solve(jac, f);
        for (std::size_t i = 0; i < n; ++i) xh[i] += delta[i];
    }
}

/// Classic 4-stage Runge-Kutta step for xdot = S grad H(x). Uses the
/// analytic gradient when available, dual numbers otherwise.
template <class System>
Vec rk4_step(const System& sys, std::span<const double> x, double h) {
    const HamiltonianSystem& base = clean_system(sys);
    auto f = [&](const Vec& p) -> Vec {
        Vec g = base.analytic_gradient ? base.analytic_gradient(p)
                                       : grad_ad<double>(base, p);
        return base.structure * g;
    };
    const std::size_t n = x.size();
    Vec x0(x.begin(), x.end());
    Vec k1 = f(x0);
    Vec p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = x0[i] + 0.5 * h * k1[i];
    Vec k2 = f(p);
    for (std::size_t i = 0; i < n; ++i) p[i] = x0[i] + 0.5 * h * k2[i];
    Vec k3 = f(p);
    for (std::size_t i = 0; i < n; ++i) p[i] = x0[i] + h * k3[i];
    Vec k4 = f(p);
    for (std::size_t i = 0; i < n; ++i)
        x0[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return x0;
}

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<int> newton_iters;      // 0 for the initial state and RK4
    std::vector<double> residuals;
    std::vector<long long> evals_cum;   // cumulative solver H evaluations
    std::vector<double> energy;         // H(x_n), bookkeeping only

    std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
};

/// Integrate N uniform steps of the chosen method. Step failures are
/// rethrown with the step index attached.
template <class System>
Trajectory integrate(const System& sys, MethodKind method, const Vec& x0, double h, long long N,
                     const NewtonConfig& cfg) {
    if (N < 1) throw std::invalid_argument("integrate: N must be >= 1");
    check_finite(x0);
    Trajectory tr;
    tr.times.reserve(N + 1);
    tr.states.reserve(N + 1);
    EvalCounter work;
    EvalCounter scratch;  // bookkeeping H(x_n) reads, kept out of the work count
    std::mt19937_64 rng(cfg.seed);

    tr.times.push_back(0.0);
    tr.states.push_back(x0);
    tr.newton_iters.push_back(0);
    tr.residuals.push_back(0.0);
    tr.evals_cum.push_back(0);
    tr.energy.push_back(sys.eval(x0, scratch));

    for (long long step = 0; step < N; ++step) {
        const Vec& xn = tr.states.back();
        try {
            if (method == MethodKind::RK4) {
                tr.states.push_back(rk4_step(sys, xn, h));
                tr.newton_iters.push_back(0);
                tr.residuals.push_back(0.0);
            } else {
                std::optional<std::span<const double>> prev;
                if (step > 0) prev = std::span<const double>(tr.states[step - 1]);
                Vec guess = initial_guess(static_cast<int>(step), xn, prev, h, rng);
                StepResult r = newton_solve(sys, method, xn, guess, h, cfg, work);
                tr.states.push_back(std::move(r.xnext));
                tr.newton_iters.push_back(r.iterations);
                tr.residuals.push_back(r.residual);
            }
        } catch (const std::exception& e) {
            throw std::runtime_error("step " + std::to_string(step + 1) + " failed: " + e.what());
        }
        tr.times.push_back((step + 1) * h);
        tr.evals_cum.push_back(work.count);
        tr.energy.push_back(sys.eval(tr.states.back(), scratch));
    }
    return tr;
}

/// RK4 reference solution at time T, step-halved until two refinements
/// agree below 1e-12.
template <class System>
Vec reference_solution(const System& sys, const Vec& x0, double T) {
    if (T < 0.0) throw std::invalid_argument("reference_solution: T must be non-negative");
    if (T == 0.0) return x0;
    long long N = std::max<long long>(16, static_cast<long long>(std::ceil(T / 0.01)));
    auto run = [&](long long steps) {
        Vec x = x0;
        const double h = T / static_cast<double>(steps);
        for (long long i = 0; i < steps; ++i) x = rk4_step(sys, x, h);
        return x;
    };
    Vec prev = run(N);
    for (int level = 0; level < 24; ++level) {
        N *= 2;
        Vec cur = run(N);
        double diff = 0.0;
        for (std::size_t i = 0; i < cur.size(); ++i) diff += (cur[i] - prev[i]) * (cur[i] - prev[i]);
        if (std::sqrt(diff) < 1e-12) return cur;
        prev = std::move(cur);
    }
    throw std::runtime_error("reference_solution: refinement did not converge");
}

// ---------------------------------------------------------------------------
// Exact residual / Jacobian oracles for the fourth-order scheme, used by
// the inexactness studies. F uses the dual-number S4; its exact Jacobian
// (including the dS4/dxhat term) is obtained by running F itself in
// nested dual arithmetic.
// ---------------------------------------------------------------------------

template <class Base = double>
std::vector<Base> sia4_residual_ad(const HamiltonianSystem& sys, std::span<const Base> x,
                                   std::span<const Base> xhat, double h, double tau1 = 1e-5) {
    const auto& H = sys.template energy_as<Base>();
    Matrix<Base> s4m = s4_ad<Base>(sys, x, xhat, h, tau1);
    std::vector<Base> dg = sia_dg_generic<Base>(H, x, xhat, tau1);
    std::vector<Base> sdg = s4m * dg;
    std::vector<Base> f(x.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = xhat[i] - x[i] - h * sdg[i];
    return f;
}

inline Matrix<double> sia4_jacobian_ad(const HamiltonianSystem& sys, std::span<const double> x,
                                       std::span<const double> xhat, double h,
                                       double tau1 = 1e-5) {
    using D = Dual<double>;
    const std::size_t n = x.size();
    std::vector<D> xd(n), xhd(n);
    for (std::size_t i = 0; i < n; ++i) {
        xd[i] = D(x[i], 0.0);
        xhd[i] = D(xhat[i], 0.0);
    }
    Matrix<double> jac(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        xhd[j].d = 1.0;
        std::vector<D> f = sia4_residual_ad<D>(sys, xd, xhd, h, tau1);
        for (std::size_t i = 0; i < n; ++i) jac(i, j) = f[i].d;
        xhd[j].d = 0.0;
    }
    return jac;
}

}  // namespace ddg
