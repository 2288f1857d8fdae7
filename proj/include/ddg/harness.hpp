#pragma once

// Experiment drivers: convergence-order studies, energy drift series,
// per-iteration evaluation counting, inexactness studies for S4^tau / F_tau
// / F'_tau, and work-precision sweeps. The CLI and the acceptance suite
// both run through these.

#include <chrono>
#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ddg/integrators.hpp"
#include "ddg/systems.hpp"

namespace ddg {

/// Least-squares slope of log(err) vs log(h), using only points with
/// err > floor.
inline double fit_loglog_slope(std::span<const double> h, std::span<const double> err,
                               double floor = 1e-10) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (!(err[i] > floor)) continue;
        const double x = std::log(h[i]), y = std::log(err[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m < 2) throw std::runtime_error("slope fit needs at least two points above the floor");
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

struct ConvergencePoint {
    double h;
    double global_error;
    long long total_evals;
    double wall_seconds;
};

struct ConvergenceResult {
    MethodKind method;
    std::vector<ConvergencePoint> points;
    double slope = 0.0;
};

/// Global error at T over a grid of step sizes, one result per method.
template <class System>
std::vector<ConvergenceResult> convergence_study(const System& sys,
                                                 std::span<const MethodKind> methods,
                                                 const Vec& x0, std::span<const double> hs,
                                                 double T, const NewtonConfig& cfg,
                                                 double slope_floor = 1e-10) {
    if (hs.size() < 3) throw std::invalid_argument("convergence study needs >= 3 step sizes");
    const Vec ref = reference_solution(clean_system(sys), x0, T);
    std::vector<ConvergenceResult> out;
    for (MethodKind m : methods) {
        ConvergenceResult r{m, {}, 0.0};
        std::vector<double> hv, ev;
        for (double h : hs) {
            const long long N = std::llround(T / h);
            const auto t0 = std::chrono::steady_clock::now();
            Trajectory tr = integrate(sys, m, x0, T / static_cast<double>(N), N, cfg);
            const auto t1 = std::chrono::steady_clock::now();
            Vec diff(ref.size());
            const Vec& xn = tr.states.back();
            for (std::size_t i = 0; i < ref.size(); ++i) diff[i] = xn[i] - ref[i];
            const double err = norm2(diff);
            r.points.push_back({h, err, tr.evals_cum.back(),
                                std::chrono::duration<double>(t1 - t0).count()});
            hv.push_back(h);
            ev.push_back(err);
        }
        r.slope = fit_loglog_slope(hv, ev, slope_floor);
        out.push_back(std::move(r));
    }
    return out;
}

/// |H(x_n) - H(x_0)| over a trajectory.
inline std::vector<double> energy_drift(const Trajectory& tr) {
    std::vector<double> d(tr.energy.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::abs(tr.energy[i] - tr.energy.front());
    return d;
}

inline double max_energy_drift(const Trajectory& tr) {
    double m = 0.0;
    for (double d : energy_drift(tr)) m = std::max(m, d);
    return m;
}

// ---------------------------------------------------------------------------
// Per-iteration evaluation accounting
// ---------------------------------------------------------------------------

struct IterationCost {
    long long measured;
    long long formula;
};

inline long long iteration_count_formula(MethodKind m, long long n) {
    switch (m) {
        case MethodKind::IA_DF: return 2 * n * n + 4 * n;
        case MethodKind::SIA_DF: return 4 * n * n + 8 * n;
        case MethodKind::SIA4_DF: return 13 * n * n + 3 * n + 1;
        default: throw std::invalid_argument("evaluation-count formula only for DF methods");
    }
}

/// Run exactly one full Newton iteration (Sbar + discrete gradient + D2)
/// at a fixed state and measure the energy evaluations consumed.
template <class System>
IterationCost measure_newton_iteration(const System& sys, MethodKind m, const Vec& x, double h,
                                       const NewtonConfig& cfg) {
    const std::size_t n = x.size();
    Vec xhat = x;
    std::mt19937_64 rng(cfg.seed + 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : xhat) v += h * normal(rng);
    EvalCounter c;
    const long long before = c.count;
    Matrix<double> sbar = detail::method_sbar(sys, m, x, xhat, h, cfg, c);
    DGEval dg = detail::method_dg(sys, m, x, xhat, cfg, c);
    Matrix<double> d2 = detail::method_d2(sys, m, x, xhat, cfg, c);
    (void)sbar;
    (void)dg;
    (void)d2;
    return {c.count - before, iteration_count_formula(m, static_cast<long long>(n))};
}

// ---------------------------------------------------------------------------
// Inexactness study (S4^tau, F_tau, F'_tau against dual-number oracles)
// ---------------------------------------------------------------------------

struct InexactnessPoint {
    double h;
    double err_s4;        // max-entry norm of S4^tau - S4
    double err_f;         // max-entry norm of F_tau - F
    double err_fprime;    // max-entry norm of F'_tau - F'
    double theory_s4;     // eps^(2/3) + h^2 eps^(1/2)
    double theory_f;      // h eps^(2/3) + h^3 eps^(1/2)
    double theory_fprime; // eps^(2/3) + h^2 + h^3 eps^(1/2)
};

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// Compare the finite-difference S4^tau, F_tau, F'_tau on `sys` (which may
/// carry injected noise) against dual-number oracles on the clean system.
/// xhat is taken near the flow, xhat = x + h S grad H(x), so the 1/h_i
/// factors in the discrete gradient scale with h as in a real step.
template <class System>
std::vector<InexactnessPoint> inexactness_study(const System& sys, const Vec& x,
                                                std::span<const double> hs, const FDConfig& fd) {
    const HamiltonianSystem& clean = clean_system(sys);
    const std::size_t n = x.size();
    const double eps = fd.eps_bar;
    std::vector<InexactnessPoint> out;
    Vec flow = clean.structure * grad_ad<double>(clean, x);
    for (double h : hs) {
        Vec xhat(n);
        for (std::size_t i = 0; i < n; ++i) xhat[i] = x[i] + h * flow[i];
        EvalCounter c;
        Matrix<double> s4t = s4_tau(sys, x, xhat, h, fd, c);
        Matrix<double> s4e = s4_ad<double>(clean, x, xhat, h, fd.tau1);

        Vec dg_tau = sia_dg(sys, x, xhat, c, fd.tau1).value;
        Vec s4t_dg = s4t * dg_tau;
        Vec f_tau(n);
        for (std::size_t i = 0; i < n; ++i) f_tau[i] = xhat[i] - x[i] - h * s4t_dg[i];
        Vec f_exact = sia4_residual_ad<double>(clean, x, xhat, h, fd.tau1);

        Matrix<double> d2t = fd_d2_sia(sys, x, xhat, fd.tau1, c, true);
        Matrix<double> fp_tau = Matrix<double>::identity(n) - h * (s4t * d2t);
        Matrix<double> fp_exact = sia4_jacobian_ad(clean, x, xhat, h, fd.tau1);

        InexactnessPoint p;
        p.h = h;
        p.err_s4 = max_abs(s4t - s4e);
        p.err_f = max_abs_diff(f_tau, f_exact);
        p.err_fprime = max_abs(fp_tau - fp_exact);
        const double e23 = std::pow(eps, 2.0 / 3.0), e12 = std::sqrt(eps);
        p.theory_s4 = e23 + h * h * e12;
        p.theory_f = h * e23 + h * h * h * e12;
        p.theory_fprime = e23 + h * h + h * h * h * e12;
        out.push_back(p);
    }
    return out;
}

}  // namespace ddg
