#pragma once

// Hamiltonian system abstraction and the built-in benchmark systems.
//
// An energy function is written once as a generic callable over the scalar
// type; construction instantiates it for double and for the (nested) dual
// scalars so the same expression serves plain evaluation, forward-mode
// differentiation and second-order jets.

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ddg/dual.hpp"
#include "ddg/linalg.hpp"

namespace ddg {

using Vec = std::vector<double>;

/// Counts energy evaluations; one increment per evaluation, never reset.
struct EvalCounter {
    long long count = 0;
    void tick() { ++count; }
};

inline void check_finite(std::span<const double> x) {
    for (double v : x)
        if (!std::isfinite(v)) throw std::invalid_argument("state contains NaN/Inf");
}

inline bool is_skew(const Matrix<double>& s) {
    if (s.rows() != s.cols()) return false;
    for (std::size_t i = 0; i < s.rows(); ++i)
        for (std::size_t j = 0; j < s.cols(); ++j)
            if (s(i, j) != -s(j, i)) return false;
    return true;
}

/// Canonical structure matrix [[0, I], [-I, 0]] for even n.
inline Matrix<double> canonical_skew(std::size_t n) {
    if (n % 2 != 0) throw std::invalid_argument("canonical structure matrix needs even n");
    Matrix<double> s(n, n);
    const std::size_t d = n / 2;
    for (std::size_t i = 0; i < d; ++i) {
        s(i, i + d) = 1.0;
        s(i + d, i) = -1.0;
    }
    return s;
}

template <class S>
using EnergyFn = std::function<S(std::span<const S>)>;

using Dual1d = Dual<double>;
using Dual2d = Dual2<double>;
using DualDual = Dual<Dual<double>>;
using Dual2Dual = Dual2<Dual<double>>;

struct HamiltonianSystem {
    std::size_t n = 0;
    EnergyFn<double> energy;
    EnergyFn<Dual1d> energy_dual;       // empty when the energy is not differentiable
    EnergyFn<Dual2d> energy_dual2;      //   through dual scalars (e.g. spline terrain)
    EnergyFn<DualDual> energy_dd;
    EnergyFn<Dual2Dual> energy_d2d;
    std::function<Vec(std::span<const double>)> analytic_gradient;  // optional
    Matrix<double> structure;

    std::size_t dim() const { return n; }

    bool has_dual() const { return static_cast<bool>(energy_dual); }

    double eval(std::span<const double> x, EvalCounter& c) const {
        if (x.size() != n) throw std::invalid_argument("eval_energy: dimension mismatch");
        c.tick();
        return energy(x);
    }

    template <class S>
    const EnergyFn<S>& energy_as() const {
        if constexpr (std::is_same_v<S, double>) return energy;
        else if constexpr (std::is_same_v<S, Dual1d>) return require_dual(energy_dual);
        else if constexpr (std::is_same_v<S, Dual2d>) return require_dual(energy_dual2);
        else if constexpr (std::is_same_v<S, DualDual>) return require_dual(energy_dd);
        else return require_dual(energy_d2d);
    }

  private:
    template <class F>
    static const F& require_dual(const F& f) {
        if (!f) throw std::logic_error("system does not support dual-number evaluation");
        return f;
    }
};

/// Build a system from a scalar-generic energy callable.
template <class F>
HamiltonianSystem make_system(std::size_t n, F f, Matrix<double> structure,
                              std::function<Vec(std::span<const double>)> grad = {}) {
    if (!is_skew(structure) || structure.rows() != n)
        throw std::invalid_argument("structure matrix must be n x n skew-symmetric");
    HamiltonianSystem sys;
    sys.n = n;
    sys.energy = [f](std::span<const double> x) { return f(x); };
    sys.energy_dual = [f](std::span<const Dual1d> x) { return f(x); };
    sys.energy_dual2 = [f](std::span<const Dual2d> x) { return f(x); };
    sys.energy_dd = [f](std::span<const DualDual> x) { return f(x); };
    sys.energy_d2d = [f](std::span<const Dual2Dual> x) { return f(x); };
    sys.analytic_gradient = std::move(grad);
    sys.structure = std::move(structure);
    return sys;
}

/// Instrumented access to H; returns H(x) and bumps the counter.
inline double eval_energy(const HamiltonianSystem& sys, std::span<const double> x, EvalCounter& c) {
    return sys.eval(x, c);
}

// ---------------------------------------------------------------------------
// Finite-precision wrapper: H(x) + eps(x) with |eps| <= eps_bar, where eps
// is a deterministic function of (seed, bits of x). Difference quotients
// therefore see a fixed perturbed function, not fresh randomness.
// ---------------------------------------------------------------------------

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace detail

struct NoisyHamiltonian {
    HamiltonianSystem base;
    double noise_bound = 0.0;  // eps_bar, absolute
    std::uint64_t seed = 0;

    std::size_t dim() const { return base.n; }
    const Matrix<double>& structure_matrix() const { return base.structure; }

    double noise_at(std::span<const double> x) const {
        std::uint64_t h = detail::mix64(seed ^ 0x5851f42d4c957f2dULL);
        for (double v : x) h = detail::mix64(h ^ std::bit_cast<std::uint64_t>(v));
        // map to [-1, 1)
        const double u = 2.0 * (static_cast<double>(h >> 11) * 0x1.0p-53) - 1.0;
        return noise_bound * u;
    }

    double eval(std::span<const double> x, EvalCounter& c) const {
        return base.eval(x, c) + noise_at(x);
    }
};

inline double eval_energy(const NoisyHamiltonian& sys, std::span<const double> x, EvalCounter& c) {
    return sys.eval(x, c);
}

inline const Matrix<double>& structure_of(const HamiltonianSystem& s) { return s.structure; }
inline const Matrix<double>& structure_of(const NoisyHamiltonian& s) { return s.base.structure; }

/// Clean system behind a possibly noisy one (for dual-number providers).
inline const HamiltonianSystem& clean_system(const HamiltonianSystem& s) { return s; }
inline const HamiltonianSystem& clean_system(const NoisyHamiltonian& s) { return s.base; }

// ---------------------------------------------------------------------------
// Built-in benchmark systems
// ---------------------------------------------------------------------------

/// H = 0.5 * x^T x with canonical structure; exact flow is a rotation.
inline HamiltonianSystem make_harmonic(std::size_t n) {
    if (n % 2 != 0) throw std::invalid_argument("make_harmonic: n must be even");
    auto energy = []<class S>(std::span<const S> x) {
        S s(0.0);
        for (const S& v : x) s += v * v;
        return 0.5 * s;
    };
    auto grad = [](std::span<const double> x) { return Vec(x.begin(), x.end()); };
    return make_system(n, energy, canonical_skew(n), grad);
}

/// Lennard-Jones oscillator: H(q, p) = p^2/2 + (q^-12 - 2 q^-6)/4.
inline HamiltonianSystem make_lennard_jones() {
    auto energy = []<class S>(std::span<const S> x) {
        const S& q = x[0];
        const S& p = x[1];
        if (to_double(q) == 0.0) throw std::domain_error("Lennard-Jones potential singular at q=0");
        S q6 = ipow(q, -6);
        return 0.5 * p * p + 0.25 * (q6 * q6 - 2.0 * q6);
    };
    auto grad = [](std::span<const double> x) {
        const double q = x[0];
        if (q == 0.0) throw std::domain_error("Lennard-Jones potential singular at q=0");
        return Vec{3.0 * (std::pow(q, -7.0) - std::pow(q, -13.0)), x[1]};
    };
    return make_system(2, energy, canonical_skew(2), grad);
}

/// Double pendulum with non-separable Hamiltonian, state [q1, q2, p1, p2].
inline HamiltonianSystem make_double_pendulum() {
    auto energy = []<class S>(std::span<const S> x) {
        const S& q1 = x[0];
        const S& q2 = x[1];
        const S& p1 = x[2];
        const S& p2 = x[3];
        S sd = sin(q1 - q2);
        S num = 0.5 * p1 * p1 + p2 * p2 - p1 * p2 * cos(q1 - q2);
        return num / (1.0 + sd * sd) - 2.0 * cos(q1) - cos(q2);
    };
    return make_system(4, energy, canonical_skew(4));
}

}  // namespace ddg
