#pragma once

// Itoh-Abe and symmetrized Itoh-Abe discrete gradients.
//
// Component i of the IA discrete gradient is the divided difference of H
// along coordinate i through the shifted concatenation points
//   Xhat_m = [xhat_1..xhat_m, x_{m+1}..x_n].
// The SIA discrete gradient averages IA(x, xhat) with IA(xhat, x), which
// makes it symmetric in its arguments and second order.
//
// Evaluation counts are part of the contract: IA uses exactly 2n energy
// evaluations, SIA exactly 4n. No H value is cached across components.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "ddg/systems.hpp"

namespace ddg {

struct DGEval {
    Vec value;
    long long evals_used = 0;
};

enum class DiscreteGradientKind { IA, SIA };

/// Threshold under which a coordinate pair counts as degenerate.
inline double degenerate_threshold(double xi) { return 1e-8 * (1.0 + std::abs(xi)); }

/// IA discrete gradient in generic scalar arithmetic. H must be callable as
/// S(span<const S>). When |xhat_i - x_i| falls below the degenerate
/// threshold, component i is the central difference of H at Xhat_i with
/// step tau1 (the derivative-free surrogate for dH/dx_i there). Either
/// branch costs two evaluations of H, 2n in total.
template <class S, class F>
std::vector<S> ia_dg_generic(F&& H, std::span<const S> x, std::span<const S> xhat, double tau1) {
    const std::size_t n = x.size();
    if (xhat.size() != n) throw std::invalid_argument("ia_dg: dimension mismatch");
    std::vector<S> pt(x.begin(), x.end());  // Xhat_0
    std::vector<S> g(n, S(0.0));
    for (std::size_t i = 0; i < n; ++i) {
        const double step = to_double(xhat[i]) - to_double(x[i]);
        if (std::abs(step) < degenerate_threshold(to_double(x[i]))) {
            pt[i] = xhat[i];
            S save = pt[i];
            pt[i] = save + tau1;
            S fp = H(std::span<const S>(pt));
            pt[i] = save - tau1;
            S fm = H(std::span<const S>(pt));
            pt[i] = save;
            g[i] = (fp - fm) / (2.0 * tau1);
        } else {
            S f0 = H(std::span<const S>(pt));
            pt[i] = xhat[i];
            S f1 = H(std::span<const S>(pt));
            g[i] = (f1 - f0) / (xhat[i] - x[i]);
        }
    }
    return g;
}

/// SIA discrete gradient: 0.5 * (IA(x, xhat) + IA(xhat, x)). 4n evaluations.
template <class S, class F>
std::vector<S> sia_dg_generic(F&& H, std::span<const S> x, std::span<const S> xhat, double tau1) {
    std::vector<S> a = ia_dg_generic<S>(H, x, xhat, tau1);
    std::vector<S> b = ia_dg_generic<S>(H, xhat, x, tau1);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = 0.5 * (a[i] + b[i]);
    return a;
}

namespace detail {
template <class System>
auto counted_energy(const System& sys, EvalCounter& c) {
    return [&sys, &c](std::span<const double> p) { return sys.eval(p, c); };
}
}  // namespace detail

template <class System>
DGEval ia_dg(const System& sys, std::span<const double> x, std::span<const double> xhat,
             EvalCounter& c, double tau1 = 1e-5) {
    const long long before = c.count;
    Vec v = ia_dg_generic<double>(detail::counted_energy(sys, c), x, xhat, tau1);
    return {std::move(v), c.count - before};
}

template <class System>
DGEval sia_dg(const System& sys, std::span<const double> x, std::span<const double> xhat,
              EvalCounter& c, double tau1 = 1e-5) {
    const long long before = c.count;
    Vec v = sia_dg_generic<double>(detail::counted_energy(sys, c), x, xhat, tau1);
    return {std::move(v), c.count - before};
}

}  // namespace ddg
