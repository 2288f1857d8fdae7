#pragma once

// Derivative-free approximations: the symmetric-difference Hessian, the
// midpoint-rule Jacobians of the IA/SIA discrete gradients, and optimal
// finite-difference step sizes under finite evaluation precision.
//
// Evaluation counts are part of the contract:
//   Hessian:               n^2 + 3n + 1
//   D2 of SIA (diagonal):  4(n^2 + n), without diagonal 4(n^2 - n)
//   D2 of IA:              2(n^2 + n)
// The Hessian count is achieved by evaluating the pair operator
// Delta_2(i, j) only for i <= j (it is symmetric in (i, j)); the i = j
// entries use H(x +- 2 tau e_i). That gives 1 + 2n + (n^2 + n) distinct
// evaluations, matching the stated total.

#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ddg/discrete_gradient.hpp"
#include "ddg/linalg.hpp"
#include "ddg/systems.hpp"

namespace ddg {

struct FDConfig {
    double tau1 = 1e-5;      // step for D2 of the discrete gradient
    double tau2 = 1e-4;      // step for the Hessian
    double eps_bar = 1e-15;  // assumed evaluation precision

    void validate() const {
        if (tau1 <= 0.0 || tau2 <= 0.0) throw std::invalid_argument("FD steps must be positive");
        if (eps_bar < 0.0) throw std::invalid_argument("eps_bar must be non-negative");
    }
};

/// Error-optimal steps: tau1 = eps^(1/3) for first derivatives,
/// tau2 = eps^(1/4) for second derivatives.
inline std::pair<double, double> optimal_steps(double eps_bar) {
    if (eps_bar <= 0.0) throw std::invalid_argument("optimal_steps: eps_bar must be positive");
    return {std::cbrt(eps_bar), std::pow(eps_bar, 0.25)};
}

/// Symmetric second-order Hessian approximation, error O(tau^2 + eps/tau^2).
template <class System>
Matrix<double> fd_hessian(const System& sys, std::span<const double> x, double tau2,
                          EvalCounter& c) {
    if (tau2 <= 0.0) throw std::invalid_argument("fd_hessian: tau2 must be positive");
    const std::size_t n = x.size();
    Vec p(x.begin(), x.end());
    auto H = [&](const Vec& v) { return sys.eval(v, c); };

    const double h0 = H(p);
    Vec d1(n);
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = x[i] + tau2;
        const double fp = H(p);
        p[i] = x[i] - tau2;
        const double fm = H(p);
        p[i] = x[i];
        d1[i] = fp + fm;
    }
    Matrix<double> d2(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            p[i] += tau2;
            p[j] += tau2;  // i == j hits the same slot twice: x + 2 tau e_i
            const double fp = H(p);
            p[i] = x[i];
            p[j] = x[j];
            p[i] -= tau2;
            p[j] -= tau2;
            const double fm = H(p);
            p[i] = x[i];
            p[j] = x[j];
            d2(i, j) = d2(j, i) = fp + fm;
        }
    Matrix<double> hess(n, n);
    const double scale = 1.0 / (2.0 * tau2 * tau2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            hess(i, j) = scale * (2.0 * h0 + d2(i, j) - d1[i] - d1[j]);
    return hess;
}

namespace detail {

/// Midpoint partial derivative of H along coordinate j at point p.
template <class F>
double midpoint_partial(F&& H, Vec& p, std::size_t j, double tau) {
    const double save = p[j];
    p[j] = save + tau;
    const double fp = H(p);
    p[j] = save - tau;
    const double fm = H(p);
    p[j] = save;
    return (fp - fm) / (2.0 * tau);
}

/// Divided-difference denominator with the degenerate-coordinate clamp.
inline double safe_step(double xi, double xhi) {
    const double h = xhi - xi;
    const double th = degenerate_threshold(xi);
    if (std::abs(h) >= th) return h;
    return h >= 0.0 ? th : -th;
}

/// The divided-difference rows amplify evaluation roundoff by 1 / h_i.
/// Below this gap the rows are computed from direct second-derivative
/// stencils instead (the divided difference equals the cross partial at
/// the coordinate midpoint up to O(h_i^2)). The threshold balances the
/// 1 / h_i roundoff growth against the O(h_i^2) midpoint truncation at
/// machine precision.
inline double degenerate_switch(double xi) { return 5e-4 * (1.0 + std::abs(xi)); }

/// Step for direct second-derivative stencils, matched to tau1 the way
/// the optimal steps are matched to each other (tau2 = tau1^(3/4) when
/// tau1 = eps^(1/3)).
inline double second_order_step(double tau1) { return std::pow(tau1, 0.75); }

/// Cross partial d_i d_j H at p (i != j), four evaluations.
template <class F>
double cross_partial(F&& H, Vec& p, std::size_t i, std::size_t j, double tau) {
    const double si = p[i], sj = p[j];
    p[i] = si + tau;
    p[j] = sj + tau;
    const double fpp = H(p);
    p[i] = si - tau;
    const double fmp = H(p);
    p[j] = sj - tau;
    const double fmm = H(p);
    p[i] = si + tau;
    const double fpm = H(p);
    p[i] = si;
    p[j] = sj;
    return (fpp - fmp + fmm - fpm) / (4.0 * tau * tau);
}

/// Pure second partial d_i d_i H at p from a four-point stencil that
/// avoids the center value (cost parity with the divided-difference
/// branch): (H(+2t) + H(-2t) - H(+t) - H(-t)) / (3 t^2).
template <class F>
double second_partial_4pt(F&& H, Vec& p, std::size_t i, double tau) {
    const double s = p[i];
    p[i] = s + 2.0 * tau;
    const double f2p = H(p);
    p[i] = s - 2.0 * tau;
    const double f2m = H(p);
    p[i] = s + tau;
    const double f1p = H(p);
    p[i] = s - tau;
    const double f1m = H(p);
    p[i] = s;
    return (f2p + f2m - f1p - f1m) / (3.0 * tau * tau);
}

/// Xhat_m = [xhat_1..xhat_m, x_{m+1}..x_n] (m entries taken from xhat).
inline Vec concat_hat(std::span<const double> x, std::span<const double> xhat, std::size_t m) {
    Vec p(x.begin(), x.end());
    for (std::size_t k = 0; k < m; ++k) p[k] = xhat[k];
    return p;
}

/// X_m = [x_1..x_m, xhat_{m+1}..x_n] (entries beyond m taken from xhat).
inline Vec concat_plain(std::span<const double> x, std::span<const double> xhat, std::size_t m) {
    Vec p(xhat.begin(), xhat.end());
    for (std::size_t k = 0; k < m; ++k) p[k] = x[k];
    return p;
}

}  // namespace detail

/// Midpoint-rule approximation of D2 of the SIA discrete gradient,
/// error O(tau1^2 / h). Entry (i, j) in one-based terms:
///   j < i : (1 / 2h_i) * d/dxh_j [ H(Xhat_i) - H(Xhat_{i-1}) ]
///   j > i : (1 / 2h_i) * d/dxh_j [ H(X_{i-1}) - H(X_i) ]
///   j = i : (1 / 2h_i) (d_i H(Xhat_i) + d_i H(X_{i-1})) - N_i / (2 h_i^2)
/// with N_i the SIA numerator. The diagonal can be skipped when only the
/// skew part is needed.
template <class System>
Matrix<double> fd_d2_sia(const System& sys, std::span<const double> x,
                         std::span<const double> xhat, double tau1, EvalCounter& c,
                         bool include_diagonal = true) {
    if (tau1 <= 0.0) throw std::invalid_argument("fd_d2_sia: tau1 must be positive");
    const std::size_t n = x.size();
    if (xhat.size() != n) throw std::invalid_argument("fd_d2_sia: dimension mismatch");
    auto H = [&](const Vec& v) { return sys.eval(v, c); };
    Matrix<double> d2(n, n);
    const double tau2 = detail::second_order_step(tau1);
    for (std::size_t i = 0; i < n; ++i) {
        Vec hat_i = detail::concat_hat(x, xhat, i + 1);      // Xhat_i
        Vec hat_im1 = detail::concat_hat(x, xhat, i);        // Xhat_{i-1}
        Vec pl_i = detail::concat_plain(x, xhat, i + 1);     // X_i
        Vec pl_im1 = detail::concat_plain(x, xhat, i);       // X_{i-1}
        if (std::abs(xhat[i] - x[i]) < detail::degenerate_switch(x[i])) {
            // Near-degenerate coordinate: the pairs above almost coincide
            // and the 1 / h_i rows would amplify roundoff. Use midpoint
            // second-derivative stencils with identical evaluation cost.
            Vec mid_hat = hat_im1;  // coordinate i at the gap midpoint
            Vec mid_pl = pl_i;
            mid_hat[i] = mid_pl[i] = 0.5 * (x[i] + xhat[i]);
            for (std::size_t j = 0; j < n; ++j) {
                if (j < i) {
                    d2(i, j) = 0.5 * detail::cross_partial(H, mid_hat, i, j, tau2);
                } else if (j > i) {
                    d2(i, j) = 0.5 * detail::cross_partial(H, mid_pl, i, j, tau2);
                } else if (include_diagonal) {
                    d2(i, i) = 0.25 * (detail::second_partial_4pt(H, mid_hat, i, tau2) +
                                       detail::second_partial_4pt(H, mid_pl, i, tau2));
                }
            }
            continue;
        }
        const double hi = detail::safe_step(x[i], xhat[i]);
        for (std::size_t j = 0; j < n; ++j) {
            if (j < i) {
                d2(i, j) = (detail::midpoint_partial(H, hat_i, j, tau1) -
                            detail::midpoint_partial(H, hat_im1, j, tau1)) /
                           (2.0 * hi);
            } else if (j > i) {
                d2(i, j) = (detail::midpoint_partial(H, pl_im1, j, tau1) -
                            detail::midpoint_partial(H, pl_i, j, tau1)) /
                           (2.0 * hi);
            } else if (include_diagonal) {
                const double di = detail::midpoint_partial(H, hat_i, i, tau1) +
                                  detail::midpoint_partial(H, pl_im1, i, tau1);
                const double num = H(hat_i) - H(hat_im1) - H(pl_i) + H(pl_im1);
                d2(i, i) = di / (2.0 * hi) - num / (2.0 * hi * hi);
            }
        }
    }
    return d2;
}

/// Midpoint-rule approximation of D2 of the IA discrete gradient. Rows only
/// depend on xhat_j for j <= i, so the upper triangle is zero.
template <class System>
Matrix<double> fd_d2_ia(const System& sys, std::span<const double> x,
                        std::span<const double> xhat, double tau1, EvalCounter& c) {
    if (tau1 <= 0.0) throw std::invalid_argument("fd_d2_ia: tau1 must be positive");
    const std::size_t n = x.size();
    if (xhat.size() != n) throw std::invalid_argument("fd_d2_ia: dimension mismatch");
    auto H = [&](const Vec& v) { return sys.eval(v, c); };
    Matrix<double> d2(n, n);
    const double tau2 = detail::second_order_step(tau1);
    for (std::size_t i = 0; i < n; ++i) {
        Vec hat_i = detail::concat_hat(x, xhat, i + 1);
        Vec hat_im1 = detail::concat_hat(x, xhat, i);
        if (std::abs(xhat[i] - x[i]) < detail::degenerate_switch(x[i])) {
            Vec mid = hat_im1;
            mid[i] = 0.5 * (x[i] + xhat[i]);
            for (std::size_t j = 0; j < i; ++j)
                d2(i, j) = detail::cross_partial(H, mid, i, j, tau2);
            d2(i, i) = 0.5 * detail::second_partial_4pt(H, mid, i, tau2);
            continue;
        }
        const double hi = detail::safe_step(x[i], xhat[i]);
        for (std::size_t j = 0; j < i; ++j)
            d2(i, j) = (detail::midpoint_partial(H, hat_i, j, tau1) -
                        detail::midpoint_partial(H, hat_im1, j, tau1)) /
                       hi;
        const double di = detail::midpoint_partial(H, hat_i, i, tau1);
        const double num = H(hat_i) - H(hat_im1);
        d2(i, i) = di / hi - num / (hi * hi);
    }
    return d2;
}

}  // namespace ddg
