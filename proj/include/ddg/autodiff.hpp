#pragma once

// Dual-number providers for exact derivatives: gradient, Hessian and the
// Jacobian of a discrete gradient in its second argument. All are
// templated on the base scalar so they can themselves be differentiated
// (base = Dual<double> yields derivatives of these quantities).

#include <span>
#include <vector>

#include "ddg/discrete_gradient.hpp"
#include "ddg/dual.hpp"
#include "ddg/linalg.hpp"
#include "ddg/systems.hpp"

namespace ddg {

/// Exact gradient of H at x via forward-mode duals; n dual evaluations.
template <class Base = double>
std::vector<Base> grad_ad(const HamiltonianSystem& sys, std::span<const Base> x) {
    using D = Dual<Base>;
    const auto& H = sys.template energy_as<D>();
    const std::size_t n = x.size();
    std::vector<D> xd(n);
    for (std::size_t i = 0; i < n; ++i) xd[i] = D(x[i], Base(0.0));
    std::vector<Base> g(n);
    for (std::size_t j = 0; j < n; ++j) {
        xd[j].d = Base(1.0);
        g[j] = H(xd).d;
        xd[j].d = Base(0.0);
    }
    return g;
}

/// Exact Hessian via two-direction jets; symmetric by construction.
template <class Base = double>
Matrix<Base> hess_ad(const HamiltonianSystem& sys, std::span<const Base> x) {
    using D = Dual2<Base>;
    const auto& H = sys.template energy_as<D>();
    const std::size_t n = x.size();
    std::vector<D> xd(n);
    for (std::size_t i = 0; i < n; ++i) xd[i] = D(x[i], Base(0.0), Base(0.0), Base(0.0));
    Matrix<Base> h(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            xd[i].d1 = Base(1.0);
            xd[j].d2 = Base(1.0);
            Base v = H(xd).d12;
            xd[i].d1 = Base(0.0);
            xd[j].d2 = Base(0.0);
            h(i, j) = v;
            h(j, i) = v;
        }
    return h;
}

/// Exact Jacobian of the chosen discrete gradient with respect to its
/// second argument: the DG formulas are run in dual arithmetic, one
/// direction per column.
template <class Base = double>
Matrix<Base> d2_dg_ad(DiscreteGradientKind kind, const HamiltonianSystem& sys,
                      std::span<const Base> x, std::span<const Base> xhat, double tau1 = 1e-5) {
    using D = Dual<Base>;
    const auto& H = sys.template energy_as<D>();
    const std::size_t n = x.size();
    std::vector<D> xd(n), xhd(n);
    for (std::size_t i = 0; i < n; ++i) {
        xd[i] = D(x[i], Base(0.0));
        xhd[i] = D(xhat[i], Base(0.0));
    }
    Matrix<Base> jac(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        xhd[j].d = Base(1.0);
        std::vector<D> g = kind == DiscreteGradientKind::IA
                               ? ia_dg_generic<D>(H, std::span<const D>(xd),
                                                  std::span<const D>(xhd), tau1)
                               : sia_dg_generic<D>(H, std::span<const D>(xd),
                                                   std::span<const D>(xhd), tau1);
        for (std::size_t i = 0; i < n; ++i) jac(i, j) = g[i].d;
        xhd[j].d = Base(0.0);
    }
    return jac;
}

}  // namespace ddg
