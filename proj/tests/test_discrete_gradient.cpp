#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ddg/autodiff.hpp"
#include "ddg/discrete_gradient.hpp"
#include "ddg/systems.hpp"

using namespace ddg;

namespace {

HamiltonianSystem make_poly() {
    auto energy = []<class S>(std::span<const S> x) { return x[0] * x[0] * x[1]; };
    return make_system(2, energy, canonical_skew(2));
}

double dg_defect(const HamiltonianSystem& sys, const Vec& g, const Vec& x, const Vec& xhat) {
    EvalCounter c;
    double lhs = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) lhs += g[i] * (xhat[i] - x[i]);
    return lhs - (eval_energy(sys, xhat, c) - eval_energy(sys, x, c));
}

}  // namespace

TEST_CASE("IA discrete gradient on worked examples") {
    HamiltonianSystem quad = make_harmonic(2);
    EvalCounter c;
    DGEval r = ia_dg(quad, Vec{0.0, 0.0}, Vec{2.0, 4.0}, c);
    CHECK(r.value[0] == doctest::Approx(1.0));
    CHECK(r.value[1] == doctest::Approx(2.0));
    CHECK(r.evals_used == 4);  // 2n

    HamiltonianSystem poly = make_poly();
    DGEval rp = ia_dg(poly, Vec{1.0, 1.0}, Vec{2.0, 3.0}, c);
    CHECK(rp.value[0] == doctest::Approx(3.0));
    CHECK(rp.value[1] == doctest::Approx(4.0));
    // DG property: 3*1 + 4*2 = H(2,3) - H(1,1) = 11
    CHECK(std::abs(dg_defect(poly, rp.value, {1.0, 1.0}, {2.0, 3.0})) < 1e-13);
}

TEST_CASE("IA fallback at xhat = x gives the gradient") {
    HamiltonianSystem poly = make_poly();
    EvalCounter c;
    DGEval r = ia_dg(poly, Vec{1.0, 1.0}, Vec{1.0, 1.0}, c);
    CHECK(r.value[0] == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(r.value[1] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(r.evals_used == 4);  // the fallback branch also costs 2 per component
}

TEST_CASE("SIA discrete gradient on worked examples") {
    HamiltonianSystem quad = make_harmonic(2);
    EvalCounter c;
    DGEval r = sia_dg(quad, Vec{0.2, -0.4}, Vec{1.0, 0.6}, c);
    CHECK(r.value[0] == doctest::Approx(0.6));   // (x + xhat) / 2
    CHECK(r.value[1] == doctest::Approx(0.1));
    CHECK(r.evals_used == 8);  // 4n

    HamiltonianSystem poly = make_poly();
    DGEval rp = sia_dg(poly, Vec{1.0, 1.0}, Vec{2.0, 3.0}, c);
    CHECK(rp.value[0] == doctest::Approx(6.0));
    CHECK(rp.value[1] == doctest::Approx(2.5));
    CHECK(std::abs(dg_defect(poly, rp.value, {1.0, 1.0}, {2.0, 3.0})) < 1e-13);
}

TEST_CASE("SIA is exactly symmetric in its arguments") {
    HamiltonianSystem sys = make_double_pendulum();
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    EvalCounter c;
    for (int rep = 0; rep < 20; ++rep) {
        Vec x(4), xhat(4);
        for (auto& v : x) v = u(rng);
        for (auto& v : xhat) v = u(rng);
        DGEval a = sia_dg(sys, x, xhat, c);
        DGEval b = sia_dg(sys, xhat, x, c);
        for (std::size_t i = 0; i < 4; ++i) CHECK(a.value[i] == b.value[i]);
    }
}

TEST_CASE("discrete gradient property on 1000 random pairs per system") {
    struct Case {
        HamiltonianSystem sys;
        double lo, hi;
    };
    std::vector<Case> cases;
    cases.push_back({make_harmonic(4), -2.0, 2.0});
    cases.push_back({make_lennard_jones(), 0.9, 1.8});
    cases.push_back({make_double_pendulum(), -1.0, 1.0});
    std::mt19937_64 rng(17);
    EvalCounter c;
    for (const auto& cs : cases) {
        std::uniform_real_distribution<double> u(cs.lo, cs.hi);
        for (int rep = 0; rep < 1000; ++rep) {
            Vec x(cs.sys.n), xhat(cs.sys.n);
            for (auto& v : x) v = u(rng);
            for (auto& v : xhat) v = u(rng);
            const double h0 = eval_energy(cs.sys, x, c);
            const double h1 = eval_energy(cs.sys, xhat, c);
            const double tol = 1e-12 * (1.0 + std::abs(h0) + std::abs(h1));
            DGEval ia = ia_dg(cs.sys, x, xhat, c);
            DGEval sia = sia_dg(cs.sys, x, xhat, c);
            CHECK(std::abs(dg_defect(cs.sys, ia.value, x, xhat)) <= tol);
            CHECK(std::abs(dg_defect(cs.sys, sia.value, x, xhat)) <= tol);
        }
    }
}

TEST_CASE("consistency orders: IA first order, SIA second order to the midpoint") {
    HamiltonianSystem sys = make_double_pendulum();
    Vec x{0.1, 0.2, 0.25, -0.3};
    Vec dir{1.0, -0.5, 0.7, 0.3};
    EvalCounter c;
    std::vector<double> deltas, err_ia, err_sia;
    for (int k = 0; k < 6; ++k) {
        const double d = 0.1 / std::pow(2.0, k);
        Vec xhat(4), mid(4);
        for (std::size_t i = 0; i < 4; ++i) {
            xhat[i] = x[i] + d * dir[i];
            mid[i] = 0.5 * (x[i] + xhat[i]);
        }
        Vec gx = grad_ad<double>(sys, x);
        Vec gm = grad_ad<double>(sys, mid);
        DGEval ia = ia_dg(sys, x, xhat, c);
        DGEval sia = sia_dg(sys, x, xhat, c);
        double ei = 0, es = 0;
        for (std::size_t i = 0; i < 4; ++i) {
            ei += (ia.value[i] - gx[i]) * (ia.value[i] - gx[i]);
            es += (sia.value[i] - gm[i]) * (sia.value[i] - gm[i]);
        }
        deltas.push_back(d);
        err_ia.push_back(std::sqrt(ei));
        err_sia.push_back(std::sqrt(es));
    }
    auto slope = [&](const std::vector<double>& e) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < deltas.size(); ++i) {
            const double lx = std::log(deltas[i]), ly = std::log(e[i]);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
        }
        const double m = static_cast<double>(deltas.size());
        return (m * sxy - sx * sy) / (m * sxx - sx * sx);
    };
    CHECK(slope(err_ia) == doctest::Approx(1.0).epsilon(0.3));
    CHECK(slope(err_sia) == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("evaluation counts are exactly 2n and 4n") {
    HamiltonianSystem sys = make_harmonic(6);
    Vec x{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    Vec xhat{0.7, 0.6, 0.5, 0.4, 0.3, 0.2};  // note one degenerate coordinate
    EvalCounter c;
    DGEval ia = ia_dg(sys, x, xhat, c);
    CHECK(ia.evals_used == 12);
    DGEval sia = sia_dg(sys, x, xhat, c);
    CHECK(sia.evals_used == 24);
    CHECK(c.count == 36);
}
