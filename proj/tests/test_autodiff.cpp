#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ddg/autodiff.hpp"
#include "ddg/systems.hpp"

using namespace ddg;

namespace {

// H = x1^2 * x2 on R^2, used for hand-checked derivatives.
HamiltonianSystem make_poly() {
    auto energy = []<class S>(std::span<const S> x) { return x[0] * x[0] * x[1]; };
    return make_system(2, energy, canonical_skew(2));
}

}  // namespace

TEST_CASE("dual arithmetic identities") {
    Dual<double> x(2.0, 1.0);
    CHECK((x * x).d == doctest::Approx(4.0));
    CHECK((1.0 / x).d == doctest::Approx(-0.25));
    CHECK(sin(x).d == doctest::Approx(std::cos(2.0)));
    Dual<double> c(5.0);  // constant: derivative zero
    CHECK((c * c).d == 0.0);
    CHECK(sqrt(Dual<double>(4.0, 1.0)).d == doctest::Approx(0.25));
    CHECK(ipow(x, -6).d == doctest::Approx(-6.0 * std::pow(2.0, -7.0)));
}

TEST_CASE("second-order jet cross term is symmetric") {
    auto f = [](Dual2<double> a, Dual2<double> b) { return sin(a) * b + a * a * b * b; };
    Dual2<double> a(0.7, 1.0, 0.0, 0.0), b(1.3, 0.0, 1.0, 0.0);
    Dual2<double> as(0.7, 0.0, 1.0, 0.0), bs(1.3, 1.0, 0.0, 0.0);
    CHECK(f(a, b).d12 == doctest::Approx(f(as, bs).d12).epsilon(1e-14));
    // d^2/dadb [sin(a) b + a^2 b^2] = cos(a) + 4ab
    CHECK(f(a, b).d12 == doctest::Approx(std::cos(0.7) + 4.0 * 0.7 * 1.3).epsilon(1e-14));
}

TEST_CASE("grad_ad on simple energies") {
    HamiltonianSystem quad = make_harmonic(2);
    Vec g = grad_ad<double>(quad, Vec{3.0, 4.0});
    CHECK(g[0] == 3.0);
    CHECK(g[1] == 4.0);

    HamiltonianSystem poly = make_poly();
    Vec gp = grad_ad<double>(poly, Vec{1.0, 1.0});
    CHECK(gp[0] == doctest::Approx(2.0));
    CHECK(gp[1] == doctest::Approx(1.0));
}

TEST_CASE("grad_ad agrees with central differences on the double pendulum") {
    HamiltonianSystem sys = make_double_pendulum();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    EvalCounter c;
    const double tau = 1e-6;
    for (int rep = 0; rep < 10; ++rep) {
        Vec x(4);
        for (auto& v : x) v = u(rng);
        Vec g = grad_ad<double>(sys, x);
        for (std::size_t i = 0; i < 4; ++i) {
            Vec p = x;
            p[i] += tau;
            const double fp = eval_energy(sys, p, c);
            p[i] = x[i] - tau;
            const double fm = eval_energy(sys, p, c);
            CHECK(std::abs(g[i] - (fp - fm) / (2.0 * tau)) < 1e-8);
        }
    }
}

TEST_CASE("hess_ad on hand-checked energies") {
    HamiltonianSystem poly = make_poly();
    Matrix<double> h = hess_ad<double>(poly, Vec{1.0, 1.0});
    CHECK(h(0, 0) == doctest::Approx(2.0));
    CHECK(h(0, 1) == doctest::Approx(2.0));
    CHECK(h(1, 0) == doctest::Approx(2.0));
    CHECK(h(1, 1) == doctest::Approx(0.0));

    // quadratic with a random symmetric A: Hessian is A exactly
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix<double> a(4, 4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i; j < 4; ++j) a(i, j) = a(j, i) = u(rng);
    auto energy = [a]<class S>(std::span<const S> x) {
        S s(0.0);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) s += 0.5 * a(i, j) * x[i] * x[j];
        return s;
    };
    HamiltonianSystem quad = make_system(4, energy, canonical_skew(4));
    Vec x{0.3, -0.2, 0.9, 0.4};
    Matrix<double> h2 = hess_ad<double>(quad, x);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(h2(i, j) == doctest::Approx(a(i, j)).epsilon(1e-12));
            CHECK(h2(i, j) == h2(j, i));  // exactly symmetric
        }
}

TEST_CASE("d2_dg_ad of SIA on a quadratic is I/2") {
    HamiltonianSystem sys = make_harmonic(4);
    Vec x{0.4, -0.3, 0.8, 0.1}, xhat{0.9, 0.2, -0.5, 0.7};
    Matrix<double> j = d2_dg_ad<double>(DiscreteGradientKind::SIA, sys, x, xhat);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t k = 0; k < 4; ++k)
            CHECK(j(i, k) == doctest::Approx(i == k ? 0.5 : 0.0).epsilon(1e-12));
}

TEST_CASE("d2_dg_ad of SIA at xhat = x has vanishing skew part") {
    HamiltonianSystem sys = make_double_pendulum();
    Vec x{0.1, 0.2, 0.25, -0.3};
    Matrix<double> j = d2_dg_ad<double>(DiscreteGradientKind::SIA, sys, x, x);
    Matrix<double> sk = skew_part(j);
    CHECK(max_abs(sk) < 1e-10);
}
