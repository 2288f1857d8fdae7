#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ddg/harness.hpp"
#include "ddg/integrators.hpp"
#include "ddg/systems.hpp"

using namespace ddg;

TEST_CASE("q_matrix is the skew part of the transposed Jacobian") {
    Matrix<double> d2(2, 2);
    d2(0, 1) = 1.0;
    Matrix<double> q = q_matrix(d2);
    CHECK(q(0, 0) == 0.0);
    CHECK(q(0, 1) == -0.5);
    CHECK(q(1, 0) == 0.5);
    CHECK(q(1, 1) == 0.0);
    CHECK(is_skew(q));
}

TEST_CASE("fourth-order correction on the harmonic oscillator is (1 + h^2/12) S") {
    HamiltonianSystem sys = make_harmonic(2);
    Vec x{0.7, -0.2}, xhat{0.75, -0.34};
    const double h = 0.1;
    Matrix<double> m = s4_ad<double>(sys, x, xhat, h);
    const double factor = 1.0 + h * h / 12.0;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(m(i, j) == doctest::Approx(factor * sys.structure(i, j)).epsilon(1e-12));

    // h = 0 collapses to the structure matrix itself
    Matrix<double> m0 = s4_ad<double>(sys, x, xhat, 0.0);
    CHECK(max_abs(m0 - sys.structure) < 1e-14);
}

TEST_CASE("finite-difference S4 matches the dual-number S4 and counts evaluations") {
    HamiltonianSystem harm = make_harmonic(2);
    Vec x{0.7, -0.2}, xhat{0.75, -0.34};
    FDConfig fd;
    EvalCounter c;
    Matrix<double> mt = s4_tau(harm, x, xhat, 0.1, fd, c);
    CHECK(c.count == 27);  // 9n^2 - 5n + 1 for n = 2
    Matrix<double> me = s4_ad<double>(harm, x, xhat, 0.1);
    CHECK(max_abs(mt - me) < 1e-9);  // quadratic energy: only roundoff

    HamiltonianSystem dp = make_double_pendulum();
    Vec y{0.1, 0.2, 0.25, -0.3}, yhat{0.12, 0.18, 0.2, -0.25};
    EvalCounter c4;
    Matrix<double> dt = s4_tau(dp, y, yhat, 0.05, fd, c4);
    CHECK(c4.count == 125);  // 9n^2 - 5n + 1 for n = 4
    Matrix<double> de = s4_ad<double>(dp, y, yhat, 0.05);
    CHECK(max_abs(dt - de) < 1e-8);
    // skew-symmetry holds exactly, not just approximately
    CHECK(max_abs(dt + transpose(dt)) == 0.0);
    CHECK(max_abs(de + transpose(de)) == 0.0);
}

TEST_CASE("Newton solve reproduces the midpoint-rule closed form on the harmonic oscillator") {
    // For H = |x|^2/2 the SIA discrete gradient is the midpoint average, so
    // the step is xhat = (I - h/2 S)^{-1} (I + h/2 S) x.
    HamiltonianSystem sys = make_harmonic(2);
    NewtonConfig cfg;
    EvalCounter c;
    const double h = 0.2;
    Vec x{1.0, 0.0};
    Vec guess = initial_guess(0, x, std::nullopt, h, cfg.seed);
    StepResult r = newton_solve(sys, MethodKind::SIA_DF, x, guess, h, cfg, c);
    CHECK(r.xnext[0] == doctest::Approx(0.99 / 1.01).epsilon(1e-9));
    CHECK(r.xnext[1] == doctest::Approx(-0.2 / 1.01).epsilon(1e-9));
    // the step preserves |x|^2 exactly up to the solver tolerance
    const double nrm = r.xnext[0] * r.xnext[0] + r.xnext[1] * r.xnext[1];
    CHECK(std::abs(nrm - 1.0) < 1e-9);
    CHECK(r.residual <= cfg.tol);
}

TEST_CASE("Newton solve converges within the iteration budget on the double pendulum") {
    HamiltonianSystem sys = make_double_pendulum();
    NewtonConfig cfg;
    EvalCounter c;
    Vec x{0.1, 0.2, 0.25, -0.3};
    Vec guess = initial_guess(0, x, std::nullopt, 0.05, cfg.seed);
    for (MethodKind m : {MethodKind::IA_DF, MethodKind::SIA_DF, MethodKind::SIA4_DF,
                         MethodKind::IA_AD, MethodKind::SIA_AD, MethodKind::SIA4_AD}) {
        StepResult r = newton_solve(sys, m, x, guess, 0.05, cfg, c);
        CHECK(r.iterations <= cfg.max_iter);
        CHECK(r.residual <= cfg.tol);
        // energy is preserved to roughly the solver tolerance
        EvalCounter s;
        CHECK(std::abs(eval_energy(sys, r.xnext, s) - eval_energy(sys, x, s)) < 100.0 * cfg.tol);
    }
}

TEST_CASE("initial guess policy") {
    Vec xn{2.0, 2.0}, xp{1.0, 1.0};
    Vec g = initial_guess(3, xn, std::span<const double>(xp), 0.1, std::uint64_t(0));
    CHECK(g[0] == 3.0);
    CHECK(g[1] == 3.0);

    Vec g0 = initial_guess(0, xn, std::nullopt, 0.1, std::uint64_t(0));
    CHECK((g0[0] != xn[0] || g0[1] != xn[1]));  // perturbed away from x
    CHECK(std::abs(g0[0] - xn[0]) < 1.0);       // ... but only by O(h)
    // same seed, same guess
    Vec g1 = initial_guess(0, xn, std::nullopt, 0.1, std::uint64_t(0));
    CHECK(g0[0] == g1[0]);
    CHECK(g0[1] == g1[1]);

    CHECK_THROWS_AS(initial_guess(2, xn, std::nullopt, 0.1, std::uint64_t(0)),
                    std::invalid_argument);
}

TEST_CASE("RK4 on the harmonic oscillator") {
    HamiltonianSystem sys = make_harmonic(2);
    Vec x{1.0, 0.0};
    Vec y = rk4_step(sys, x, 0.1);
    // one-step error of the fourth-order method is O(h^5) ~ 1e-7
    CHECK(std::abs(y[0] - std::cos(0.1)) < 1e-6);
    CHECK(std::abs(y[1] + std::sin(0.1)) < 1e-6);
    Vec z = rk4_step(sys, x, 0.0);
    CHECK(z[0] == x[0]);
    CHECK(z[1] == x[1]);
}

TEST_CASE("integrate preserves energy over long harmonic runs") {
    HamiltonianSystem sys = make_harmonic(2);
    NewtonConfig cfg;
    Trajectory tr = integrate(sys, MethodKind::SIA_DF, Vec{1.0, 0.0}, 0.1, 1000, cfg);
    CHECK(tr.steps() == 1000);
    CHECK(max_energy_drift(tr) < 1e-10);
    CHECK(tr.evals_cum.back() > 0);
}

TEST_CASE("integrate runs the fourth-order scheme on Lennard-Jones") {
    HamiltonianSystem sys = make_lennard_jones();
    NewtonConfig cfg;
    Trajectory tr = integrate(sys, MethodKind::SIA4_DF, Vec{1.21, 0.34}, 0.01, 100, cfg);
    CHECK(tr.steps() == 100);
    CHECK(max_energy_drift(tr) < 1e-9);
    CHECK_THROWS_AS(integrate(sys, MethodKind::SIA4_DF, Vec{1.21, 0.34}, 0.01, 0, cfg),
                    std::invalid_argument);
}

TEST_CASE("reference solution on the harmonic oscillator") {
    HamiltonianSystem sys = make_harmonic(2);
    Vec r = reference_solution(sys, Vec{1.0, 0.0}, 1.0);
    CHECK(std::abs(r[0] - std::cos(1.0)) < 1e-12);
    CHECK(std::abs(r[1] + std::sin(1.0)) < 1e-12);
    Vec r0 = reference_solution(sys, Vec{1.0, 0.0}, 0.0);
    CHECK(r0[0] == 1.0);
    CHECK(r0[1] == 0.0);
}

TEST_CASE("per-iteration evaluation counts match the closed formulas exactly") {
    NewtonConfig cfg;
    struct Case {
        HamiltonianSystem sys;
        Vec x;
    };
    std::vector<Case> cases;
    cases.push_back({make_lennard_jones(), Vec{1.21, 0.34}});
    cases.push_back({make_double_pendulum(), Vec{0.1, 0.2, 0.25, -0.3}});
    for (const auto& cs : cases) {
        for (MethodKind m : {MethodKind::IA_DF, MethodKind::SIA_DF, MethodKind::SIA4_DF}) {
            IterationCost ic = measure_newton_iteration(cs.sys, m, cs.x, 0.05, cfg);
            CHECK(ic.measured == ic.formula);
        }
    }
    // the formulas themselves at n = 4
    CHECK(iteration_count_formula(MethodKind::IA_DF, 4) == 48);
    CHECK(iteration_count_formula(MethodKind::SIA_DF, 4) == 96);
    CHECK(iteration_count_formula(MethodKind::SIA4_DF, 4) == 221);
    CHECK_THROWS_AS(iteration_count_formula(MethodKind::RK4, 4), std::invalid_argument);
}

TEST_CASE("every structure replacement used in a step is exactly skew") {
    HamiltonianSystem sys = make_double_pendulum();
    NewtonConfig cfg;
    EvalCounter c;
    Vec x{0.1, 0.2, 0.25, -0.3}, xhat{0.13, 0.17, 0.21, -0.27};
    for (MethodKind m : {MethodKind::IA_DF, MethodKind::SIA_DF, MethodKind::SIA4_DF,
                         MethodKind::SIA4_AD}) {
        Matrix<double> sbar = detail::method_sbar(sys, m, x, xhat, 0.05, cfg, c);
        CHECK(max_abs(sbar + transpose(sbar)) == 0.0);
    }
}

TEST_CASE("exact residual and Jacobian oracles agree with finite differences") {
    HamiltonianSystem sys = make_double_pendulum();
    Vec x{0.1, 0.2, 0.25, -0.3};
    Vec flow = sys.structure * grad_ad<double>(sys, x);
    const double h = 0.02;
    Vec xhat(4);
    for (std::size_t i = 0; i < 4; ++i) xhat[i] = x[i] + h * flow[i];
    Matrix<double> jac = sia4_jacobian_ad(sys, x, xhat, h);
    // column-wise central differences of the residual oracle
    const double d = 1e-6;
    for (std::size_t j = 0; j < 4; ++j) {
        Vec hp = xhat, hm = xhat;
        hp[j] += d;
        hm[j] -= d;
        Vec fp = sia4_residual_ad<double>(sys, x, hp, h);
        Vec fm = sia4_residual_ad<double>(sys, x, hm, h);
        for (std::size_t i = 0; i < 4; ++i)
            CHECK(jac(i, j) == doctest::Approx((fp[i] - fm[i]) / (2.0 * d)).epsilon(1e-5));
    }
}
