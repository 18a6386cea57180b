#include <cmath>

#include "doctest.h"
#include "qcpde/errors.hpp"
#include "qcpde/semilinear.hpp"
#include "qcpde/shapes.hpp"
#include "qcpde/transforms.hpp"

using namespace qcpde;

namespace {

const Grid kGrid = make_grid(128, 4.0);

BeltramiCoefficient bump_mu(double k) {
    return BeltramiCoefficient::make(shapes::radial_bump(kGrid, k, 1.0));
}

ComplexField bump_sigma(cplx a = 1.0) { return shapes::radial_bump(kGrid, a, 1.5); }

double rel_sup(const ComplexField& a, const ComplexField& b) {
    return norm_p(a - b, INFINITY) / norm_p(b, INFINITY);
}

}  // namespace

TEST_CASE("nonlinearity presets") {
    const auto c = Nonlinearity::constant({2.0, -1.0});
    CHECK(c({5.0, 3.0}) == cplx(2.0, -1.0));
    CHECK(c.kind() == NonlinearityKind::Constant);

    const auto p = Nonlinearity::power(0.5);
    CHECK(p({3.0, 4.0}).real() == doctest::Approx(std::sqrt(5.0)));
    CHECK(p({3.0, 4.0}).imag() == 0.0);

    const auto sp = Nonlinearity::signed_power(0.5);
    CHECK(sp(0.0) == cplx{});
    CHECK(std::abs(sp({0.0, 4.0}) - cplx(0.0, 2.0)) <= 1e-15);

    const auto e = Nonlinearity::neg_exp();
    CHECK(e(0.0) == cplx(1.0));
    CHECK(e({0.0, 2.0}).real() == doctest::Approx(std::exp(-2.0)));

    CHECK_THROWS_AS(Nonlinearity::power(1.5), ConfigError);
    CHECK_THROWS_AS(Nonlinearity::power(0.0), ConfigError);
    CHECK_NOTHROW(p.validate());
    CHECK_NOTHROW(e.validate());
}

TEST_CASE("validate rejects growth and jumps") {
    const auto linear = Nonlinearity::custom([](cplx w) { return 3.0 * w + 1.0; }, "linear");
    CHECK_THROWS_WITH_AS(linear.validate(), doctest::Contains("not sublinear"), ConfigError);

    const auto jump = Nonlinearity::custom([](cplx w) { return w.real() > 0.0 ? cplx(1.0) : cplx(0.0); });
    CHECK_THROWS_AS(jump.validate(), ConfigError);

    const auto nan = Nonlinearity::custom([](cplx w) { return std::abs(w) > 50.0 ? cplx(NAN) : w; });
    CHECK_THROWS_AS(nan.validate(), ConfigError);
}

TEST_CASE("q_star") {
    CHECK(q_star(Nonlinearity::constant(3.0), 7.0) == doctest::Approx(3.0));
    CHECK(std::abs(q_star(Nonlinearity::power(0.5), 9.0) - 3.0) <= 1e-6);
    CHECK(q_star(Nonlinearity::neg_exp(), 5.0) == doctest::Approx(1.0));
    const auto p = Nonlinearity::power(0.3);
    double prev = 0.0;
    for (double t : {0.0, 0.5, 1.0, 10.0, 1e3}) {
        const double v = q_star(p, t);
        CHECK(v >= prev);
        prev = v;
    }
    CHECK_THROWS_AS(q_star(p, -1.0), ConfigError);
    // Probes record q_*(t)/t on a decade ladder.
    const auto& probes = p.probes();
    REQUIRE(probes.size() >= 3);
    CHECK(probes.back().radius == doctest::Approx(1e6));
    CHECK(probes.back().ratio == doctest::Approx(std::pow(1e6, -0.7)).epsilon(1e-6));
}

TEST_CASE("trivial sources give the zero solution") {
    const auto mu = bump_mu(0.3);
    ComplexField zero(kGrid);
    zero.declare_support(1.5);
    const auto s = solve_semilinear(mu, zero, Nonlinearity::neg_exp(), {});
    CHECK(s.report.summary.converged);
    CHECK(norm_p(s.omega, INFINITY) == 0.0);

    RealField G(kGrid);
    G.declare_support(1.5);
    const auto s2 = solve_semilinear_operator(mu, G, multiply_by(bump_sigma()), Nonlinearity::power(0.5), {});
    CHECK(norm_p(s2.omega, INFINITY) == 0.0);
}

TEST_CASE("constant q reduces to the linear problem") {
    const auto mu = bump_mu(0.3);
    const auto sigma = bump_sigma({0.7, 0.2});
    const cplx c(1.5, -0.5);
    const auto s = solve_semilinear(mu, sigma, Nonlinearity::constant(c), {});
    REQUIRE(s.report.summary.converged);
    auto csigma = c * sigma;
    csigma.declare_support(1.5);
    const auto lin = solve_inhomogeneous(mu, csigma, {1e-13, 2000});
    CHECK(rel_sup(s.omega, lin.omega) <= 1e-9);
}

TEST_CASE("continuation with exp(-|w|)") {
    const auto mu = bump_mu(0.3);
    const auto sigma = bump_sigma();
    const auto q = Nonlinearity::neg_exp();
    const ContinuationConfig cfg;
    const auto s = solve_semilinear(mu, sigma, q, cfg);
    REQUIRE(s.report.summary.converged);
    CHECK(s.report.certificate <= 1e-7);
    CHECK(s.report.steps.size() == 8);
    CHECK(s.report.tau_schedule.front() == doctest::Approx(0.125));
    CHECK(s.report.tau_schedule.back() == 1.0);
    CHECK(std::isfinite(s.report.apriori_radius));
    CHECK(s.omega[kGrid.origin_index()] == cplx{});

    // With G = 1 the density is q(w) at the fixed point; the source is sigma q(w).
    ComplexField qw(kGrid), target(kGrid);
    for (std::size_t i = 0; i < target.size(); ++i) {
        qw[i] = q(s.omega[i]);
        target[i] = sigma[i] * qw[i];
    }
    CHECK(norm_p_core(s.density - qw, 2.0) / norm_p_core(qw, 2.0) <= 1e-7);
    CHECK(residual_beltrami(mu, target, s.omega_zbar, s.omega_z) <= 1e-7);

    SUBCASE("operator form with G = 1 matches") {
        RealField one(kGrid, std::vector<double>(kGrid.size(), 1.0));
        const auto t = solve_semilinear_operator(mu, one, multiply_by(sigma), q, cfg);
        CHECK(norm_p(t.omega - s.omega, INFINITY) == 0.0);
    }
    SUBCASE("report JSON") {
        const auto j = s.report.to_json();
        CHECK(j.contains("tau_schedule"));
        CHECK(j["tau_schedule"].size() == 8);
        CHECK(j.contains("certificate"));
        CHECK(j.contains("apriori_radius"));
    }
}

TEST_CASE("inner iteration budget exhausted") {
    ContinuationConfig cfg;
    cfg.inner_max_iter = 2;
    const auto s = solve_semilinear(bump_mu(0.3), bump_sigma(), Nonlinearity::power(0.5), cfg);
    CHECK_FALSE(s.report.summary.converged);
    CHECK(s.report.steps.size() == 1);
    CHECK_FALSE(s.report.steps.front().converged);
}

TEST_CASE("continuation config validation") {
    ContinuationConfig cfg;
    cfg.damping = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.tau_steps = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.inner_tol = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("blow-up guard") {
    // Passes the large-t probes but is quadratic below |w| = 100, where the
    // iteration runs away.
    const auto q = Nonlinearity::custom(
        [](cplx w) {
            const double r = std::abs(w);
            return r <= 100.0 ? cplx(r * r) : cplx(1e4 * std::pow(r / 100.0, 0.2));
        },
        "quadratic-core");
    CHECK_NOTHROW(q.validate());
    const Grid g = make_grid(64, 4.0);
    const auto sigma = shapes::radial_bump(g, 3.0, 1.5);
    CHECK_THROWS_AS(solve_semilinear(BeltramiCoefficient::zero(g), sigma, q, {}), BlowupError);
}

TEST_CASE("factorization through the principal map") {
    const LinearSolveConfig lin{1e-13, 2000};

    SUBCASE("mu = 0: identity map, H = w") {
        const auto mu = BeltramiCoefficient::zero(kGrid);
        const auto sigma = bump_sigma();
        const auto sol = solve_inhomogeneous(mu, sigma, lin);
        const auto fr = factorize(sol.omega, mu, sigma, lin);
        CHECK(fr.map.is_identity());
        CHECK(fr.inversion_failures == 0);
        const auto w = compose_solution(fr.H, fr.map);
        CHECK(rel_sup(w, sol.omega) <= 1e-12);
    }
    SUBCASE("linear problem with mu a 0.3 bump") {
        const auto mu = bump_mu(0.3);
        const auto sigma = bump_sigma();
        const auto sol = solve_inhomogeneous(mu, sigma, lin);
        const auto fr = factorize(sol.omega, mu, sigma, lin);
        CHECK(fr.inversion_failures == 0);
        CHECK(fr.vekua_residual <= 5e-3);
        const auto w = compose_solution(fr.H, fr.map);
        double err = 0.0;
        for (std::size_t i = 0; i < kGrid.size(); ++i) {
            if (kGrid.in_core(i)) err = std::max(err, std::abs(w[i] - sol.omega[i]));
        }
        CHECK(err <= 5e-3 * norm_p(sol.omega, INFINITY));
    }
    SUBCASE("image grid covers the core image") {
        const auto map = principal_map(bump_mu(0.3), lin);
        const Grid ig = image_grid_for(map);
        CHECK(ig.n() == kGrid.n());
        for (std::size_t i = 0; i < kGrid.size(); ++i) {
            if (!kGrid.in_core(i)) continue;
            const cplx w = map.forward()[i];
            CHECK(std::max(std::abs(w.real()), std::abs(w.imag())) <= ig.half_extent() / 2.0 + 1e-12);
        }
    }
    SUBCASE("composing a constant") {
        const auto map = principal_map(bump_mu(0.3), lin);
        const Grid ig = image_grid_for(map);
        ComplexField H(ig, std::vector<cplx>(ig.size(), cplx(2.0, 1.0)));
        const auto w = compose_solution(H, map);
        double err = 0.0;
        for (std::size_t i = 0; i < kGrid.size(); ++i) {
            if (kGrid.in_core(i)) err = std::max(err, std::abs(w[i] - cplx(2.0, 1.0)));
        }
        CHECK(err <= 1e-12);
    }
}
