#include "support.hpp"

#include "nvarlab/energy.hpp"
#include "nvarlab/errors.hpp"
#include "nvarlab/optimizer.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using nvl::Constraint;
using nvl::Field;
using nvl::Nonlinearity;
using nvl::ProbeOutcome;
using nvl::SolverConfig;
using nvt::make_grid;

namespace {

Field gaussian(const nvl::GridPtr& g, double amp, double w) {
    return Field::sample(g, [=](std::span<const double> x) {
        double r2 = 0.0;
        for (double v : x) r2 += v * v;
        return amp * std::exp(-r2 / (w * w));
    });
}

} // namespace

TEST_CASE("solver configuration is validated") {
    SolverConfig c;
    c.rho = 0.0;
    CHECK_THROWS_AS(c.validate(), nvl::ValidationError);
    c = {};
    c.grad_tol = -1.0;
    CHECK_THROWS_AS(c.validate(), nvl::ValidationError);
    c = {};
    c.restarts = 0;
    CHECK_THROWS_AS(c.validate(), nvl::ValidationError);
    c = {};
    c.t_grid = {1.0, 4.0, 2.0};
    CHECK_THROWS_AS(c.validate(), nvl::ValidationError);
    CHECK(nvl::constraint_from_string("sphere") == Constraint::sphere);
    CHECK(nvl::method_from_string("gradient") == nvl::Method::gradient);
    CHECK_THROWS_AS(nvl::constraint_from_string("box"), nvl::ValidationError);
}

TEST_CASE("energy is monotone and every iterate is feasible") {
    auto g = make_grid(2, 2, 1.0, 0.0, 24.0, 64);
    const auto nl = Nonlinearity::pure_power(2, 1.0, 3.0);
    for (Constraint c : {Constraint::ball, Constraint::sphere}) {
        for (nvl::Method m : {nvl::Method::gradient, nvl::Method::conjugate_gradient}) {
            SolverConfig cfg;
            cfg.rho = 20.0;
            cfg.constraint = c;
            cfg.method = m;
            cfg.max_iters = 300;
            std::vector<nvl::ProgressRecord> log;
            cfg.progress = [&](const nvl::ProgressRecord& r) { log.push_back(r); };
            const auto res = nvl::minimize(g, nl, cfg);
            REQUIRE(log.size() > 2);
            for (std::size_t i = 1; i < log.size(); ++i) {
                // the ball solve restarts its log once when it leaves the sphere phase
                if (log[i].iter == 0) continue;
                CHECK(log[i].J <= log[i - 1].J);
            }
            for (const auto& r : log) {
                if (c == Constraint::sphere) CHECK(std::abs(r.mass - cfg.rho) <= 1e-10 * cfg.rho);
                else CHECK(r.mass <= cfg.rho * (1.0 + 1e-10));
            }
            if (m == nvl::Method::conjugate_gradient) CHECK(res.converged);
            CHECK(res.breakdown.J < 0.0);
        }
    }
}

TEST_CASE("symmetric data stays symmetric") {
    // K = N = 2 with a Hardy term: without the group average the radial
    // state is unstable against rounding, so this exercises the averaging
    auto g = make_grid(2, 2, 1.0, 0.5, 24.0, 64);
    const auto nl = Nonlinearity::pure_power(2, 1.0, 3.0);
    SolverConfig cfg;
    cfg.rho = 40.0;
    cfg.constraint = Constraint::sphere;
    cfg.max_iters = 1000;
    cfg.grad_tol = 1e-14;
    const auto res = nvl::minimize(g, nl, cfg);
    CHECK(nvl::symmetry_residual(res.field) <= 1e-8);
}

TEST_CASE("symmetrize projects onto the invariant class") {
    std::mt19937_64 rng(4);
    auto g = make_grid(3, 3, 1.0, 0.0, 10.0, 16);
    Eigen::ArrayXd v(static_cast<Eigen::Index>(g->size()));
    for (auto& x : v) x = nvt::uniform(rng, -1.0, 1.0);
    const Eigen::ArrayXd s = nvl::symmetrize(*g, v);
    CHECK(nvl::symmetry_residual(Field(g, s)) <= 1e-14);
    CHECK((nvl::symmetrize(*g, s) - s).abs().maxCoeff() <= 1e-14);
    Field u = nvt::random_symmetric_field(g, rng);
    CHECK((nvl::symmetrize(*g, u.samples()) - u.samples()).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("one-dimensional cubic soliton") {
    // -Q'' + w Q = Q^3 has Q = sqrt(2w) sech(sqrt(w) x), mass 4 sqrt(w) and
    // J(Q) = |Q'|^2/2 - |Q|_4^4/4 = -(2/3) w^{3/2}
    auto g = make_grid(1, 0, 1.0, 0.0, 96.0, 512);
    const auto nl = Nonlinearity::pure_power(1, 1.0, 4.0);
    SolverConfig cfg;
    cfg.rho = 2.0;
    cfg.grad_tol = 1e-10;
    const auto res = nvl::minimize(g, nl, cfg);
    const double w = cfg.rho * cfg.rho / 16.0;
    REQUIRE(res.converged);
    CHECK(res.breakdown.J == doctest::Approx(-2.0 / 3.0 * std::pow(w, 1.5)).epsilon(1e-8));
    CHECK(std::abs(res.breakdown.mass - cfg.rho) <= 1e-8 * cfg.rho);
    REQUIRE(res.identity);
    CHECK(res.identity->lambda_estimate == doctest::Approx(w).epsilon(1e-6));
    CHECK(res.identity->pohozaev_residual <= 1e-4);
    CHECK(res.field.samples().minCoeff() >= -1e-10);
}

TEST_CASE("non-positive F gives the zero field in the ball") {
    auto g = make_grid(2, 2, 1.0, 0.0, 16.0, 32);
    const auto nl = Nonlinearity::pure_power(2, 1.0, 3.0, -1.0);
    SolverConfig cfg;
    cfg.rho = 5.0;
    const auto res = nvl::minimize(g, nl, cfg);
    CHECK(res.converged);
    CHECK(res.breakdown.J == 0.0);
    CHECK(res.breakdown.mass == 0.0);
    CHECK_FALSE(res.identity);
}

TEST_CASE("mass-critical power above the critical mass is flagged") {
    // 1D quintic: the critical mass is |Q|_2^2 = pi sqrt(3)/2 for -Q'' + Q = Q^5
    auto g = make_grid(1, 0, 1.0, 0.0, 32.0, 256);
    const auto nl = Nonlinearity::mass_critical_power(1, 1.0);
    SolverConfig cfg;
    cfg.rho = 4.0;
    cfg.max_iters = 400;
    const auto res = nvl::minimize(g, nl, cfg);
    CHECK((res.unbounded || res.breakdown.J < -1.0));
    CHECK_FALSE(res.converged);
}

TEST_CASE("dilation probe") {
    auto g = make_grid(1, 0, 1.0, 0.0, 64.0, 1024);
    const Field u = gaussian(g, 0.8, 4.0);
    SUBCASE("supercritical power is unbounded and follows the two-term law") {
        const double p = 8.0;
        const auto nl = Nonlinearity::pure_power(1, 1.0, p);
        const auto e = nvl::evaluate(u, nl);
        const auto rep = nvl::dilation_probe(u, nl, {1.0, 2.0, 4.0, 8.0});
        CHECK(rep.outcome == ProbeOutcome::unbounded);
        for (std::size_t i = 0; i < rep.t.size(); ++i) {
            const double t = rep.t[i];
            const double law = 0.5 * t * t * e.seminorm_sq - std::pow(t, 0.5 * (p - 2.0)) * e.potential;
            CHECK(std::abs(rep.J[i] - law) <= 1e-6 * (1.0 + std::abs(law)));
        }
    }
    SUBCASE("non-positive F is bounded") {
        const auto rep = nvl::dilation_probe(u, Nonlinearity::pure_power(1, 1.0, 4.0, -1.0), {1.0, 2.0, 4.0, 8.0});
        CHECK(rep.outcome == ProbeOutcome::bounded);
    }
    SUBCASE("zero field is rejected") {
        CHECK_THROWS_AS(nvl::dilation_probe(Field::zeros(g), Nonlinearity::pure_power(1, 1.0, 4.0), {1.0, 2.0}),
                        nvl::ValidationError);
    }
}

TEST_CASE("gamma mode keeps the seminorm above the floor") {
    auto g = make_grid(1, 0, 1.0, 0.0, 32.0, 128);
    const auto nl = Nonlinearity::pure_power(1, 1.0, 3.0, -1.0);
    const Field init = gaussian(g, 1.0, 1.0);
    const double s0 = nvl::seminorm_sq(init);
    SolverConfig cfg;
    cfg.rho = nvl::mass(init);
    cfg.gamma_star = 0.5 * s0;
    cfg.max_iters = 200;
    cfg.probe = false;
    const auto res = nvl::minimize(init, nl, cfg);
    CHECK(res.breakdown.seminorm_sq > *cfg.gamma_star);
    CHECK(res.breakdown.J <= nvl::evaluate(init, nl).J);
    cfg.gamma_star = 2.0 * s0;
    CHECK_THROWS_AS(nvl::minimize(init, nl, cfg), nvl::ValidationError);
}

TEST_CASE("multistart") {
    auto g = make_grid(2, 2, 1.0, 0.0, 24.0, 32);
    const auto nl = Nonlinearity::pure_power(2, 1.0, 3.0);
    SolverConfig cfg;
    cfg.rho = 30.0;
    cfg.seed = 11;
    const auto one = nvl::multistart(g, nl, cfg);
    const auto direct = nvl::minimize(g, nl, cfg);
    CHECK(one.breakdown.J == direct.breakdown.J);
    CHECK(one.start_index == 0);
    cfg.restarts = 8;
    const auto eight = nvl::multistart(g, nl, cfg);
    CHECK(eight.breakdown.J <= one.breakdown.J);
    cfg.restarts = 32;
    const auto many = nvl::multistart(g, nl, cfg);
    CHECK(many.breakdown.J <= eight.breakdown.J);
    CHECK(std::abs(eight.breakdown.J - many.breakdown.J) <= 1e-4 * std::abs(many.breakdown.J));
    // identical configuration, identical answer
    CHECK(nvl::multistart(g, nl, cfg).breakdown.J == many.breakdown.J);
}

TEST_CASE("negative minimizers sit on the sphere with positive multiplier") {
    auto g = make_grid(2, 2, 1.0, 0.0, 24.0, 128);
    const auto nl = Nonlinearity::pure_power(2, 1.0, 3.0);
    SolverConfig cfg;
    cfg.rho = 40.0;
    const auto res = nvl::minimize(g, nl, cfg);
    REQUIRE(res.converged);
    REQUIRE(res.breakdown.J < 0.0);
    CHECK(std::abs(res.breakdown.mass - cfg.rho) <= 1e-8 * cfg.rho);
    REQUIRE(res.identity);
    CHECK(res.identity->lambda_estimate > 0.0);
    CHECK(res.identity->pohozaev_residual <= 1e-4);
    CHECK(std::abs(res.identity->M_value) <= 1e-4 * res.breakdown.seminorm_sq);
}
