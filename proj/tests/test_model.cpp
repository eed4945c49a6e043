// Model layer: pointwise Lagrangians, twisted forms, discrete blocks, flow.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oracles.hpp"
#include "wkam/model.hpp"

#include <cmath>
#include <random>

using namespace wkam;

TEST_CASE("grid helpers") {
    GridSpec g;
    g.n_space = 16;
    CHECK(g.node(4) == 0.25);
    CHECK(g.snap(0.26) == 4);
    CHECK(g.snap(0.999) == 0);  // wraps to node 0
    CHECK(g.snap(-0.03) == 0);
    CHECK(frac01(1.0) == 0.0);
    CHECK(frac01(-0.25) == doctest::Approx(0.75));
    CHECK(circle_dist(0.9, 0.1) == doctest::Approx(0.2));
    CHECK(circle_dist(0.1, 0.9) == doctest::Approx(0.2));

    GridSpec bad;
    bad.n_space = 8;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = GridSpec{};
    bad.n_substeps = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = GridSpec{};
    bad.winding_cap = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("pointwise Lagrangian values") {
    const auto free = LagrangianSpec::free_particle();
    const auto pend = LagrangianSpec::pendulum();

    CHECK(eval_lagrangian(free, 0.3, 1.0, 0.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(eval_lagrangian(pend, 0.0, 0.0, 0.0) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(eval_lagrangian(free, 0.25, 2.0, 0.5) == doctest::Approx(2.0).epsilon(1e-14));

    const auto genfun = LagrangianSpec::standard_family(1.0);
    CHECK_THROWS(eval_lagrangian(genfun, 0.0, 0.0, 0.0));

    CHECK(pend.potential_curvature_bound() ==
          doctest::Approx(4.0 * oracle::pi * oracle::pi).epsilon(1e-12));
    CHECK(convexity_dt_threshold(pend) == doctest::Approx(1.0 / oracle::pi).epsilon(1e-12));
    CHECK(convexity_dt_threshold(free) == 1.0);
}

TEST_CASE("potential periodicity is exact on dyadic points") {
    const auto spec = LagrangianSpec::mechanical(
        {TrigTerm{1, 0, 0.7, 0.1}, TrigTerm{2, 1, -0.3, 0.2}, TrigTerm{3, -2, 0.05, 0.0}});
    auto gen = oracle::rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const double x = oracle::dyadic(gen);
        const double t = oracle::dyadic(gen);
        CHECK(potential_value(spec, x + 1.0, t) == potential_value(spec, x, t));
        CHECK(potential_value(spec, x, t + 1.0) == potential_value(spec, x, t));
        CHECK(potential_dx(spec, x + 1.0, t) == potential_dx(spec, x, t));
    }
    // Derivative consistency against central differences.
    for (int trial = 0; trial < 50; ++trial) {
        const double x = oracle::dyadic(gen);
        const double t = oracle::dyadic(gen);
        const double h = 1e-6;
        const double fd =
            (potential_value(spec, x + h, t) - potential_value(spec, x - h, t)) / (2 * h);
        CHECK(potential_dx(spec, x, t) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("twisted Lagrangian subtracts c f g v") {
    const auto free = LagrangianSpec::free_particle();
    const auto c1 = OneForm::uniform_form(1.0);
    const auto c05 = OneForm::uniform_form(0.5);
    CHECK(twist_lagrangian(free, c1, 0.3, 1.0, 0.0) == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(twist_lagrangian(free, c05, 0.3, 0.5, 0.0) == doctest::Approx(-0.125).epsilon(1e-14));
}

TEST_CASE("uniform one-form cumulative is the identity") {
    const auto f = OneForm::uniform_form(0.7);
    CHECK(f.cum(0.0) == 0.0);
    CHECK(f.segment_mass(0.2, 1.7) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(f.segment_avoids_support(0.1, 0.2) == false); // support is everywhere
}

TEST_CASE("density form: normalization, winding exactness, support arc") {
    // Plateau density supported on [0.25, 0.5].
    const int m = 64;
    std::vector<double> g(m, 0.0);
    for (int i = 16; i <= 32; ++i) g[static_cast<size_t>(i)] = 3.0;
    const auto form = OneForm::with_density(1.0, g, TimeProfile::constant_one());

    CHECK(form.cum(0.0) == 0.0);
    CHECK(form.cum(1.0) == 1.0);

    // Discrete cohomology: one full winding always carries mass exactly 1,
    // bitwise, regardless of the density (dyadic start points).
    auto gen = oracle::rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        const double x = oracle::dyadic(gen) * 4.0 - 2.0;
        CHECK(form.segment_mass(x, x + 1.0) == 1.0);
        CHECK(form.segment_mass(x, x + 3.0) == 3.0);
    }

    // Support arc endpoints sit on the last zero nodes around the plateau.
    CHECK(form.support_lo == doctest::Approx(15.0 / 64).epsilon(1e-12));
    CHECK(form.support_hi == doctest::Approx(33.0 / 64).epsilon(1e-12));

    CHECK(form.segment_avoids_support(0.6, 0.8));
    CHECK(form.segment_avoids_support(0.6, 1.2));
    CHECK_FALSE(form.segment_avoids_support(0.3, 0.35));
    CHECK_FALSE(form.segment_avoids_support(0.6, 1.3));
    CHECK_FALSE(form.segment_avoids_support(0.1, 0.9));

    // Monotone cumulative (density is nonnegative).
    double prev = form.cum(-1.0);
    for (int i = 1; i <= 300; ++i) {
        const double cur = form.cum(-1.0 + i * 0.01);
        CHECK(cur >= prev - 1e-15);
        prev = cur;
    }
}

TEST_CASE("time profile ramp") {
    const auto f = TimeProfile::smoothstep(2.0, 4.0);
    CHECK(f(1.0) == 0.0);
    CHECK(f(2.0) == 0.0);
    CHECK(f(3.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(f(4.0) == 1.0);
    CHECK(f(5.0) == 1.0);
    CHECK(TimeProfile::constant_one()(-7.3) == 1.0);
}

TEST_CASE("discrete block actions match closed forms") {
    const auto free = LagrangianSpec::free_particle();
    const auto c0 = OneForm::uniform_form(0.0);
    const auto c1 = OneForm::uniform_form(1.0);
    GridSpec grid; // defaults fine; dt passed explicitly

    // Straight half-turn over one period.
    CHECK(discrete_lagrangian(free, c0, grid, 0.0, 0.5, 0, 0.0, 1.0) ==
          doctest::Approx(0.125).epsilon(1e-14));
    // Full loop, one winding.
    CHECK(discrete_lagrangian(free, c0, grid, 0.0, 0.0, 1, 0.0, 1.0) ==
          doctest::Approx(0.5).epsilon(1e-14));
    // Twisting by c = 1 subtracts exactly the winding.
    CHECK(discrete_lagrangian(free, c1, grid, 0.0, 0.0, 1, 0.0, 1.0) ==
          doctest::Approx(-0.5).epsilon(1e-14));

    // Generating-function rest block of the integrable family.
    const auto g0 = LagrangianSpec::standard_family(0.0);
    CHECK(discrete_lagrangian(g0, c0, grid, 0.25, 0.25, 0, 0.0, 1.0) == 0.0);

    // Loop pairing exactness: any unit-mass density charges a winding the
    // same as the uniform form, bitwise at dyadic endpoints.
    std::vector<double> g(32);
    for (int i = 0; i < 32; ++i) g[static_cast<size_t>(i)] = 1.0 + 0.8 * std::sin(2 * oracle::pi * i / 32.0);
    const auto dens = OneForm::with_density(1.0, g, TimeProfile::constant_one());
    const double a = discrete_lagrangian(free, dens, grid, 0.3125, 0.3125, 1, 0.0, 1.0);
    const double b = discrete_lagrangian(free, c1, grid, 0.3125, 0.3125, 1, 0.0, 1.0);
    CHECK(a == b);
}

TEST_CASE("discrete block guards") {
    const auto free = LagrangianSpec::free_particle();
    const auto pend = LagrangianSpec::pendulum();
    const auto genfun = LagrangianSpec::standard_family(1.0);
    const auto c0 = OneForm::uniform_form(0.0);
    GridSpec grid;

    CHECK_THROWS_WITH_AS(
        (void)discrete_lagrangian(free, c0, grid, 0.0, 0.0, 3, 0.0, 1.0),
        doctest::Contains("cap"), std::invalid_argument);
    CHECK_THROWS_AS((void)discrete_lagrangian(genfun, c0, grid, 0.0, 0.0, 0, 0.0, 0.5),
                    std::invalid_argument);
    // Pendulum convexity threshold is 1/pi; a half-period block is too long.
    CHECK_THROWS_AS((void)discrete_lagrangian(pend, c0, grid, 0.0, 0.0, 0, 0.0, 0.5),
                    std::invalid_argument);
    CHECK_NOTHROW((void)discrete_lagrangian(pend, c0, grid, 0.0, 0.0, 0, 0.0, 0.125));
}

TEST_CASE("flow step: free particle and integrable twist map are exact") {
    const auto free = LagrangianSpec::free_particle();
    const auto c0 = OneForm::uniform_form(0.0);

    FlowState s = flow_step(free, c0, 0.2, 0.7, 0.0, 0.125);
    CHECK(s.x == doctest::Approx(0.2875).epsilon(1e-13));
    CHECK(s.v == doctest::Approx(0.7).epsilon(1e-13));

    const auto g0 = LagrangianSpec::standard_family(0.0);
    FlowState t = flow_step(g0, c0, 0.1, 0.3, 0.0, 1.0);
    CHECK(t.x == doctest::Approx(0.4).epsilon(1e-13));
    CHECK(t.v == doctest::Approx(0.3).epsilon(1e-13));
}

TEST_CASE("flow step approximately conserves pendulum energy") {
    const auto pend = LagrangianSpec::pendulum();
    const auto c0 = OneForm::uniform_form(0.0);
    const double dt = 1.0 / 64;
    double x = 0.5, v = 0.1;
    const double e0 = 0.5 * v * v + potential_value(pend, x, 0.0);
    for (int i = 0; i < 64; ++i) {
        FlowState s = flow_step(pend, c0, x, v, i * dt, dt);
        x = s.x;
        v = s.v;
    }
    const double e1 = 0.5 * v * v + potential_value(pend, x, 0.0);
    CHECK(e1 == doctest::Approx(e0).epsilon(0.02));
}

TEST_CASE("flow step is the stationarity condition of adjacent blocks") {
    // If x1 = flow(x0, v0), then the middle point of the two-block action
    // x0 -> x1 -> x2 is a critical point: numerical derivative vanishes.
    const auto pend = LagrangianSpec::pendulum();
    const auto form = OneForm::uniform_form(0.3);
    const double dt = 1.0 / 8;
    auto gen = oracle::rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const double x0 = oracle::dyadic(gen);
        const double v0 = 2.0 * oracle::dyadic(gen) - 1.0;
        FlowState s1 = flow_step(pend, form, x0, v0, 0.0, dt);
        FlowState s2 = flow_step(pend, form, s1.x, s1.v, dt, dt);
        auto two_block = [&](double mid) {
            return lifted_block(pend, form, x0, mid, 0.0, dt) +
                   lifted_block(pend, form, mid, s2.x, dt, dt);
        };
        const double h = 1e-6;
        const double deriv = (two_block(s1.x + h) - two_block(s1.x - h)) / (2 * h);
        CHECK(std::abs(deriv) < 1e-7);
    }
}
