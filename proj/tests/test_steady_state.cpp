#include <doctest.h>

#include <cmath>
#include <random>

#include "aggsteady/families.hpp"
#include "aggsteady/steady_state.hpp"

using namespace aggsteady;

namespace {

// Quadratic W, m = 2: W*rho = r^2/2 + M2/2 for unit mass, so rho = (L^2 - r^2)/4
// and unit mass gives c_n L^{n+2} / (2(n+2)) = 1.
double cap_radius(int n) { return std::pow(2.0 * (n + 2) / unit_ball_volume(n), 1.0 / (n + 2)); }

}  // namespace

TEST_CASE("quadratic cap oracle for m = 2") {
    CHECK(cap_radius(1) == doctest::Approx(std::cbrt(3.0)).epsilon(1e-15));
    for (int n = 1; n <= 3; ++n) {
        CAPTURE(n);
        const RadialGrid g = RadialGrid::uniform(n, 3.0, 1024);
        const SteadyState s = solve_steady(Potential::quadratic(), 2.0, n, tent(g, 1.0));
        REQUIRE(s.converged);
        const double L = cap_radius(n);
        CHECK(s.residual < 1e-8);
        CHECK(std::abs(s.density.mass() - 1.0) < 1e-12);
        CHECK(std::abs(s.boundary - L) < 1e-4);
        double err = 0.0;
        for (std::size_t i = 0; i < s.density.size(); ++i) {
            const double r = s.density.grid().r(i);
            err = std::max(err, std::abs(s.density.value(i) - std::max(0.0, (L * L - r * r) / 4)));
        }
        CHECK(err < 1e-4);
        CHECK(s.laplacian_at_zero == doctest::Approx(-0.5 * n).epsilon(1e-3));
    }
    // n = 1 numbers: L = 3^{1/3}, rho(0) = 3^{2/3}/4
    const RadialGrid g = RadialGrid::uniform(1, 3.0, 1024);
    const SteadyState s = solve_steady(Potential::quadratic(), 2.0, 1, uniform_ball(g, 2.0));
    CHECK(s.density.value(0) == doctest::Approx(std::pow(3.0, 2.0 / 3.0) / 4).epsilon(1e-5));
}

TEST_CASE("mass multiplier gives unit mass") {
    std::mt19937_64 rng(21);
    for (double m : {1.3, 1.5, 2.0, 3.0}) {
        const RadialGrid g = RadialGrid::uniform(2, 2.0, 500);
        std::vector<double> phi(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) phi[i] = g.r(i) * g.r(i) + 0.3 * std::sin(5 * g.r(i)) - 4.0;
        const double C = mass_multiplier(phi, g, m);
        double mass = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (C > phi[i]) mass += g.weight(i) * std::pow((m - 1) / m * (C - phi[i]), 1 / (m - 1));
        CAPTURE(m);
        CHECK(std::abs(mass - 1.0) < 1e-12);
    }
    CHECK_THROWS_AS(mass_multiplier({1.0, 2.0}, RadialGrid::uniform(1, 1.0, 3), 2.0), InvalidInput);
}

TEST_CASE("verify_steady separates steady and non-steady profiles") {
    // the exact cap sampled on refined grids: the residual shrinks with dr
    double prev = 1.0;
    for (std::size_t M : {1025u, 4097u, 16385u}) {
        const RadialGrid g = RadialGrid::uniform(1, 2.0, M);
        const auto v = verify_steady(quadratic_cap(g, cap_radius(1)), Potential::quadratic(), 2.0);
        CHECK(v.sup < prev / 4);
        prev = v.sup;
    }
    CHECK(prev < 1e-8);

    std::mt19937_64 rng(22);
    const RadialGrid g = RadialGrid::uniform(1, 2.0, 1024);
    const auto bad = verify_steady(random_decreasing(g, rng), Potential::quadratic(), 2.0);
    CHECK(bad.sup > 0.05);
    CHECK(bad.weak > 0.05);

    const auto s = solve_steady(Potential::riesz(1.0), 2.0, 1, tent(g, 1.0));
    const auto good = verify_steady(s.density, Potential::riesz(1.0), 2.0);
    CHECK(good.sup < 1e-8);
    CHECK(good.weak < 1e-3);
    CHECK(good.outside == 0.0);
    CHECK(good.strictly_decreasing);

    // zero padding the grid changes nothing: the radial profile is pinned at its centre
    const RadialGrid wide = RadialGrid::uniform(1, 2.0 * s.density.grid().r_max(), 2 * s.density.size() - 1);
    const auto padded = verify_steady(s.density.resampled(wide), Potential::riesz(1.0), 2.0);
    CHECK(std::abs(padded.sup - good.sup) < 1e-12);
}

TEST_CASE("converged profiles are decreasing and non-degenerate") {
    const std::vector<Potential> ws{Potential::quadratic(), Potential::riesz(1.0), Potential::riesz(0.5)};
    for (int n = 1; n <= 2; ++n) {
        const RadialGrid g = RadialGrid::uniform(n, 2.0, 512);
        for (const auto& w : ws) {
            for (double m : {1.5, 2.0, 2.5}) {
                SteadyOptions o;
                o.nodes = n == 1 ? 1024 : 256;
                const SteadyState s = solve_steady(w, m, n, power_cap(g, 1.0, 2.0, 1.0), o);
                CAPTURE(n);
                CAPTURE(m);
                CAPTURE(w.describe());
                REQUIRE(s.converged);
                CHECK(s.residual < 1e-8);
                CHECK(std::abs(s.density.mass() - 1.0) < 1e-12);
                CHECK(s.strictly_decreasing);
                CHECK(s.nondegenerate);
                CHECK_FALSE(s.touches_boundary);
            }
        }
    }
}

TEST_CASE("a constant added to W moves only C") {
    const RadialGrid g = RadialGrid::uniform(1, 2.0, 512);
    const auto w = Potential::riesz(0.5);
    const SteadyState a = solve_steady(w, 2.0, 1, tent(g, 1.0));
    const SteadyState b = solve_steady(w.shifted(3.7), 2.0, 1, tent(g, 1.0));
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    CHECK(l1_distance(a.density, b.density) < 1e-10);
    CHECK(b.C - a.C == doctest::Approx(3.7).epsilon(1e-10));
}

TEST_CASE("non-convergence is reported with its history") {
    const RadialGrid g = RadialGrid::uniform(1, 2.0, 512);
    SteadyOptions o;
    o.max_iter = 2;
    o.newton = false;
    const SteadyState s = solve_steady(Potential::riesz(1.0), 2.0, 1, uniform_ball(g, 1.9), o);
    CHECK_FALSE(s.converged);
    CHECK(s.residual_history.size() == 2);
    CHECK(s.residual > 1e-8);
    CHECK_THROWS_AS(solve_steady(Potential::riesz(1.0), 1.0, 1, tent(g), o), InvalidInput);
    CHECK_THROWS_AS(solve_steady(Potential::riesz(1.0), 2.0, 2, tent(g), o), InvalidInput);
}

TEST_CASE("uniqueness scans for m >= 2") {
    SteadyOptions o;
    o.nodes = 1024;
    SUBCASE("riesz(2), m = 2.5") {
        const auto scan = uniqueness_scan(Potential::riesz(2.0), 2.5, 1, diverse_initializations(1, 4.0), 1e-3, o);
        CHECK(scan.failures == 0);
        CHECK(scan.clusters() == 1);
    }
    SUBCASE("forged quadratic, m = 2, wide and peaked starts") {
        const auto w = forge_tail(Potential::quadratic(), 2.0, 0.25).potential();
        const auto scan = uniqueness_scan(w, 2.0, 1, diverse_initializations(1, 8.0), 1e-3, o);
        CHECK(scan.failures == 0);
        CHECK(scan.clusters() == 1);
        const auto j = scan.to_json();
        CHECK(j["members"].size() == 10);
    }
    SUBCASE("identical starts") {
        const RadialGrid g = RadialGrid::uniform(1, 2.0, 256);
        const std::vector<RadialDensity> same(10, tent(g, 1.0));
        CHECK(uniqueness_scan(Potential::riesz(1.0), 2.0, 1, same, 1e-3, o).clusters() == 1);
        CHECK_THROWS_AS(uniqueness_scan(Potential::riesz(1.0), 2.0, 1, {same.begin(), same.begin() + 9}), InvalidInput);
    }
}
