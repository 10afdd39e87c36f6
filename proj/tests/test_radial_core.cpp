#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "aggsteady/families.hpp"
#include "aggsteady/height_function.hpp"

using namespace aggsteady;

namespace {

// int min(rho, level) dx by adaptive quadrature of the piecewise-linear profile
double mass_below(const RadialDensity& rho, double level) {
    const int n = rho.dimension();
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < rho.size(); ++i) {
        auto f = [&](double r) { return std::min(rho.evaluate(r), level) * std::pow(r, n - 1); };
        total += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, rho.grid().r(i), rho.grid().r(i + 1), 5,
                                                                               1e-14);
    }
    return unit_sphere_area(n) * total;
}

}  // namespace

TEST_CASE("unit ball constants") {
    CHECK(unit_ball_volume(1) == doctest::Approx(2.0));
    CHECK(unit_ball_volume(2) == doctest::Approx(std::numbers::pi));
    CHECK(unit_ball_volume(3) == doctest::Approx(4.0 * std::numbers::pi / 3.0));
    CHECK(unit_sphere_area(3) == doctest::Approx(4.0 * std::numbers::pi));
}

TEST_CASE("grid weights sum to the ball volume") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    for (int n = 1; n <= 5; ++n) {
        std::vector<double> r{0.0};
        for (int i = 0; i < 300; ++i) r.push_back(r.back() + u(rng));
        RadialGrid g(n, r);
        const double expect = unit_ball_volume(n) * std::pow(r.back(), n);
        CHECK(std::abs(g.total_volume() - expect) <= 1e-12 * expect);
        // weights integrate linear functions of r exactly
        double s = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) s += g.weight(i) * g.r(i);
        const double exact = unit_sphere_area(n) * std::pow(r.back(), n + 1) / (n + 1);
        CHECK(std::abs(s - exact) <= 1e-12 * exact);
        for (std::size_t i = 0; i + 1 < g.size(); ++i) {
            CHECK(g.face(i) >= g.r(i));
            CHECK(g.face(i) <= g.r(i + 1));
        }
    }
}

TEST_CASE("grid rejects bad nodes") {
    CHECK_THROWS_AS(RadialGrid(1, {0.0, 1.0, 1.0}), InvalidInput);
    CHECK_THROWS_AS(RadialGrid(1, {0.1, 1.0}), InvalidInput);
    CHECK_THROWS_AS(RadialGrid(0, {0.0, 1.0}), InvalidInput);
    CHECK_THROWS_AS(RadialDensity(RadialGrid::uniform(1, 1.0, 3), {1.0, -1.0, 0.0}), InvalidInput);
}

TEST_CASE("norms and moments") {
    const auto g = RadialGrid::uniform(1, 1.0, 4097);
    RadialDensity uni(g, std::vector<double>(g.size(), 0.5));
    CHECK(uni.mass() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(lp_integral(uni, 2.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(lp_norm(uni, 2.0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(moment(uni, 0.0) == doctest::Approx(1.0));
    CHECK(support_radius(uni) == 1.0);
    CHECK_THROWS_AS(lp_norm(uni, 0.5), InvalidInput);

    const auto t = tent(g);
    CHECK(moment(t, 0.0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(moment(t, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-7));
    CHECK(linf(t) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t.support_radius() == 1.0);
}

TEST_CASE("uniform density has h(s) = s/2") {
    const auto g = RadialGrid::uniform(1, 1.0, 4097);
    RadialDensity uni(g, std::vector<double>(g.size(), 0.5));
    const auto s = chebyshev_mass_grid(257);
    const auto h = height_from_density(uni, s);
    CHECK_FALSE(h.strict());
    for (std::size_t j = 0; j < s.size(); ++j) {
        CHECK(h.h()[j] == doctest::Approx(s[j] / 2.0).epsilon(1e-13));
        CHECK(h.hprime()[j] == doctest::Approx(0.5).epsilon(1e-13));
    }
    CHECK(h.hprime_at_zero() == doctest::Approx(0.5));
}

TEST_CASE("tent height function matches the closed form and direct quadrature") {
    const auto g = RadialGrid::uniform(1, 1.0, 4097);
    const auto t = tent(g);
    const auto s = chebyshev_mass_grid(512);
    const auto h = height_from_density(t, s);
    CHECK(h.strict());
    CHECK(h.is_valid());
    for (std::size_t j = 0; j < s.size(); ++j) {
        const double exact = 1.0 - std::sqrt(1.0 - s[j]);
        CHECK(h.h()[j] == doctest::Approx(exact).epsilon(1e-10));
        CHECK(h.hprime()[j] == doctest::Approx(0.5 / std::sqrt(1.0 - s[j])).epsilon(1e-9));
    }
    for (std::size_t j = 0; j < s.size(); j += 37) CHECK(mass_below(t, h.h()[j]) == doctest::Approx(s[j]).epsilon(1e-10));
}

TEST_CASE("rejections") {
    const auto g = RadialGrid::uniform(1, 1.0, 11);
    std::vector<double> v(11, 0.0);
    v[0] = 1.0;
    v[3] = 2.0;
    CHECK_THROWS_AS(height_from_density(RadialDensity(g, v), {0.5}), InvalidInput);
    const auto t = tent(g);
    CHECK_THROWS_AS(height_from_density(t, {0.0, 0.5}), InvalidInput);
    CHECK_THROWS_AS(height_from_density(t, {0.5, 1.0}), InvalidInput);
    CHECK_THROWS_AS(HeightFunction(1, {0.5}, {0.5}, {-1.0}, 1.0), InvalidInput);
}

TEST_CASE("uniform ball from constant h'") {
    for (int n = 1; n <= 3; ++n) {
        const double R = 1.3;
        const double hp = 1.0 / (unit_ball_volume(n) * std::pow(R, n));
        const auto s = chebyshev_mass_grid(1024);
        std::vector<double> h(s.size()), d(s.size(), hp);
        for (std::size_t j = 0; j < s.size(); ++j) h[j] = hp * s[j];
        HeightFunction f(n, s, h, d, hp, false);
        CHECK(f.support_radius() == doctest::Approx(R));
        const auto rho = density_from_height(f, RadialGrid::uniform(n, 2.0, 2001));
        for (std::size_t i = 0; i < rho.size(); i += 50) {
            const double r = rho.grid().r(i);
            if (r < R - 1e-9) CHECK(rho.value(i) == doctest::Approx(hp).epsilon(1e-5));
            if (r > R + 1e-9) CHECK(rho.value(i) == 0.0);
        }
    }
}

TEST_CASE("two-layer h' gives a two-step density") {
    // h' = a on (0, 1/2), b on (1/2, 1): rho = a + b on B(r_b), a on B(r_a) \ B(r_b)
    const double a = 0.25, b = 1.0;
    const auto s = uniform_mass_grid(4000);
    std::vector<double> h(s.size()), d(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) {
        d[j] = s[j] < 0.5 ? a : b;
        h[j] = s[j] < 0.5 ? a * s[j] : 0.5 * a + b * (s[j] - 0.5);
    }
    HeightFunction f(1, s, h, d, a, false);
    const double ra = 1.0 / (2.0 * a), rb = 1.0 / (2.0 * b);
    const auto rho = density_from_height(f, RadialGrid::uniform(1, 2.5, 2501));
    double err = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        const double r = rho.grid().r(i);
        const double exact = r < rb ? 0.5 * a + 0.5 * b : (r < ra ? 0.5 * a : 0.0);
        err += rho.grid().weight(i) * std::abs(rho.value(i) - exact);
    }
    CHECK(err < 2e-3);
    CHECK(rho.value(0) == doctest::Approx(0.5 * a + 0.5 * b).epsilon(1e-3));
    CHECK(rho.evaluate(1.2) == doctest::Approx(0.5 * a).epsilon(1e-4));
}

TEST_CASE("round trip and h' identity on random densities") {
    std::mt19937_64 rng(20240601);
    const auto s = chebyshev_mass_grid();
    for (int trial = 0; trial < 6; ++trial) {
        const int n = 1 + trial % 3;
        const auto g = RadialGrid::uniform(n, 1.0, 4096);
        const auto rho = random_decreasing(g, rng);
        REQUIRE(rho.is_strictly_decreasing_on_support());
        const auto h = height_from_density(rho, s);
        CHECK(h.is_valid());
        const auto back = density_from_height(h, g);
        CHECK(l1_distance(rho, back) < 1e-6);
        double worst = 0.0;
        const double cn = unit_ball_volume(n);
        for (std::size_t j = 0; j < s.size(); j += 7) {
            const double radius = level_set_radius(rho, h.h()[j] * rho.mass());
            const double measure = cn * std::pow(radius, n);
            worst = std::max(worst, std::abs(h.hprime()[j] * measure - 1.0));
        }
        CHECK(worst < 1e-8);
        // h'(0+) = 1/|supp rho|, linear extrapolation from two tiny mass levels
        const double s1 = 1e-15, s2 = 2e-15;
        const auto tiny = height_from_density(rho, {s1, s2});
        const double extrap = tiny.hprime()[0] - s1 * (tiny.hprime()[1] - tiny.hprime()[0]) / (s2 - s1);
        const double exact = 1.0 / (cn * std::pow(rho.support_radius(), n));
        CHECK(std::abs(extrap / exact - 1.0) < 1e-4);
    }
}

TEST_CASE("tent round trip on 4096 nodes") {
    const auto g = RadialGrid::uniform(1, 1.0, 4096);
    const auto t = tent(g);
    const auto back = density_from_height(height_from_density(t), g);
    CHECK(l1_distance(t, back) < 1e-6);
}

TEST_CASE("height function evaluation is continuous and linear under combination") {
    const auto g = RadialGrid::uniform(2, 1.0, 1024);
    const auto s = chebyshev_mass_grid(512);
    const auto h0 = height_from_density(tent(g, 0.6), s);
    const auto h1 = height_from_density(quadratic_cap(g, 0.9), s);
    const auto mid = HeightFunction::combine(0.3, h0, 0.7, h1);
    for (double q : {0.01, 0.2, 0.5, 0.77, 0.999, 0.9999999}) {
        CHECK(mid.height(q) == doctest::Approx(0.3 * h0.height(q) + 0.7 * h1.height(q)).epsilon(1e-12));
        CHECK(mid.derivative(q) == doctest::Approx(0.3 * h0.derivative(q) + 0.7 * h1.derivative(q)).epsilon(1e-12));
    }
    CHECK(mid.power_integral(1.0) == doctest::Approx(0.3 * h0.power_integral(1.0) + 0.7 * h1.power_integral(1.0)));
    // the height route and the physical route give the same int rho^2 = 2 int h ds
    const auto rho = quadratic_cap(g, 0.9);
    CHECK(2.0 * h1.power_integral(1.0) == doctest::Approx(lp_integral(rho, 2.0)).epsilon(1e-5));
    const auto stitched = HeightFunction::combine(1.0, h0, 0.0, h1);
    for (std::size_t j = 1; j < s.size(); ++j) {
        const double left = stitched.height(s[j] - 1e-13), right = stitched.height(s[j] + 1e-13);
        CHECK(std::abs(right - left) < 1e-9);
    }
}

TEST_CASE("mass_at_slope reports plateaus") {
    const auto s = chebyshev_mass_grid(64);
    std::vector<double> h(s.size()), d(s.size(), 0.5);
    for (std::size_t j = 0; j < s.size(); ++j) h[j] = 0.5 * s[j];
    HeightFunction f(1, s, h, d, 0.5, false);
    CHECK_THROWS_AS(f.mass_at_slope(0.5), InvalidInput);
}

TEST_CASE("csv round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "aggsteady_io_test";
    const auto g = RadialGrid::uniform(3, 1.0, 100);
    const auto rho = quadratic_cap(g, 0.8);
    write_density_csv((dir / "rho.csv").string(), rho);
    const auto back = read_density_csv((dir / "rho.csv").string());
    CHECK(back.dimension() == 3);
    CHECK(back.values() == rho.values());
    const auto h = height_from_density(rho, chebyshev_mass_grid(64));
    write_height_csv((dir / "h.csv").string(), h);
    const auto hb = read_height_csv((dir / "h.csv").string());
    CHECK(hb.h() == h.h());
    CHECK(hb.hprime_at_zero() == h.hprime_at_zero());
    std::filesystem::remove_all(dir);
}
