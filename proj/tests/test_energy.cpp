#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <tuple>

#include "aggsteady/energy.hpp"
#include "aggsteady/families.hpp"

using namespace aggsteady;

namespace {

// measure of {|x| <= A, |y| <= B, |x - y| > a} by exact integration over y
double pair_measure(double A, double B, double a) {
    auto outside = [&](double y) {
        const double lo = std::max(-A, y - a), hi = std::min(A, y + a);
        return 2.0 * A - std::max(0.0, hi - lo);
    };
    // piecewise linear in y with kinks at +-A +- a; Simpson on each piece is exact
    std::vector<double> knots{-B, B};
    for (double k : {-A - a, -A + a, A - a, A + a})
        if (k > -B && k < B) knots.push_back(k);
    std::sort(knots.begin(), knots.end());
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const double l = knots[i], r = knots[i + 1];
        acc += (r - l) / 6.0 * (outside(l) + 4.0 * outside(0.5 * (l + r)) + outside(r));
    }
    return acc;
}

Potential smooth_table() {
    std::vector<double> r, wp;
    for (int j = 0; j <= 200; ++j) {
        const double x = 4.0 * j / 200;
        r.push_back(x);
        wp.push_back(x / std::sqrt(1 + x * x));
    }
    return Potential::tabulated(r, wp);
}

}  // namespace

TEST_CASE("entropy of the uniform density on [-1,1]") {
    const RadialGrid g = RadialGrid::uniform(1, 2.0, 8193);
    CHECK(entropy(uniform_ball(g, 1.0), 2.0) == doctest::Approx(0.5).epsilon(1e-3));
    // h(s) = s/2 exactly
    std::vector<double> s = uniform_mass_grid(9999), h, hp(9999, 0.5);
    for (double x : s) h.push_back(0.5 * x);
    const HeightFunction H(1, s, h, hp, 0.5, false);
    CHECK(entropy_height(H, 2.0) == doctest::Approx(0.5).epsilon(1e-8));
    CHECK_THROWS_AS(entropy_height(H, 1.0), InvalidInput);
    CHECK_THROWS_AS(entropy(uniform_ball(g, 1.0), 0.5), InvalidInput);
}

TEST_CASE("physical and height routes of the entropy agree") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 12; ++i) {
        const int n = 1 + i % 3;
        const RadialGrid g = RadialGrid::uniform(n, 1.0, 4096);
        const RadialDensity rho = i == 0 ? tent(g, 0.8) : i == 1 ? quadratic_cap(g, 0.9) : random_decreasing(g, rng);
        const HeightFunction h = height_from_density(rho);
        for (double m : {1.5, 2.0, 2.5, 3.0}) {
            CAPTURE(n);
            CAPTURE(m);
            CHECK(entropy(rho, m) == doctest::Approx(entropy_height(h, m)).epsilon(1e-6));
        }
    }
}

TEST_CASE("entropy along the curve: affine at m = 2, convex above, concave below") {
    std::mt19937_64 rng(22);
    for (int i = 0; i < 6; ++i) {
        const int n = 1 + i % 3;
        const RadialGrid g = RadialGrid::uniform(n, 1.0, 2048);
        const auto c = InterpolationCurve::from_densities(random_decreasing(g, rng), random_decreasing(g, rng));
        for (double m : {1.5, 2.0, 2.5}) {
            std::vector<double> S;
            for (int k = 0; k <= 40; ++k) S.push_back(entropy_on_curve(c, k / 40.0, m));
            const auto d2 = second_differences(S);
            double scale = 0.0;
            for (double v : S) scale = std::max(scale, std::abs(v));
            for (double v : d2) {
                if (m == 2.0) CHECK(std::abs(v) < 1e-8 * scale);
                if (m > 2.0) CHECK(v >= 0.0);
                if (m < 2.0) CHECK(v <= 0.0);
            }
        }
    }
}

TEST_CASE("interaction energy examples") {
    const RadialGrid g = RadialGrid::uniform(1, 2.0, 2049);
    const RadialDensity u = uniform_ball(g, 1.0);
    // step range beyond the diameter: no pair is separated by more than a
    for (int n = 1; n <= 3; ++n) {
        const RadialGrid gn = RadialGrid::uniform(n, 1.0, 257);
        CHECK(std::abs(interaction(tent(gn, 0.5), Potential::step(1.0))) < 1e-12);
    }
    const RadialGrid fine = RadialGrid::uniform(1, 1.0, 4097);
    const auto rep = energy_report(uniform_ball(fine, 1.0), 2.0, Potential::quadratic());
    CHECK(rep.I == doctest::Approx(1.0 / 6.0).epsilon(1e-3));
    CHECK(rep.E == rep.S + rep.I);
    CHECK(rep.to_json()["potential"]["kind"] == "quadratic");
    CHECK(interaction(u, Potential::quadratic().shifted(3.0)) ==
          doctest::Approx(interaction(u, Potential::quadratic()) + 1.5).epsilon(1e-12));
}

TEST_CASE("interaction is linear in the step decomposition") {
    // tent on a grid where the kink sits on a node: product integration is exact for each step
    const RadialGrid g = RadialGrid::uniform(1, 1.0, 65);
    const RadialDensity rho = tent(g, 1.0);
    for (const Potential& w : {Potential::riesz(1.0), Potential::quadratic(), smooth_table()}) {
        const auto dec = step_decompose(w, 2.0, 400);
        double sum = 0.5 * dec.w0 * rho.mass() * rho.mass();
        for (std::size_t j = 0; j < dec.a.size(); ++j) sum += dec.weight[j] * interaction(rho, Potential::step(dec.a[j]));
        CHECK(sum == doctest::Approx(interaction(rho, w)).epsilon(1e-5));
    }
    clear_interaction_cache();
}

TEST_CASE("1-D step integrand: closed forms against the exact pair measure") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> U(0.2, 3.0);
    int seen[4] = {0, 0, 0, 0};
    for (int i = 0; i < 3000; ++i) {
        const double f = U(rng), g = U(rng), a = 0.5 * U(rng);
        const double direct = f * g * pair_measure(0.5 / f, 0.5 / g, a);
        ++seen[static_cast<int>(step_case_1d(f, g, a))];
        CHECK(step_integrand_1d(f, g, a) == doctest::Approx(direct).epsilon(1e-12).scale(1.0));
    }
    CHECK(seen[1] > 0);
    CHECK(seen[2] > 0);
    CHECK(seen[3] > 0);
    // nested regime: 1 - 2 a min(f,g), affine along linear f, g
    const double a = 0.1;
    auto I = [&](double t) { return step_integrand_1d(1.0 + t, 4.0 - t, a); };
    CHECK(step_case_1d(1.0, 4.0, a) == StepCase::Nested);
    CHECK(I(0.5) == doctest::Approx(1 - 2 * a * 1.5));
    CHECK(std::abs(I(0.2) - 2 * I(0.5) + I(0.8)) < 1e-14);
}

TEST_CASE("1-D crossing case: negative discriminant and convexity") {
    std::mt19937_64 rng(24);
    std::uniform_real_distribution<double> U(0.05, 5.0), V(-3.0, 3.0);
    int tested = 0;
    while (tested < 1000) {
        const double f = U(rng), g = U(rng), a = U(rng);
        if (step_case_1d(f, g, a) != StepCase::Crossing) continue;
        ++tested;
        CHECK(step_discriminant_1d(f, g, a) < 0.0);
        const double A = 0.5 / f, B = 0.5 / g;
        const double factored = 4 * (a - A + B) * (a + A - B) * (a + A + B) * (a - A - B);
        CHECK(step_discriminant_1d(f, g, a) == doctest::Approx(factored).epsilon(1e-9).scale(1e-300));
    }
    tested = 0;
    while (tested < 1000) {
        const double f = U(rng), g = U(rng), a = U(rng), fp = V(rng), gp = V(rng);
        if (step_case_1d(f, g, a) != StepCase::Crossing) continue;
        ++tested;
        const double d2 = step_second_derivative_1d(f, g, fp, gp, a);
        CHECK(d2 >= 0.0);
        // against differences of the integrand along the line, where it stays in the crossing case
        const double h = 1e-4;
        if (step_case_1d(f - h * fp, g - h * gp, a) == StepCase::Crossing &&
            step_case_1d(f + h * fp, g + h * gp, a) == StepCase::Crossing) {
            const double fd = (step_integrand_1d(f + h * fp, g + h * gp, a) - 2 * step_integrand_1d(f, g, a) +
                               step_integrand_1d(f - h * fp, g - h * gp, a)) / (h * h);
            CHECK(std::abs(fd - d2) < 1e-4 * (1 + std::abs(d2)));
        }
    }
}

TEST_CASE("step energy along the curve: layer formula against the radial operator") {
    const RadialGrid g1 = RadialGrid::uniform(1, 1.0, 2049);
    const auto c1 = InterpolationCurve::from_densities(tent(g1, 0.5), power_cap(g1, 0.9, 2.0, 1.5));
    const double a = 0.4;
    const CurveEnergy ce(c1, Potential::step(a), 2.0, 2048);
    for (double t : {0.0, 0.5, 1.0}) {
        const auto v = interaction_on_curve_1d(c1, t, a, 600);
        CHECK(v.value == doctest::Approx(ce.interaction(t)).epsilon(2e-3));
        CHECK(v.cases[1] + v.cases[2] + v.cases[3] == v.samples);
        CHECK(interaction_on_curve_nd(c1, t, a) == doctest::Approx(ce.interaction(t)).epsilon(2e-3));
    }
    CHECK(interaction_on_curve_1d(c1, 0.5, 100.0, 50).value == 0.0);
    CHECK(interaction_on_curve_1d(c1, 0.5, 100.0, 50).cases[1] == 2500);
    // exact ties with a case boundary are a vanishing fraction
    for (std::size_t N : {100, 200, 400}) {
        const auto v = interaction_on_curve_1d(c1, 0.3, a, N);
        CHECK(static_cast<double>(v.cases[0]) / v.samples < 1e-3);
    }

    const RadialGrid g2 = RadialGrid::uniform(2, 1.0, 513);
    const auto c2 = InterpolationCurve::from_densities(tent(g2, 0.6), power_cap(g2, 0.9, 2.0, 1.5));
    const CurveEnergy ce2(c2, Potential::step(a), 2.0, 512);
    CHECK(interaction_on_curve_nd(c2, 0.5, a) == doctest::Approx(ce2.interaction(0.5)).epsilon(3e-3));
}

TEST_CASE("curve energy: scaled reference grid matches direct evaluation") {
    for (auto [n, M, tol] : {std::tuple{2, std::size_t(256), 2e-4}, {3, std::size_t(1024), 1e-5}}) {
        const RadialGrid g = RadialGrid::uniform(n, 1.0, M + 1);
        const auto c = InterpolationCurve::from_densities(tent(g, 0.5), quadratic_cap(g, 0.9));
        for (const Potential& w : {Potential::riesz(1.0), Potential::riesz(0.0), Potential::riesz(0.5).shifted(2.0)}) {
            const CurveEnergy ce(c, w, 2.0, M);
            CHECK(ce.scaled());
            for (double t : {0.25, 0.75}) {
                CAPTURE(n);
                CAPTURE(w.describe());
                const RadialDensity rt = curve_at(c, t, M);
                CHECK(ce.interaction(t) == doctest::Approx(interaction(rt, w)).epsilon(tol));
                CHECK(ce.entropy_physical(t) == doctest::Approx(ce.entropy(t)).epsilon(tol));
            }
        }
    }
    clear_interaction_cache();
}

TEST_CASE("interaction is convex along the curve") {
    std::mt19937_64 rng(25);
    for (int i = 0; i < 3; ++i) {
        const int n = 1 + i;
        const RadialGrid g = RadialGrid::uniform(n, 1.0, 1024);
        const auto c = InterpolationCurve::from_densities(random_decreasing(g, rng), random_decreasing(g, rng));
        for (const Potential& w : {Potential::quadratic(), Potential::riesz(1.0), Potential::riesz(0.5), smooth_table()}) {
            CAPTURE(n);
            CAPTURE(w.describe());
            const auto cert = certify_convexity(c, 2.0, w, 21, 512);
            CHECK(cert.min_d2I > 1e-10 * cert.scale_I);
            CHECK(cert.pass);
            CHECK(std::abs(cert.max_d2S) < 1e-8 * cert.scale_S);
        }
    }
}

TEST_CASE("certificate for identical endpoints is degenerate") {
    const RadialGrid g = RadialGrid::uniform(1, 1.0, 513);
    const RadialDensity rho = quadratic_cap(g, 0.7);
    const auto cert = certify_convexity(InterpolationCurve::from_densities(rho, rho), 2.0, Potential::riesz(1.0), 11, 256);
    CHECK(cert.degenerate);
    CHECK(cert.pass);
    for (double v : cert.d2E) CHECK(std::abs(v) < 1e-13);
    CHECK(cert.to_json()["pass"] == true);
}

TEST_CASE("dilation scaling") {
    const RadialGrid g = RadialGrid::uniform(1, 1.0, 2049);
    const RadialDensity rho = tent(g, 1.0);
    const Potential w = Potential::step(1.0);
    const auto one = dilation_scan(rho, 2.0, w, {1.0});
    const auto rep = energy_report(rho, 2.0, w);
    CHECK(one.rows[0].E == doctest::Approx(rep.E).epsilon(1e-14));
    const auto half = dilation_scan(rho, 2.0, w, {0.5});
    CHECK(half.rows[0].S == doctest::Approx(0.5 * rep.S).epsilon(1e-12));
    for (double m : {1.5, 3.0}) {
        const auto d = dilation_scan(rho, m, w, {0.3, 2.0});
        for (const auto& row : d.rows) CHECK(row.S == doctest::Approx(std::pow(row.lambda, m - 1) * entropy(rho, m)).epsilon(1e-12));
    }
    // compact interaction, m = 1.5: E - W(inf)/2 ~ lambda^{(m-1)n} as lambda -> 0
    const auto small = dilation_scan(rho, 1.5, w, {1e-3, 2e-3, 1e-2});
    CHECK(small.far_field == doctest::Approx(0.5));
    CHECK(small.fitted_exponent == doctest::Approx(0.5).epsilon(0.05));
}
