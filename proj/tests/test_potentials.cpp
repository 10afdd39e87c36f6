#include <doctest.h>

#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "aggsteady/families.hpp"
#include "aggsteady/interaction_operator.hpp"
#include "aggsteady/potentials.hpp"

using namespace aggsteady;

namespace {

double gk(const std::function<double(double)>& f, double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
}

// endpoint singularities (log, r^k with k < 0)
double ts(const std::function<double(double)>& f, double a, double b) {
    static boost::math::quadrature::tanh_sinh<double> q;
    return q.integrate([&](double t) { return f(t); }, a, b);
}

Potential smooth_table() {
    std::vector<double> r, wp;
    for (int j = 0; j <= 200; ++j) {
        const double x = 4.0 * j / 200.0;
        r.push_back(x);
        wp.push_back(x / std::sqrt(1.0 + x * x));
    }
    return Potential::tabulated(r, wp);
}

}  // namespace

TEST_CASE("eval_wprime examples") {
    CHECK(eval_wprime(Potential::riesz(2), 3.0) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(eval_wprime(Potential::riesz(0), 2.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(eval_wprime(Potential::quadratic(), 1.5) == doctest::Approx(1.5));
    CHECK_THROWS_AS(eval_wprime(Potential::step(1.0), 0.5), InvalidInput);
    CHECK_THROWS_AS(eval_wprime(Potential::riesz(1), 0.0), InvalidInput);
    CHECK_THROWS_AS(eval_wprime(Potential::riesz(1), -1.0), InvalidInput);
}

TEST_CASE("cutoff eta") {
    CHECK(cutoff_eta(-1.0) == 0.0);
    CHECK(cutoff_eta(2.0) == 1.0);
    double max_slope = 0.0, prev = cutoff_eta(0.0);
    const int N = 200000;
    for (int i = 1; i <= N; ++i) {
        const double x = static_cast<double>(i) / N;
        const double v = cutoff_eta(x);
        CHECK(v >= prev);
        max_slope = std::max(max_slope, (v - prev) * N);
        prev = v;
    }
    CHECK(max_slope < 2.0);
    CHECK(max_slope == doctest::Approx(15.0 / 8.0).epsilon(1e-6));
}

TEST_CASE("antiderivatives agree with quadrature of W") {
    const std::vector<Potential> pots = {Potential::riesz(1), Potential::riesz(0.5), Potential::riesz(0),
                                         Potential::riesz(2.5), smooth_table(),
                                         forge_tail(Potential::quadratic(), 0.7, 0.25).potential()};
    for (const auto& w : pots) {
        CAPTURE(w.describe());
        for (double x : {0.3, 1.1, 1.9, 2.6, 5.0}) {
            const double f1 = ts([&](double t) { return w.value(t); }, 0.0, x);
            const double f2 = ts([&](double t) { return (x - t) * w.value(t); }, 0.0, x);
            CHECK(w.F1(x) == doctest::Approx(f1).epsilon(1e-9));
            CHECK(w.F2(x) == doctest::Approx(f2).epsilon(1e-9));
            // Phi only enters through differences
            const double dphi = gk([&](double t) { return t * w.value(t); }, 0.2, x);
            CHECK(w.Phi(x) - w.Phi(0.2) == doctest::Approx(dphi).epsilon(1e-9));
        }
    }
}

TEST_CASE("tabulated potential interpolates W' monotonically") {
    const Potential w = smooth_table();
    CHECK(w.value(0.0) == doctest::Approx(0.0));
    // cubic interpolation error of the table, h = 0.02
    for (double x : {0.01, 0.37, 1.0, 2.22, 3.99}) CHECK(std::abs(w.wprime(x) - x / std::sqrt(1 + x * x)) < 1e-5);
    CHECK(w.wprime(10.0) == doctest::Approx(4.0 / std::sqrt(17.0)));
    double prev = 0.0;
    for (int i = 1; i < 2000; ++i) {
        const double x = 5.0 * i / 2000.0;
        CHECK(w.wprime(x) >= prev);
        prev = w.wprime(x);
    }
}

TEST_CASE("forge tail invariants") {
    const Potential base = Potential::quadratic();
    const double R = 1.3, eps = 0.2;
    const ModifiedPotential mp = forge_tail(base, R, eps);
    const Potential& W = mp.potential();
    CHECK(W.wprime(R) == base.wprime(R));
    CHECK(W.wprime(4.0 * R) == eps);
    CHECK(mp.w1().wprime(3.5 * R) == 0.0);
    CHECK(mp.w2().wprime(3.5 * R) == eps);
    CHECK(std::abs(mp.w1_at_3R()) < 1e-12);
    for (double r : {0.1, 0.9, 2.0 * R}) CHECK(W.value(r) - base.value(r) == doctest::Approx(mp.offset()).epsilon(1e-12));
    for (double r : {2.0 * R, 3.0 * R}) {
        CHECK(std::abs(W.wprime(r * (1 + 1e-13)) - W.wprime(r * (1 - 1e-13))) < 1e-10);
        CHECK(std::abs(W.value(r * (1 + 1e-13)) - W.value(r * (1 - 1e-13))) < 1e-10);
    }
    for (int i = 1; i < 4000; ++i) {
        const double r = 5.0 * R * i / 4000.0;
        CHECK(W.wprime(r) >= 0.0);
        if (r <= 2.0 * R || r >= 3.0 * R) CHECK(W.wprime(r) > 0.0);
    }
    CHECK_THROWS_AS(forge_tail(base, R, 0.0), InvalidInput);
    CHECK_THROWS_AS(forge_tail(base, R, 1.0), InvalidInput);
    CHECK_THROWS_AS(forge_tail(base, -1.0, 0.5), InvalidInput);
}

TEST_CASE("Laplacian of w2 obeys the sharp cutoff bound") {
    // |w2'' + (n-1) w2'/r| <= eps (sup eta' + (n-1)/2) / R on r >= 2R
    for (double R : {0.5, 1.0, 3.0}) {
        const double eps = 0.3;
        const ModifiedPotential mp = forge_tail(Potential::riesz(1), R, eps);
        for (int n = 1; n <= 5; ++n) {
            CAPTURE(n);
            CHECK(mp.laplacian_w2_sup(n) <= eps * (15.0 / 8.0 + 0.5 * (n - 1)) / R);
        }
    }
}

TEST_CASE("n eps / R bound for the w2 Laplacian holds only from n = 3 on") {
    // the slope 15/8 of the cutoff already exceeds n for n = 1, 2
    const double R = 1.0, eps = 0.5;
    const ModifiedPotential mp = forge_tail(Potential::quadratic(), R, eps);
    CHECK(mp.laplacian_w2_sup(1) > 1.0 * eps / R);
    CHECK(mp.laplacian_w2_sup(2) > 2.0 * eps / R);
    for (int n = 3; n <= 6; ++n) CHECK(mp.laplacian_w2_sup(n) <= n * eps / R);
}

TEST_CASE("step decomposition") {
    SUBCASE("quadratic on [0,2]") {
        const auto d = step_decompose(Potential::quadratic(), 2.0, 2000);
        double err = 0.0;
        for (int i = 0; i <= 1000; ++i) {
            const double r = 2.0 * i / 1000.0;
            err = std::max(err, std::abs(d.reconstruct(r) - 0.5 * r * r));
        }
        CHECK(err < 1e-5);
    }
    SUBCASE("single step is a point mass") {
        const auto d = step_decompose(Potential::step(0.7), 2.0, 100);
        REQUIRE(d.a.size() == 1);
        CHECK(d.a[0] == 0.7);
        CHECK(d.weight[0] == 1.0);
        CHECK(d.reconstruct(0.69) == 0.0);
        CHECK(d.reconstruct(0.7) == 1.0);
    }
    SUBCASE("convergence under refinement") {
        // midpoint atoms: second order for smooth W', order k for W' ~ r^{k-1} near 0
        for (const auto& [w, ratio] : {std::pair{Potential::riesz(3), 3.6}, std::pair{Potential::riesz(1.5), 2.6}}) {
            double prev = 0.0;
            for (std::size_t nodes : {100, 200, 400, 800}) {
                const auto d = step_decompose(w, 2.0, nodes);
                double err = 0.0;
                for (int i = 0; i <= 997; ++i) {
                    const double r = 2.0 * i / 997.0;
                    err = std::max(err, std::abs(d.reconstruct(r) - w.value(r)));
                }
                if (prev > 0.0) CHECK(prev / err > ratio);
                prev = err;
            }
        }
    }
    SUBCASE("log potential needs truncation") {
        CHECK_THROWS_AS(step_decompose(Potential::riesz(0), 2.0, 100), InvalidInput);
        const auto d = step_decompose(Potential::riesz(0), 2.0, 4000, 1.0 / 3.0);
        CHECK(d.w0 == doctest::Approx(-3.0));
        for (double r : {0.01, 0.2, 1.0, 1.9}) CHECK(d.reconstruct(r) == doctest::Approx(std::max(std::log(r), -3.0)).epsilon(1e-3));
    }
}

TEST_CASE("potential specs round trip") {
    const std::vector<std::string> specs = {"riesz:k=1", "quadratic", "step:a=1.5", "riesz:k=0", "none",
                                            R"({"kind":"modified","base":{"kind":"quadratic"},"params":{"R":2,"epsilon":0.125}})"};
    for (const auto& s : specs) {
        const Potential w = Potential::parse(s);
        const Potential back = Potential::from_json(w.to_json());
        CHECK(back.key() == w.key());
        CHECK(back.value(2.5) == w.value(2.5));
    }
    CHECK(Potential::parse("riesz:k=2").shifted(3.0).key() == Potential::riesz(2).key());
    try {
        Potential::from_json(nlohmann::json{{"kind", "step"}, {"params", nlohmann::json::object()}});
        FAIL("expected an error");
    } catch (const InvalidInput& e) {
        CHECK(std::string(e.what()).find("potential.params.a") != std::string::npos);
    }
    CHECK_THROWS_AS(Potential::parse("banana"), InvalidInput);
    CHECK_THROWS_AS(Potential::parse(""), InvalidInput);
}

TEST_CASE("sphere averaged kernel closed forms") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.05, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        const double r1 = U(rng), r2 = U(rng);
        for (int n : {2, 3, 4, 5}) {
            // W = |x|^2/2 averages to (r1^2 + r2^2)/2 in every dimension
            CHECK(sphere_averaged_kernel(n, Potential::riesz(2), r1, r2) ==
                  doctest::Approx(0.5 * (r1 * r1 + r2 * r2)).epsilon(1e-12));
        }
        // n = 3, W = |x|: ((r1 + r2)^3 - |r1 - r2|^3) / (6 r1 r2)
        const double d = std::abs(r1 - r2);
        CHECK(sphere_averaged_kernel(3, Potential::riesz(1), r1, r2) ==
              doctest::Approx((std::pow(r1 + r2, 3) - d * d * d) / (6 * r1 * r2)).epsilon(1e-12));
        // n = 3 step: fraction of the sphere with |r1 e - r2 w| >= a is (1 + c)/2
        const double a = 0.8;
        const double c = std::clamp((r1 * r1 + r2 * r2 - a * a) / (2 * r1 * r2), -1.0, 1.0);
        CHECK(sphere_averaged_kernel(3, Potential::step(a), r1, r2) == doctest::Approx(0.5 * (1 + c)).epsilon(1e-12));
    }
}

TEST_CASE("interaction energy of uniform balls") {
    // E|X - Y| for uniform X, Y: 2/3 on [-1,1], 128/(45 pi) in the unit disk, 36/35 in the unit ball
    const double expected[] = {0.0, 1.0 / 3.0, 64.0 / (45.0 * M_PI), 18.0 / 35.0};
    for (int n = 1; n <= 3; ++n) {
        CAPTURE(n);
        const RadialGrid g = RadialGrid::uniform(n, 1.0, 257);
        const RadialDensity rho = uniform_ball(g, 1.0);
        const InteractionOperator op(g, Potential::riesz(1));
        CHECK(op.energy(to_eigen(rho.values())) == doctest::Approx(expected[n]).epsilon(2e-5));
    }
    const RadialGrid g = RadialGrid::uniform(1, 1.0, 1025);
    const InteractionOperator quad(g, Potential::quadratic());
    CHECK(quad.energy(to_eigen(uniform_ball(g, 1.0).values())) == doctest::Approx(1.0 / 6.0).epsilon(1e-6));
}

TEST_CASE("convolution at nodes matches direct quadrature") {
    for (int n = 1; n <= 3; ++n) {
        CAPTURE(n);
        const RadialGrid g = RadialGrid::uniform(n, 1.0, 129);
        const RadialDensity rho = tent(g, 1.0);
        for (const Potential& w : {Potential::riesz(0.5), Potential::riesz(0), smooth_table()}) {
            CAPTURE(w.describe());
            const InteractionOperator op(g, w);
            const Eigen::VectorXd conv = op.convolve(to_eigen(rho.values()));
            const double omega = unit_sphere_area(n);
            for (std::size_t i : {std::size_t(0), std::size_t(40), std::size_t(90), std::size_t(128)}) {
                const double x = g.r(i);
                auto integrand = [&](double r) {
                    return omega * std::pow(r, n - 1) * rho.evaluate(r) * sphere_averaged_kernel(n, w, x, r);
                };
                double direct = 0.0;
                if (x > 0.0 && x < 1.0) direct = gk(integrand, 0.0, x) + gk(integrand, x, 1.0);
                else direct = gk(integrand, 0.0, 1.0);
                CHECK(conv[i] == doctest::Approx(direct).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("energy gradient is the derivative of the discrete energy") {
    const RadialGrid g = RadialGrid::uniform(2, 1.0, 65);
    const Eigen::VectorXd rho = to_eigen(power_cap(g, 0.8, 2.0, 1.5).values());
    for (const Potential& w : {Potential::riesz(1), Potential::quadratic(), Potential::riesz(0.5).shifted(2.0)}) {
        const InteractionOperator op(g, w);
        const Eigen::VectorXd grad = op.gradient(rho);
        for (Eigen::Index i : {0, 10, 30, 50}) {
            Eigen::VectorXd p = rho, m = rho;
            const double h = 1e-5;
            p[i] += h;
            m[i] -= h;
            const double fd = (op.energy(p) - op.energy(m)) / (2 * h);
            CHECK(fd == doctest::Approx(g.weight(i) * grad[i]).epsilon(1e-7));
        }
    }
}

TEST_CASE("constant shifts leave forces unchanged") {
    const RadialGrid g = RadialGrid::uniform(3, 1.0, 65);
    const Eigen::VectorXd rho = to_eigen(tent(g, 0.9).values());
    const InteractionOperator a(g, Potential::riesz(1)), b(g, Potential::riesz(1).shifted(-4.0));
    const Eigen::VectorXd ga = a.gradient(rho), gb = b.gradient(rho);
    for (Eigen::Index i = 1; i < ga.size(); ++i) CHECK((ga[i] - ga[0]) == doctest::Approx(gb[i] - gb[0]).epsilon(1e-10));
    CHECK(a.energy(rho) - b.energy(rho) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("operator rejects non-integrable singularities") {
    const RadialGrid g = RadialGrid::uniform(2, 1.0, 17);
    CHECK_THROWS_AS(InteractionOperator(g, Potential::riesz(-2.0)), InvalidInput);
    CHECK_NOTHROW(InteractionOperator(g, Potential::none()));
}
