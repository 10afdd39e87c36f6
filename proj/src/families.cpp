#include "aggsteady/families.hpp"

#include <cmath>

namespace aggsteady {

namespace {

template <class F>
RadialDensity sample_normalized(const RadialGrid& grid, F&& f) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = std::max(0.0, f(grid.r(i)));
    return RadialDensity(grid, std::move(v)).normalized();
}

}  // namespace

RadialDensity uniform_ball(const RadialGrid& grid, double radius) {
    require(radius > 0.0, "radius must be positive");
    return sample_normalized(grid, [&](double r) { return r <= radius ? 1.0 : 0.0; });
}

RadialDensity tent(const RadialGrid& grid, double radius) {
    return power_cap(grid, radius, 1.0, 1.0);
}

RadialDensity power_cap(const RadialGrid& grid, double radius, double p, double q) {
    require(radius > 0.0 && p > 0.0 && q > 0.0, "power cap parameters must be positive");
    return sample_normalized(grid, [&](double r) {
        return r >= radius ? 0.0 : std::pow(1.0 - std::pow(r / radius, p), q);
    });
}

RadialDensity quadratic_cap(const RadialGrid& grid, double radius) {
    return power_cap(grid, radius, 2.0, 1.0);
}

RadialDensity random_decreasing(const RadialGrid& grid, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int terms = 1 + static_cast<int>(unit(rng) * 3.0) % 3;
    struct Term {
        double a, R, p, q;
    };
    std::vector<Term> ts;
    for (int k = 0; k < terms; ++k) {
        Term t;
        t.a = 0.2 + unit(rng);
        t.R = grid.r_max() * (0.3 + 0.6 * unit(rng));
        t.p = 1.0 + 2.0 * unit(rng);
        t.q = 1.0 + 2.0 * unit(rng);
        ts.push_back(t);
    }
    return sample_normalized(grid, [&](double r) {
        double v = 0.0;
        for (const Term& t : ts)
            if (r < t.R) v += t.a * std::pow(1.0 - std::pow(r / t.R, t.p), t.q);
        return v;
    });
}

Barenblatt::Barenblatt(int n_, double m_) : n(n_), m(m_) {
    require(n >= 1 && m > 1.0, "Barenblatt profile needs n >= 1, m > 1");
    alpha = n / (n * (m - 1.0) + 2.0);
    beta = alpha / n;
    k = alpha * (m - 1.0) / (2.0 * m * n);
    // mass of (C - k r^2)_+^q equals omega_n (C/k)^{n/2} C^q B(n/2, q+1)/2
    const double q = 1.0 / (m - 1.0);
    const double b = std::beta(0.5 * n, q + 1.0);
    const double factor = unit_sphere_area(n) * std::pow(k, -0.5 * n) * b / 2.0;
    C = std::pow(1.0 / factor, 1.0 / (q + 0.5 * n));
}

double Barenblatt::value(double r, double t) const {
    const double inner = C - k * r * r * std::pow(t, -2.0 * beta);
    if (inner <= 0.0) return 0.0;
    return std::pow(t, -alpha) * std::pow(inner, 1.0 / (m - 1.0));
}

double Barenblatt::support(double t) const { return std::sqrt(C / k) * std::pow(t, beta); }

RadialDensity Barenblatt::sample(const RadialGrid& grid, double t) const {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = value(grid.r(i), t);
    return RadialDensity(grid, std::move(v));
}

}  // namespace aggsteady
