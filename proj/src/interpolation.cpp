#include "aggsteady/interpolation.hpp"

#include <algorithm>
#include <cmath>

#include "aggsteady/error.hpp"
#include "aggsteady/quadrature.hpp"

namespace aggsteady {

namespace {

void check_t(double t) { require(t >= 0.0 && t <= 1.0, "t must lie in [0,1]"); }

double srt_on(const HeightFunction& ht, double r, double Rt) {
    require(r > 0.0 && r < Rt, "r outside the support (0, R_t)");
    require(ht.strict(), "endpoints have plateaus (h' constant on a mass interval); s_{r,t} is not unique");
    const double slope = 1.0 / (unit_ball_volume(ht.dimension()) * std::pow(r, ht.dimension()));
    return ht.mass_at_slope(slope);
}

double velocity_on(const InterpolationCurve& c, const HeightFunction& ht, double r, double Rt) {
    const double s = srt_on(ht, r, Rt);
    return r * (c.h0().height(s) - c.h1().height(s)) / (c.dimension() * ht.height(s));
}

double kinetic_on(const InterpolationCurve& c, double t) {
    const HeightFunction ht = c.at(t);
    const double Rt = c.support_radius(t);
    const int n = c.dimension();
    const UnitRule& g = gauss_unit(8);
    const std::size_t cells = 64;
    const double h = Rt / cells;
    double acc = 0.0;
    for (std::size_t k = 0; k < cells; ++k) {
        for (std::size_t q = 0; q < g.x.size(); ++q) {
            const double r = (k + g.x[q]) * h;
            const double v = velocity_on(c, ht, r, Rt);
            acc += g.w[q] * h * v * v * ht.density_at(r) * unit_sphere_area(n) * std::pow(r, n - 1);
        }
    }
    return acc;
}

}  // namespace

double interpolated_radius(int n, double R0, double R1, double t) {
    require(n >= 1 && R0 > 0.0 && R1 > 0.0, "radii must be positive");
    check_t(t);
    return std::pow((1.0 - t) * std::pow(R0, -n) + t * std::pow(R1, -n), -1.0 / n);
}

InterpolationCurve::InterpolationCurve(HeightFunction h0, HeightFunction h1) : h0_(std::move(h0)), h1_(std::move(h1)) {
    require(h0_.dimension() == h1_.dimension(), "endpoint height functions have different dimensions");
    require(h0_.s() == h1_.s(), "endpoint height functions live on mismatched mass grids");
    R0_ = h0_.support_radius();
    R1_ = h1_.support_radius();
}

InterpolationCurve InterpolationCurve::from_densities(const RadialDensity& rho0, const RadialDensity& rho1,
                                                     const std::vector<double>& mass_grid) {
    require(rho0.dimension() == rho1.dimension(), "endpoint densities have different dimensions");
    return InterpolationCurve(height_from_density(rho0, mass_grid), height_from_density(rho1, mass_grid));
}

InterpolationCurve InterpolationCurve::from_densities(const RadialDensity& rho0, const RadialDensity& rho1) {
    return from_densities(rho0, rho1, chebyshev_mass_grid());
}

HeightFunction InterpolationCurve::at(double t) const {
    check_t(t);
    if (t == 0.0) return h0_;
    if (t == 1.0) return h1_;
    return HeightFunction::combine(1.0 - t, h0_, t, h1_);
}

double InterpolationCurve::support_radius(double t) const { return interpolated_radius(dimension(), R0_, R1_, t); }

bool InterpolationCurve::identical() const {
    return h0_.h() == h1_.h() && h0_.hprime() == h1_.hprime() && h0_.hprime_at_zero() == h1_.hprime_at_zero();
}

RadialDensity curve_at(const InterpolationCurve& c, double t, std::size_t nodes) {
    require(nodes >= 2, "need at least two grid nodes");
    return curve_at(c, t, RadialGrid::uniform(c.dimension(), c.support_radius(t), nodes));
}

RadialDensity curve_at(const InterpolationCurve& c, double t, const RadialGrid& grid) {
    // the piecewise-linear sample of rho_t misses unit mass by O(dr^2)
    return density_from_height(c.at(t), grid).normalized();
}

double solve_srt(const InterpolationCurve& c, double r, double t) {
    return srt_on(c.at(t), r, c.support_radius(t));
}

double transport_field(const InterpolationCurve& c, double r, double t) {
    return velocity_on(c, c.at(t), r, c.support_radius(t));
}

double velocity_constant(const InterpolationCurve& c) {
    const auto& a = c.h0().h();
    const auto& b = c.h1().h();
    // h ~ h'(0+) s near s = 0, so the ratio there tends to the ratio of h'(0+)
    double sup = std::max(c.h0().hprime_at_zero() / c.h1().hprime_at_zero(),
                          c.h1().hprime_at_zero() / c.h0().hprime_at_zero());
    for (std::size_t j = 0; j < a.size(); ++j) sup = std::max({sup, a[j] / b[j], b[j] / a[j]});
    sup = std::max({sup, c.h0().top() / c.h1().top(), c.h1().top() / c.h0().top()});
    return sup / c.dimension();
}

double kinetic_energy(const InterpolationCurve& c, double t) {
    check_t(t);
    if (c.identical()) return 0.0;
    return kinetic_on(c, t);
}

LipschitzBound wasserstein_lipschitz_bound(const InterpolationCurve& c, double t1, double t2, std::size_t t_samples) {
    check_t(t1);
    check_t(t2);
    require(t_samples >= 2, "need at least two t samples");
    LipschitzBound out;
    out.constant = velocity_constant(c);
    const double dt = std::abs(t2 - t1);
    out.crude = out.constant * std::max(c.R0(), c.R1()) * dt;
    if (dt == 0.0 || c.identical()) return out;
    const double lo = std::min(t1, t2);
    // v is only defined for t in (0,1); sample the open interval
    auto speed = [&](double t) { return std::sqrt(kinetic_on(c, std::clamp(t, 1e-9, 1.0 - 1e-9))); };
    for (std::size_t i = 0; i < t_samples; ++i) out.sup_speed = std::max(out.sup_speed, speed(lo + dt * i / (t_samples - 1)));
    const UnitRule& g = gauss_unit(10);
    for (std::size_t q = 0; q < g.x.size(); ++q) {
        const double s = speed(lo + dt * g.x[q]);
        out.path_length += g.w[q] * dt * s;
        out.sup_speed = std::max(out.sup_speed, s);
    }
    out.benamou_brenier = out.sup_speed * dt;
    return out;
}

double wasserstein2_1d(const RadialDensity& a, const RadialDensity& b, std::size_t samples) {
    require(a.dimension() == 1 && b.dimension() == 1, "quantile distance is for densities on the line");
    require(samples >= 1, "need at least one sample");
    struct Half {
        const std::vector<double>& r;
        const std::vector<double>& v;
        std::vector<double> cum;
        explicit Half(const RadialDensity& d) : r(d.grid().nodes()), v(d.values()), cum(r.size(), 0.0) {
            for (std::size_t i = 0; i + 1 < r.size(); ++i) cum[i + 1] = cum[i] + 0.5 * (v[i] + v[i + 1]) * (r[i + 1] - r[i]);
        }
        // x with int_0^x rho = q * (half mass)
        double quantile(double q) const {
            const double target = q * cum.back();
            std::size_t i = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), target) - cum.begin());
            i = std::clamp<std::size_t>(i, 1, r.size() - 1) - 1;
            const double h = r[i + 1] - r[i];
            const double d = target - cum[i];
            const double qa = (v[i + 1] - v[i]) / (2.0 * h), qb = v[i];
            const double disc = std::max(0.0, qb * qb + 4.0 * qa * d);
            const double denom = qb + std::sqrt(disc);
            const double y = denom > 0.0 ? 2.0 * d / denom : 0.0;
            return r[i] + std::clamp(y, 0.0, h);
        }
    };
    const Half A(a), B(b);
    double acc = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
        const double q = (k + 0.5) / samples;
        const double d = A.quantile(q) - B.quantile(q);
        acc += d * d;
    }
    return std::sqrt(acc / samples);
}

}  // namespace aggsteady
