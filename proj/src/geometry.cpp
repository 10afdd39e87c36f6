#include "aggsteady/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "aggsteady/error.hpp"
#include "aggsteady/radial_core.hpp"

namespace aggsteady {

namespace {

boost::math::quadrature::tanh_sinh<double>& tanh_sinh_rule() {
    thread_local boost::math::quadrature::tanh_sinh<double> q;
    return q;
}

// int_z^1 (1 - y^2)^{(n-1)/2} dy through the incomplete beta function
double cap_integral(int n, double z) {
    z = std::clamp(z, -1.0, 1.0);
    if (n == 1) return 1.0 - z;
    const double b = 0.5 * (n + 1);
    const double full = boost::math::beta(0.5, b);
    const double half = 0.5 * full * boost::math::ibetac(0.5, b, z * z);
    return z >= 0.0 ? half : full - half;
}

bool crossing(double r, double s) { return std::abs(s - r) < 1.0 && s + r > 1.0; }

// A(r,1;s) from the cap integrals; valid in every configuration
double intersection_closed(int n, double r, double s) {
    if (s >= r + 1.0) return 0.0;
    if (s <= std::abs(1.0 - r)) return unit_ball_volume(n) * std::pow(std::min(r, 1.0), n);
    const double s1 = chord_foot(r, s);
    return unit_ball_volume(n - 1) * (cap_integral(n, s - s1) + std::pow(r, n) * cap_integral(n, s1 / r));
}

}  // namespace

double heron_S(double R, double r) { return (R + r + 1.0) * (-R + r + 1.0) * (R - r + 1.0) * (R + r - 1.0); }

double chord_foot(double r, double s) {
    require(s > 0.0, "chord foot needs s > 0");
    return (s * s + r * r - 1.0) / (2.0 * s);
}

double chord_half_length(double r, double s) {
    require(s > 0.0, "chord half length needs s > 0");
    const double q = 4.0 * r * r * s * s - (s * s + r * r - 1.0) * (s * s + r * r - 1.0);
    return std::sqrt(std::max(q, 0.0)) / (2.0 * s);
}

double c_tilde(int n) {
    require(n >= 1, "dimension must be positive");
    // c_{n-1} omega_n / (2^{n-1} c_n^2); the shorter form c_{n-1}/(2^{n-1} n c_n) is off by n^2
    return unit_ball_volume(n - 1) * unit_sphere_area(n) / (std::pow(2.0, n - 1) * std::pow(unit_ball_volume(n), 2));
}

double ball_intersection(int n, double r, double s) {
    require(n >= 1 && r > 0.0 && s >= 0.0, "ball_intersection needs n >= 1, r > 0, s >= 0");
    if (s >= r + 1.0) return 0.0;
    if (s <= std::abs(1.0 - r)) return unit_ball_volume(n) * std::pow(std::min(r, 1.0), n);
    // slices x1 in [s-1, r]: radius sqrt(1-(s-x1)^2) below the chord foot, sqrt(r^2-x1^2) above
    const double s1 = chord_foot(r, s);
    const double cn1 = unit_ball_volume(n - 1);
    auto lower = [&](double x) { return std::pow(std::max(0.0, 1.0 - (s - x) * (s - x)), 0.5 * (n - 1)); };
    auto upper = [&](double x) { return std::pow(std::max(0.0, r * r - x * x), 0.5 * (n - 1)); };
    auto& q = tanh_sinh_rule();
    double a = 0.0, b = 0.0;
    if (s1 > s - 1.0) a = q.integrate(lower, s - 1.0, s1, 1e-15);
    if (r > s1) b = q.integrate(upper, s1, r, 1e-15);
    return cn1 * (a + b);
}

double ball_intersection_ds(int n, double r, double s) {
    require(n >= 1 && r > 0.0 && s >= 0.0, "ball_intersection_ds needs n >= 1, r > 0, s >= 0");
    if (!crossing(r, s)) return 0.0;
    return -unit_ball_volume(n - 1) * std::pow(chord_half_length(r, s), n - 1);
}

double ball_intersection_dr(int n, double r, double s) {
    require(n >= 1 && r > 0.0 && s >= 0.0, "ball_intersection_dr needs n >= 1, r > 0, s >= 0");
    if (s >= r + 1.0) return 0.0;
    if (!crossing(r, s)) return r < 1.0 ? n * unit_ball_volume(n) * std::pow(r, n - 1) : 0.0;
    const double s1 = chord_foot(r, s);
    const double cn1 = unit_ball_volume(n - 1);
    return cn1 * std::pow(chord_half_length(r, s), n - 1) * s1 / r + cn1 * n * std::pow(r, n - 1) * cap_integral(n, s1 / r);
}

BallCase ball_case(double R, double r) {
    if (R + r < 1.0) return BallCase::Disjoint;
    if (std::abs(R - r) > 1.0) return BallCase::Nested;
    if (std::abs(R - r) < 1.0 && R + r > 1.0) return BallCase::Crossing;
    return BallCase::Boundary;
}

double interaction_I(int n, double R, double r) {
    require(n >= 1 && R > 0.0 && r > 0.0, "interaction_I needs n >= 1 and positive radii");
    if (R + r <= 1.0) return 0.0;
    if (std::abs(R - r) >= 1.0) return 1.0 - std::pow(std::max(R, r), -n);
    const double cn = unit_ball_volume(n), omega = unit_sphere_area(n);
    auto f = [&](double s) { return intersection_closed(n, r, s) * omega * std::pow(s, n - 1); };
    const double J = tanh_sinh_rule().integrate(f, R, r + 1.0, 1e-13);
    return 1.0 - std::pow(R, -n) + J / (cn * cn * std::pow(R, n) * std::pow(r, n));
}

GeometryBundle interaction_geometry_nd(int n, double R, double r) {
    GeometryBundle g{};
    g.kind = ball_case(R, r);
    g.I = interaction_I(n, R, r);
    g.S = heron_S(R, r);
    if (g.kind != BallCase::Crossing) return g;
    const double ct = c_tilde(n);
    const double p = std::pow(g.S, 0.5 * (n - 1));
    g.U = g.W = ct * R * r * p;
    g.V = -0.5 * ct * (R * R + r * r - 1.0) * p;
    g.u = std::pow(R / r, n + 1) * g.U;
    g.w = std::pow(r / R, n + 1) * g.W;
    g.v = g.V;
    return g;
}

}  // namespace aggsteady
