#include "aggsteady/radial_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace aggsteady {

double unit_ball_volume(int n) {
    require(n >= 0, "dimension must be nonnegative");
    return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

double unit_sphere_area(int n) { return n * unit_ball_volume(n); }

namespace {

// omega_n * int_a^b phi(r) r^{n-1} dr for the linear pieces phi = (b-r)/h and (r-a)/h,
// expanded around a to avoid cancellation: r = a + h x.
struct CellMoments {
    double left;   // hat centred at a
    double right;  // hat centred at b
};

CellMoments cell_moments(int n, double a, double b) {
    const double h = b - a;
    const double omega = unit_sphere_area(n);
    // int_0^1 (1-x) (a + h x)^{n-1} h dx and int_0^1 x (a + h x)^{n-1} h dx
    double left = 0.0, right = 0.0;
    double binom = 1.0;
    const int p = n - 1;
    for (int j = 0; j <= p; ++j) {
        const double term = binom * std::pow(a, p - j) * std::pow(h, j);
        // int_0^1 x^j (1-x) dx = 1/((j+1)(j+2)), int_0^1 x^{j+1} dx = 1/(j+2)
        left += term / ((j + 1.0) * (j + 2.0));
        right += term / (j + 2.0);
        binom = binom * (p - j) / (j + 1.0);
    }
    return {omega * h * left, omega * h * right};
}

}  // namespace

RadialGrid::RadialGrid(int dimension, std::vector<double> nodes) : n_(dimension), r_(std::move(nodes)) {
    require(n_ >= 1, "dimension must be a positive integer");
    require(r_.size() >= 2, "radial grid needs at least two nodes");
    require(r_.front() == 0.0, "radial grid must start at r = 0");
    for (std::size_t i = 1; i < r_.size(); ++i)
        require(r_[i] > r_[i - 1] && std::isfinite(r_[i]), "radial grid nodes must be strictly increasing");

    const std::size_t m = r_.size();
    w_.assign(m, 0.0);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const CellMoments c = cell_moments(n_, r_[i], r_[i + 1]);
        w_[i] += c.left;
        w_[i + 1] += c.right;
    }
    const double cn = unit_ball_volume(n_);
    face_.resize(m - 1);
    face_area_.resize(m - 1);
    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        cum += w_[i];
        double f = std::pow(cum / cn, 1.0 / n_);
        f = std::clamp(f, r_[i], r_[i + 1]);
        face_[i] = f;
        face_area_[i] = unit_sphere_area(n_) * std::pow(f, n_ - 1);
    }
}

RadialGrid RadialGrid::uniform(int dimension, double r_max, std::size_t node_count) {
    require(r_max > 0.0, "grid radius must be positive");
    require(node_count >= 2, "grid needs at least two nodes");
    std::vector<double> r(node_count);
    for (std::size_t i = 0; i < node_count; ++i) r[i] = r_max * static_cast<double>(i) / (node_count - 1);
    r.back() = r_max;
    return RadialGrid(dimension, std::move(r));
}

double RadialGrid::total_volume() const {
    double s = 0.0;
    for (double w : w_) s += w;
    return s;
}

bool RadialGrid::same_nodes(const RadialGrid& other) const { return n_ == other.n_ && r_ == other.r_; }

RadialDensity::RadialDensity(RadialGrid grid, std::vector<double> values)
    : grid_(std::move(grid)), rho_(std::move(values)) {
    require(rho_.size() == grid_.size(), "density values must match grid size");
    mass_ = 0.0;
    linf_ = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < rho_.size(); ++i) {
        const double v = rho_[i];
        require(std::isfinite(v) && v >= 0.0, "density values must be finite and nonnegative");
        mass_ += grid_.weight(i) * v;
        linf_ = std::max(linf_, v);
        if (v > 0.0) {
            last_pos_ = i;
            any = true;
        }
    }
    if (!any) {
        last_pos_ = 0;
        support_ = 0.0;
    } else {
        support_ = last_pos_ + 1 < rho_.size() ? grid_.r(last_pos_ + 1) : grid_.r_max();
    }
}

bool RadialDensity::is_nonincreasing(double rel_tol) const {
    const double tol = rel_tol * std::max(linf_, 1e-300);
    for (std::size_t i = 1; i < rho_.size(); ++i)
        if (rho_[i] - rho_[i - 1] > tol) return false;
    return true;
}

bool RadialDensity::is_strictly_decreasing_on_support(double rel_tol) const {
    const double tol = rel_tol * linf_;
    for (std::size_t i = 1; i <= last_pos_ + 1 && i < rho_.size(); ++i)
        if (rho_[i - 1] - rho_[i] <= tol) return false;
    return true;
}

double RadialDensity::evaluate(double r) const {
    const auto& x = grid_.nodes();
    if (r <= 0.0) return rho_.front();
    if (r >= x.back()) return r == x.back() ? rho_.back() : 0.0;
    const auto it = std::upper_bound(x.begin(), x.end(), r);
    const std::size_t i = static_cast<std::size_t>(it - x.begin()) - 1;
    const double t = (r - x[i]) / (x[i + 1] - x[i]);
    return (1.0 - t) * rho_[i] + t * rho_[i + 1];
}

RadialDensity RadialDensity::normalized() const {
    require(mass_ > 0.0, "cannot normalize a density with zero mass");
    return scaled(1.0 / mass_);
}

RadialDensity RadialDensity::scaled(double factor) const {
    std::vector<double> v(rho_);
    for (double& x : v) x *= factor;
    return RadialDensity(grid_, std::move(v));
}

RadialDensity RadialDensity::resampled(const RadialGrid& grid) const {
    require(grid.dimension() == dimension(), "resampling across dimensions");
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = evaluate(grid.r(i));
    return RadialDensity(grid, std::move(v));
}

double lp_norm(const RadialDensity& rho, double p) {
    require(p >= 1.0 && std::isfinite(p), "lp_norm needs 1 <= p < inf");
    const auto& v = rho.values();
    const auto& w = rho.grid().weights();
    const double scale = rho.linf();
    if (scale == 0.0) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] > 0.0) s += w[i] * std::pow(v[i] / scale, p);
    return scale * std::pow(s, 1.0 / p);
}

double lp_integral(const RadialDensity& rho, double p) {
    const double norm = lp_norm(rho, p);
    return std::pow(norm, p);
}

double moment(const RadialDensity& rho, double order) {
    require(order >= 0.0, "moment order must be nonnegative");
    if (order == 0.0) return rho.mass();
    const auto& v = rho.values();
    const auto& w = rho.grid().weights();
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += w[i] * v[i] * std::pow(rho.grid().r(i), order);
    return s;
}

double linf(const RadialDensity& rho) { return rho.linf(); }
double support_radius(const RadialDensity& rho) { return rho.support_radius(); }

double l1_distance(const RadialDensity& a, const RadialDensity& b) {
    require(a.dimension() == b.dimension(), "l1_distance across dimensions");
    if (a.grid().same_nodes(b.grid())) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a.grid().weight(i) * std::abs(a.value(i) - b.value(i));
        return s;
    }
    std::set<double> merged(a.grid().nodes().begin(), a.grid().nodes().end());
    merged.insert(b.grid().nodes().begin(), b.grid().nodes().end());
    RadialGrid g(a.dimension(), std::vector<double>(merged.begin(), merged.end()));
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += g.weight(i) * std::abs(a.evaluate(g.r(i)) - b.evaluate(g.r(i)));
    return s;
}

double laplacian_at_origin(const RadialDensity& rho) {
    const double r1 = rho.grid().r(1);
    return 2.0 * rho.dimension() * (rho.value(1) - rho.value(0)) / (r1 * r1);
}

}  // namespace aggsteady
