#include "aggsteady/height_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/toms748_solve.hpp>

namespace aggsteady {

std::vector<double> chebyshev_mass_grid(std::size_t count) {
    require(count >= 1, "mass grid needs at least one node");
    std::vector<double> s(count);
    const double denom = static_cast<double>(count + 1);
    for (std::size_t j = 1; j <= count; ++j) {
        // (1 - cos x)/2 = sin^2(x/2): no cancellation near s = 0
        const double x = std::sin(0.5 * std::numbers::pi * j / denom);
        s[j - 1] = x * x;
    }
    return s;
}

std::vector<double> uniform_mass_grid(std::size_t count) {
    require(count >= 1, "mass grid needs at least one node");
    std::vector<double> s(count);
    for (std::size_t j = 1; j <= count; ++j) s[j - 1] = static_cast<double>(j) / (count + 1);
    return s;
}

namespace {

// Slopes of monotone cubic Hermite interpolation.
std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> d(n, 0.0);
    if (n < 2) return d;
    std::vector<double> h(n - 1), m(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        h[k] = x[k + 1] - x[k];
        m[k] = (y[k + 1] - y[k]) / h[k];
    }
    if (n == 2) {
        d[0] = d[1] = m[0];
        return d;
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (m[k - 1] * m[k] <= 0.0) continue;
        // three-point (parabolic) slope, second-order accurate, clipped to the
        // monotonicity region |d| <= 3 min(|m|) (Hyman filter)
        const double p = (h[k] * m[k - 1] + h[k - 1] * m[k]) / (h[k - 1] + h[k]);
        const double lim = 3.0 * std::min(std::abs(m[k - 1]), std::abs(m[k]));
        d[k] = std::copysign(std::min(std::abs(p), lim), m[k]);
    }
    auto edge = [](double h0, double h1, double m0, double m1) {
        double e = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
        if (e * m0 <= 0.0) return 0.0;
        if (m0 * m1 <= 0.0 && std::abs(e) > 3.0 * std::abs(m0)) return 3.0 * m0;
        return e;
    };
    d[0] = edge(h[0], h[1], m[0], m[1]);
    d[n - 1] = edge(h[n - 2], h[n - 3], m[n - 2], m[n - 3]);
    return d;
}

}  // namespace

HeightFunction::HeightFunction(int dimension, std::vector<double> s, std::vector<double> h,
                               std::vector<double> hprime, double hprime_at_zero, bool strict)
    : n_(dimension), s_(std::move(s)), h_(std::move(h)), hp_(std::move(hprime)), hp0_(hprime_at_zero),
      strict_(strict) {
    require(n_ >= 1, "dimension must be positive");
    require(!s_.empty(), "height function needs at least one mass node");
    require(s_.size() == h_.size() && s_.size() == hp_.size(), "height function arrays differ in length");
    require(s_.front() > 0.0 && s_.back() < 1.0, "mass nodes must lie in (0,1)");
    for (std::size_t j = 1; j < s_.size(); ++j) require(s_[j] > s_[j - 1], "mass nodes must be increasing");
    require(std::isfinite(hp0_) && hp0_ > 0.0, "h'(0+) must be positive");
    for (double v : hp_) require(std::isfinite(v) && v > 0.0, "h' must be positive");
    const double tol = 1e-10 * hp_.back();
    require(hp_.front() >= hp0_ - tol, "h' must be non-decreasing");
    for (std::size_t j = 1; j < hp_.size(); ++j) require(hp_[j] >= hp_[j - 1] - tol, "h' must be non-decreasing");
    build();
}

void HeightFunction::build() {
    const std::size_t K = s_.size();
    xs_.assign(K + 1, 0.0);
    ys_.assign(K + 1, hp0_);
    for (std::size_t j = 0; j < K; ++j) {
        xs_[j + 1] = s_[j];
        ys_[j + 1] = std::max(hp_[j], ys_[j]);  // clip rounding-level decreases
    }
    if (ds_.size() != K + 1) ds_ = pchip_slopes(xs_, ys_);
    cum_.assign(K + 1, 0.0);
    for (std::size_t k = 0; k < K; ++k) cum_[k + 1] = cum_[k] + cell_integral(k, 1.0);
    cap_ = (n_ + 1.0) * (1.0 - s_.back()) * ys_.back();
}

HeightFunction HeightFunction::combine(double a, const HeightFunction& f, double b, const HeightFunction& g) {
    require(f.n_ == g.n_, "combining height functions of different dimension");
    require(f.s_ == g.s_, "height functions live on different mass grids");
    require(a >= 0.0 && b >= 0.0 && a + b > 0.0, "combination weights must be nonnegative");
    HeightFunction out;
    out.n_ = f.n_;
    out.s_ = f.s_;
    const std::size_t K = f.s_.size();
    out.h_.resize(K);
    out.hp_.resize(K);
    for (std::size_t j = 0; j < K; ++j) {
        out.h_[j] = a * f.h_[j] + b * g.h_[j];
        out.hp_[j] = a * f.hp_[j] + b * g.hp_[j];
    }
    out.hp0_ = a * f.hp0_ + b * g.hp0_;
    out.strict_ = (a > 0.0 && f.strict_) || (b > 0.0 && g.strict_);
    // slopes are combined rather than recomputed so that evaluation stays linear
    out.ds_.resize(K + 1);
    for (std::size_t k = 0; k <= K; ++k) out.ds_[k] = a * f.ds_[k] + b * g.ds_[k];
    out.build();
    return out;
}

double HeightFunction::cell_slope(std::size_t k, double t) const {
    const double dx = xs_[k + 1] - xs_[k];
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return ys_[k] * h00 + dx * ds_[k] * h10 + ys_[k + 1] * h01 + dx * ds_[k + 1] * h11;
}

double HeightFunction::cell_integral(std::size_t k, double t) const {
    const double dx = xs_[k + 1] - xs_[k];
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
    const double i00 = 0.5 * t4 - t3 + t;
    const double i10 = 0.25 * t4 - 2.0 * t3 / 3.0 + 0.5 * t2;
    const double i01 = -0.5 * t4 + t3;
    const double i11 = 0.25 * t4 - t3 / 3.0;
    return dx * (ys_[k] * i00 + dx * ds_[k] * i10 + ys_[k + 1] * i01 + dx * ds_[k + 1] * i11);
}

std::size_t HeightFunction::cell_of(double s) const {
    const auto it = std::upper_bound(xs_.begin(), xs_.end(), s);
    std::size_t k = static_cast<std::size_t>(it - xs_.begin());
    k = k == 0 ? 0 : k - 1;
    return std::min(k, xs_.size() - 2);
}

double HeightFunction::cap_height(double s) const {
    const double sK = xs_.back();
    const double u = std::pow(std::max(0.0, 1.0 - s) / (1.0 - sK), 1.0 / (n_ + 1.0));
    return cum_.back() + cap_ * (1.0 - u);
}

double HeightFunction::height(double s) const {
    if (s <= 0.0) return 0.0;
    if (s >= xs_.back()) return cap_height(std::min(s, 1.0));
    const std::size_t k = cell_of(s);
    return cum_[k] + cell_integral(k, (s - xs_[k]) / (xs_[k + 1] - xs_[k]));
}

double HeightFunction::derivative(double s) const {
    if (s <= 0.0) return hp0_;
    const double sK = xs_.back();
    if (s >= sK) {
        if (s >= 1.0) return std::numeric_limits<double>::infinity();
        return ys_.back() * std::pow((1.0 - s) / (1.0 - sK), -static_cast<double>(n_) / (n_ + 1.0));
    }
    const std::size_t k = cell_of(s);
    return cell_slope(k, (s - xs_[k]) / (xs_[k + 1] - xs_[k]));
}

double HeightFunction::top() const { return cum_.back() + cap_; }

double HeightFunction::support_radius() const {
    return std::pow(unit_ball_volume(n_) * hp0_, -1.0 / n_);
}

double HeightFunction::mass_at_slope(double slope) const {
    require(slope >= hp0_, "slope below h'(0+): radius outside the support");
    const double sK = xs_.back();
    if (slope >= ys_.back()) {
        if (slope == ys_.back() && ys_[ys_.size() - 2] == slope) throw InvalidInput("h' has a plateau at this level");
        return 1.0 - (1.0 - sK) * std::pow(ys_.back() / slope, (n_ + 1.0) / n_);
    }
    const auto it = std::upper_bound(ys_.begin(), ys_.end(), slope);
    const std::size_t k = static_cast<std::size_t>(it - ys_.begin()) - 1;
    // ys_[k] <= slope < ys_[k+1]
    if (slope == ys_[k] && k > 0 && ys_[k - 1] == slope) throw InvalidInput("h' has a plateau at this level");
    const double dx = xs_[k + 1] - xs_[k];
    if (slope == ys_[k]) return xs_[k];
    auto f = [&](double t) { return cell_slope(k, t) - slope; };
    boost::math::tools::eps_tolerance<double> tol(50);
    std::uintmax_t iters = 200;
    const auto [lo, hi] = boost::math::tools::toms748_solve(f, 0.0, 1.0, ys_[k] - slope, ys_[k + 1] - slope, tol, iters);
    return xs_[k] + 0.5 * (lo + hi) * dx;
}

double HeightFunction::density_at(double r) const {
    if (r <= 0.0) return top();
    const double slope = 1.0 / (unit_ball_volume(n_) * std::pow(r, n_));
    if (!(slope > hp0_)) return 0.0;
    if (slope >= ys_.back()) {
        const double rK = std::pow(unit_ball_volume(n_) * ys_.back(), -1.0 / n_);
        return cum_.back() + cap_ * (1.0 - r / rK);
    }
    const auto it = std::upper_bound(ys_.begin(), ys_.end(), slope);
    const std::size_t k = static_cast<std::size_t>(it - ys_.begin()) - 1;
    if (slope == ys_[k]) return cum_[k];
    auto f = [&](double t) { return cell_slope(k, t) - slope; };
    boost::math::tools::eps_tolerance<double> tol(50);
    std::uintmax_t iters = 200;
    const auto [lo, hi] = boost::math::tools::toms748_solve(f, 0.0, 1.0, ys_[k] - slope, ys_[k + 1] - slope, tol, iters);
    return cum_[k] + cell_integral(k, 0.5 * (lo + hi));
}

double HeightFunction::power_integral(double q) const {
    using boost::math::quadrature::gauss;
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < xs_.size(); ++k) {
        const double dx = xs_[k + 1] - xs_[k];
        auto f = [&](double t) { return std::pow(cum_[k] + cell_integral(k, t), q); };
        // near s = 0, h ~ h'(0) s, so h^q is singular for q < 0; Gauss nodes avoid the endpoint
        total += dx * gauss<double, 10>::integrate(f, 0.0, 1.0);
    }
    // cone cap: s = 1 - (1-s_K) u^{n+1}
    const double sK = xs_.back();
    auto g = [&](double u) { return std::pow(cum_.back() + cap_ * (1.0 - u), q) * std::pow(u, n_); };
    total += (n_ + 1.0) * (1.0 - sK) * gauss<double, 20>::integrate(g, 0.0, 1.0);
    return total;
}

HeightFunction HeightFunction::resampled(const std::vector<double>& s) const {
    std::vector<double> h(s.size()), hp(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) {
        h[j] = height(s[j]);
        hp[j] = derivative(s[j]);
    }
    return HeightFunction(n_, s, std::move(h), std::move(hp), hp0_, strict_);
}

bool HeightFunction::is_valid(double tol) const {
    const double scale = std::max(1.0, top());
    for (std::size_t j = 1; j < ys_.size(); ++j)
        if (ys_[j] < ys_[j - 1] - tol * ys_.back()) return false;
    for (std::size_t j = 1; j < h_.size(); ++j)
        if (h_[j] <= h_[j - 1] - tol * scale) return false;
    for (std::size_t j = 1; j + 1 < h_.size(); ++j) {
        // divided second difference, scaled to the local spacing
        const double a = (h_[j] - h_[j - 1]) / (s_[j] - s_[j - 1]);
        const double b = (h_[j + 1] - h_[j]) / (s_[j + 1] - s_[j]);
        if (b - a < -tol * std::max(1.0, b)) return false;
    }
    return true;
}

double level_set_radius(const RadialDensity& rho, double height) {
    const auto& v = rho.values();
    const auto& r = rho.grid().nodes();
    if (height >= v.front()) return 0.0;
    // last node strictly above the level
    std::size_t i = 0;
    std::size_t lo = 0, hi = v.size();
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (v[mid] > height) lo = mid; else hi = mid;
    }
    i = lo;
    if (i + 1 == v.size()) return r.back();
    return r[i] + (v[i] - height) / (v[i] - v[i + 1]) * (r[i + 1] - r[i]);
}

HeightFunction height_from_density(const RadialDensity& rho, const std::vector<double>& mass_grid) {
    require(rho.mass() > 0.0, "density has zero mass");
    require(rho.is_nonincreasing(), "density must be radially non-increasing");
    require(!mass_grid.empty(), "empty mass grid");
    for (std::size_t j = 0; j < mass_grid.size(); ++j) {
        require(mass_grid[j] > 0.0 && mass_grid[j] < 1.0, "mass nodes must lie in (0,1)");
        require(j == 0 || mass_grid[j] > mass_grid[j - 1], "mass nodes must be increasing");
    }
    const int n = rho.dimension();
    const double cn = unit_ball_volume(n);
    const auto& r = rho.grid().nodes();
    std::vector<double> v = rho.values();
    // clip rounding-level increases so the level sets are nested balls
    for (std::size_t i = 1; i < v.size(); ++i) v[i] = std::min(v[i], v[i - 1]);
    const std::size_t M = v.size() - 1;
    const std::size_t L = rho.last_positive();
    const bool full = (L == M);
    const std::size_t cells = full ? M : L + 1;  // cell i spans heights [v_{i+1}, v_i]

    auto increment = [&](std::size_t i) {
        const double a = r[i], b = r[i + 1];
        double avg = 0.0;
        for (int j = 0; j <= n; ++j) avg += std::pow(a, j) * std::pow(b, n - j);
        return cn * (v[i] - v[i + 1]) * avg / (n + 1.0);
    };
    std::vector<double> inc(cells);
    for (std::size_t i = 0; i < cells; ++i) inc[i] = increment(i);
    const double bottom = full ? cn * std::pow(r[M], n) * v[M] : 0.0;
    // above[i]: mass of (rho - v_i)_+ ; below[i]: int min(rho, v_i)
    std::vector<double> above(cells + 1, 0.0), below(cells + 1, 0.0);
    for (std::size_t i = 0; i < cells; ++i) above[i + 1] = above[i] + inc[i];
    below[cells] = bottom;
    for (std::size_t i = cells; i-- > 0;) below[i] = below[i + 1] + inc[i];
    const double total = below[0];

    bool strict = !full;
    for (std::size_t i = 0; i < cells; ++i)
        if (v[i] - v[i + 1] <= 1e-14 * v[0]) strict = false;

    std::vector<double> hs(mass_grid.size()), hps(mass_grid.size());
    for (std::size_t j = 0; j < mass_grid.size(); ++j) {
        const double ta = (1.0 - mass_grid[j]) * total;
        const double tb = mass_grid[j] * total;
        double radius, eta;
        if (full && tb <= bottom) {
            radius = r[M];
            eta = tb / (cn * std::pow(radius, n));
        } else {
            std::size_t i = static_cast<std::size_t>(std::upper_bound(above.begin(), above.end(), ta) - above.begin());
            i = std::min(i == 0 ? 0 : i - 1, cells - 1);
            const double a = r[i], b = r[i + 1], dr = b - a, dv = v[i] - v[i + 1];
            const double k = (n + 1.0) * dr / (cn * dv);
            const double from_top = ta - above[i];
            const double from_bottom = tb - below[i + 1];
            if (from_top <= from_bottom) {
                radius = std::pow(std::pow(a, n + 1) + std::max(0.0, from_top) * k, 1.0 / (n + 1));
                radius = std::clamp(radius, a, b);
                eta = v[i] - (radius - a) * dv / dr;
            } else {
                radius = std::pow(std::max(0.0, std::pow(b, n + 1) - std::max(0.0, from_bottom) * k), 1.0 / (n + 1));
                radius = std::clamp(radius, a, b);
                eta = v[i + 1] + (b - radius) * dv / dr;
            }
        }
        hs[j] = eta / total;
        hps[j] = 1.0 / (cn * std::pow(radius, n));
    }
    const double hp0 = 1.0 / (cn * std::pow(rho.support_radius(), n));
    return HeightFunction(n, mass_grid, std::move(hs), std::move(hps), hp0, strict);
}

HeightFunction height_from_density(const RadialDensity& rho) {
    return height_from_density(rho, chebyshev_mass_grid());
}

RadialDensity density_from_height(const HeightFunction& h, const RadialGrid& grid) {
    require(grid.dimension() == h.dimension(), "grid and height function dimensions differ");
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = h.density_at(grid.r(i));
    for (std::size_t i = 1; i < v.size(); ++i) v[i] = std::min(v[i], v[i - 1]);
    return RadialDensity(grid, std::move(v));
}

RadialDensity density_from_height(const HeightFunction& h, int dimension, const RadialGrid& grid) {
    require(dimension == h.dimension(), "dimension mismatch");
    return density_from_height(h, grid);
}

}  // namespace aggsteady
