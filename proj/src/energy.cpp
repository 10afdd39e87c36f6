#include "aggsteady/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aggsteady/geometry.hpp"
#include "aggsteady/parallel.hpp"
#include "aggsteady/quadrature.hpp"

namespace aggsteady {

namespace {

void check_m(double m) { require(m > 1.0, "entropy needs m > 1 (m <= 1 is out of scope)"); }

// sampled rho_t without normalization, clipped to be non-increasing
std::vector<double> sample_curve(const HeightFunction& ht, const RadialGrid& grid, double scale) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = ht.density_at(scale * grid.r(i));
    for (std::size_t i = 1; i < v.size(); ++i) v[i] = std::min(v[i], v[i - 1]);
    return v;
}

double pl_power_integral(const RadialGrid& grid, const std::vector<double>& v, double p) {
    const int n = grid.dimension();
    const UnitRule& g = gauss_unit(4);
    const double omega = unit_sphere_area(n);
    double acc = 0.0;
    for (std::size_t c = 0; c + 1 < grid.size(); ++c) {
        if (v[c] == 0.0 && v[c + 1] == 0.0) continue;
        const double a = grid.r(c), h = grid.r(c + 1) - a;
        for (std::size_t q = 0; q < g.x.size(); ++q) {
            const double r = a + h * g.x[q];
            const double rho = v[c] + (v[c + 1] - v[c]) * g.x[q];
            acc += g.w[q] * h * omega * std::pow(r, n - 1) * std::pow(rho, p);
        }
    }
    return acc;
}

double max_abs(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s = std::max(s, std::abs(v));
    return s;
}

}  // namespace

double entropy(const RadialDensity& rho, double m) {
    check_m(m);
    return pl_power_integral(rho.grid(), rho.values(), m) / (m - 1.0);
}

double entropy_height(const HeightFunction& h, double m) {
    check_m(m);
    return m / (m - 1.0) * h.power_integral(m - 1.0);
}

double entropy_on_curve(const InterpolationCurve& c, double t, double m) { return entropy_height(c.at(t), m); }

double interaction(const RadialDensity& rho, const Potential& w) {
    const InteractionOperator op(rho.grid(), w);
    return op.energy(to_eigen(rho.values()));
}

nlohmann::json EnergyReport::to_json() const {
    return {{"S", S}, {"I", I}, {"E", E}, {"m", m}, {"potential", potential}, {"quadrature", quadrature}};
}

EnergyReport energy_report(const RadialDensity& rho, double m, const Potential& w) {
    EnergyReport r;
    r.m = m;
    r.S = entropy(rho, m);
    r.I = interaction(rho, w);
    r.E = r.S + r.I;
    r.potential = w.to_json();
    r.quadrature = {{"nodes", rho.size()},
                    {"dimension", rho.dimension()},
                    {"rMax", rho.grid().r_max()},
                    {"entropyRule", "gauss4-per-cell"},
                    {"interactionRule", rho.dimension() == 1 ? "product-integration" : "sphere-averaged-gauss"}};
    return r;
}

CurveEnergy::CurveEnergy(InterpolationCurve curve, Potential w, double m, std::size_t nodes, double r_max)
    : c_(std::move(curve)), w_(std::move(w)), m_(m) {
    check_m(m_);
    require(nodes >= 16, "curve energy needs at least 16 nodes");
    scaled_ = w_.homogeneous();
    const double support = std::max(c_.R0(), c_.R1());
    require(r_max == 0.0 || r_max >= support, "r_max must cover both endpoint supports");
    const double rmax = scaled_ ? 1.0 : (r_max > 0.0 ? r_max : support);
    grid_ = RadialGrid::uniform(c_.dimension(), rmax, nodes);
    op_ = std::make_shared<InteractionOperator>(grid_, w_.shifted(-w_.shift()));
}

double CurveEnergy::entropy(double t) const { return entropy_on_curve(c_, t, m_); }

double CurveEnergy::entropy_physical(double t) const {
    const HeightFunction ht = c_.at(t);
    if (!scaled_) return pl_power_integral(grid_, sample_curve(ht, grid_, 1.0), m_) / (m_ - 1.0);
    const double R = c_.support_radius(t);
    return std::pow(R, c_.dimension()) * pl_power_integral(grid_, sample_curve(ht, grid_, R), m_) / (m_ - 1.0);
}

double CurveEnergy::interaction(double t) const {
    const HeightFunction ht = c_.at(t);
    const int n = c_.dimension();
    const double R = scaled_ ? c_.support_radius(t) : 1.0;
    const Eigen::VectorXd rho = to_eigen(sample_curve(ht, grid_, R));
    const double base = op_->energy(rho);
    const double mass = std::pow(R, n) * to_eigen(grid_.weights()).dot(rho);
    double I = base;
    if (scaled_) {
        const double k = w_.k();
        I = k != 0.0 ? std::pow(R, 2.0 * n + k) * base
                     : std::pow(R, 2.0 * n) * (base + 0.5 * std::log(R) * std::pow(mass / std::pow(R, n), 2));
    }
    return I + 0.5 * w_.shift() * mass * mass;
}

EnergyReport CurveEnergy::report(double t) const {
    EnergyReport r;
    r.m = m_;
    r.S = entropy(t);
    r.I = interaction(t);
    r.E = r.S + r.I;
    r.potential = w_.to_json();
    r.quadrature = {{"nodes", grid_.size()},
                    {"t", t},
                    {"grid", scaled_ ? "reference [0,1], exact rescaling" : "fixed [0, max(R0,R1)]"},
                    {"entropyRule", "height-function"}};
    return r;
}

StepCase step_case_1d(double f, double g, double a) {
    require(f > 0.0 && g > 0.0 && a > 0.0, "step case needs positive f, g, a");
    const double A = 0.5 / f, B = 0.5 / g;
    if (A + B < a) return StepCase::Disjoint;
    if (std::abs(A - B) > a) return StepCase::Nested;
    if (std::abs(A - B) < a && A + B > a) return StepCase::Crossing;
    return StepCase::Boundary;
}

double step_integrand_1d(double f, double g, double a) {
    switch (step_case_1d(f, g, a)) {
        case StepCase::Disjoint: return 0.0;
        case StepCase::Nested: return 1.0 - 2.0 * a * std::min(f, g);
        default:
            // the crossing formula is continuous up to both boundaries
            return f / (4.0 * g) + g / (4.0 * f) + a * a * f * g - a * f - a * g + 0.5;
    }
}

double step_second_derivative_1d(double f, double g, double fp, double gp, double a) {
    if (step_case_1d(f, g, a) != StepCase::Crossing) return 0.0;
    const double B = 2.0 * a * a - 0.5 / (f * f) - 0.5 / (g * g);
    return g * fp * fp / (2.0 * f * f * f) + f * gp * gp / (2.0 * g * g * g) + B * fp * gp;
}

double step_discriminant_1d(double f, double g, double a) {
    const double B = 2.0 * a * a - 0.5 / (f * f) - 0.5 / (g * g);
    return B * B - 4.0 * (g / (2.0 * f * f * f)) * (f / (2.0 * g * g * g));
}

StepCurveValue interaction_on_curve_1d(const InterpolationCurve& c, double t, double a, std::size_t mass_nodes) {
    require(c.dimension() == 1, "the case-dispatch evaluator is one-dimensional");
    require(a > 0.0 && mass_nodes >= 1, "need a > 0 and at least one mass node");
    const HeightFunction ht = c.at(t);
    const std::size_t N = mass_nodes;
    std::vector<double> f(N), s(N);
    for (std::size_t i = 0; i < N; ++i) {
        s[i] = (i + 0.5) / N;
        f[i] = ht.derivative(s[i]);
    }
    StepCurveValue out;
    double acc = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < N; ++j) {
            double g = f[j];
            StepCase k = step_case_1d(f[i], g, a);
            if (k == StepCase::Boundary) {
                ++out.cases[0];
                g = ht.derivative(std::min(s[j] + 1e-12, std::nextafter(1.0, 0.0)));
                if (step_case_1d(f[i], g, a) == StepCase::Boundary) g = std::nextafter(g, 2.0 * g);
                k = step_case_1d(f[i], g, a);
            }
            ++out.cases[static_cast<std::size_t>(k)];
            acc += step_integrand_1d(f[i], g, a);
        }
    }
    out.samples = N * N;
    out.value = 0.5 * acc / static_cast<double>(N * N);
    return out;
}

double interaction_on_curve_nd(const InterpolationCurve& c, double t, double a, std::size_t cells) {
    require(a > 0.0 && cells >= 1, "need a > 0 and at least one cell");
    const HeightFunction ht = c.at(t);
    const int n = c.dimension();
    const UnitRule& g = gauss_unit(4);
    std::vector<double> s, w, R;
    for (std::size_t k = 0; k < cells; ++k)
        for (std::size_t q = 0; q < g.x.size(); ++q) {
            s.push_back((k + g.x[q]) / cells);
            w.push_back(g.w[q] / cells);
        }
    for (double si : s) R.push_back(std::pow(unit_ball_volume(n) * std::pow(a, n) * ht.derivative(si), -1.0 / n));
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        acc += w[i] * w[i] * interaction_I(n, R[i], R[i]);
        for (std::size_t j = i + 1; j < s.size(); ++j) acc += 2.0 * w[i] * w[j] * interaction_I(n, R[i], R[j]);
    }
    return 0.5 * acc;
}

std::vector<double> second_differences(const std::vector<double>& x) {
    std::vector<double> d;
    for (std::size_t i = 1; i + 1 < x.size(); ++i) d.push_back(x[i - 1] - 2.0 * x[i] + x[i + 1]);
    return d;
}

nlohmann::json ConvexityCertificate::to_json() const {
    return {{"m", m},
            {"t_points", t.size()},
            {"degenerate", degenerate},
            {"scale", {{"S", scale_S}, {"I", scale_I}, {"E", scale_E}}},
            {"min_second_difference", {{"S", min_d2S}, {"I", min_d2I}, {"E", min_d2E}}},
            {"max_second_difference_S", max_d2S},
            {"interaction_convex", interaction_convex},
            {"energy_convex", energy_convex},
            {"entropy_concave", entropy_concave},
            {"pass", pass}};
}

ConvexityCertificate certify_convexity(const InterpolationCurve& c, double m, const Potential& w, std::size_t t_points,
                                       std::size_t nodes, double tol, std::size_t jobs, double r_max) {
    require(t_points >= 3, "need at least three t points");
    const CurveEnergy ce(c, w, m, nodes, r_max);
    ConvexityCertificate out;
    out.m = m;
    out.t.resize(t_points);
    out.S.resize(t_points);
    out.I.resize(t_points);
    out.E.resize(t_points);
    for (std::size_t i = 0; i < t_points; ++i) out.t[i] = static_cast<double>(i) / (t_points - 1);
    parallel_for(
        t_points,
        [&](std::size_t i) {
            out.S[i] = ce.entropy(out.t[i]);
            out.I[i] = ce.interaction(out.t[i]);
            out.E[i] = out.S[i] + out.I[i];
        },
        jobs);
    out.d2S = second_differences(out.S);
    out.d2I = second_differences(out.I);
    out.d2E = second_differences(out.E);
    out.scale_S = max_abs(out.S);
    out.scale_I = max_abs(out.I);
    out.scale_E = max_abs(out.E);
    out.min_d2S = *std::min_element(out.d2S.begin(), out.d2S.end());
    out.max_d2S = *std::max_element(out.d2S.begin(), out.d2S.end());
    out.min_d2I = *std::min_element(out.d2I.begin(), out.d2I.end());
    out.min_d2E = *std::min_element(out.d2E.begin(), out.d2E.end());
    out.degenerate = c.identical();
    out.interaction_convex = out.min_d2I > 1e-10 * out.scale_I;
    out.energy_convex = out.min_d2E > -tol * out.scale_E;
    out.entropy_concave = out.max_d2S <= tol * out.scale_S;
    if (out.degenerate) out.pass = true;
    else if (m >= 2.0) out.pass = out.interaction_convex && out.energy_convex;
    else out.pass = out.interaction_convex;
    return out;
}

RadialDensity dilate(const RadialDensity& rho, double lambda) {
    require(lambda > 0.0, "dilation factor must be positive");
    std::vector<double> r = rho.grid().nodes(), v = rho.values();
    for (double& x : r) x /= lambda;
    const double f = std::pow(lambda, rho.dimension());
    for (double& x : v) x *= f;
    return RadialDensity(RadialGrid(rho.dimension(), std::move(r)), std::move(v));
}

DilationScan dilation_scan(const RadialDensity& rho, double m, const Potential& w, const std::vector<double>& lambdas) {
    DilationScan out;
    for (double l : lambdas) {
        const RadialDensity d = dilate(rho, l);
        DilationRow row{l, entropy(d, m), interaction(d, w), 0.0};
        row.E = row.S + row.I;
        out.rows.push_back(row);
    }
    out.far_field = w.growth() == Growth::Bounded ? 0.5 * w.value(1e12) * rho.mass() * rho.mass()
                                                  : std::numeric_limits<double>::quiet_NaN();
    std::vector<DilationRow> sorted = out.rows;
    std::sort(sorted.begin(), sorted.end(), [](const DilationRow& a, const DilationRow& b) { return a.lambda < b.lambda; });
    out.fitted_exponent = std::numeric_limits<double>::quiet_NaN();
    if (sorted.size() >= 2 && std::isfinite(out.far_field)) {
        const DilationRow &a = sorted[0], &b = sorted[1];
        const double ea = a.E - out.far_field, eb = b.E - out.far_field;
        if (ea > 0.0 && eb > 0.0) out.fitted_exponent = std::log(eb / ea) / std::log(b.lambda / a.lambda);
    }
    return out;
}

}  // namespace aggsteady
