#include "aggsteady/potentials.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/toms748_solve.hpp>

namespace aggsteady {

std::string to_string(PotentialKind kind) {
    switch (kind) {
        case PotentialKind::Riesz: return "riesz";
        case PotentialKind::Quadratic: return "quadratic";
        case PotentialKind::Step: return "step";
        case PotentialKind::Tabulated: return "tabulated";
        case PotentialKind::Modified: return "modified";
        case PotentialKind::None: return "none";
    }
    return "unknown";
}

std::string to_string(Growth growth) {
    switch (growth) {
        case Growth::Bounded: return "bounded";
        case Growth::Sublinear: return "sublinear";
        case Growth::Linear: return "linear";
        case Growth::Superlinear: return "superlinear";
    }
    return "unknown";
}

double cutoff_eta(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

double cutoff_eta_prime(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    const double y = x * (1.0 - x);
    return 30.0 * y * y;
}

double cutoff_eta_second(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
}

namespace {

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// ---- Riesz family -------------------------------------------------------

class RieszImpl final : public PotentialImpl {
public:
    RieszImpl(double k, bool quadratic) : k_(k), quadratic_(quadratic) {
        require(std::isfinite(k), "riesz exponent must be finite");
    }
    PotentialKind kind() const override { return quadratic_ ? PotentialKind::Quadratic : PotentialKind::Riesz; }
    double k() const override { return k_; }
    Growth growth() const override {
        if (k_ < 0.0) return Growth::Bounded;
        if (k_ < 1.0) return Growth::Sublinear;
        if (k_ == 1.0) return Growth::Linear;
        return Growth::Superlinear;
    }
    bool homogeneous() const override { return true; }
    bool integrable_1d() const override { return k_ > -1.0; }
    double value(double r) const override {
        if (k_ == 0.0) return std::log(r);
        return std::pow(r, k_) / k_;
    }
    double wprime(double r) const override { return std::pow(r, k_ - 1.0); }
    double wsecond(double r) const override { return (k_ - 1.0) * std::pow(r, k_ - 2.0); }
    double F1(double x) const override {
        require(k_ > -1.0, "W not integrable at the origin on the line");
        if (x <= 0.0) return 0.0;
        if (k_ == 0.0) return x * (std::log(x) - 1.0);
        return std::pow(x, k_ + 1.0) / (k_ * (k_ + 1.0));
    }
    double F2(double x) const override {
        require(k_ > -1.0, "W not integrable at the origin on the line");
        if (x <= 0.0) return 0.0;
        if (k_ == 0.0) return x * x * (2.0 * std::log(x) - 3.0) / 4.0;
        return std::pow(x, k_ + 2.0) / (k_ * (k_ + 1.0) * (k_ + 2.0));
    }
    double Phi(double u) const override {
        if (k_ == 0.0) return u <= 0.0 ? 0.0 : u * u * (2.0 * std::log(u) - 1.0) / 4.0;
        if (k_ == -2.0) return -0.5 * std::log(u);
        if (k_ < -2.0) return std::pow(u, k_ + 2.0) / (k_ * (k_ + 2.0));
        if (u <= 0.0) return 0.0;
        return std::pow(u, k_ + 2.0) / (k_ * (k_ + 2.0));
    }
    nlohmann::json to_json() const override {
        if (quadratic_) return {{"kind", "quadratic"}, {"k", 2.0}};
        return {{"kind", "riesz"}, {"k", k_}};
    }

private:
    double k_;
    bool quadratic_;
};

class StepImpl final : public PotentialImpl {
public:
    explicit StepImpl(double a) : a_(a) { require(a > 0.0 && std::isfinite(a), "step radius must be positive"); }
    PotentialKind kind() const override { return PotentialKind::Step; }
    double k() const override { return 1.0; }
    Growth growth() const override { return Growth::Bounded; }
    double value(double r) const override { return r >= a_ ? 1.0 : 0.0; }
    double wprime(double) const override {
        throw InvalidInput("W' of a step potential is a point mass; evaluate it through energy quadrature only");
    }
    double wsecond(double r) const override { return wprime(r); }
    double F1(double x) const override { return std::max(0.0, x - a_); }
    double F2(double x) const override {
        const double d = std::max(0.0, x - a_);
        return 0.5 * d * d;
    }
    double Phi(double u) const override { return u > a_ ? 0.5 * (u * u - a_ * a_) : 0.0; }
    nlohmann::json to_json() const override { return {{"kind", "step"}, {"params", {{"a", a_}}}}; }
    double a() const { return a_; }

private:
    double a_;
};

class NoneImpl final : public PotentialImpl {
public:
    PotentialKind kind() const override { return PotentialKind::None; }
    double k() const override { return 0.0; }
    Growth growth() const override { return Growth::Bounded; }
    double value(double) const override { return 0.0; }
    double wprime(double) const override { return 0.0; }
    double wsecond(double) const override { return 0.0; }
    double F1(double) const override { return 0.0; }
    double F2(double) const override { return 0.0; }
    double Phi(double) const override { return 0.0; }
    nlohmann::json to_json() const override { return {{"kind", "none"}}; }
};

// ---- tabulated: piecewise polynomial antiderivatives ------------------------

// Piecewise polynomial in local coordinate tau = x - x_j; the last cell is unbounded.
struct PiecewisePoly {
    std::vector<double> x;                   // cell left ends
    std::vector<std::vector<double>> coeff;  // monomial coefficients in tau

    std::size_t cell(double r) const {
        const auto it = std::upper_bound(x.begin(), x.end(), r);
        return it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
    }
    double eval(double r) const {
        const std::size_t j = cell(r);
        const double t = r - x[j];
        double v = 0.0;
        const auto& c = coeff[j];
        for (std::size_t p = c.size(); p-- > 0;) v = v * t + c[p];
        return v;
    }
    double derivative(double r) const {
        const std::size_t j = cell(r);
        const double t = r - x[j];
        double v = 0.0;
        const auto& c = coeff[j];
        for (std::size_t p = c.size(); p-- > 1;) v = v * t + p * c[p];
        return v;
    }
    // antiderivative vanishing at x[0], continuous across cells
    PiecewisePoly integrate() const {
        PiecewisePoly out;
        out.x = x;
        out.coeff.resize(coeff.size());
        double base = 0.0;
        for (std::size_t j = 0; j < coeff.size(); ++j) {
            std::vector<double> c(coeff[j].size() + 1, 0.0);
            c[0] = base;
            for (std::size_t p = 0; p < coeff[j].size(); ++p) c[p + 1] = coeff[j][p] / (p + 1.0);
            out.coeff[j] = c;
            if (j + 1 < coeff.size()) {
                const double h = x[j + 1] - x[j];
                double v = 0.0;
                for (std::size_t p = c.size(); p-- > 0;) v = v * h + c[p];
                base = v;
            }
        }
        return out;
    }
    // multiply each cell by (x_j + tau)
    PiecewisePoly times_r() const {
        PiecewisePoly out;
        out.x = x;
        out.coeff.resize(coeff.size());
        for (std::size_t j = 0; j < coeff.size(); ++j) {
            std::vector<double> c(coeff[j].size() + 1, 0.0);
            for (std::size_t p = 0; p < coeff[j].size(); ++p) {
                c[p] += x[j] * coeff[j][p];
                c[p + 1] += coeff[j][p];
            }
            out.coeff[j] = c;
        }
        return out;
    }
};

std::vector<double> monotone_slopes(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> d(n, 0.0);
    std::vector<double> h(n - 1), m(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        h[k] = x[k + 1] - x[k];
        m[k] = (y[k + 1] - y[k]) / h[k];
    }
    if (n == 2) return {m[0], m[0]};
    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (m[k - 1] * m[k] <= 0.0) continue;
        const double w1 = 2.0 * h[k] + h[k - 1], w2 = h[k] + 2.0 * h[k - 1];
        d[k] = (w1 + w2) / (w1 / m[k - 1] + w2 / m[k]);
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

class TabulatedImpl final : public PotentialImpl {
public:
    TabulatedImpl(std::vector<double> r, std::vector<double> wp) : r_(std::move(r)), wp_(std::move(wp)) {
        require(r_.size() >= 2 && r_.size() == wp_.size(), "tabulated potential needs matching r / wprime arrays");
        require(r_.front() == 0.0, "tabulated potential must start at r = 0");
        for (std::size_t i = 1; i < r_.size(); ++i) require(r_[i] > r_[i - 1], "tabulated radii must increase");
        for (std::size_t i = 0; i < wp_.size(); ++i)
            require(std::isfinite(wp_[i]) && (wp_[i] > 0.0 || (i == 0 && wp_[i] >= 0.0)),
                    "tabulated W' must be positive for r > 0");
        // Hermite cubic pieces of W'; positivity of the data is preserved by the monotone slopes
        // only between monotone runs, so check a dense sample below.
        const auto d = monotone_slopes(r_, wp_);
        wprime_.x = r_;
        wprime_.coeff.resize(r_.size());
        for (std::size_t j = 0; j + 1 < r_.size(); ++j) {
            const double h = r_[j + 1] - r_[j];
            const double delta = (wp_[j + 1] - wp_[j]) / h;
            const double c2 = (3.0 * delta - 2.0 * d[j] - d[j + 1]) / h;
            const double c3 = (d[j] + d[j + 1] - 2.0 * delta) / (h * h);
            wprime_.coeff[j] = {wp_[j], d[j], c2, c3};
        }
        wprime_.coeff.back() = {wp_.back()};
        w_ = wprime_.integrate();
        f1_ = w_.integrate();
        f2_ = f1_.integrate();
        phi_ = w_.times_r().integrate();
        for (std::size_t j = 0; j + 1 < r_.size(); ++j)
            for (int q = 1; q < 8; ++q) {
                const double x = r_[j] + (r_[j + 1] - r_[j]) * q / 8.0;
                require(wprime_.eval(x) > 0.0, "tabulated W' interpolant must stay positive");
            }
    }
    PotentialKind kind() const override { return PotentialKind::Tabulated; }
    double k() const override { return 1.0; }
    Growth growth() const override { return Growth::Linear; }
    double value(double r) const override { return w_.eval(std::max(r, 0.0)); }
    double wprime(double r) const override { return wprime_.eval(r); }
    double wsecond(double r) const override { return wprime_.derivative(r); }
    double F1(double x) const override { return x <= 0.0 ? 0.0 : f1_.eval(x); }
    double F2(double x) const override { return x <= 0.0 ? 0.0 : f2_.eval(x); }
    double Phi(double u) const override { return u <= 0.0 ? 0.0 : phi_.eval(u); }
    nlohmann::json to_json() const override {
        return {{"kind", "tabulated"}, {"table", {{"r", r_}, {"wprime", wp_}}}};
    }

private:
    std::vector<double> r_, wp_;
    PiecewisePoly wprime_, w_, f1_, f2_, phi_;
};

// ---- tail modification ---------------------------------------------------------

enum class ForgePart { Full, W1, W2 };

class ForgedImpl final : public PotentialImpl {
public:
    ForgedImpl(Potential base, double R, double eps, ForgePart part)
        : base_(std::move(base)), R_(R), eps_(eps), part_(part) {
        const double a = 2.0 * R_, b = 3.0 * R_;
        // w1 before anchoring, relative to its value at 2R
        const double w1_mid = gauss_integral(a, b, [&](double t) { return d1(t); });
        // w1(2R) chosen so that w1(3R) = 0
        w1_at_a_ = -w1_mid;
        offset_ = w1_at_a_ - base_.value(a);
        // values and antiderivatives at 2R of the selected part
        const double base_f1 = base_.impl().integrable_1d() ? base_.F1(a) : 0.0;
        const double base_f2 = base_.impl().integrable_1d() ? base_.F2(a) : 0.0;
        if (part_ == ForgePart::W2) {
            Wa_ = F1a_ = F2a_ = Phia_ = 0.0;
        } else {
            Wa_ = w1_at_a_;
            F1a_ = base_f1 + offset_ * a;
            F2a_ = base_f2 + offset_ * a * a / 2.0;
            Phia_ = base_.Phi(a) + offset_ * a * a / 2.0;
        }
        Wb_ = value(b);
        F1b_ = F1(b);
        F2b_ = F2(b);
        Phib_ = Phi(b);
    }

    PotentialKind kind() const override { return PotentialKind::Modified; }
    double k() const override { return part_ == ForgePart::W2 ? 1.0 : base_.k(); }
    Growth growth() const override { return part_ == ForgePart::W1 ? Growth::Bounded : Growth::Linear; }
    bool integrable_1d() const override { return part_ == ForgePart::W2 || base_.impl().integrable_1d(); }

    double value(double r) const override {
        const double a = 2.0 * R_, b = 3.0 * R_;
        if (r <= a) return part_ == ForgePart::W2 ? 0.0 : base_.value(r) + offset_;
        if (r <= b) return Wa_ + gauss_integral(a, r, [&](double t) { return dp(t); });
        return Wb_ + tail_slope() * (r - b);
    }
    double wprime(double r) const override {
        require(r > 0.0, "W' needs r > 0");
        return dp(r);
    }
    double wsecond(double r) const override {
        const double x = (r - 2.0 * R_) / R_;
        const double e = cutoff_eta(x), ep = cutoff_eta_prime(x) / R_;
        double v = 0.0;
        if (part_ != ForgePart::W2 && x < 1.0) v += base_.wsecond(r) * (1.0 - e) - base_.wprime(r) * ep;
        if (part_ != ForgePart::W1) v += eps_ * ep;
        return v;
    }
    double F1(double x) const override {
        const double a = 2.0 * R_, b = 3.0 * R_;
        if (x <= a) return part_ == ForgePart::W2 ? 0.0 : base_.F1(x) + offset_ * x;
        if (x <= b) return F1a_ + Wa_ * (x - a) + gauss_integral(a, x, [&](double t) { return (x - t) * dp(t); });
        const double d = x - b;
        return F1b_ + Wb_ * d + tail_slope() * d * d / 2.0;
    }
    double F2(double x) const override {
        const double a = 2.0 * R_, b = 3.0 * R_;
        if (x <= a) return part_ == ForgePart::W2 ? 0.0 : base_.F2(x) + offset_ * x * x / 2.0;
        if (x <= b) {
            const double d = x - a;
            return F2a_ + F1a_ * d + Wa_ * d * d / 2.0 +
                   gauss_integral(a, x, [&](double t) { return 0.5 * (x - t) * (x - t) * dp(t); });
        }
        const double d = x - b;
        return F2b_ + F1b_ * d + Wb_ * d * d / 2.0 + tail_slope() * d * d * d / 6.0;
    }
    double Phi(double u) const override {
        const double a = 2.0 * R_, b = 3.0 * R_;
        if (u <= a) return part_ == ForgePart::W2 ? 0.0 : base_.Phi(u) + offset_ * u * u / 2.0;
        if (u <= b)
            return Phia_ + Wa_ * (u * u - a * a) / 2.0 +
                   gauss_integral(a, u, [&](double s) { return 0.5 * (u * u - s * s) * dp(s); });
        // int_b^u t (W_b + c (t - b)) dt
        const double c = tail_slope();
        return Phib_ + Wb_ * (u * u - b * b) / 2.0 + c * ((u * u * u - b * b * b) / 3.0 - b * (u * u - b * b) / 2.0);
    }
    nlohmann::json to_json() const override {
        nlohmann::json j = {{"kind", "modified"}, {"base", base_.to_json()}, {"params", {{"R", R_}, {"epsilon", eps_}}}};
        if (part_ == ForgePart::W1) j["part"] = "w1";
        if (part_ == ForgePart::W2) j["part"] = "w2";
        return j;
    }
    double offset() const { return offset_; }

private:
    double d1(double t) const { return base_.wprime(t) * (1.0 - cutoff_eta((t - 2.0 * R_) / R_)); }
    double d2(double t) const { return eps_ * cutoff_eta((t - 2.0 * R_) / R_); }
    double dp(double t) const {
        switch (part_) {
            case ForgePart::W1: return t >= 3.0 * R_ ? 0.0 : d1(t);
            case ForgePart::W2: return d2(t);
            default: return (t >= 3.0 * R_ ? 0.0 : d1(t)) + d2(t);
        }
    }
    double tail_slope() const { return part_ == ForgePart::W1 ? 0.0 : eps_; }
    template <class F>
    static double gauss_integral(double lo, double hi, F&& f) {
        if (hi <= lo) return 0.0;
        return boost::math::quadrature::gauss<double, 30>::integrate(f, lo, hi);
    }

    Potential base_;
    double R_, eps_;
    ForgePart part_;
    double w1_at_a_ = 0.0, offset_ = 0.0;
    double Wa_ = 0.0, F1a_ = 0.0, F2a_ = 0.0, Phia_ = 0.0;
    double Wb_ = 0.0, F1b_ = 0.0, F2b_ = 0.0, Phib_ = 0.0;
};

double get_number(const nlohmann::json& j, const char* name, const std::string& path) {
    require(j.contains(name) && j[name].is_number(), path + "." + name + ": number required");
    return j[name].get<double>();
}

}  // namespace

// ---- Potential --------------------------------------------------------------

Potential::Potential() : impl_(std::make_shared<NoneImpl>()) {}
Potential::Potential(std::shared_ptr<const PotentialImpl> impl, double shift) : impl_(std::move(impl)), shift_(shift) {}

Potential Potential::riesz(double k) { return Potential(std::make_shared<RieszImpl>(k, false)); }
Potential Potential::quadratic() { return Potential(std::make_shared<RieszImpl>(2.0, true)); }
Potential Potential::step(double a) { return Potential(std::make_shared<StepImpl>(a)); }
Potential Potential::tabulated(std::vector<double> r, std::vector<double> wprime) {
    return Potential(std::make_shared<TabulatedImpl>(std::move(r), std::move(wprime)));
}
Potential Potential::none() { return Potential(); }

PotentialKind Potential::kind() const { return impl_->kind(); }
double Potential::k() const { return impl_->k(); }
Growth Potential::growth() const { return impl_->growth(); }
bool Potential::homogeneous() const { return impl_->homogeneous(); }
bool Potential::integrable_1d() const { return impl_->integrable_1d(); }

double Potential::value(double r) const { return impl_->value(r) + shift_; }
double Potential::wprime(double r) const {
    require(r > 0.0, "W'(r) requires r > 0");
    return impl_->wprime(r);
}
double Potential::wsecond(double r) const {
    require(r > 0.0, "W''(r) requires r > 0");
    return impl_->wsecond(r);
}
double Potential::F1(double x) const { return impl_->F1(x) + shift_ * std::max(x, 0.0); }
double Potential::F2(double x) const { return impl_->F2(x) + 0.5 * shift_ * x * x * (x > 0.0); }
double Potential::Phi(double u) const { return impl_->Phi(u) + 0.5 * shift_ * u * u; }

Potential Potential::shifted(double c) const { return Potential(impl_, shift_ + c); }

nlohmann::json Potential::to_json() const {
    nlohmann::json j = impl_->to_json();
    if (shift_ != 0.0) j["shift"] = shift_;
    return j;
}

Potential Potential::from_json(const nlohmann::json& spec) {
    const std::string path = "potential";
    require(spec.is_object(), path + ": object required");
    require(spec.contains("kind") && spec["kind"].is_string(), path + ".kind: string required");
    const std::string kind = spec["kind"];
    const nlohmann::json params = spec.value("params", nlohmann::json::object());
    Potential out;
    if (kind == "riesz") {
        const double k = spec.contains("k") ? get_number(spec, "k", path) : get_number(params, "k", path + ".params");
        out = riesz(k);
    } else if (kind == "quadratic") {
        out = quadratic();
    } else if (kind == "step") {
        out = step(get_number(params, "a", path + ".params"));
    } else if (kind == "tabulated") {
        require(spec.contains("table"), path + ".table: required for tabulated potentials");
        const auto& t = spec["table"];
        require(t.contains("r") && t.contains("wprime"), path + ".table: needs r and wprime arrays");
        out = tabulated(t["r"].get<std::vector<double>>(), t["wprime"].get<std::vector<double>>());
    } else if (kind == "modified") {
        require(spec.contains("base"), path + ".base: required for modified potentials");
        const Potential base = from_json(spec["base"]);
        const ModifiedPotential mp(base, get_number(params, "R", path + ".params"),
                                   get_number(params, "epsilon", path + ".params"));
        const std::string part = spec.value("part", "full");
        out = part == "w1" ? mp.w1() : part == "w2" ? mp.w2() : mp.potential();
    } else if (kind == "none") {
        out = none();
    } else {
        throw InvalidInput(path + ".kind: unknown kind '" + kind + "'");
    }
    if (spec.contains("shift")) out = out.shifted(spec["shift"].get<double>());
    return out;
}

Potential Potential::parse(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\n");
    require(first != std::string::npos, "empty potential string");
    if (text[first] == '{') return from_json(nlohmann::json::parse(text));
    // kind[:key=value,...]
    const auto colon = text.find(':');
    nlohmann::json spec = {{"kind", text.substr(0, colon)}};
    nlohmann::json params = nlohmann::json::object();
    if (colon != std::string::npos) {
        std::stringstream ss(text.substr(colon + 1));
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto eq = item.find('=');
            require(eq != std::string::npos, "potential shorthand expects key=value, got '" + item + "'");
            try {
                params[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
            } catch (const std::exception&) {
                throw InvalidInput("potential shorthand: not a number in '" + item + "'");
            }
        }
    }
    if (params.contains("k")) spec["k"] = params["k"];
    spec["params"] = params;
    return from_json(spec);
}

std::string Potential::describe() const {
    nlohmann::json j = to_json();
    // tables are summarized; the full data stays in to_json()
    std::function<void(nlohmann::json&)> shorten = [&](nlohmann::json& x) {
        if (!x.is_object()) return;
        if (x.contains("table") && x["table"].contains("r")) x["table"] = std::to_string(x["table"]["r"].size()) + " nodes";
        for (auto& [k, v] : x.items()) shorten(v);
    };
    shorten(j);
    return j.dump();
}

std::string Potential::key() const {
    // %.17g keeps the key exact for doubles
    std::function<std::string(const nlohmann::json&)> canon = [&](const nlohmann::json& j) -> std::string {
        if (j.is_number()) return num(j.get<double>());
        if (j.is_object()) {
            std::string s = "{";
            for (auto it = j.begin(); it != j.end(); ++it) s += it.key() + ":" + canon(it.value()) + ";";
            return s + "}";
        }
        if (j.is_array()) {
            std::string s = "[";
            for (const auto& v : j) s += canon(v) + ",";
            return s + "]";
        }
        return j.dump();
    };
    return canon(impl_->to_json());
}

double eval_wprime(const Potential& w, double r) { return w.wprime(r); }

// ---- forge --------------------------------------------------------------------

ModifiedPotential::ModifiedPotential(Potential base, double R, double epsilon)
    : base_(std::move(base)), R_(R), eps_(epsilon) {
    require(R > 0.0 && std::isfinite(R), "forge radius must be positive");
    require(epsilon > 0.0 && epsilon < 1.0, "forge slope epsilon must lie in (0,1)");
    require(base_.kind() != PotentialKind::Step && base_.kind() != PotentialKind::None,
            "forge needs an attractive base with a pointwise W'");
    full_ = Potential(std::make_shared<ForgedImpl>(base_, R, epsilon, ForgePart::Full));
    w1_ = Potential(std::make_shared<ForgedImpl>(base_, R, epsilon, ForgePart::W1));
    w2_ = Potential(std::make_shared<ForgedImpl>(base_, R, epsilon, ForgePart::W2));
}

double ModifiedPotential::offset() const {
    return static_cast<const ForgedImpl&>(full_.impl()).offset();
}

double ModifiedPotential::laplacian_w2_sup(int n, std::size_t samples) const {
    double sup = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double r = 2.0 * R_ + 2.0 * R_ * static_cast<double>(i) / (samples - 1);
        const double v = w2_.wsecond(r) + (n - 1) * w2_.wprime(r) / r;
        sup = std::max(sup, std::abs(v));
    }
    return sup;
}

ModifiedPotential forge_tail(const Potential& w, double R, double epsilon) { return ModifiedPotential(w, R, epsilon); }

double StepDecomposition::reconstruct(double r) const {
    // each atom spreads its weight uniformly over its quadrature cell
    double v = w0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double half = 0.5 * width[j];
        if (half == 0.0) {
            if (r >= a[j]) v += weight[j];
            continue;
        }
        const double lo = a[j] - half;
        if (r <= lo) continue;
        v += weight[j] * std::min(1.0, (r - lo) / width[j]);
    }
    return v;
}

StepDecomposition step_decompose(const Potential& w, double A, std::size_t nodes, double truncation) {
    require(A > 0.0 && nodes >= 1, "step_decompose needs A > 0 and at least one node");
    StepDecomposition out;
    if (w.kind() == PotentialKind::Step) {
        out.a = {static_cast<const StepImpl&>(w.impl()).a()};
        out.weight = {1.0};
        out.width = {0.0};
        out.w0 = w.shift();
        return out;
    }
    require(w.kind() != PotentialKind::None, "zero potential has no step decomposition");
    double lo = 0.0;
    const bool unbounded = (w.kind() == PotentialKind::Riesz || w.kind() == PotentialKind::Quadratic) && w.k() <= 0.0;
    if (unbounded) {
        require(truncation > 0.0, "potential unbounded below near 0: pass a truncation level 1/eps");
        // W_eps = max(W, -1/eps): flat below a_eps where W(a_eps) = -1/eps
        const double floor_value = -1.0 / truncation;
        double x = A;
        require(w.value(x) > floor_value, "truncation level above W(A)");
        double y = A;
        while (w.value(y) > floor_value) y *= 0.5;
        auto f = [&](double r) { return w.value(r) - floor_value; };
        std::uintmax_t it = 200;
        boost::math::tools::eps_tolerance<double> tol(50);
        const auto [l, h] = boost::math::tools::toms748_solve(f, y, x, tol, it);
        lo = 0.5 * (l + h);
        out.w0 = floor_value;
    } else {
        out.w0 = w.value(0.0);
        require(std::isfinite(out.w0), "W(0+) must be finite without truncation");
    }
    const double h = (A - lo) / nodes;
    for (std::size_t j = 0; j < nodes; ++j) {
        const double aj = lo + (j + 0.5) * h;
        out.a.push_back(aj);
        out.weight.push_back(w.wprime(aj) * h);
        out.width.push_back(h);
    }
    return out;
}

}  // namespace aggsteady
