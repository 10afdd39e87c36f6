#include "aggsteady/interaction_operator.hpp"

#include <cmath>
#include <cstring>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <string>

#include <boost/math/special_functions/beta.hpp>

#include "aggsteady/quadrature.hpp"

namespace aggsteady {

struct InteractionOperator::Kernel {
    enum class Type { Dense, RankTwo, Zero } type = Type::Zero;
    Eigen::MatrixXd G;
    // rank two: G = a w^T + 1 b^T
    Eigen::VectorXd a, b;
    std::size_t bytes() const { return static_cast<std::size_t>(G.size() + a.size() + b.size()) * sizeof(double); }
};

namespace {

constexpr std::size_t kMaxDenseNodes = 8192;
constexpr std::size_t kCacheBytes = std::size_t(1) << 30;

bool is_quadratic(const Potential& w) {
    return w.kind() == PotentialKind::Quadratic || (w.kind() == PotentialKind::Riesz && w.k() == 2.0);
}

double step_radius(const Potential& w) { return w.to_json()["params"]["a"].get<double>(); }

double angular_average(int n, const Potential& w, double r1, double r2) {
    // (omega_{n-1}/omega_n) int_0^pi W(d(theta)) sin^{n-2}(theta) d theta, theta = pi u^2
    const UnitRule& g = gauss_unit(24);
    const double norm = unit_sphere_area(n - 1) / unit_sphere_area(n);
    double acc = 0.0;
    for (std::size_t q = 0; q < g.x.size(); ++q) {
        const double u = g.x[q];
        const double th = M_PI * u * u;
        const double sh = std::sin(0.5 * th);
        const double d = std::sqrt((r1 - r2) * (r1 - r2) + 4.0 * r1 * r2 * sh * sh);
        const double s = std::sin(th);
        acc += g.w[q] * 2.0 * M_PI * u * w.value(d) * std::pow(s, n - 2);
    }
    return norm * acc;
}

Eigen::MatrixXd dense_line(const RadialGrid& grid, const Potential& w) {
    const std::size_t M = grid.size();
    const auto& r = grid.nodes();
    Eigen::MatrixXd G(M, M);
    std::vector<double> psi(M);
    for (std::size_t i = 0; i < M; ++i) {
        const double x = r[i];
        for (std::size_t j = 0; j < M; ++j) psi[j] = w.F2(std::abs(r[j] - x)) + w.F2(x + r[j]);
        for (std::size_t j = 0; j < M; ++j) {
            double v = 0.0;
            if (j > 0) v -= (psi[j] - psi[j - 1]) / (r[j] - r[j - 1]);
            if (j + 1 < M) {
                v += (psi[j + 1] - psi[j]) / (r[j + 1] - r[j]);
            } else {
                // boundary term Psi'(r_M)
                v += w.F1(r[j] - x) + w.F1(x + r[j]);
            }
            G(i, j) = v;
        }
    }
    return G;
}

Eigen::MatrixXd dense_radial(const RadialGrid& grid, const Potential& w) {
    const int n = grid.dimension();
    const std::size_t M = grid.size();
    const auto& r = grid.nodes();
    const double omega = unit_sphere_area(n);
    const UnitRule& far = gauss_unit(8);
    const UnitRule& near = gauss_unit(16);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(M, M);
    for (std::size_t i = 0; i < M; ++i) {
        for (std::size_t c = 0; c + 1 < M; ++c) {
            const double a = r[c], b = r[c + 1], h = b - a;
            const bool starts = c == i, ends = c + 1 == i;
            const bool close = (c + 2 >= i && c <= i + 2);
            const UnitRule& g = close ? near : far;
            double gc = 0.0, gn = 0.0;
            for (std::size_t q = 0; q < g.x.size(); ++q) {
                double rr, jac;
                if (starts) {
                    rr = a + h * g.x[q] * g.x[q];
                    jac = 2.0 * h * g.x[q] * g.w[q];
                } else if (ends) {
                    rr = b - h * g.x[q] * g.x[q];
                    jac = 2.0 * h * g.x[q] * g.w[q];
                } else {
                    rr = a + h * g.x[q];
                    jac = h * g.w[q];
                }
                const double val = omega * std::pow(rr, n - 1) * sphere_averaged_kernel(n, w, r[i], rr) * jac;
                gc += val * (b - rr) / h;
                gn += val * (rr - a) / h;
            }
            G(i, c) += gc;
            G(i, c + 1) += gn;
        }
    }
    return G;
}

std::shared_ptr<const InteractionOperator::Kernel> build_kernel(const RadialGrid& grid, const Potential& w) {
    auto k = std::make_shared<InteractionOperator::Kernel>();
    using T = InteractionOperator::Kernel::Type;
    const std::size_t M = grid.size();
    if (w.kind() == PotentialKind::None) {
        k->type = T::Zero;
        return k;
    }
    if (is_quadratic(w)) {
        k->type = T::RankTwo;
        k->a.resize(M);
        k->b = Eigen::VectorXd::Zero(M);
        const int n = grid.dimension();
        const double omega = unit_sphere_area(n);
        const UnitRule& g = gauss_unit(10);
        const auto& r = grid.nodes();
        for (std::size_t i = 0; i < M; ++i) k->a[i] = 0.5 * r[i] * r[i];
        for (std::size_t c = 0; c + 1 < M; ++c) {
            const double a = r[c], b = r[c + 1], h = b - a;
            for (std::size_t q = 0; q < g.x.size(); ++q) {
                const double rr = a + h * g.x[q];
                const double val = omega * std::pow(rr, n - 1) * 0.5 * rr * rr * h * g.w[q];
                k->b[c] += val * (b - rr) / h;
                k->b[c + 1] += val * (rr - a) / h;
            }
        }
        return k;
    }
    require(M <= kMaxDenseNodes, "grid too large for a dense interaction kernel (" + std::to_string(M) + " nodes)");
    k->type = T::Dense;
    k->G = grid.dimension() == 1 ? dense_line(grid, w) : dense_radial(grid, w);
    require(k->G.allFinite(), "interaction kernel is not finite; potential too singular for this grid");
    return k;
}

std::string grid_key(const RadialGrid& grid) {
    const auto& r = grid.nodes();
    std::string bytes(r.size() * sizeof(double), '\0');
    std::memcpy(bytes.data(), r.data(), bytes.size());
    return std::to_string(grid.dimension()) + "|" + std::to_string(r.size()) + "|" +
           std::to_string(std::hash<std::string>{}(bytes));
}

struct Cache {
    std::mutex mu;
    std::map<std::string, std::shared_ptr<const InteractionOperator::Kernel>> map;
    std::deque<std::string> order;
    std::size_t bytes = 0;
};

Cache& cache() {
    static Cache c;
    return c;
}

std::shared_ptr<const InteractionOperator::Kernel> cached_kernel(const RadialGrid& grid, const Potential& w) {
    const std::string key = grid_key(grid) + "|" + w.key();
    Cache& c = cache();
    // builds happen under the lock; readers only ever see finished kernels
    std::lock_guard<std::mutex> lock(c.mu);
    if (auto it = c.map.find(key); it != c.map.end()) return it->second;
    auto k = build_kernel(grid, w);
    while (!c.order.empty() && c.bytes + k->bytes() > kCacheBytes) {
        auto it = c.map.find(c.order.front());
        c.bytes -= it->second->bytes();
        c.map.erase(it);
        c.order.pop_front();
    }
    c.map.emplace(key, k);
    c.order.push_back(key);
    c.bytes += k->bytes();
    return k;
}

}  // namespace

double sphere_averaged_kernel(int n, const Potential& w, double r1, double r2) {
    require(n >= 1, "dimension must be positive");
    if (r1 == 0.0 || r2 == 0.0) return w.value(std::max(r1, r2));
    if (n == 1) return 0.5 * (w.value(std::abs(r1 - r2)) + w.value(r1 + r2));
    if (w.kind() == PotentialKind::Step) {
        const double a = step_radius(w);
        const double c = (r1 * r1 + r2 * r2 - a * a) / (2.0 * r1 * r2);
        double frac;
        if (c >= 1.0) frac = 1.0;
        else if (c <= -1.0) frac = 0.0;
        else frac = boost::math::ibeta(0.5 * (n - 1), 0.5 * (n - 1), 0.5 * (1.0 + c));
        return frac + w.shift();
    }
    if (n == 3) return (w.Phi(r1 + r2) - w.Phi(std::abs(r1 - r2))) / (2.0 * r1 * r2);
    return angular_average(n, w, r1, r2);
}

InteractionOperator::InteractionOperator(const RadialGrid& grid, const Potential& w) : grid_(grid), w_(w) {
    const int n = grid.dimension();
    if (w.kind() == PotentialKind::Riesz || w.kind() == PotentialKind::Quadratic)
        require(w.k() > -n, "potential with k <= -n is not locally integrable");
    weights_ = to_eigen(grid.weights());
    kernel_ = cached_kernel(grid, w.shifted(-w.shift()));
}

Eigen::VectorXd InteractionOperator::convolve(const Eigen::VectorXd& rho) const {
    require(static_cast<std::size_t>(rho.size()) == grid_.size(), "density size does not match the grid");
    const double mass = weights_.dot(rho);
    Eigen::VectorXd out;
    switch (kernel_->type) {
        case Kernel::Type::Dense: out = kernel_->G * rho; break;
        case Kernel::Type::RankTwo:
            out = kernel_->a * mass + Eigen::VectorXd::Constant(rho.size(), kernel_->b.dot(rho));
            break;
        case Kernel::Type::Zero: out = Eigen::VectorXd::Zero(rho.size()); break;
    }
    if (w_.shift() != 0.0) out.array() += w_.shift() * mass;
    return out;
}

Eigen::VectorXd InteractionOperator::transpose_apply(const Eigen::VectorXd& v) const {
    require(static_cast<std::size_t>(v.size()) == grid_.size(), "vector size does not match the grid");
    Eigen::VectorXd out;
    switch (kernel_->type) {
        case Kernel::Type::Dense: out = kernel_->G.transpose() * v; break;
        case Kernel::Type::RankTwo: out = weights_ * kernel_->a.dot(v) + kernel_->b * v.sum(); break;
        case Kernel::Type::Zero: out = Eigen::VectorXd::Zero(v.size()); break;
    }
    if (w_.shift() != 0.0) out += weights_ * (w_.shift() * v.sum());
    return out;
}

Eigen::VectorXd InteractionOperator::gradient(const Eigen::VectorXd& rho) const {
    const Eigen::VectorXd wr = weights_.cwiseProduct(rho);
    return 0.5 * (convolve(rho) + transpose_apply(wr).cwiseQuotient(weights_));
}

double InteractionOperator::energy(const Eigen::VectorXd& rho) const {
    return 0.5 * weights_.cwiseProduct(rho).dot(convolve(rho));
}

Eigen::MatrixXd InteractionOperator::matrix() const {
    const Eigen::Index M = static_cast<Eigen::Index>(grid_.size());
    Eigen::MatrixXd G;
    switch (kernel_->type) {
        case Kernel::Type::Dense: G = kernel_->G; break;
        case Kernel::Type::RankTwo:
            G = kernel_->a * weights_.transpose() + Eigen::VectorXd::Ones(M) * kernel_->b.transpose();
            break;
        case Kernel::Type::Zero: G = Eigen::MatrixXd::Zero(M, M); break;
    }
    if (w_.shift() != 0.0) G += w_.shift() * Eigen::VectorXd::Ones(M) * weights_.transpose();
    return G;
}

std::size_t interaction_cache_entries() {
    std::lock_guard<std::mutex> lock(cache().mu);
    return cache().map.size();
}

void clear_interaction_cache() {
    Cache& c = cache();
    std::lock_guard<std::mutex> lock(c.mu);
    c.map.clear();
    c.order.clear();
    c.bytes = 0;
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace aggsteady
