#include "aggsteady/steady_state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "aggsteady/families.hpp"
#include "aggsteady/interaction_operator.hpp"
#include "aggsteady/parallel.hpp"

namespace aggsteady {

namespace {

double profile_value(double x, double m) {
    if (x <= 0.0) return 0.0;
    return std::pow((m - 1.0) / m * x, 1.0 / (m - 1.0));
}

std::vector<double> profile(const std::vector<double>& phi, double C, double m) {
    std::vector<double> out(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) out[i] = profile_value(C - phi[i], m);
    return out;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

double l1(const RadialGrid& g, const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += g.weight(i) * std::abs(a[i] - b[i]);
    return s;
}

struct Evaluation {
    std::vector<double> phi, next;
    double C = 0.0;
    double residual = 0.0;
};

// Residual of rho against its own image: xi - C over supp rho and supp Phi(rho).
Evaluation evaluate(const InteractionOperator& op, const std::vector<double>& rho, double m) {
    Evaluation e;
    e.phi = to_std(op.convolve(to_eigen(rho)));
    e.C = mass_multiplier(e.phi, op.grid(), m);
    e.next = profile(e.phi, e.C, m);
    const double a = m / (m - 1.0);
    for (std::size_t i = 0; i < rho.size(); ++i)
        if (rho[i] > 0.0 || e.next[i] > 0.0)
            e.residual = std::max(e.residual, std::abs(a * std::pow(rho[i], m - 1.0) + e.phi[i] - e.C));
    return e;
}

// Newton on (rho_S, C) for xi_i = C on the active set S and unit mass. The
// active set is refreshed after every accepted step. Returns the polished
// density when it lowers the residual.
std::optional<std::vector<double>> newton_polish(const InteractionOperator& op, const Eigen::MatrixXd& G,
                                                 std::vector<double> rho, double m, const SteadyOptions& opts,
                                                 std::size_t& steps) {
    const RadialGrid& g = op.grid();
    const double a = m / (m - 1.0);
    Evaluation cur = evaluate(op, rho, m);
    const double start = cur.residual;
    double C = cur.C;
    for (int it = 0; it < 40 && cur.residual > 1e-3 * opts.tol_residual; ++it) {
        std::vector<std::size_t> S;
        for (std::size_t i = 0; i < rho.size(); ++i)
            if (rho[i] > 0.0) S.push_back(i);
        if (S.empty() || S.size() > opts.newton_max_active) break;
        const Eigen::Index K = static_cast<Eigen::Index>(S.size());
        Eigen::MatrixXd J(K + 1, K + 1);
        Eigen::VectorXd F(K + 1);
        double mass = 0.0;
        for (Eigen::Index p = 0; p < K; ++p) {
            const std::size_t i = S[p];
            for (Eigen::Index q = 0; q < K; ++q) J(p, q) = G(i, S[q]);
            J(p, p) += m * std::pow(rho[i], m - 2.0);
            J(p, K) = -1.0;
            J(K, p) = g.weight(i);
            F(p) = a * std::pow(rho[i], m - 1.0) + cur.phi[i] - C;
            mass += g.weight(i) * rho[i];
        }
        J(K, K) = 0.0;
        F(K) = mass - 1.0;
        const Eigen::VectorXd dx = J.partialPivLu().solve(F);
        if (!dx.allFinite()) break;
        ++steps;
        bool accepted = false;
        for (double lambda = 1.0; lambda >= 1.0 / 64; lambda *= 0.5) {
            std::vector<double> trial = rho;
            for (Eigen::Index p = 0; p < K; ++p) trial[S[p]] = std::max(0.0, rho[S[p]] - lambda * dx(p));
            Evaluation e = evaluate(op, trial, m);
            if (e.residual < cur.residual) {
                // nodes the profile switches on join the active set
                for (std::size_t i = 0; i < trial.size(); ++i)
                    if (trial[i] == 0.0 && e.next[i] > 0.0) trial[i] = e.next[i];
                rho = std::move(trial);
                C = C - lambda * dx(K);
                cur = evaluate(op, rho, m);
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    if (cur.residual < start) return rho;
    return std::nullopt;
}

}  // namespace

double mass_multiplier(const std::vector<double>& phi, const RadialGrid& grid, double m) {
    require(phi.size() == grid.size(), "mass_multiplier: size mismatch");
    require(m > 1.0, "mass_multiplier needs m > 1");
    double lo = std::numeric_limits<double>::infinity();
    for (double p : phi) lo = std::min(lo, p);
    require(std::isfinite(lo), "mass_multiplier: non-finite potential");
    auto f = [&](double C) {
        double s = 0.0;
        for (std::size_t i = 0; i < phi.size(); ++i) s += grid.weight(i) * profile_value(C - phi[i], m);
        return s - 1.0;
    };
    double step = std::max(1.0, std::abs(lo)) * 1e-3;
    double hi = lo + step;
    int grow = 0;
    while (f(hi) < 0.0) {
        lo = hi;
        step *= 2.0;
        hi = lo + step;
        if (++grow > 400) {
            std::ostringstream os;
            os << "mass root for C not bracketed: searched C in [" << lo << ", " << hi << "]";
            throw NumericalFailure(os.str());
        }
    }
    std::uintmax_t iters = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
    return std::abs(f(a)) < std::abs(f(b)) ? a : b;
}

double free_boundary_radius(const RadialDensity& rho, double m) {
    require(m > 1.0, "free_boundary_radius needs m > 1");
    const std::size_t k = rho.last_positive();
    if (k < 1 || k + 1 >= rho.size() || rho.value(k - 1) <= rho.value(k)) return rho.support_radius();
    const double a = std::pow(rho.value(k - 1), m - 1.0), b = std::pow(rho.value(k), m - 1.0);
    const double r0 = rho.grid().r(k - 1), r1 = rho.grid().r(k);
    return r1 + b * (r1 - r0) / (a - b);
}

nlohmann::json SteadyState::to_json() const {
    return {{"C", C},
            {"residual", residual},
            {"supportRadius", support_radius()},
            {"freeBoundary", boundary},
            {"laplacianAtZero", laplacian_at_zero},
            {"m", m},
            {"n", density.dimension()},
            {"mass", density.mass()},
            {"linf", density.linf()},
            {"iterations", iterations},
            {"newtonSteps", newton_steps},
            {"regrids", regrids},
            {"converged", converged},
            {"strictlyDecreasing", strictly_decreasing},
            {"nondegenerate", nondegenerate},
            {"touchesBoundary", touches_boundary},
            {"change", change},
            {"potential", potential}};
}

SteadyState solve_steady(const Potential& w, double m, int n, const RadialDensity& init, const SteadyOptions& opts) {
    require(m > 1.0, "solve_steady needs m > 1");
    require(init.dimension() == n, "solve_steady: initial density has the wrong dimension");
    require(init.mass() > 0.0, "solve_steady: initial density has no mass");
    require(opts.nodes >= 16, "solve_steady: too few nodes");
    require(opts.damping > 0.0 && opts.damping <= 1.0, "solve_steady: damping must lie in (0, 1]");

    double r_max = opts.r_max > 0.0 ? opts.r_max : 2.0 * init.support_radius();
    RadialGrid grid = RadialGrid::uniform(n, r_max, opts.nodes);
    std::vector<double> rho = init.resampled(grid).normalized().values();
    auto op = std::make_unique<InteractionOperator>(grid, w);
    std::optional<Eigen::MatrixXd> G;

    SteadyState out;
    out.m = m;
    out.potential = w.describe();
    double tau = opts.damping;
    double prev = std::numeric_limits<double>::infinity();
    bool newton_done = false;
    std::size_t it = 0;
    for (; it < opts.max_iter; ++it) {
        Evaluation e = evaluate(*op, rho, m);
        const double diff = l1(grid, rho, e.next);
        out.residual_history.push_back(e.residual);
        out.C = e.C;
        out.residual = e.residual;
        out.change = diff;
        if (e.residual < opts.tol_residual && diff < opts.tol_change) {
            out.converged = true;
            break;
        }
        if (e.residual > prev)
            tau = std::max(0.5 * tau, opts.min_damping);
        else
            tau = std::min(1.1 * tau, opts.damping);
        prev = e.residual;

        const bool stalled = it > 0 && it % 250 == 0;
        if (opts.newton && !newton_done && (e.residual < opts.newton_switch || stalled)) {
            if (!G) G = op->matrix();
            if (auto polished = newton_polish(*op, *G, rho, m, opts, out.newton_steps)) {
                rho = std::move(*polished);
                newton_done = e.residual < opts.newton_switch;
                prev = std::numeric_limits<double>::infinity();
                continue;
            }
            newton_done = e.residual < opts.newton_switch;
        }
        // the free boundary follows the positive part of the image; damping acts inside it
        for (std::size_t i = 0; i < rho.size(); ++i)
            rho[i] = e.next[i] > 0.0 ? (1.0 - tau) * rho[i] + tau * e.next[i] : 0.0;
        rho = RadialDensity(grid, rho).normalized().values();

        if (opts.regrid && out.regrids < opts.max_regrids) {
            const RadialDensity cur(grid, rho);
            const double R = cur.support_radius();
            if (rho.back() > 0.0 || R > 0.9 * r_max || R < 0.3 * r_max) {
                r_max = 2.0 * R;
                grid = RadialGrid::uniform(n, r_max, opts.nodes);
                rho = cur.resampled(grid).normalized().values();
                op = std::make_unique<InteractionOperator>(grid, w);
                G.reset();
                ++out.regrids;
                newton_done = false;
                prev = std::numeric_limits<double>::infinity();
            }
        }
    }
    out.iterations = it;
    out.density = RadialDensity(grid, rho);
    out.laplacian_at_zero = laplacian_at_origin(out.density);
    out.boundary = free_boundary_radius(out.density, m);
    out.nondegenerate = out.laplacian_at_zero < 0.0;
    out.strictly_decreasing = out.density.is_strictly_decreasing_on_support();
    out.touches_boundary = rho.back() > 0.0;
    return out;
}

nlohmann::json SteadyResidual::to_json() const {
    return {{"residual", sup},
            {"C", C},
            {"weakResidual", weak},
            {"weakByTest", weak_by_test},
            {"outsideViolation", outside},
            {"laplacianAtZero", laplacian_at_zero},
            {"strictlyDecreasing", strictly_decreasing}};
}

SteadyResidual verify_steady(const RadialDensity& rho, const Potential& w, double m) {
    require(m > 1.0, "verify_steady needs m > 1");
    require(rho.mass() > 0.0, "verify_steady: empty density");
    const RadialGrid& g = rho.grid();
    const int n = rho.dimension();
    const std::vector<double> phi = to_std(InteractionOperator(g, w).convolve(to_eigen(rho.values())));
    const double a = m / (m - 1.0);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (rho.value(i) <= 0.0) continue;
        const double xi = a * std::pow(rho.value(i), m - 1.0) + phi[i];
        lo = std::min(lo, xi);
        hi = std::max(hi, xi);
    }
    SteadyResidual out;
    out.C = 0.5 * (lo + hi);
    out.sup = 0.5 * (hi - lo);
    for (std::size_t i = 0; i < rho.size(); ++i)
        if (rho.value(i) <= 0.0) out.outside = std::max(out.outside, out.C - phi[i]);

    // weak form of grad rho^m = -rho grad W*rho against Gaussians psi of several widths
    const std::size_t M = g.size();
    std::vector<double> dphi(M, 0.0);
    for (std::size_t i = 1; i + 1 < M; ++i) dphi[i] = (phi[i + 1] - phi[i - 1]) / (g.r(i + 1) - g.r(i - 1));
    dphi[M - 1] = (phi[M - 1] - phi[M - 2]) / (g.r(M - 1) - g.r(M - 2));
    const double R = rho.support_radius();
    for (double frac : {0.25, 0.5, 1.0, 2.0}) {
        const double s2 = std::pow(frac * R, 2);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < M; ++i) {
            const double r = g.r(i), psi = std::exp(-r * r / (2 * s2));
            const double lap = psi * (r * r / (s2 * s2) - n / s2), dpsi = -r / s2 * psi;
            const double pm = std::pow(rho.value(i), m);
            const double t1 = -pm * lap, t2 = rho.value(i) * dphi[i] * dpsi;
            num += g.weight(i) * (t1 + t2);
            den += g.weight(i) * (std::abs(t1) + std::abs(t2));
        }
        const double v = den > 0.0 ? std::abs(num) / den : 0.0;
        out.weak_by_test.push_back(v);
        out.weak = std::max(out.weak, v);
    }
    out.laplacian_at_zero = laplacian_at_origin(rho);
    out.strictly_decreasing = rho.is_strictly_decreasing_on_support();
    return out;
}

nlohmann::json UniquenessScan::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& mbr : members) {
        nlohmann::json r = {{"index", mbr.index}, {"converged", mbr.converged}};
        if (mbr.converged) {
            r["cluster"] = mbr.cluster;
            r["residual"] = mbr.state.residual;
            r["supportRadius"] = mbr.state.support_radius();
            r["linf"] = mbr.state.density.linf();
        } else {
            r["error"] = mbr.error;
            if (!mbr.state.residual_history.empty()) r["residual"] = mbr.state.residual;
        }
        rows.push_back(r);
    }
    return {{"threshold", threshold}, {"clusters", clusters()}, {"failures", failures}, {"members", rows}};
}

UniquenessScan uniqueness_scan(const Potential& w, double m, int n, const std::vector<RadialDensity>& inits, double tol,
                               const SteadyOptions& opts, std::size_t jobs) {
    require(inits.size() >= 10, "uniqueness_scan needs at least 10 initializations");
    require(tol > 0.0, "uniqueness_scan: threshold must be positive");
    UniquenessScan scan;
    scan.threshold = tol;
    scan.members.resize(inits.size());
    parallel_for(
        inits.size(),
        [&](std::size_t i) {
            ScanMember& mbr = scan.members[i];
            mbr.index = i;
            try {
                mbr.state = solve_steady(w, m, n, inits[i], opts);
                mbr.converged = mbr.state.converged;
                if (!mbr.converged) {
                    std::ostringstream os;
                    os << "no convergence after " << mbr.state.iterations << " iterations, residual " << mbr.state.residual;
                    mbr.error = os.str();
                }
            } catch (const std::exception& ex) {
                mbr.error = ex.what();
            }
        },
        jobs);
    for (auto& mbr : scan.members) {
        if (!mbr.converged) {
            ++scan.failures;
            continue;
        }
        bool placed = false;
        for (std::size_t c = 0; c < scan.representatives.size() && !placed; ++c) {
            if (l1_distance(mbr.state.density, scan.members[scan.representatives[c]].state.density) < tol) {
                mbr.cluster = c;
                placed = true;
            }
        }
        if (!placed) {
            mbr.cluster = scan.representatives.size();
            scan.representatives.push_back(mbr.index);
        }
    }
    return scan;
}

std::vector<RadialDensity> diverse_initializations(int n, double r_max, std::size_t count, unsigned seed, std::size_t nodes) {
    require(count >= 10, "diverse_initializations: need at least 10 members");
    require(r_max > 0.0, "diverse_initializations: r_max must be positive");
    const RadialGrid g = RadialGrid::uniform(n, r_max, nodes);
    std::vector<RadialDensity> out{
        uniform_ball(g, 0.3 * r_max),         uniform_ball(g, 0.9 * r_max),       tent(g, 0.5 * r_max),
        power_cap(g, 0.15 * r_max, 2.0, 1.0), power_cap(g, 0.6 * r_max, 2.0, 3.0), power_cap(g, 0.95 * r_max, 8.0, 0.5),
        power_cap(g, 0.4 * r_max, 1.0, 2.0),  quadratic_cap(g, 0.7 * r_max),
    };
    std::mt19937_64 rng(seed);
    while (out.size() < count) out.push_back(random_decreasing(g, rng));
    return out;
}

}  // namespace aggsteady
