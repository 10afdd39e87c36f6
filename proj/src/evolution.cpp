#include "aggsteady/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

namespace aggsteady {

namespace {

using boost::math::quadrature::gauss;

// integral over [a, b] of f(r) * |S^{n-1}| r^{n-1}, 4-point Gauss
template <class F>
double shell_integral(int n, double a, double b, F&& f) {
    const double area = unit_sphere_area(n);
    return gauss<double, 4>::integrate([&](double r) { return f(r) * area * std::pow(r, n - 1); }, a, b);
}

double nodal_entropy(const RadialDensity& rho, double m) {
    double s = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) s += rho.grid().weight(i) * std::pow(rho.value(i), m);
    return s / (m - 1.0);
}

std::vector<double> clipped(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i], 0.0);
    return out;
}

double min_of(const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); }

double energy_scale(const Diagnostics& d) { return std::max(d.S + std::abs(d.I), 1e-300); }

}  // namespace

double power_norm(const RadialDensity& rho, double p) {
    require(p > 0.0 && std::isfinite(p), "power_norm needs 0 < p < inf");
    const RadialGrid& g = rho.grid();
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        const double a = g.r(i), b = g.r(i + 1), fa = rho.value(i), fb = rho.value(i + 1);
        if (fa == 0.0 && fb == 0.0) continue;
        s += shell_integral(rho.dimension(), a, b, [&](double r) {
            const double v = fa + (fb - fa) * (r - a) / (b - a);
            return std::pow(std::max(v, 0.0), p);
        });
    }
    return std::pow(s, 1.0 / p);
}

Evolver::Evolver(Potential w, double m, RadialDensity init, EvolutionOptions opts)
    : w_(std::move(w)), m_(m), rho_(std::move(init)), opts_(opts) {
    require(m > 1.0, "evolution needs m > 1");
    require(rho_.mass() > 0.0, "evolution: initial density has no mass");
    require(opts_.cfl > 0.0 && opts_.cfl <= 1.0, "evolution: cfl must lie in (0, 1]");
    op_ = std::make_shared<InteractionOperator>(rho_.grid(), w_);
}

std::vector<double> Evolver::potential_xi(const std::vector<double>& rho) const {
    const Eigen::VectorXd phi = op_->gradient(to_eigen(rho));
    const double a = m_ / (m_ - 1.0);
    std::vector<double> xi(rho.size());
    for (std::size_t i = 0; i < rho.size(); ++i) xi[i] = a * std::pow(std::max(rho[i], 0.0), m_ - 1.0) + phi[i];
    return xi;
}

std::vector<double> Evolver::rate(const std::vector<double>& rho, double* dissipation) const {
    const RadialGrid& g = rho_.grid();
    const std::size_t M = g.size();
    const std::vector<double> xi = potential_xi(rho);
    std::vector<double> flux(M, 0.0);  // flux[f] through the face between f and f+1; the last stays 0
    double D = 0.0;
    for (std::size_t f = 0; f + 1 < M; ++f) {
        const double dr = g.r(f + 1) - g.r(f), dxi = xi[f + 1] - xi[f];
        const double u = -dxi / dr;
        const double up = u > 0.0 ? rho[f] : rho[f + 1];
        flux[f] = g.face_area(f) * u * up;
        D += g.face_area(f) * std::max(up, 0.0) * dxi * dxi / dr;
    }
    std::vector<double> out(M);
    for (std::size_t i = 0; i < M; ++i) out[i] = -(flux[i] - (i > 0 ? flux[i - 1] : 0.0)) / g.weight(i);
    if (dissipation) *dissipation = D;
    return out;
}

double Evolver::admissible_dt() const {
    const RadialGrid& g = rho_.grid();
    const std::size_t M = g.size();
    const std::vector<double>& rho = rho_.values();
    const std::vector<double> xi = potential_xi(rho);
    std::vector<double> face_rate(M, 0.0);
    for (std::size_t f = 0; f + 1 < M; ++f) {
        const double dr = g.r(f + 1) - g.r(f);
        const double u = std::abs(xi[f + 1] - xi[f]) / dr;
        const double diff = m_ * std::pow(std::max(rho[f], rho[f + 1]), m_ - 1.0) / dr;
        face_rate[f] = g.face_area(f) * (u + diff);
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < M; ++i)
        worst = std::max(worst, (face_rate[i] + (i > 0 ? face_rate[i - 1] : 0.0)) / g.weight(i));
    return worst > 0.0 ? opts_.cfl / worst : std::numeric_limits<double>::infinity();
}

StepReport Evolver::step(double dt) {
    require(dt > 0.0 && std::isfinite(dt), "evolution step needs a positive finite dt");
    StepReport rep;
    const double limit = admissible_dt();
    while (dt > limit && rep.halvings < 200) {
        dt *= 0.5;
        ++rep.halvings;
    }
    const std::vector<double>& r0 = rho_.values();
    const double mass0 = rho_.mass();
    const double peak = rho_.linf();
    const std::size_t M = r0.size();
    for (int attempt = 0;; ++attempt) {
        // SSP-RK3 (Shu-Osher form)
        std::vector<double> k = rate(r0);
        std::vector<double> s1(M), s2(M), s3(M);
        for (std::size_t i = 0; i < M; ++i) s1[i] = r0[i] + dt * k[i];
        k = rate(s1);
        for (std::size_t i = 0; i < M; ++i) s2[i] = 0.75 * r0[i] + 0.25 * (s1[i] + dt * k[i]);
        k = rate(s2);
        for (std::size_t i = 0; i < M; ++i) s3[i] = r0[i] / 3.0 + 2.0 / 3.0 * (s2[i] + dt * k[i]);
        const double floor = -opts_.clip_tol * peak;
        if (min_of(s1) >= floor && min_of(s2) >= floor && min_of(s3) >= floor) {
            double signed_mass = 0.0;
            for (std::size_t i = 0; i < M; ++i) signed_mass += rho_.grid().weight(i) * s3[i];
            rep.mass_drift = std::abs(signed_mass - mass0) / mass0;
            RadialDensity next(rho_.grid(), clipped(s3));
            rep.clipped = std::abs(next.mass() - signed_mass) / mass0;
            if (next.mass() != mass0) next = next.scaled(mass0 / next.mass());
            rho_ = std::move(next);
            t_ += dt;
            rep.dt = dt;
            rep.monotone = rho_.is_nonincreasing(1e-10);
            return rep;
        }
        if (attempt >= opts_.max_halvings) {
            std::ostringstream os;
            os << "evolution: negative density beyond the clip tolerance at t = " << t_ << " after " << attempt
               << " halvings (dt = " << dt << ")";
            throw NumericalFailure(os.str());
        }
        dt *= 0.5;
        ++rep.halvings;
    }
}

void Evolver::regrid(double r_max) {
    require(r_max > 0.0, "regrid needs a positive radius");
    const RadialGrid& g = rho_.grid();
    const RadialGrid wider = RadialGrid::uniform(g.dimension(), r_max, g.size());
    const double mass = rho_.mass();
    RadialDensity next = rho_.resampled(wider);
    rho_ = next.scaled(mass / next.mass());
    op_ = std::make_shared<InteractionOperator>(rho_.grid(), w_);
    ++expansions_;
}

Diagnostics Evolver::diagnostics() const {
    Diagnostics d;
    d.t = t_;
    d.mass = rho_.mass();
    d.S = nodal_entropy(rho_, m_);
    d.I = op_->energy(to_eigen(rho_.values()));
    d.E = d.S + d.I;
    rate(rho_.values(), &d.D);
    d.norm3m = power_norm(rho_, 3.0 - m_);
    d.first_moment = moment(rho_, 1.0);
    d.linf = rho_.linf();
    d.support = rho_.support_radius();
    return d;
}

EvolutionState step(const EvolutionState& state, double dt, const Potential& w, double m, StepReport* report) {
    Evolver ev(w, m, state.density);
    const StepReport rep = ev.step(dt);
    if (report) *report = rep;
    EvolutionState out;
    out.density = ev.density();
    out.t = state.t + rep.dt;
    out.diag = ev.diagnostics();
    out.diag.t = out.t;
    return out;
}

nlohmann::json Trajectory::summary() const {
    return {{"m", m},
            {"n", n},
            {"potential", potential},
            {"steps", steps},
            {"halvings", halvings},
            {"expansions", expansions},
            {"monotonicityViolations", monotonicity_violations},
            {"energyIncreases", energy_increases},
            {"maxEnergyIncrease", max_energy_increase},
            {"maxMassDrift", max_mass_drift},
            {"dissipationIntegral", dissipation_integral},
            {"E0", E0},
            {"Efinal", E_final},
            {"ediOk", edi_ok},
            {"regridEnergyChange", regrid_energy_change},
            {"steady", steady},
            {"tSteady", t_steady},
            {"upcrossing", upcrossing},
            {"maxNorm3m", max_norm3m},
            {"stopReason", stop_reason},
            {"tFinal", snapshots.empty() ? 0.0 : snapshots.back().t}};
}

Trajectory simulate(const Potential& w, double m, const RadialDensity& init, const SimulationOptions& opts) {
    require(opts.t_max > 0.0, "simulate needs t_max > 0");
    require(opts.snapshots >= 2, "simulate needs at least two snapshots");
    Evolver ev(w, m, init, opts.step);
    Trajectory tr;
    tr.m = m;
    tr.n = init.dimension();
    tr.potential = w.describe();
    Diagnostics cur = ev.diagnostics();
    tr.E0 = cur.E;
    tr.series.push_back(cur);
    tr.snapshots.push_back({ev.density(), 0.0, cur});
    tr.max_norm3m = cur.norm3m;
    if (cur.norm3m >= opts.delta0) tr.upcrossing = true;

    std::size_t next_snap = 1;
    auto snap_time = [&](std::size_t k) { return opts.t_max * static_cast<double>(k) / (opts.snapshots - 1); };
    tr.stop_reason = "t_max";
    while (next_snap < opts.snapshots) {
        if (tr.steps >= opts.max_steps) {
            tr.stop_reason = "max_steps";
            break;
        }
        if (opts.expand && ev.density().support_radius() > 0.9 * ev.density().grid().r_max()) {
            ev.expand();
            tr.regrid_energy_change += ev.diagnostics().E - cur.E;
            cur = ev.diagnostics();
        } else if (opts.shrink && ev.density().support_radius() < 0.25 * ev.density().grid().r_max()) {
            ev.regrid(2.0 * ev.density().support_radius());
            tr.regrid_energy_change += ev.diagnostics().E - cur.E;
            cur = ev.diagnostics();
        }
        const double target = snap_time(next_snap);
        double dt = std::min({ev.admissible_dt(), opts.dt_max, target - ev.time()});
        const bool lands = dt >= target - ev.time();
        const StepReport rep = ev.step(dt);
        ++tr.steps;
        tr.halvings += rep.halvings;
        tr.max_mass_drift = std::max(tr.max_mass_drift, rep.mass_drift);
        if (!rep.monotone) ++tr.monotonicity_violations;
        Diagnostics next = ev.diagnostics();
        const bool reached = (lands && rep.halvings == 0) || ev.time() >= target * (1 - 1e-14);
        const double rise = (next.E - cur.E) / std::max(std::abs(cur.E), 1e-300);
        if (rise > 1e-8) ++tr.energy_increases;
        tr.max_energy_increase = std::max(tr.max_energy_increase, rise);
        tr.dissipation_integral += 0.5 * (cur.D + next.D) * rep.dt;
        tr.max_norm3m = std::max(tr.max_norm3m, next.norm3m);
        cur = next;
        if (tr.steps % std::max<std::size_t>(opts.series_every, 1) == 0) tr.series.push_back(cur);
        if (cur.norm3m >= opts.delta0) {
            tr.upcrossing = true;
            if (opts.stop_on_upcrossing) {
                tr.snapshots.push_back({ev.density(), ev.time(), cur});
                tr.stop_reason = "upcrossing";
                break;
            }
        }
        if (reached) {
            tr.snapshots.push_back({ev.density(), ev.time(), cur});
            ++next_snap;
            const auto& a = tr.snapshots[tr.snapshots.size() - 2];
            const auto& b = tr.snapshots.back();
            const double dT = b.t - a.t;
            const double rel = cur.D * dT / energy_scale(cur);
            if (!tr.steady && rel < opts.steady_dissipation && l1_distance(a.density, b.density) < opts.steady_l1) {
                tr.steady = true;
                tr.t_steady = b.t;
                if (opts.stop_when_steady) {
                    tr.stop_reason = "steady";
                    break;
                }
            }
        }
    }
    tr.expansions = ev.expansions();
    tr.E_final = cur.E;
    tr.edi_ok = tr.E_final + tr.dissipation_integral <= tr.E0 + tr.regrid_energy_change + 1e-6 * std::abs(tr.E0);
    return tr;
}

std::string diagnostics_csv(const std::vector<Diagnostics>& rows) {
    std::ostringstream os;
    os.precision(17);
    os << "t,mass,S,I,E,D,norm3m,firstMoment,linf,supportRadius\n";
    for (const auto& d : rows)
        os << d.t << ',' << d.mass << ',' << d.S << ',' << d.I << ',' << d.E << ',' << d.D << ',' << d.norm3m << ','
           << d.first_moment << ',' << d.linf << ',' << d.support << '\n';
    return os.str();
}

double gagliardo_nirenberg_theta(int n, double m) {
    require(m > 1.0 && m < 2.0, "theta is defined for 1 < m < 2");
    return 2.0 * n * (2.0 - m) / ((3.0 - m) * (2.0 + n));
}

nlohmann::json FlatnessReport::to_json() const {
    nlohmann::json rows_j = nlohmann::json::array();
    for (const auto& r : rows)
        rows_j.push_back({{"t", r.t}, {"norm", r.norm}, {"grad2", r.grad2}, {"I", r.I}, {"I1", r.I1}, {"I2", r.I2},
                          {"rhs", r.rhs}, {"direct", r.direct}});
    return {{"theta", theta},
            {"delta0", delta0},
            {"supNorm", sup_norm},
            {"upcrossing", upcrossing},
            {"maxBudgetMismatch", max_budget_mismatch},
            {"rows", rows_j}};
}

FlatnessReport track_flatness(const Trajectory& traj, double m, const Potential& w, const ModifiedPotential* split,
                              double delta0) {
    require(m > 1.0 && m < 2.0, "track_flatness needs 1 < m < 2");
    require(!traj.snapshots.empty(), "track_flatness: empty trajectory");
    FlatnessReport rep;
    rep.theta = gagliardo_nirenberg_theta(traj.n, m);
    rep.delta0 = delta0;
    const double p = 3.0 - m;
    for (const auto& snap : traj.snapshots) {
        const RadialDensity& rho = snap.density;
        const RadialGrid& g = rho.grid();
        const int n = rho.dimension();
        auto conv = [&](const Potential& pot) {
            const Eigen::VectorXd v = InteractionOperator(g, pot).convolve(to_eigen(rho.values()));
            return std::vector<double>(v.data(), v.data() + v.size());
        };
        const std::vector<double> phi = conv(w);
        std::vector<double> phi1, phi2;
        if (split) {
            phi1 = conv(split->w1());
            phi2 = conv(split->w2());
        }
        FlatnessRow row;
        row.t = snap.t;
        for (std::size_t i = 0; i + 1 < g.size(); ++i) {
            const double a = g.r(i), b = g.r(i + 1), fa = rho.value(i), fb = rho.value(i + 1);
            if (fa == 0.0 && fb == 0.0) continue;
            const double h = b - a, slope = (fb - fa) / h;
            auto lin = [&](double r) { return std::max(fa + slope * (r - a), 0.0); };
            const double vol = shell_integral(n, a, b, [](double) { return 1.0; });
            const double weight = shell_integral(n, a, b, [&](double r) { return std::pow(lin(r), 2.0 - m); });
            row.integral += shell_integral(n, a, b, [&](double r) { return std::pow(lin(r), p); });
            row.grad2 += slope * slope * vol;
            row.I += slope * (phi[i + 1] - phi[i]) / h * weight;
            if (split) {
                row.I1 += slope * (phi1[i + 1] - phi1[i]) / h * weight;
                row.I2 += slope * (phi2[i + 1] - phi2[i]) / h * weight;
            }
        }
        row.norm = std::pow(row.integral, 1.0 / p);
        row.rhs = p * (-(2.0 - m) * m * row.grad2 - (2.0 - m) * row.I);
        rep.rows.push_back(row);
        rep.sup_norm = std::max(rep.sup_norm, row.norm);
        if (row.norm >= delta0) rep.upcrossing = true;
    }
    const std::size_t K = rep.rows.size();
    double scale = 0.0, worst = 0.0;
    for (std::size_t k = 0; k < K && K > 1; ++k) {
        const std::size_t lo = k == 0 ? 0 : k - 1, hi = k + 1 == K ? K - 1 : k + 1;
        rep.rows[k].direct = (rep.rows[hi].integral - rep.rows[lo].integral) / (rep.rows[hi].t - rep.rows[lo].t);
        scale = std::max(scale, std::abs(rep.rows[k].rhs));
        worst = std::max(worst, std::abs(rep.rows[k].direct - rep.rows[k].rhs));
    }
    rep.max_budget_mismatch = scale > 0.0 ? worst / scale : 0.0;
    return rep;
}

nlohmann::json ExtractResult::to_json() const {
    nlohmann::json j = {{"extracted", extracted},
                        {"diagnostic", diagnostic},
                        {"tailDissipation", tail_dissipation},
                        {"candidateDistance", candidate_distance},
                        {"firstMoment", first_moment}};
    j["firstMomentBound"] = std::isfinite(first_moment_bound) ? nlohmann::json(first_moment_bound) : nlohmann::json();
    if (extracted || state.iterations > 0) {
        j["state"] = state.to_json();
        j["verify"] = check.to_json();
    }
    return j;
}

ExtractResult extract_steady(const Trajectory& traj, const Potential& w, double m, const ExtractOptions& opts,
                             const ModifiedPotential* forged) {
    require(opts.windows >= 1, "extract_steady needs at least one window");
    require(traj.snapshots.size() >= opts.windows + 1, "extract_steady: trajectory shorter than the window count");
    ExtractResult out;
    const auto& last = traj.snapshots.back();
    const auto& first = traj.snapshots[traj.snapshots.size() - 1 - opts.windows];
    out.tail_dissipation = last.diag.D * (last.t - first.t) / energy_scale(last.diag);
    if (out.tail_dissipation > opts.dissipation_tol) {
        std::ostringstream os;
        os << "no extraction: tail dissipation " << out.tail_dissipation << " exceeds " << opts.dissipation_tol;
        out.diagnostic = os.str();
        return out;
    }
    const RadialGrid& g = last.density.grid();
    std::vector<double> avg(g.size(), 0.0);
    for (std::size_t k = traj.snapshots.size() - opts.windows; k < traj.snapshots.size(); ++k) {
        const RadialDensity on = traj.snapshots[k].density.resampled(g);
        for (std::size_t i = 0; i < g.size(); ++i) avg[i] += on.value(i) / static_cast<double>(opts.windows);
    }
    out.candidate = RadialDensity(g, avg).normalized();
    out.state = solve_steady(w, m, g.dimension(), out.candidate, opts.solver);
    out.check = verify_steady(out.state.density, w, m);
    out.candidate_distance = l1_distance(out.candidate, out.state.density);
    out.first_moment = moment(out.state.density, 1.0);
    if (forged) {
        const double R = forged->R(), eps = forged->epsilon();
        out.first_moment_bound = opts.moment_constant / eps * (3 * R * eps - forged->w1_at_3R() + 2 * traj.E0);
    }
    if (!out.state.converged) {
        out.diagnostic = "polishing did not converge (residual " + std::to_string(out.state.residual) + ")";
    } else if (out.state.residual >= opts.residual_tol) {
        out.diagnostic = "residual above tolerance";
    } else {
        out.extracted = true;
        out.diagnostic = "ok";
    }
    return out;
}

}  // namespace aggsteady
