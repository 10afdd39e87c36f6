#include "aggsteady/forge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "aggsteady/error.hpp"
#include "aggsteady/families.hpp"
#include "aggsteady/parallel.hpp"
#include "aggsteady/radial_core.hpp"

namespace aggsteady {

namespace {

// A_s^2 = s^{1/s} / s'^{1/s'}, with the limits A_1 = A_inf = 1
double babenko_factor(double s) {
    if (s == 1.0 || std::isinf(s)) return 1.0;
    const double sp = s / (s - 1.0);
    return std::sqrt(std::pow(s, 1.0 / s) / std::pow(sp, 1.0 / sp));
}

}  // namespace

double sharp_young_constant(int n, double p, double q, double r) {
    require(n >= 1, "sharp_young_constant needs n >= 1");
    require(p >= 1.0 && q >= 1.0 && r >= 1.0, "sharp_young_constant needs exponents >= 1");
    require(std::abs(1 / p + 1 / q + 1 / r - 2.0) < 1e-12, "sharp_young_constant needs 1/p + 1/q + 1/r = 2");
    return std::pow(babenko_factor(p) * babenko_factor(q) * babenko_factor(r), n);
}

double radial_lq_norm(const Potential& f, int n, double q, double b) {
    require(q > 0.0 && b > 0.0, "radial_lq_norm needs q > 0 and b > 0");
    boost::math::quadrature::tanh_sinh<double> ts;
    auto g = [&](double r) { return r > 0.0 ? std::pow(std::abs(f.value(r)), q) * std::pow(r, n - 1) : 0.0; };
    // split where a forged potential changes formula
    const double cuts[] = {0.0, b / 3, 2 * b / 3, b};
    double total = 0.0;
    for (int k = 0; k < 3; ++k) total += ts.integrate(g, cuts[k], cuts[k + 1]);
    return std::pow(unit_sphere_area(n) * total, 1.0 / q);
}

nlohmann::json Delta0Estimate::to_json() const {
    return {{"young", young}, {"w1Norm", w1_norm}, {"C", C}, {"delta0", delta0}, {"exponent", exponent}};
}

Delta0Estimate estimate_delta0(const ModifiedPotential& forged, double m, int n, double a) {
    require(m > 1.0 && m < 2.0, "estimate_delta0 needs 1 < m < 2");
    require(a > 0.0, "estimate_delta0 needs a > 0");
    Delta0Estimate d;
    const double q = 3.0 - m;
    const double p = 2.0 * (3.0 - m) / (m - 1.0);
    // ||w1 * grad rho||_p <= young ||w1||_q ||grad rho||_2, by duality against L^{p'}
    d.young = sharp_young_constant(n, q, 2.0, p / (p - 1.0));
    d.w1_norm = radial_lq_norm(forged.w1(), n, q, 3.0 * forged.R());
    d.C = d.young * d.w1_norm;
    for (d.exponent = 1; d.exponent < 1000; ++d.exponent) {
        d.delta0 = std::ldexp(1.0, -d.exponent);
        if (d.delta0 < a && d.C * std::pow(d.delta0, 2.0 - m) < m / 4) return d;
    }
    throw NumericalFailure("estimate_delta0: no dyadic threshold found");
}

nlohmann::json EpsilonTrial::to_json() const {
    return {{"j", j},           {"epsilon", epsilon}, {"accepted", accepted}, {"supNorm", sup_norm},
            {"tEnd", t_end},    {"steps", steps},     {"stopReason", stop_reason}};
}

nlohmann::json ForgeLevel::to_json() const {
    nlohmann::json tr = nlohmann::json::array();
    for (const auto& t : trials) tr.push_back(t.to_json());
    return {{"level", level},
            {"R", R},
            {"a", a},
            {"delta0", delta.to_json()},
            {"trials", tr},
            {"searched", searched},
            {"epsilon", epsilon},
            {"j", j},
            {"initNorm", init_norm},
            {"trajectory", trajectory},
            {"flatness", {{"theta", flatness.theta}, {"supNorm", flatness.sup_norm}, {"upcrossing", flatness.upcrossing},
                          {"budgetMismatch", flatness.max_budget_mismatch}}},
            {"extraction", extraction.to_json()},
            {"norm3m", norm3m},
            {"supportRadius", support},
            {"residual", residual},
            {"previousResiduals", previous_residuals},
            {"halvesPrevious", halves_previous},
            {"supportGrows", support_grows},
            {"ok", ok},
            {"diagnostic", diagnostic}};
}

nlohmann::json ForgeReport::to_json() const {
    nlohmann::json lv = nlohmann::json::array();
    for (const auto& l : levels) lv.push_back(l.to_json());
    nlohmann::json pots = nlohmann::json::array();
    for (const auto& p : potentials) pots.push_back({{"base", p.base().to_json()}, {"R", p.R()}, {"epsilon", p.epsilon()}});
    return {{"m", m},
            {"n", n},
            {"base", base},
            {"baseState", base_state.to_json()},
            {"baseNorm", base_norm},
            {"levels", lv},
            {"potentials", pots},
            {"ok", ok}};
}

std::string ForgeReport::csv() const {
    std::ostringstream os;
    os.precision(12);
    os << "level,R,epsilon,norm3m,supportRadius,residual\n";
    os << 0 << ',' << 0 << ',' << 0 << ',' << base_norm << ',' << base_state.boundary << ','
       << base_state.residual << '\n';
    for (const auto& l : levels) {
        if (!l.ok) break;
        os << l.level << ',' << l.R << ',' << l.epsilon << ',' << l.norm3m << ',' << l.support << ',' << l.residual << '\n';
    }
    return os.str();
}

namespace {

struct TrialRun {
    EpsilonTrial trial;
    Trajectory traj;
};

TrialRun run_trial(const Potential& previous, double R, int j, double delta0, const RadialDensity& init, double L0,
                   double rho0, const ForgeOptions& opts) {
    TrialRun out;
    out.trial.j = j;
    out.trial.epsilon = std::ldexp(1.0, -j);
    const ModifiedPotential forged = forge_tail(previous, R, out.trial.epsilon);
    SimulationOptions so;
    const double diffusion_time = L0 * L0 / (opts.m * std::pow(rho0, opts.m - 1));
    so.t_max = std::min(opts.drift_horizon * L0 / out.trial.epsilon, opts.diffusion_horizon * diffusion_time);
    so.snapshots = opts.snapshots;
    so.max_steps = opts.max_steps;
    so.series_every = 64;
    so.shrink = true;
    so.delta0 = delta0;
    so.stop_on_upcrossing = true;
    out.traj = simulate(forged.potential(), opts.m, init, so);
    out.trial.sup_norm = out.traj.max_norm3m;
    out.trial.t_end = out.traj.snapshots.back().t;
    out.trial.steps = out.traj.steps;
    out.trial.stop_reason = out.traj.stop_reason;
    out.trial.accepted = !out.traj.upcrossing && out.traj.stop_reason == "t_max";
    return out;
}

}  // namespace

ForgeReport forge_iterate(const Potential& w0, const ForgeOptions& opts) {
    require(opts.m > 1.0 && opts.m < 2.0, "forge_iterate needs 1 < m < 2");
    require(opts.n >= 1, "forge_iterate needs n >= 1");
    require(opts.j_min >= 1 && opts.j_max > opts.j_min, "forge_iterate needs 1 <= j_min < j_max");
    require(opts.init_fraction > 0.0 && opts.init_fraction < 1.0, "forge_iterate needs init_fraction in (0, 1)");
    const double m = opts.m, q = 3.0 - m;
    ForgeReport rep;
    rep.m = m;
    rep.n = opts.n;
    rep.base = w0.describe();
    rep.base_state = solve_steady(w0, m, opts.n, tent(RadialGrid::uniform(opts.n, 4.0, 1024), 1.0), opts.solver);
    rep.base_norm = power_norm(rep.base_state.density, q);
    if (!rep.base_state.converged) {
        ForgeLevel fail;
        fail.diagnostic = "base steady state did not converge";
        rep.levels.push_back(fail);
        return rep;
    }
    std::vector<SteadyState> states{rep.base_state};
    std::vector<double> norms{rep.base_norm};
    Potential current = w0;

    for (std::size_t l = 1; l <= opts.levels; ++l) {
        ForgeLevel lv;
        lv.level = l;
        double R = std::max(opts.R0, std::ldexp(1.0, static_cast<int>(l)));
        for (const auto& s : states) R = std::max({R, s.boundary, s.support_radius()});
        lv.R = R;
        lv.a = opts.a > 0.0 ? opts.a : 0.5 * *std::min_element(norms.begin(), norms.end());
        lv.delta = estimate_delta0(forge_tail(current, R, 0.5), m, opts.n, lv.a);
        const double delta0 = lv.delta.delta0;

        // flat ball with ||rho0||_q = init_fraction * delta0: c_n L^n rho0^q = (init_fraction delta0)^q, c_n L^n rho0 = 1
        lv.init_norm = opts.init_fraction * delta0;
        const double cn = unit_ball_volume(opts.n);
        const double volume = std::pow(lv.init_norm, q / (1.0 - q));
        const double L0 = std::pow(volume / cn, 1.0 / opts.n);
        const double rho0 = 1.0 / volume;
        const RadialDensity init = uniform_ball(RadialGrid::uniform(opts.n, 2.0 * L0, opts.nodes), L0);

        // k-section on j: the accepted set is assumed to be an upper interval of j and checked at the ends
        std::map<int, TrialRun> runs;
        auto evaluate = [&](const std::vector<int>& js) {
            std::vector<TrialRun> out(js.size());
            parallel_for(
                js.size(), [&](std::size_t i) { out[i] = run_trial(current, R, js[i], delta0, init, L0, rho0, opts); },
                opts.jobs);
            for (std::size_t i = 0; i < js.size(); ++i) {
                lv.trials.push_back(out[i].trial);
                // keep only trajectories that may still be selected
                if (!out[i].trial.accepted) out[i].traj = Trajectory{};
                runs[js[i]] = std::move(out[i]);
            }
        };
        int lo = opts.j_min, hi = opts.j_max;
        evaluate({lo, hi});
        if (!runs[hi].trial.accepted) {
            lv.diagnostic = "eps search failure: flatness not maintained even at eps = 2^-" + std::to_string(hi);
            rep.levels.push_back(lv);
            return rep;
        }
        if (runs[lo].trial.accepted) {
            hi = lo;
        } else {
            const std::size_t per_round = std::max<std::size_t>(opts.jobs, 1);
            while (hi - lo > 1) {
                std::vector<int> js;
                for (std::size_t k = 1; k <= per_round; ++k) {
                    const int j = lo + static_cast<int>(std::llround(static_cast<double>(hi - lo) * k / (per_round + 1)));
                    if (j > lo && j < hi && (js.empty() || j != js.back())) js.push_back(j);
                }
                evaluate(js);
                for (int j : js) {
                    if (runs[j].trial.accepted) {
                        hi = std::min(hi, j);
                    }
                }
                for (int j : js)
                    if (j < hi && !runs[j].trial.accepted) lo = std::max(lo, j);
                for (auto& [j, r] : runs)
                    if (j != hi) r.traj = Trajectory{};
            }
            lv.searched = true;
        }
        lv.j = hi;
        lv.epsilon = std::ldexp(1.0, -hi);
        const Trajectory& traj = runs[hi].traj;
        const ModifiedPotential forged = forge_tail(current, R, lv.epsilon);
        lv.trajectory = traj.summary();
        lv.flatness = track_flatness(traj, m, forged.potential(), &forged, delta0);
        lv.extraction = extract_steady(traj, forged.potential(), m, opts.extract, &forged);
        if (!lv.extraction.extracted) {
            lv.diagnostic = "extraction failed: " + lv.extraction.diagnostic;
            rep.levels.push_back(lv);
            return rep;
        }
        lv.state = lv.extraction.state;
        lv.norm3m = power_norm(lv.state.density, q);
        lv.support = lv.state.boundary;
        lv.residual = lv.extraction.check.sup;
        lv.halves_previous = true;
        for (double nrm : norms) lv.halves_previous = lv.halves_previous && lv.norm3m <= 0.5 * nrm;
        lv.support_grows = true;
        for (const auto& s : states) lv.support_grows = lv.support_grows && lv.support > s.boundary;
        double worst_previous = 0.0;
        for (const auto& s : states) {
            lv.previous_residuals.push_back(verify_steady(s.density, forged.potential(), m).sup);
            worst_previous = std::max(worst_previous, lv.previous_residuals.back());
        }
        std::ostringstream why;
        if (lv.residual >= opts.residual_tol) why << "residual " << lv.residual << " above tolerance; ";
        if (lv.norm3m > delta0) why << "norm " << lv.norm3m << " above delta0; ";
        if (traj.max_norm3m >= delta0) why << "trajectory reached delta0; ";
        if (!lv.halves_previous) why << "norm not at most half of every earlier state; ";
        if (!lv.support_grows) why << "support did not grow; ";
        if (worst_previous >= opts.residual_tol) why << "an earlier state is no longer steady (" << worst_previous << "); ";
        lv.diagnostic = why.str().empty() ? "ok" : why.str();
        lv.ok = lv.diagnostic == "ok";
        rep.levels.push_back(lv);
        rep.potentials.push_back(forged);
        if (!lv.ok) return rep;
        states.push_back(lv.state);
        norms.push_back(lv.norm3m);
        current = forged.potential();
    }
    rep.ok = true;
    return rep;
}

}  // namespace aggsteady
