#include "aggsteady/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "aggsteady/energy.hpp"
#include "aggsteady/error.hpp"
#include "aggsteady/evolution.hpp"
#include "aggsteady/families.hpp"
#include "aggsteady/forge.hpp"
#include "aggsteady/geometry.hpp"
#include "aggsteady/height_function.hpp"
#include "aggsteady/interpolation.hpp"
#include "aggsteady/parallel.hpp"
#include "aggsteady/steady_state.hpp"

#ifndef AGGSTEADY_BUILD_ID
#define AGGSTEADY_BUILD_ID "unknown"
#endif

namespace aggsteady {

namespace fs = std::filesystem;
using nlohmann::json;

std::string build_id() { return AGGSTEADY_BUILD_ID; }

const std::vector<std::string> kCommands{"height", "interpolate", "energy", "certify", "steady",
                                         "scan",   "evolve",      "forge",  "geometry"};

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// NaN and infinities have no JSON form
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    require(static_cast<bool>(out), "cannot write " + path.string());
    out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

template <class T>
T field(const json& j, const std::string& key, const T& fallback, const std::string& path) {
    if (!j.is_object() || !j.contains(key) || j[key].is_null()) return fallback;
    try {
        return j[key].get<T>();
    } catch (const json::exception&) {
        throw InvalidInput(path + "." + key + ": wrong type");
    }
}

Potential potential_of(const json& spec, const std::string& path) {
    try {
        if (spec.is_string()) {
            const std::string text = spec.get<std::string>();
            if (text.size() > 5 && text.substr(text.size() - 5) == ".json") {
                // a file holding the potential object
                std::ifstream in(text);
                if (!in) throw InvalidInput("cannot open " + text);
                json j;
                try {
                    j = json::parse(in);
                } catch (const json::exception& e) {
                    throw InvalidInput(text + ": " + e.what());
                }
                return Potential::from_json(j);
            }
            return Potential::parse(text);
        }
        if (spec.is_object()) return Potential::from_json(spec);
    } catch (const InvalidInput& e) {
        throw InvalidInput(path + ": " + e.what());
    }
    throw InvalidInput(path + ": expected a potential object or shorthand string");
}

// "tent:radius=2,nodes=512" -> {"family": "tent", "radius": 2, "nodes": 512}
json density_shorthand(const std::string& text, const std::string& path) {
    json j;
    const auto colon = text.find(':');
    j["family"] = text.substr(0, colon);
    if (colon == std::string::npos) return j;
    std::stringstream ss(text.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw InvalidInput(path + ": expected key=value in '" + item + "'");
        try {
            j[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw InvalidInput(path + "." + item.substr(0, eq) + ": not a number");
        }
    }
    return j;
}

// unit-mass quadratic cap of W = |x|^2/2 at m = 2: rho = (L^2 - r^2)/4
double unit_cap_radius(int n) { return std::pow(2.0 * (n + 2) / unit_ball_volume(n), 1.0 / (n + 2)); }

Check make_check(std::string name, bool pass, double value, double threshold, std::string detail = {}) {
    return Check{std::move(name), pass, value, threshold, std::move(detail)};
}

Check below(std::string name, double value, double threshold, std::string detail = {}) {
    return make_check(std::move(name), value < threshold, value, threshold, std::move(detail));
}

struct Context {
    const Scenario& s;
    RunResult& r;
    fs::path dir;
    std::size_t jobs;
    Potential w;
    void artifact(const std::string& file) { r.artifacts.push_back(file); }
};

RadialDensity first_density(Context& c, const char* fallback) {
    const json spec = c.s.init.is_null() ? json(fallback) : c.s.init;
    return make_density(spec, c.s.n, c.s.seed, c.s.m, c.w, "scenario.init");
}

RadialDensity second_density(Context& c, const char* fallback) {
    const json spec = c.s.init1.is_null() ? json(fallback) : c.s.init1;
    return make_density(spec, c.s.n, c.s.seed + 1, c.s.m, c.w, "scenario.init1");
}

// ---------------------------------------------------------------- height
void run_height(Context& c) {
    const json& o = c.s.options;
    const RadialDensity rho = first_density(c, "tent");
    const std::size_t K = field<std::size_t>(o, "massNodes", 4096, "scenario.options");
    const HeightFunction h = height_from_density(rho, chebyshev_mass_grid(K));
    write_height_csv((c.dir / "height.csv").string(), h);
    c.artifact("height.csv");
    c.artifact("height.json");
    const RadialDensity back = density_from_height(h, rho.grid());
    const double rt = l1_distance(back, rho.normalized());
    double identity = 0.0;
    const double cn = unit_ball_volume(rho.dimension());
    for (std::size_t j = 0; j < h.size(); ++j) {
        const double r = level_set_radius(rho.normalized(), h.h()[j]);
        if (r <= 0.0) continue;
        identity = std::max(identity, std::abs(h.hprime()[j] * cn * std::pow(r, rho.dimension()) - 1.0));
    }
    c.r.checks.push_back(below("roundTripL1", rt, 1e-6));
    c.r.checks.push_back(below("hprimeIdentity", identity, 1e-8, "h' c_n r(h)^n - 1 over the mass grid"));
    c.r.results["roundTripL1"] = rt;
    c.r.results["hprimeIdentity"] = identity;
    c.r.results["top"] = h.top();
    c.r.results["supportRadius"] = h.support_radius();
    if (field<bool>(o, "singularity", false, "scenario.options")) {
        // h'(s) ~ (1-s)^{-p} near the top: fit over level sets of radius in [lo, hi] x support
        const double lo = field<double>(o, "fitFrom", 0.01, "scenario.options");
        const double hi = field<double>(o, "fitTo", 0.5, "scenario.options");
        const double R = h.support_radius();
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        std::size_t k = 0;
        for (std::size_t j = 0; j < h.size(); ++j) {
            const double r = std::pow(1.0 / (cn * h.hprime()[j]), 1.0 / rho.dimension());
            if (r < lo * R || r > hi * R) continue;
            const double x = -std::log(1.0 - h.s()[j]), y = std::log(h.hprime()[j]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++k;
        }
        const double p = k >= 2 ? (k * sxy - sx * sy) / (k * sxx - sx * sx) : std::nan("");
        const double expect = static_cast<double>(rho.dimension()) / (rho.dimension() + 2);
        const double rel = std::abs(p / expect - 1.0);
        c.r.results["singularity"] = {{"exponent", num(p)}, {"expected", expect}, {"points", k}};
        c.r.checks.push_back(make_check("singularityExponent", k >= 10 && rel < 0.1, num(rel).is_null() ? 1.0 : rel, 0.1,
                                        "relative error of the fitted exponent against n/(n+2)"));
    }
}

// ---------------------------------------------------------------- interpolate
std::vector<double> time_list(const json& o, std::size_t fallback_points) {
    std::vector<double> ts;
    if (o.contains("times")) {
        ts = field<std::vector<double>>(o, "times", {}, "scenario.options");
        for (double t : ts)
            if (!(t >= 0.0 && t <= 1.0)) throw InvalidInput("scenario.options.times: every t must lie in [0, 1]");
        if (ts.empty()) throw InvalidInput("scenario.options.times: empty");
        return ts;
    }
    const std::size_t T = field<std::size_t>(o, "tgrid", fallback_points, "scenario.options");
    require(T >= 2, "scenario.options.tgrid: need at least 2 points");
    for (std::size_t i = 0; i < T; ++i) ts.push_back(static_cast<double>(i) / (T - 1));
    return ts;
}

void run_interpolate(Context& c) {
    const RadialDensity a = first_density(c, "tent");
    const RadialDensity b = second_density(c, "quadratic_cap");
    const auto curve = InterpolationCurve::from_densities(a, b);
    const std::vector<double> ts = time_list(c.s.options, 11);
    const std::size_t nodes = field<std::size_t>(c.s.options, "nodes", 2048, "scenario.options");
    std::ostringstream csv;
    csv << "t,Rt,mass,linf\n";
    double worst_mass = 0.0, worst_radius = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double t = ts[i];
        const RadialDensity rt = curve_at(curve, t, nodes);
        const double formula = interpolated_radius(curve.dimension(), curve.R0(), curve.R1(), t);
        worst_mass = std::max(worst_mass, std::abs(rt.mass() - 1.0));
        worst_radius = std::max(worst_radius, std::abs(curve.support_radius(t) - formula) / formula);
        csv << fmt(t) << ',' << fmt(curve.support_radius(t)) << ',' << fmt(rt.mass()) << ',' << fmt(rt.linf()) << '\n';
        char file[32];
        std::snprintf(file, sizeof file, "rho_%03zu.csv", i);
        write_density_csv((c.dir / file).string(), rt);
        c.artifact(file);
        c.artifact(fs::path(sidecar_path(file)).string());
    }
    write_text(c.dir / "curve.csv", csv.str());
    c.artifact("curve.csv");
    c.r.checks.push_back(below("massDeviation", worst_mass, 1e-8));
    c.r.checks.push_back(below("radiusFormula", worst_radius, 1e-8));
    const auto lip = wasserstein_lipschitz_bound(curve, 0.0, 1.0);
    c.r.results = {{"R0", curve.R0()},
                   {"R1", curve.R1()},
                   {"times", ts},
                   {"massDeviation", worst_mass},
                   {"radiusDeviation", worst_radius},
                   {"velocityConstant", lip.constant},
                   {"pathLength", lip.path_length}};
}

// ---------------------------------------------------------------- energy
void run_energy(Context& c) {
    const RadialDensity rho = first_density(c, "tent");
    const EnergyReport rep = energy_report(rho, c.s.m, c.w);
    write_json(c.dir / "energy.json", rep.to_json());
    c.artifact("energy.json");
    c.r.results["energy"] = rep.to_json();
    c.r.checks.push_back(make_check("finite", std::isfinite(rep.E), rep.E, 0.0));
    if (!c.s.init1.is_null()) {
        // |E[rho_t] - E[rho_0]| / t at small t along the curve to init1
        const RadialDensity other = second_density(c, "tent");
        const auto curve = InterpolationCurve::from_densities(rho, other);
        const std::size_t nodes = field<std::size_t>(c.s.options, "nodes", 4096, "scenario.options");
        const CurveEnergy ce(curve, c.w, c.s.m, nodes);
        const double E0 = ce.report(0.0).E;
        json rows = json::array();
        std::vector<double> ratios;
        for (double t : {1e-2, 1e-3, 1e-4}) {
            ratios.push_back(std::abs(ce.report(t).E - E0) / t);
            rows.push_back({{"t", t}, {"ratio", ratios.back()}});
        }
        const bool decreasing = ratios[1] < ratios[0] && ratios[2] < ratios[1];
        c.r.results["endpointFlatness"] = {{"E0", E0}, {"rows", rows}};
        c.r.checks.push_back(make_check("flatnessDecreasing", decreasing, ratios[2] / ratios[0], 1.0));
        c.r.checks.push_back(below("flatnessSmallest", ratios[2], 1e-3 * std::abs(E0), "at t = 1e-4, against 1e-3 |E0|"));
    }
}

// ---------------------------------------------------------------- certify
void run_certify(Context& c) {
    const json& o = c.s.options;
    const std::size_t T = field<std::size_t>(o, "tgrid", 41, "scenario.options");
    const std::size_t nodes = field<std::size_t>(o, "nodes", 2048, "scenario.options");
    const std::size_t pairs = field<std::size_t>(o, "pairs", 0, "scenario.options");
    const double tol = field<double>(o, "tol", 1e-7, "scenario.options");
    std::vector<std::pair<RadialDensity, RadialDensity>> list;
    if (pairs == 0) {
        list.emplace_back(first_density(c, "tent"), second_density(c, "quadratic_cap"));
    } else {
        std::mt19937_64 rng(c.s.seed);
        const RadialGrid g = RadialGrid::uniform(c.s.n, 1.0, nodes);
        for (std::size_t i = 0; i < pairs; ++i) {
            RadialDensity a = random_decreasing(g, rng);
            RadialDensity b = random_decreasing(g, rng);
            list.emplace_back(std::move(a), std::move(b));
        }
    }
    std::ostringstream csv, all;
    csv << "t,S,I,E\n";
    all << "pair,t,S,I,E\n";
    double worst_S = -INFINITY, worst_I = INFINITY, min_S = INFINITY, worst_E = INFINITY;
    double scale_S = 0.0;
    bool all_pass = true, strict_I = true;
    for (std::size_t k = 0; k < list.size(); ++k) {
        const auto curve = InterpolationCurve::from_densities(list[k].first, list[k].second);
        const auto cert = certify_convexity(curve, c.s.m, c.w, T, nodes, tol, c.jobs, pairs ? 1.0 : 0.0);
        for (std::size_t i = 0; i < cert.t.size(); ++i) {
            const std::string row = fmt(cert.t[i]) + ',' + fmt(cert.S[i]) + ',' + fmt(cert.I[i]) + ',' + fmt(cert.E[i]) + '\n';
            if (k == 0) csv << row;
            all << k << ',' << row;
        }
        worst_S = std::max(worst_S, cert.max_d2S / cert.scale_S);
        min_S = std::min(min_S, cert.min_d2S / cert.scale_S);
        scale_S = std::max(scale_S, cert.scale_S);
        worst_I = std::min(worst_I, cert.min_d2I / cert.scale_I);
        worst_E = std::min(worst_E, cert.min_d2E / cert.scale_E);
        all_pass = all_pass && cert.pass;
        strict_I = strict_I && (cert.degenerate || cert.interaction_convex);
        if (k == 0) c.r.results["certificate"] = cert.to_json();
    }
    write_text(c.dir / "certificate.csv", csv.str());
    c.artifact("certificate.csv");
    if (list.size() > 1) {
        write_text(c.dir / "pairs.csv", all.str());
        c.artifact("pairs.csv");
    }
    c.r.results["pairs"] = list.size();
    c.r.results["minD2I"] = worst_I;
    c.r.results["minD2S"] = min_S;
    c.r.results["maxD2S"] = worst_S;
    c.r.results["minD2E"] = worst_E;
    c.r.checks.push_back(make_check("interactionConvex", worst_I > -tol && strict_I, worst_I, 1e-10,
                                    "min second difference of I over scale, strict for distinct endpoints"));
    if (c.s.m > 2.0) c.r.checks.push_back(make_check("entropyConvex", min_S >= 0.0, min_S, 0.0));
    else if (c.s.m == 2.0)
        c.r.checks.push_back(below("entropyAffine", std::max(std::abs(min_S), std::abs(worst_S)), 1e-8));
    else c.r.checks.push_back(make_check("entropyConcave", worst_S <= 0.0, worst_S, 0.0));
    if (c.s.m >= 2.0) c.r.checks.push_back(make_check("energyConvex", worst_E > -tol, worst_E, -tol));
    c.r.results["pass"] = all_pass;
}

// ---------------------------------------------------------------- steady
void run_steady(Context& c) {
    const json& o = c.s.options;
    SteadyOptions so;
    so.nodes = field<std::size_t>(o, "nodes", so.nodes, "scenario.options");
    so.r_max = field<double>(o, "rMax", so.r_max, "scenario.options");
    so.max_iter = field<std::size_t>(o, "maxIter", so.max_iter, "scenario.options");
    so.tol_residual = field<double>(o, "tol", so.tol_residual, "scenario.options");
    const RadialDensity init = first_density(c, "tent");
    const SteadyState s = solve_steady(c.w, c.s.m, c.s.n, init, so);
    write_density_csv((c.dir / "density.csv").string(), s.density);
    write_json(c.dir / "steady.json", s.to_json());
    c.artifact("density.csv");
    c.artifact("density.json");
    c.artifact("steady.json");
    c.r.results["steady"] = s.to_json();
    c.r.checks.push_back(make_check("converged", s.converged, static_cast<double>(s.iterations), static_cast<double>(so.max_iter)));
    c.r.checks.push_back(below("residual", s.residual, so.tol_residual));
    if (o.contains("capRadius")) {
        // quadratic-cap oracle rho = (L^2 - r^2)_+/4 with the configured L
        const double L = field<double>(o, "capRadius", 0.0, "scenario.options");
        double err = 0.0;
        for (std::size_t i = 0; i < s.density.size(); ++i) {
            const double r = s.density.grid().r(i);
            err = std::max(err, std::abs(s.density.value(i) - std::max(0.0, (L * L - r * r) / 4)));
        }
        c.r.results["oracle"] = {{"capRadius", L}, {"measured", s.boundary}, {"unitMassRadius", unit_cap_radius(c.s.n)}};
        c.r.checks.push_back(below("capRadius", std::abs(s.boundary - L), 1e-4, "measured free boundary against the configured L"));
        c.r.checks.push_back(below("capLinf", err, 1e-4));
    }
}

// ---------------------------------------------------------------- scan
void run_scan(Context& c) {
    const json& o = c.s.options;
    SteadyOptions so;
    so.nodes = field<std::size_t>(o, "nodes", 1024, "scenario.options");
    const double r_max = field<double>(o, "rMax", 4.0, "scenario.options");
    const std::size_t count = field<std::size_t>(o, "inits", 10, "scenario.options");
    const double tol = field<double>(o, "threshold", 1e-3, "scenario.options");
    const auto inits = diverse_initializations(c.s.n, r_max, count, static_cast<unsigned>(c.s.seed));
    const UniquenessScan scan = uniqueness_scan(c.w, c.s.m, c.s.n, inits, tol, so, c.jobs);
    write_json(c.dir / "scan.json", scan.to_json());
    c.artifact("scan.json");
    c.r.results["clusters"] = scan.clusters();
    c.r.results["failures"] = scan.failures;
    c.r.checks.push_back(make_check("noFailures", scan.failures == 0, static_cast<double>(scan.failures), 0.0));
    if (o.contains("expectClusters")) {
        const auto want = field<std::size_t>(o, "expectClusters", 1, "scenario.options");
        c.r.checks.push_back(make_check("clusters", scan.clusters() == want, static_cast<double>(scan.clusters()),
                                        static_cast<double>(want)));
    } else if (o.contains("minClusters")) {
        const auto want = field<std::size_t>(o, "minClusters", 2, "scenario.options");
        c.r.checks.push_back(make_check("clusters", scan.clusters() >= want, static_cast<double>(scan.clusters()),
                                        static_cast<double>(want)));
    }
}

// ---------------------------------------------------------------- evolve
void run_evolve(Context& c) {
    const json& o = c.s.options;
    SimulationOptions so;
    so.t_max = field<double>(o, "tMax", 1.0, "scenario.options");
    so.snapshots = field<std::size_t>(o, "snapshots", 21, "scenario.options");
    so.max_steps = field<std::size_t>(o, "maxSteps", so.max_steps, "scenario.options");
    so.stop_when_steady = field<bool>(o, "stopWhenSteady", false, "scenario.options");
    so.step.cfl = field<double>(o, "cfl", so.step.cfl, "scenario.options");
    RadialDensity init = first_density(c, "tent");
    {
        // explicit steps scale with dr^2, so the evolution grid is coarser than the family default
        const std::size_t nodes = field<std::size_t>(o, "nodes", 256, "scenario.options");
        require(nodes >= 3, "scenario.options.nodes: need at least 3");
        const double r_max = field<double>(o, "rMax", init.grid().r_max(), "scenario.options");
        init = init.resampled(RadialGrid::uniform(c.s.n, r_max, nodes)).normalized();
    }
    double t0 = 0.0;
    std::unique_ptr<Barenblatt> B;
    if (o.contains("barenblatt")) {
        // self-similar start at time t0 of the pure diffusion problem
        t0 = field<double>(o["barenblatt"], "t0", 1.0, "scenario.options.barenblatt");
        B = std::make_unique<Barenblatt>(c.s.n, c.s.m);
        const std::size_t nodes = field<std::size_t>(o["barenblatt"], "nodes", 400, "scenario.options.barenblatt");
        init = B->sample(RadialGrid::uniform(c.s.n, 1.3 * B->support(t0 + so.t_max), nodes), t0).normalized();
    }
    const Trajectory tr = simulate(c.w, c.s.m, init, so);
    write_text(c.dir / "diagnostics.csv", diagnostics_csv(tr.series));
    json snaps = json::array();
    for (std::size_t i = 0; i < tr.snapshots.size(); ++i) {
        char file[32];
        std::snprintf(file, sizeof file, "snapshot_%03zu.csv", i);
        write_density_csv((c.dir / file).string(), tr.snapshots[i].density);
        c.artifact(file);
        c.artifact(sidecar_path(file));
        snaps.push_back({{"file", file}, {"t", tr.snapshots[i].t}});
    }
    json summary = tr.summary();
    summary["snapshots"] = snaps;
    write_json(c.dir / "trajectory.json", summary);
    c.artifact("diagnostics.csv");
    c.artifact("trajectory.json");
    c.r.results["trajectory"] = tr.summary();
    c.r.checks.push_back(below("massDrift", tr.max_mass_drift, 1e-12));
    c.r.checks.push_back(make_check("energyMonotone", tr.energy_increases == 0, static_cast<double>(tr.energy_increases), 0.0));
    c.r.checks.push_back(make_check("edi", tr.edi_ok, tr.E_final + tr.dissipation_integral,
                                    tr.E0 + tr.regrid_energy_change + 1e-6 * std::abs(tr.E0),
                                    "E_T + int D against E_0, regrid jumps and 1e-6 |E_0|"));
    c.r.checks.push_back(make_check("radiallyDecreasing", tr.monotonicity_violations == 0,
                                    static_cast<double>(tr.monotonicity_violations), 0.0));
    if (B) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        std::size_t k = 0;
        for (std::size_t i = tr.snapshots.size() / 2; i < tr.snapshots.size(); ++i) {
            const double x = std::log(t0 + tr.snapshots[i].t), y = std::log(tr.snapshots[i].diag.linf);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++k;
        }
        const double alpha = -(k * sxy - sx * sy) / (k * sxx - sx * sx);
        const double rel = std::abs(alpha / B->alpha - 1.0);
        c.r.results["barenblatt"] = {{"fitted", alpha}, {"expected", B->alpha}};
        c.r.checks.push_back(below("decayExponent", rel, 0.05, "relative error against n/(n(m-1)+2)"));
    }
}

// ---------------------------------------------------------------- forge
void run_forge(Context& c) {
    const json& o = c.s.options;
    ForgeOptions fo;
    fo.m = c.s.m;
    fo.n = c.s.n;
    fo.levels = field<std::size_t>(o, "levels", 1, "scenario.options");
    fo.R0 = field<double>(o, "R0", 0.0, "scenario.options");
    fo.a = field<double>(o, "a", 0.0, "scenario.options");
    fo.nodes = field<std::size_t>(o, "nodes", fo.nodes, "scenario.options");
    fo.j_min = field<int>(o, "jMin", fo.j_min, "scenario.options");
    fo.j_max = field<int>(o, "jMax", fo.j_max, "scenario.options");
    fo.snapshots = field<std::size_t>(o, "snapshots", fo.snapshots, "scenario.options");
    fo.jobs = c.jobs;
    const ForgeReport rep = forge_iterate(c.w, fo);
    write_text(c.dir / "forge.csv", rep.csv());
    write_json(c.dir / "forge.json", rep.to_json());
    c.artifact("forge.csv");
    c.artifact("forge.json");
    c.r.results["baseNorm"] = rep.base_norm;
    json lv = json::array();
    for (const auto& l : rep.levels)
        lv.push_back({{"level", l.level}, {"ok", l.ok}, {"epsilon", l.epsilon}, {"norm3m", l.norm3m}, {"diagnostic", l.diagnostic}});
    c.r.results["levels"] = lv;
    c.r.checks.push_back(make_check("baseConverged", rep.base_state.converged, rep.base_state.residual, 1e-8));
    for (const auto& l : rep.levels) {
        const std::string tag = "level" + std::to_string(l.level);
        c.r.checks.push_back(make_check(tag + "Ok", l.ok, l.residual, fo.residual_tol, l.diagnostic));
    }
    c.r.checks.push_back(make_check("allLevels", rep.ok, static_cast<double>(rep.levels.size()), static_cast<double>(fo.levels)));
}

// ---------------------------------------------------------------- geometry
void run_geometry(Context& c) {
    const std::size_t samples = field<std::size_t>(c.s.options, "samples", 10000, "scenario.options");
    std::mt19937_64 rng(c.s.seed);
    std::uniform_real_distribution<double> U(0.05, 3.0);
    json per_n = json::array();
    double worst = 0.0;
    for (int n = 1; n <= 3; ++n) {
        const double ct = c_tilde(n);
        double err = 0.0;
        for (std::size_t i = 0; i < samples;) {
            const double R = U(rng), r = U(rng);
            if (ball_case(R, r) != BallCase::Crossing) continue;
            ++i;
            const auto g = interaction_geometry_nd(n, R, r);
            const double expect = ct * ct / 4 * std::pow(g.S, n);
            err = std::max(err, std::abs(g.det() - expect) / std::max(expect, g.v * g.v));
        }
        worst = std::max(worst, err);
        per_n.push_back({{"n", n}, {"identityError", err}});
    }
    // closed-form dA/ds against central differences of the quadrature volume
    double ds_err = 0.0;
    std::uniform_real_distribution<double> P(0.05, 3.0);
    for (int n = 1; n <= 3; ++n) {
        for (std::size_t i = 0; i < 200;) {
            const double r = P(rng), sd = P(rng);
            if (!(1.0 - std::abs(r - sd) > 0.02 && r + sd - 1.0 > 0.02)) continue;
            ++i;
            const double h = 1e-5;
            const double fd = (ball_intersection(n, r, sd + h) - ball_intersection(n, r, sd - h)) / (2 * h);
            ds_err = std::max(ds_err, std::abs(ball_intersection_ds(n, r, sd) - fd));
        }
    }
    // 1-D step potential: negative discriminant and nonnegative second derivative in the crossing case
    std::uniform_real_distribution<double> F(0.05, 5.0), V(-3.0, 3.0);
    double max_disc = -INFINITY, min_d2 = INFINITY;
    for (std::size_t i = 0; i < 1000;) {
        const double f = F(rng), g = F(rng), a = F(rng);
        if (step_case_1d(f, g, a) != StepCase::Crossing) continue;
        ++i;
        max_disc = std::max(max_disc, step_discriminant_1d(f, g, a));
    }
    for (std::size_t i = 0; i < 1000;) {
        const double f = F(rng), g = F(rng), a = F(rng);
        if (step_case_1d(f, g, a) != StepCase::Crossing) continue;
        ++i;
        min_d2 = std::min(min_d2, step_second_derivative_1d(f, g, V(rng), V(rng), a));
    }
    const double lens = ball_intersection(2, 1.0, 1.0);
    const double lens_exact = 2 * std::numbers::pi / 3 - std::sqrt(3.0) / 2;
    c.r.results = {{"dimensions", per_n},   {"lens", lens},           {"lensExact", lens_exact},
                   {"dsError", ds_err},     {"maxDiscriminant1d", max_disc}, {"minSecondDerivative1d", min_d2}};
    write_json(c.dir / "geometry.json", c.r.results);
    c.artifact("geometry.json");
    c.r.checks.push_back(below("discriminantIdentity", worst, 1e-10, "|uw - v^2 - (c~^2/4) S^n| relative"));
    c.r.checks.push_back(below("lens", std::abs(lens - 1.22837), 1e-6));
    c.r.checks.push_back(below("intersectionDs", ds_err, 1e-6, "closed form against central differences"));
    c.r.checks.push_back(below("discriminant1d", max_disc, 0.0, "max over crossing samples"));
    c.r.checks.push_back(make_check("secondDerivative1d", min_d2 >= 0.0, min_d2, 0.0, "min over crossing samples"));
}

}  // namespace

RadialDensity make_density(const json& spec_in, int n, std::uint64_t seed, double m, const Potential& w,
                           const std::string& path) {
    const json spec = spec_in.is_string() ? density_shorthand(spec_in.get<std::string>(), path) : spec_in;
    if (!spec.is_object()) throw InvalidInput(path + ": expected a density spec object or string");
    if (spec.contains("csv")) return read_density_csv(field<std::string>(spec, "csv", "", path), n).normalized();
    const std::string family = field<std::string>(spec, "family", "", path);
    const double radius = field<double>(spec, "radius", 1.0, path);
    const std::size_t nodes = field<std::size_t>(spec, "nodes", 4096, path);
    require(radius > 0.0, path + ".radius: must be positive");
    require(nodes >= 3, path + ".nodes: need at least 3");
    const double r_max = field<double>(spec, "rMax", family == "random" ? 1.0 : radius, path);
    const RadialGrid g = RadialGrid::uniform(n, r_max, nodes);
    if (family == "uniform") return uniform_ball(g, radius);
    if (family == "tent") return tent(g, radius);
    if (family == "quadratic_cap") return quadratic_cap(g, radius);
    if (family == "power_cap")
        return power_cap(g, radius, field<double>(spec, "p", 2.0, path), field<double>(spec, "q", 1.0, path));
    if (family == "random") {
        std::mt19937_64 rng(seed);
        return random_decreasing(g, rng);
    }
    if (family == "barenblatt") {
        const Barenblatt B(n, field<double>(spec, "m", m, path));
        const double t = field<double>(spec, "t", 1.0, path);
        return B.sample(RadialGrid::uniform(n, std::max(r_max, 1.05 * B.support(t)), nodes), t).normalized();
    }
    if (family == "steady") {
        SteadyOptions so;
        so.nodes = nodes;
        const SteadyState s = solve_steady(w, field<double>(spec, "m", m, path), n, tent(RadialGrid::uniform(n, 2.0, 1024), 1.0), so);
        if (!s.converged) throw NumericalFailure(path + ": steady state did not converge (residual " + fmt(s.residual) + ")");
        return s.density;
    }
    throw InvalidInput(path + ".family: unknown family '" + family + "'");
}

json Check::to_json() const {
    return {{"name", name}, {"status", pass ? "PASS" : "FAIL"}, {"value", num(value)}, {"threshold", num(threshold)},
            {"detail", detail}};
}

bool RunResult::pass() const {
    if (!error.empty() || checks.empty()) return false;
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

json RunResult::summary(const Scenario& s) const {
    json checks_json = json::array();
    for (const auto& c : checks) checks_json.push_back(c.to_json());
    return {{"name", name},         {"command", command},   {"buildId", build_id()}, {"status", pass() ? "PASS" : "FAIL"},
            {"checks", checks_json}, {"results", results},  {"artifacts", artifacts}, {"error", error},
            {"scenario", s.to_json()}};
}

Scenario Scenario::from_json(const json& j, const std::string& path) {
    if (!j.is_object() || j.empty()) throw InvalidInput(path + ": expected a non-empty scenario object");
    static const std::vector<std::string> known{"name", "command", "m", "n", "potential", "init", "init1", "options", "out", "seed"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw InvalidInput(path + "." + it.key() + ": unknown field");
    Scenario s;
    s.command = field<std::string>(j, "command", "", path);
    if (std::find(kCommands.begin(), kCommands.end(), s.command) == kCommands.end())
        throw InvalidInput(path + ".command: expected one of height, interpolate, energy, certify, steady, scan, evolve, forge, geometry");
    s.name = field<std::string>(j, "name", s.command, path);
    if (s.name.empty() || s.name.find('/') != std::string::npos) throw InvalidInput(path + ".name: must be a non-empty plain name");
    s.m = field<double>(j, "m", s.m, path);
    if (!(s.m > 1.0)) throw InvalidInput(path + ".m: must exceed 1");
    s.n = field<int>(j, "n", s.n, path);
    if (s.n < 1 || s.n > 3) throw InvalidInput(path + ".n: must be 1, 2 or 3");
    if (j.contains("potential")) s.potential = j["potential"];
    potential_of(s.potential, path + ".potential");
    if (j.contains("init")) s.init = j["init"];
    if (j.contains("init1")) s.init1 = j["init1"];
    if (j.contains("options")) {
        if (!j["options"].is_object()) throw InvalidInput(path + ".options: expected an object");
        s.options = j["options"];
    }
    s.out = field<std::string>(j, "out", "", path);
    s.seed = field<std::uint64_t>(j, "seed", s.seed, path);
    return s;
}

json Scenario::to_json() const {
    json j = {{"name", name}, {"command", command}, {"m", m},         {"n", n},     {"potential", potential},
              {"options", options}, {"seed", seed}, {"out", out_dir()}};
    if (!init.is_null()) j["init"] = init;
    if (!init1.is_null()) j["init1"] = init1;
    return j;
}

RunResult run_scenario(const Scenario& s, std::size_t jobs) {
    RunResult r;
    r.name = s.name;
    r.command = s.command;
    r.out_dir = s.out_dir();
    const fs::path dir(r.out_dir);
    fs::create_directories(dir);
    try {
        Context c{s, r, dir, jobs == 0 ? default_jobs() : jobs, potential_of(s.potential, "scenario.potential")};
        if (s.command == "height") run_height(c);
        else if (s.command == "interpolate") run_interpolate(c);
        else if (s.command == "energy") run_energy(c);
        else if (s.command == "certify") run_certify(c);
        else if (s.command == "steady") run_steady(c);
        else if (s.command == "scan") run_scan(c);
        else if (s.command == "evolve") run_evolve(c);
        else if (s.command == "forge") run_forge(c);
        else if (s.command == "geometry") run_geometry(c);
        else throw InvalidInput("scenario.command: unknown command '" + s.command + "'");
    } catch (const InvalidInput&) {
        throw;
    } catch (const std::exception& e) {
        // numerical failures end the run but still leave a summary
        r.error = e.what();
        r.checks.push_back(make_check("completed", false, 0.0, 0.0, e.what()));
    }
    write_json(dir / "summary.json", r.summary(s));
    return r;
}

std::vector<RunResult> run_scenarios(const std::vector<Scenario>& list, std::size_t jobs) {
    std::vector<RunResult> out(list.size());
    const std::size_t outer = std::max<std::size_t>(1, std::min(jobs == 0 ? default_jobs() : jobs, list.size()));
    const std::size_t inner = std::max<std::size_t>(1, (jobs == 0 ? default_jobs() : jobs) / outer);
    parallel_for(list.size(), [&](std::size_t i) { out[i] = run_scenario(list[i], inner); }, outer);
    return out;
}

std::vector<Scenario> load_config(const json& config) {
    if (config.is_null() || (config.is_object() && config.empty()))
        throw InvalidInput("config: empty, expected a scenario or {\"scenarios\": [...]}");
    std::vector<Scenario> out;
    if (config.is_object() && config.contains("scenarios")) {
        const json& list = config["scenarios"];
        if (!list.is_array() || list.empty()) throw InvalidInput("config.scenarios: expected a non-empty array");
        for (std::size_t i = 0; i < list.size(); ++i)
            out.push_back(Scenario::from_json(list[i], "config.scenarios[" + std::to_string(i) + "]"));
    } else {
        out.push_back(Scenario::from_json(config, "config"));
    }
    return out;
}

std::vector<std::string> builtin_names() {
    return {"height-roundtrip",  "tent-pair",          "entropy-m2.5",       "entropy-m2",        "entropy-m1.5",
            "geometry-identities", "quadratic-m2-n1",  "uniqueness-riesz2",  "uniqueness-forged", "forge-level1",
            "barenblatt-m1.5-n1", "barenblatt-m2-n1",  "barenblatt-m2-n2",   "endpoint-flatness", "hprime-exponent-n1",
            "hprime-exponent-n2", "hprime-exponent-n3"};
}

Scenario builtin(const std::string& name) {
    json j;
    if (name == "height-roundtrip") {
        j = {{"command", "height"}, {"init", {{"family", "random"}, {"nodes", 4096}}}, {"seed", 11}};
    } else if (name == "tent-pair") {
        j = {{"command", "certify"}, {"m", 2.0}, {"potential", "riesz:k=2"},
             {"init", "tent:radius=1"}, {"init1", "tent:radius=0.5,rMax=1"}, {"options", {{"tgrid", 41}}}};
    } else if (name.rfind("entropy-m", 0) == 0) {
        const double m = std::stod(name.substr(9));
        j = {{"command", "certify"}, {"m", m}, {"potential", "riesz:k=1"}, {"options", {{"pairs", 20}, {"tgrid", 41}}}, {"seed", 3}};
    } else if (name == "geometry-identities") {
        j = {{"command", "geometry"}, {"options", {{"samples", 10000}}}, {"seed", 5}};
    } else if (name == "quadratic-m2-n1") {
        j = {{"command", "steady"}, {"m", 2.0}, {"n", 1}, {"potential", "quadratic"},
             {"init", "tent:radius=1,rMax=3,nodes=1024"}, {"options", {{"capRadius", std::cbrt(6.0)}}}};
    } else if (name == "uniqueness-riesz2") {
        j = {{"command", "scan"}, {"m", 2.5}, {"potential", "riesz:k=2"}, {"options", {{"expectClusters", 1}}}};
    } else if (name == "uniqueness-forged") {
        j = {{"command", "scan"}, {"m", 2.0},
             {"potential", {{"kind", "modified"}, {"base", {{"kind", "quadratic"}}}, {"params", {{"R", 2.0}, {"epsilon", 0.25}}}}},
             {"options", {{"expectClusters", 1}, {"rMax", 8.0}}}};
    } else if (name == "forge-level1") {
        j = {{"command", "forge"}, {"m", 1.5}, {"n", 1}, {"potential", "quadratic"}, {"options", {{"levels", 1}}}};
    } else if (name.rfind("barenblatt-m", 0) == 0) {
        const double m = std::stod(name.substr(12, name.find("-n") - 12));
        const int n = std::stoi(name.substr(name.find("-n") + 2));
        j = {{"command", "evolve"}, {"m", m}, {"n", n}, {"potential", "none"},
             {"options", {{"tMax", 5.0}, {"snapshots", 31}, {"barenblatt", {{"t0", 1.0}, {"nodes", 400}}}}}};
    } else if (name == "endpoint-flatness") {
        j = {{"command", "energy"}, {"m", 2.0}, {"potential", "quadratic"},
             {"init", {{"family", "steady"}, {"nodes", 2048}}}, {"init1", "tent:radius=1.2,nodes=2048"}};
    } else if (name.rfind("hprime-exponent-n", 0) == 0) {
        const int n = std::stoi(name.substr(17));
        j = {{"command", "height"}, {"n", n},
             {"init", {{"family", "quadratic_cap"}, {"radius", unit_cap_radius(n)}, {"nodes", 4096}}},
             {"options", {{"singularity", true}}}};
    } else {
        throw InvalidInput("builtin: unknown preset '" + name + "'");
    }
    j["name"] = name;
    return Scenario::from_json(j, "builtin." + name);
}

json IndexReport::to_json() const { return {{"buildId", build_id()}, {"rows", rows}}; }

IndexReport build_index(const std::vector<std::string>& inputs) {
    std::vector<fs::path> files;
    for (const auto& in : inputs) {
        const fs::path p(in);
        if (fs::is_directory(p)) {
            for (const auto& e : fs::recursive_directory_iterator(p))
                if (e.is_regular_file() && e.path().filename() == "summary.json") files.push_back(e.path());
        } else if (fs::is_regular_file(p)) {
            files.push_back(p);
        }
    }
    std::sort(files.begin(), files.end());
    IndexReport idx;
    std::ostringstream csv;
    csv << "name,command,status,checks,failed,buildId,path\n";
    for (const auto& f : files) {
        std::ifstream in(f);
        json s;
        try {
            s = json::parse(in);
        } catch (const json::exception&) {
            continue;  // not a summary
        }
        if (!s.is_object() || !s.contains("checks")) continue;
        std::size_t failed = 0;
        for (const auto& c : s["checks"])
            if (c.value("status", "FAIL") != "PASS") ++failed;
        json row = {{"name", s.value("name", "")},     {"command", s.value("command", "")}, {"status", s.value("status", "FAIL")},
                    {"checks", s["checks"].size()},     {"failed", failed},                 {"buildId", build_id()},
                    {"runBuildId", s.value("buildId", "")}, {"path", f.string()}};
        idx.rows.push_back(row);
        csv << row["name"].get<std::string>() << ',' << row["command"].get<std::string>() << ','
            << row["status"].get<std::string>() << ',' << s["checks"].size() << ',' << failed << ',' << build_id() << ','
            << f.string() << '\n';
    }
    idx.csv = csv.str();
    return idx;
}

void write_index(const IndexReport& index, const std::string& out_dir) {
    write_text(fs::path(out_dir) / "index.csv", index.csv);
    write_json(fs::path(out_dir) / "index.json", index.to_json());
}

}  // namespace aggsteady
