#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "aggsteady/evolution.hpp"
#include "aggsteady/potentials.hpp"
#include "aggsteady/steady_state.hpp"

namespace aggsteady {

// Sharp Young constant for |int f (g * h)| <= C ||f||_p ||g||_q ||h||_r in R^n,
// 1/p + 1/q + 1/r = 2: C = (A_p A_q A_r)^n with A_s^2 = s^{1/s} / s'^{1/s'}.
double sharp_young_constant(int n, double p, double q, double r);

// ||f||_q of a radial function on R^n, integrated over [0, b] (f vanishes beyond b).
double radial_lq_norm(const Potential& f, int n, double q, double b);

// Constants of the flatness threshold for a forged potential: the pairing of
// rho^{2-m} grad rho with w1 * grad rho is bounded by C ||rho||^{2-m} ||grad rho||^2,
// C = young * ||w1||_{3-m}, and delta0 is the largest 2^{-j} below a with
// C delta0^{2-m} < m/4.
struct Delta0Estimate {
    double young = 0.0;
    double w1_norm = 0.0;
    double C = 0.0;
    double delta0 = 0.0;
    int exponent = 0;  // delta0 = 2^{-exponent}
    nlohmann::json to_json() const;
};
Delta0Estimate estimate_delta0(const ModifiedPotential& forged, double m, int n, double a);

struct ForgeOptions {
    double m = 1.5;
    int n = 1;
    double R0 = 0.0;  // lower bound for every level's R
    double a = 0.0;   // norm floor; 0 uses half the smallest norm found so far
    std::size_t levels = 1;
    // eps = 2^{-j}, j in [j_min, j_max]
    int j_min = 1;
    int j_max = 90;
    double init_fraction = 0.5;  // flat initial norm as a fraction of delta0
    std::size_t nodes = 128;     // evolution grid
    // horizon = min(drift_horizon * L0 / eps, diffusion_horizon * L0^2 / (m rho0^{m-1}))
    // for a flat ball of radius L0 and height rho0
    double drift_horizon = 20.0;
    double diffusion_horizon = 2.0;
    std::size_t snapshots = 40;
    std::size_t max_steps = 3000000;
    double residual_tol = 1e-6;
    SteadyOptions solver;  // base state and polishing
    ExtractOptions extract;
    std::size_t jobs = 1;  // concurrent trials per search round
};

struct EpsilonTrial {
    int j = 0;
    double epsilon = 0.0;
    bool accepted = false;
    double sup_norm = 0.0;
    double t_end = 0.0;
    std::size_t steps = 0;
    std::string stop_reason;
    nlohmann::json to_json() const;
};

struct ForgeLevel {
    std::size_t level = 0;
    double R = 0.0;
    double a = 0.0;
    Delta0Estimate delta;
    std::vector<EpsilonTrial> trials;
    bool searched = false;  // an accepted eps with a rejected neighbour below it
    double epsilon = 0.0;
    int j = 0;
    double init_norm = 0.0;
    nlohmann::json trajectory;
    FlatnessReport flatness;
    ExtractResult extraction;
    SteadyState state;
    double norm3m = 0.0;
    double support = 0.0;
    double residual = 0.0;
    std::vector<double> previous_residuals;  // earlier states under this level's potential
    bool halves_previous = false;
    bool support_grows = false;
    bool ok = false;
    std::string diagnostic;
    nlohmann::json to_json() const;
};

struct ForgeReport {
    double m = 0.0;
    int n = 1;
    std::string base;
    SteadyState base_state;
    double base_norm = 0.0;
    std::vector<ForgeLevel> levels;
    std::vector<ModifiedPotential> potentials;
    bool ok = false;
    nlohmann::json to_json() const;
    // level,R,epsilon,norm3m,supportRadius,residual; level 0 is the base state
    std::string csv() const;
};

// Iterated tail modification. Level l forges the previous potential beyond
// 2R_l, searches eps for which a flat start stays below delta0, extracts the
// flat steady state and re-checks every earlier one. Stops at the first level
// that fails, keeping its diagnostics.
ForgeReport forge_iterate(const Potential& w0, const ForgeOptions& opts = {});

}  // namespace aggsteady
