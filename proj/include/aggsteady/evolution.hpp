#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aggsteady/interaction_operator.hpp"
#include "aggsteady/potentials.hpp"
#include "aggsteady/radial_core.hpp"
#include "aggsteady/steady_state.hpp"

namespace aggsteady {

// Per-state diagnostics. S and I are the nodal discrete energies the scheme
// dissipates: S = sum_i w_i rho_i^m / (m-1), I = 1/2 sum_i w_i rho_i (W*rho)_i.
struct Diagnostics {
    double t = 0.0;
    double mass = 0.0, S = 0.0, I = 0.0, E = 0.0, D = 0.0;
    double norm3m = 0.0;  // (int rho^{3-m})^{1/(3-m)}
    double first_moment = 0.0;
    double linf = 0.0;
    double support = 0.0;
};

struct EvolutionState {
    RadialDensity density;
    double t = 0.0;
    Diagnostics diag;
};

// (int rho^p)^{1/p} for any p > 0 (lp_norm only covers p >= 1).
double power_norm(const RadialDensity& rho, double p);

struct EvolutionOptions {
    double cfl = 0.45;
    double clip_tol = 1e-12;  // relative to max rho; deeper negatives abort
    int max_halvings = 12;
};

struct StepReport {
    double dt = 0.0;        // step actually taken
    int halvings = 0;       // CFL or positivity halvings
    double mass_drift = 0.0;  // relative
    double clipped = 0.0;   // mass removed by clipping before renormalization, relative
    bool monotone = true;
};

// Explicit finite volumes for rho_t = div(rho grad xi), xi = (m/(m-1)) rho^{m-1} + W*rho,
// on the control volumes of a radial grid: upwind mobility at faces, SSP-RK3 in
// time, zero flux at r = 0 and at the outer radius. W*rho is the symmetrized
// gradient of the discrete interaction energy, so the semi-discrete scheme
// dissipates E_h exactly at rate D_h = sum_f A_f rho_up (xi_{i+1} - xi_i)^2 / dr_f.
class Evolver {
public:
    Evolver(Potential w, double m, RadialDensity init, EvolutionOptions opts = {});

    const RadialDensity& density() const { return rho_; }
    double time() const { return t_; }
    double m() const { return m_; }
    const Potential& potential() const { return w_; }
    Diagnostics diagnostics() const;
    // largest forward-Euler step allowed by the advective and diffusive bounds
    double admissible_dt() const;
    // advances by dt, halving it while it exceeds the CFL bound or a stage goes negative
    StepReport step(double dt);
    // moves the outer radius, keeping the node count; mass is restored after resampling
    void regrid(double r_max);
    void expand() { regrid(2.0 * rho_.grid().r_max()); }
    std::size_t expansions() const { return expansions_; }

private:
    std::vector<double> rate(const std::vector<double>& rho, double* dissipation = nullptr) const;
    std::vector<double> potential_xi(const std::vector<double>& rho) const;
    Potential w_;
    double m_;
    RadialDensity rho_;
    double t_ = 0.0;
    EvolutionOptions opts_;
    std::shared_ptr<InteractionOperator> op_;
    std::size_t expansions_ = 0;
};

// One step of the scheme from a state (builds or reuses the cached operator).
EvolutionState step(const EvolutionState& state, double dt, const Potential& w, double m, StepReport* report = nullptr);

struct SimulationOptions {
    double t_max = 1.0;
    std::size_t max_steps = 10000000;
    std::size_t snapshots = 50;  // evenly spaced in time, the initial state included
    double dt_max = std::numeric_limits<double>::infinity();
    std::size_t series_every = 1;  // keep every k-th step in Trajectory::series
    bool expand = true;  // grow the domain when the support passes 90% of it
    bool shrink = false;  // refit to twice the support when it falls below 25% of the domain
    // steady detection between consecutive snapshots: relative energy drop
    // D dT / (S + |I|) below steady_dissipation and L1 change below steady_l1
    bool stop_when_steady = false;
    double steady_dissipation = 1e-10;
    double steady_l1 = 1e-8;
    // flatness threshold on ||rho||_{3-m}; optionally stop at the first up-crossing
    double delta0 = std::numeric_limits<double>::infinity();
    bool stop_on_upcrossing = false;
    EvolutionOptions step;
};

struct Trajectory {
    double m = 0.0;
    int n = 1;
    std::string potential;
    std::vector<EvolutionState> snapshots;
    std::vector<Diagnostics> series;  // accepted steps, every series_every-th
    std::size_t steps = 0;
    std::size_t halvings = 0;
    std::size_t expansions = 0;
    std::size_t monotonicity_violations = 0;
    std::size_t energy_increases = 0;  // steps with E_{k+1} > E_k + 1e-8 |E_k|
    double max_energy_increase = 0.0;  // relative
    double max_mass_drift = 0.0;       // relative, per step
    double dissipation_integral = 0.0; // trapezoid sum of D dt
    double E0 = 0.0, E_final = 0.0;
    double regrid_energy_change = 0.0;  // E jumps from resampling onto a moved grid
    bool edi_ok = false;  // E_T + int D <= E_0 + regrid_energy_change + 1e-6 |E_0|
    bool steady = false;
    double t_steady = 0.0;
    bool upcrossing = false;  // ||rho||_{3-m} reached delta0
    double max_norm3m = 0.0;
    std::string stop_reason;
    nlohmann::json summary() const;
};

Trajectory simulate(const Potential& w, double m, const RadialDensity& init, const SimulationOptions& opts = {});

// diagnostics.csv rows: t,mass,S,I,E,D,norm3m,firstMoment,linf,supportRadius
std::string diagnostics_csv(const std::vector<Diagnostics>& rows);

// The L^{3-m} budget along snapshots: d/dt int rho^{3-m} by differencing and
// (3-m)(-(2-m) m ||grad rho||^2 - (2-m) I), I = int rho^{2-m} grad rho . grad(W*rho),
// with I = I1 + I2 for the w1 / w2 split of a forged potential.
struct FlatnessRow {
    double t = 0.0;
    double norm = 0.0;
    double integral = 0.0;  // int rho^{3-m}
    double grad2 = 0.0;     // ||grad rho||_2^2
    double I = 0.0, I1 = 0.0, I2 = 0.0;
    double rhs = 0.0;
    double direct = 0.0;  // centred difference of integral (one-sided at the ends)
};
struct FlatnessReport {
    double theta = 0.0;  // Gagliardo-Nirenberg exponent 2n(2-m)/((3-m)(2+n))
    double delta0 = 0.0;
    std::vector<FlatnessRow> rows;
    double sup_norm = 0.0;
    bool upcrossing = false;
    double max_budget_mismatch = 0.0;  // max |direct - rhs| / max |rhs|
    nlohmann::json to_json() const;
};
double gagliardo_nirenberg_theta(int n, double m);
FlatnessReport track_flatness(const Trajectory& traj, double m, const Potential& w,
                              const ModifiedPotential* split = nullptr,
                              double delta0 = std::numeric_limits<double>::infinity());

struct ExtractOptions {
    std::size_t windows = 5;  // trailing snapshots averaged into the candidate
    double dissipation_tol = 1e-6;  // relative tail dissipation D dT / (S + |I|)
    double residual_tol = 1e-6;
    SteadyOptions solver;
    // first-moment bound C/eps (3 R eps - w1(3R) + 2 E[rho_0]); informational
    double moment_constant = 1.0;
};
struct ExtractResult {
    bool extracted = false;
    std::string diagnostic;
    RadialDensity candidate;
    SteadyState state;
    SteadyResidual check;
    double tail_dissipation = 0.0;
    double candidate_distance = 0.0;  // L1 between the averaged candidate and the polished state
    double first_moment = 0.0;
    double first_moment_bound = std::numeric_limits<double>::quiet_NaN();
    nlohmann::json to_json() const;
};
// Window-averages the trailing snapshots, polishes the average with solve_steady
// and verifies it. For a forged potential pass `forged` to evaluate the moment bound.
ExtractResult extract_steady(const Trajectory& traj, const Potential& w, double m, const ExtractOptions& opts = {},
                             const ModifiedPotential* forged = nullptr);

}  // namespace aggsteady
