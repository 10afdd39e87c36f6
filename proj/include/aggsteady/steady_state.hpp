#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "aggsteady/potentials.hpp"
#include "aggsteady/radial_core.hpp"

namespace aggsteady {

struct SteadyOptions {
    std::size_t nodes = 2048;
    double r_max = 0.0;  // 0: twice the support of the initial density
    double damping = 0.5;
    double min_damping = 1.0 / 1024;
    std::size_t max_iter = 4000;
    double tol_residual = 1e-8;
    double tol_change = 1e-10;
    // Newton on the active set once the fixed point is close (or stalls)
    bool newton = true;
    double newton_switch = 1e-4;
    std::size_t newton_max_active = 6000;
    // move the outer radius when the support leaves [0.3, 0.9] r_max
    bool regrid = true;
    std::size_t max_regrids = 40;
};

struct SteadyState {
    RadialDensity density;
    double m = 0.0;
    double C = 0.0;
    // sup over supp rho and supp Phi(rho) of |(m/(m-1)) rho^{m-1} + W*rho - C|
    double residual = 0.0;
    double change = 0.0;  // L1 distance between the last two iterates
    double laplacian_at_zero = 0.0;
    double boundary = 0.0;  // free_boundary_radius of the density
    std::size_t iterations = 0;
    std::size_t newton_steps = 0;
    std::size_t regrids = 0;
    bool converged = false;
    bool strictly_decreasing = false;
    bool nondegenerate = false;  // laplacian_at_zero < 0
    bool touches_boundary = false;
    std::vector<double> residual_history;
    std::string potential;

    double support_radius() const { return density.support_radius(); }
    nlohmann::json to_json() const;
};

// Fixed point rho = ((m-1)/m (C - W*rho))_+^{1/(m-1)} with damping; C is the
// root of the (increasing) mass map at every iteration, so each iterate has
// unit mass. Throws NumericalFailure when the mass root cannot be bracketed.
// Non-convergence is reported through converged = false and the history.
SteadyState solve_steady(const Potential& w, double m, int n, const RadialDensity& init, const SteadyOptions& opts = {});

// Edge of the support from rho^{m-1}, which vanishes linearly there, extrapolated
// through the last two positive nodes. Falls back to the piecewise-linear support.
double free_boundary_radius(const RadialDensity& rho, double m);

// Unit-mass C for the profile ((m-1)/m (C - phi))_+^{1/(m-1)} on a grid.
double mass_multiplier(const std::vector<double>& phi, const RadialGrid& grid, double m);

struct SteadyResidual {
    double sup = 0.0;  // half the oscillation of xi over the support
    double C = 0.0;    // midpoint of xi over the support
    // max over test functions of |-int rho^m Lap psi + int rho W*rho' psi'| / (same with absolute values)
    double weak = 0.0;
    std::vector<double> weak_by_test;
    // max(0, C - W*rho) outside the support, where a minimizer would need W*rho >= C
    double outside = 0.0;
    double laplacian_at_zero = 0.0;
    bool strictly_decreasing = false;
    nlohmann::json to_json() const;
};
SteadyResidual verify_steady(const RadialDensity& rho, const Potential& w, double m);

struct ScanMember {
    std::size_t index = 0;
    bool converged = false;
    std::string error;
    SteadyState state;
    std::size_t cluster = 0;  // meaningful only when converged
};

struct UniquenessScan {
    double threshold = 0.0;
    std::vector<ScanMember> members;
    std::vector<std::size_t> representatives;  // member index of each cluster
    std::size_t failures = 0;
    std::size_t clusters() const { return representatives.size(); }
    nlohmann::json to_json() const;
};

// Solves from every initialization and clusters the limits by L1 distance
// (greedy, against each cluster's first member). Non-converged members are kept
// and counted, never dropped.
UniquenessScan uniqueness_scan(const Potential& w, double m, int n, const std::vector<RadialDensity>& inits, double tol = 1e-3,
                               const SteadyOptions& opts = {}, std::size_t jobs = 0);

// Ten or more unit-mass initial densities on [0, r_max]: caps of several radii and
// flatness, a uniform ball, and seeded random decreasing profiles.
std::vector<RadialDensity> diverse_initializations(int n, double r_max, std::size_t count = 10, unsigned seed = 1,
                                                   std::size_t nodes = 1024);

}  // namespace aggsteady
