#pragma once

#include <cstdint>
#include <random>

#include "aggsteady/radial_core.hpp"

namespace aggsteady {

// Analytic test profiles, each normalized to unit mass on the given grid.
RadialDensity uniform_ball(const RadialGrid& grid, double radius);
RadialDensity tent(const RadialGrid& grid, double radius = 1.0);
// (1 - (r/R)^p)_+^q
RadialDensity power_cap(const RadialGrid& grid, double radius, double p, double q);
// (L^2 - r^2)_+, the m = 2 steady state of the quadratic potential.
RadialDensity quadratic_cap(const RadialGrid& grid, double radius);

// Sum of 1..3 power caps with random radii, exponents and weights inside
// [0.3, 0.9] * grid.r_max(): strictly decreasing and continuous by construction.
RadialDensity random_decreasing(const RadialGrid& grid, std::mt19937_64& rng);

// Barenblatt profile of rho_t = Delta rho^m at time t, unit mass.
struct Barenblatt {
    int n;
    double m;
    double alpha, beta, k, C;
    Barenblatt(int n, double m);
    double value(double r, double t) const;
    double support(double t) const;
    RadialDensity sample(const RadialGrid& grid, double t) const;
};

}  // namespace aggsteady
