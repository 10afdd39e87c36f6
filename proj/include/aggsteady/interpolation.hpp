#pragma once

#include <cstddef>
#include <vector>

#include "aggsteady/height_function.hpp"
#include "aggsteady/radial_core.hpp"

namespace aggsteady {

// R_t = ((1-t) R0^{-n} + t R1^{-n})^{-1/n}
double interpolated_radius(int n, double R0, double R1, double t);

// The curve rho_t whose height function is h_t = (1-t) h0 + t h1.
class InterpolationCurve {
public:
    // Both height functions must share dimension and mass grid.
    InterpolationCurve(HeightFunction h0, HeightFunction h1);
    // Transforms both endpoints on a common mass grid.
    static InterpolationCurve from_densities(const RadialDensity& rho0, const RadialDensity& rho1,
                                             const std::vector<double>& mass_grid);
    static InterpolationCurve from_densities(const RadialDensity& rho0, const RadialDensity& rho1);

    int dimension() const { return h0_.dimension(); }
    const HeightFunction& h0() const { return h0_; }
    const HeightFunction& h1() const { return h1_; }
    double R0() const { return R0_; }
    double R1() const { return R1_; }
    HeightFunction at(double t) const;
    double support_radius(double t) const;
    bool strict() const { return h0_.strict() && h1_.strict(); }
    bool identical() const;

private:
    HeightFunction h0_, h1_;
    double R0_ = 0.0, R1_ = 0.0;
};

// rho_t on a uniform grid over [0, R_t].
RadialDensity curve_at(const InterpolationCurve& c, double t, std::size_t nodes = 4096);
RadialDensity curve_at(const InterpolationCurve& c, double t, const RadialGrid& grid);

// s_{r,t}: h_t'(s) = 1/(c_n r^n). Rejects r outside (0, R_t) and plateau endpoints.
double solve_srt(const InterpolationCurve& c, double r, double t);

// v(r,t) = r (h0 - h1)(s_{r,t}) / (n h_t(s_{r,t})), the radial velocity carrying rho_t.
double transport_field(const InterpolationCurve& c, double r, double t);

// C = sup_s max(h0/h1, h1/h0)/n, so that |v(r,t)| <= C r.
double velocity_constant(const InterpolationCurve& c);

struct LipschitzBound {
    double benamou_brenier = 0.0;  // sup_t ||v(.,t)||_{L2(rho_t)} |t2 - t1| over sampled t
    double path_length = 0.0;      // int_{t1}^{t2} ||v||_{L2(rho_t)} dt, also an upper bound on d2
    double crude = 0.0;            // C max(R0, R1) |t2 - t1|
    double constant = 0.0;         // C
    double sup_speed = 0.0;        // sampled sup_t ||v||_{L2(rho_t)}
};
LipschitzBound wasserstein_lipschitz_bound(const InterpolationCurve& c, double t1, double t2,
                                           std::size_t t_samples = 9);

// ||v(.,t)||^2 in L2(rho_t), by Gauss quadrature in r.
double kinetic_energy(const InterpolationCurve& c, double t);

// d2 between two symmetric densities on the line, from their quantile functions.
double wasserstein2_1d(const RadialDensity& a, const RadialDensity& b, std::size_t samples = 20000);

}  // namespace aggsteady
