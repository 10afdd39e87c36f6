#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "aggsteady/radial_core.hpp"

namespace aggsteady {

// Chebyshev points s_j = (1 - cos(pi j/(K+1)))/2, j = 1..K, clustered at both ends of (0,1).
std::vector<double> chebyshev_mass_grid(std::size_t count = 4096);
std::vector<double> uniform_mass_grid(std::size_t count);

// Height function h(s) of a radially decreasing probability density, sampled on
// a mass grid 0 < s_1 < ... < s_K < 1.
//
// Evaluation treats h' as the monotone (Hyman-limited) cubic through the
// samples, with an extra node at s = 0 carrying h'(0+) = 1/|supp rho|, and
// h(s) = int_0^s h'. Above s_K the profile is closed by a cone on the ball
// {rho > h(s_K)}, which is what a piecewise-linear density looks like near its
// maximum. Linear combinations act on the sampled data, so evaluation is linear
// in (h0, h1) for the interpolation curve.
class HeightFunction {
public:
    HeightFunction() = default;
    HeightFunction(int dimension, std::vector<double> s, std::vector<double> h, std::vector<double> hprime,
                   double hprime_at_zero, bool strict = true);

    static HeightFunction combine(double a, const HeightFunction& f, double b, const HeightFunction& g);

    int dimension() const { return n_; }
    std::size_t size() const { return s_.size(); }
    const std::vector<double>& s() const { return s_; }
    // Sampled heights as supplied (for transforms: exact values of the inverse mass map).
    const std::vector<double>& h() const { return h_; }
    const std::vector<double>& hprime() const { return hp_; }
    double hprime_at_zero() const { return hp0_; }
    // False when the source had plateaus (h' constant on a mass interval).
    bool strict() const { return strict_; }

    double height(double s) const;
    double derivative(double s) const;
    double top() const;  // h(1) = max of the density
    double support_radius() const;

    // s with h'(s) = slope. Throws InvalidInput on a plateau of h' at that slope.
    double mass_at_slope(double slope) const;
    // rho(r) = h(s) where c_n r^n h'(s) = 1.
    double density_at(double r) const;
    // int_0^1 h(s)^q ds.
    double power_integral(double q) const;

    HeightFunction resampled(const std::vector<double>& s) const;

    // h' non-decreasing and h increasing (tolerance relative to the data scale).
    bool is_valid(double tol = 1e-10) const;

private:
    void build();
    std::size_t cell_of(double s) const;  // index k in the extended grid with S_k <= s < S_{k+1}
    double cell_integral(std::size_t k, double t) const;
    double cell_slope(std::size_t k, double t) const;
    double cap_height(double s) const;

    int n_ = 1;
    std::vector<double> s_, h_, hp_;
    double hp0_ = 0.0;
    bool strict_ = true;
    // extended nodes: S_0 = 0 then s_1..s_K
    std::vector<double> xs_, ys_, ds_, cum_;
    double cap_ = 0.0;  // cone height above h(s_K)
};

// Exact for the piecewise-linear interpolant of rho. The density is normalized
// by its own mass before the transform.
HeightFunction height_from_density(const RadialDensity& rho, const std::vector<double>& mass_grid);
HeightFunction height_from_density(const RadialDensity& rho);

// Level-set radius r(h) with rho > h exactly on B(0, r(h)), piecewise-linear rho.
double level_set_radius(const RadialDensity& rho, double height);

RadialDensity density_from_height(const HeightFunction& h, const RadialGrid& grid);
RadialDensity density_from_height(const HeightFunction& h, int dimension, const RadialGrid& grid);

void write_height_csv(const std::string& path, const HeightFunction& h);
HeightFunction read_height_csv(const std::string& path);

}  // namespace aggsteady
