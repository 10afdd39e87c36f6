#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "aggsteady/error.hpp"

namespace aggsteady {

// c_n, volume of the unit ball in R^n (c_0 = 1).
double unit_ball_volume(int n);
// omega_n = n c_n, surface area of the unit sphere.
double unit_sphere_area(int n);

// Radial grid 0 = r_0 < r_1 < ... < r_M. weights[i] is the n-dimensional volume
// carried by the hat function of node i, so that sum_i w_i f_i integrates the
// piecewise-linear interpolant of f exactly. The cumulative weights define
// control-volume faces used by the finite-volume solver.
class RadialGrid {
public:
    RadialGrid() = default;
    RadialGrid(int dimension, std::vector<double> nodes);

    static RadialGrid uniform(int dimension, double r_max, std::size_t node_count);

    int dimension() const { return n_; }
    std::size_t size() const { return r_.size(); }
    const std::vector<double>& nodes() const { return r_; }
    const std::vector<double>& weights() const { return w_; }
    double r(std::size_t i) const { return r_[i]; }
    double weight(std::size_t i) const { return w_[i]; }
    double r_max() const { return r_.back(); }
    // Face between node i and i+1, and its (n-1)-dimensional area.
    double face(std::size_t i) const { return face_[i]; }
    double face_area(std::size_t i) const { return face_area_[i]; }
    double total_volume() const;
    bool same_nodes(const RadialGrid& other) const;

private:
    int n_ = 1;
    std::vector<double> r_;
    std::vector<double> w_;
    std::vector<double> face_;
    std::vector<double> face_area_;
};

// Nonnegative radial profile sampled at grid nodes, interpreted as the
// piecewise-linear interpolant in r.
class RadialDensity {
public:
    RadialDensity() = default;
    RadialDensity(RadialGrid grid, std::vector<double> values);

    const RadialGrid& grid() const { return grid_; }
    const std::vector<double>& values() const { return rho_; }
    double value(std::size_t i) const { return rho_[i]; }
    int dimension() const { return grid_.dimension(); }
    std::size_t size() const { return rho_.size(); }

    double mass() const { return mass_; }
    double linf() const { return linf_; }
    // Radius where the piecewise-linear interpolant vanishes (r_M if it never does).
    double support_radius() const { return support_; }
    // Index of the last node with a positive value.
    std::size_t last_positive() const { return last_pos_; }

    bool is_nonincreasing(double rel_tol = 1e-12) const;
    bool is_strictly_decreasing_on_support(double rel_tol = 1e-14) const;

    double evaluate(double r) const;
    RadialDensity normalized() const;
    RadialDensity scaled(double factor) const;
    RadialDensity resampled(const RadialGrid& grid) const;

private:
    RadialGrid grid_;
    std::vector<double> rho_;
    double mass_ = 0.0;
    double linf_ = 0.0;
    double support_ = 0.0;
    std::size_t last_pos_ = 0;
};

// (int rho^p)^{1/p}, and the bare integral int rho^p.
double lp_norm(const RadialDensity& rho, double p);
double lp_integral(const RadialDensity& rho, double p);
// int |x|^order rho(x) dx; order 0 is the mass.
double moment(const RadialDensity& rho, double order);
double linf(const RadialDensity& rho);
double support_radius(const RadialDensity& rho);
double l1_distance(const RadialDensity& a, const RadialDensity& b);
// Discrete Laplacian at the origin, n * 2 (rho_1 - rho_0) / r_1^2.
double laplacian_at_origin(const RadialDensity& rho);

// Density CSV ("r,rho") with a JSON sidecar holding dimension and mass.
void write_density_csv(const std::string& path, const RadialDensity& rho);
RadialDensity read_density_csv(const std::string& path, int dimension_if_no_sidecar = 0);
std::string sidecar_path(const std::string& csv_path);

}  // namespace aggsteady
