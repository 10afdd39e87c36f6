#pragma once

#include <cstddef>
#include <memory>

#include <Eigen/Dense>

#include "aggsteady/potentials.hpp"
#include "aggsteady/radial_core.hpp"

namespace aggsteady {

// Sphere average of W(|r1 e - r2 w|) over unit vectors w, the radial convolution kernel.
double sphere_averaged_kernel(int n, const Potential& w, double r1, double r2);

// Discrete convolution on a radial grid. G_ij = int phi_j(r) K(r_i, r) dx with
// phi_j the hat function of node j, so (G rho)_i is W*rho at r_i for the
// piecewise-linear rho. n = 1 uses exact product integration through F2; other
// dimensions use Gauss rules with graded nodes next to the diagonal.
//
// Quadratic W gets an exact rank-two representation, the zero potential a zero
// operator. Matrices are cached per (grid, potential) and shared read-only.
class InteractionOperator {
public:
    InteractionOperator(const RadialGrid& grid, const Potential& w);

    const RadialGrid& grid() const { return grid_; }
    const Potential& potential() const { return w_; }

    // (W*rho)(r_i)
    Eigen::VectorXd convolve(const Eigen::VectorXd& rho) const;
    // G^T v
    Eigen::VectorXd transpose_apply(const Eigen::VectorXd& v) const;
    // dI/drho_i / w_i for I(rho) = energy(rho); the symmetrized convolution
    Eigen::VectorXd gradient(const Eigen::VectorXd& rho) const;
    // 1/2 sum_i w_i rho_i (W*rho)(r_i)
    double energy(const Eigen::VectorXd& rho) const;
    // Dense G including the shift. Only for moderate grid sizes.
    Eigen::MatrixXd matrix() const;

    struct Kernel;

private:
    RadialGrid grid_;
    Potential w_;
    Eigen::VectorXd weights_;
    std::shared_ptr<const Kernel> kernel_;
};

// Number of cached kernels and their total size, for diagnostics.
std::size_t interaction_cache_entries();
void clear_interaction_cache();

Eigen::VectorXd to_eigen(const std::vector<double>& v);

}  // namespace aggsteady
