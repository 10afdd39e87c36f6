#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "aggsteady/interaction_operator.hpp"
#include "aggsteady/interpolation.hpp"
#include "aggsteady/potentials.hpp"
#include "aggsteady/radial_core.hpp"

namespace aggsteady {

// S[rho] = 1/(m-1) int rho^m, integrating the piecewise-linear interpolant (4-point Gauss per cell).
double entropy(const RadialDensity& rho, double m);
// (m/(m-1)) int_0^1 h(s)^{m-1} ds
double entropy_height(const HeightFunction& h, double m);
double entropy_on_curve(const InterpolationCurve& c, double t, double m);

// I[rho] = 1/2 int rho (W*rho) through the cached radial operator.
double interaction(const RadialDensity& rho, const Potential& w);

struct EnergyReport {
    double S = 0.0, I = 0.0, E = 0.0;
    double m = 0.0;
    nlohmann::json potential;
    nlohmann::json quadrature;
    nlohmann::json to_json() const;
};
EnergyReport energy_report(const RadialDensity& rho, double m, const Potential& w);

// Energies along an interpolation curve. Homogeneous potentials are evaluated
// on one reference grid x in [0,1] carrying rho_t(R_t x) and rescaled exactly;
// other potentials share one fixed grid on [0, max(R0,R1)]. Either way a
// single interaction operator serves every t, so t -> I[rho_t] is free of
// regridding noise. r_max overrides the fixed grid's extent (so several
// curves can share one cached operator); it must cover both supports.
class CurveEnergy {
public:
    CurveEnergy(InterpolationCurve curve, Potential w, double m, std::size_t nodes = 2048, double r_max = 0.0);

    const InterpolationCurve& curve() const { return c_; }
    double m() const { return m_; }
    bool scaled() const { return scaled_; }
    std::size_t nodes() const { return grid_.size(); }

    double entropy(double t) const;           // height route
    double entropy_physical(double t) const;  // sampled rho_t
    double interaction(double t) const;
    EnergyReport report(double t) const;

private:
    InterpolationCurve c_;
    Potential w_;
    double m_;
    bool scaled_ = false;
    RadialGrid grid_;
    std::shared_ptr<const InteractionOperator> op_;
};

// 1-D step potential W_a = 1_{r >= a} between two layers of heights h'(s1) = f,
// h'(s2) = g, i.e. intervals of half-length 1/(2f), 1/(2g). I(f,g) is f g times
// the measure of {|x| <= 1/(2f), |y| <= 1/(2g), |x - y| > a}.
enum class StepCase { Boundary = 0, Disjoint = 1, Nested = 2, Crossing = 3 };
StepCase step_case_1d(double f, double g, double a);
double step_integrand_1d(double f, double g, double a);
// d^2/dt^2 I(f + t f', g + t g') for the Crossing case (0 in the others).
double step_second_derivative_1d(double f, double g, double fp, double gp, double a);
// discriminant of that quadratic form in (f', g')
double step_discriminant_1d(double f, double g, double a);

struct StepCurveValue {
    double value = 0.0;  // 1/2 int int I ds1 ds2
    std::array<std::size_t, 4> cases{};  // counts indexed by StepCase
    std::size_t samples = 0;
};
// Midpoint rule on an N x N mass grid; exact ties with a case boundary are nudged.
StepCurveValue interaction_on_curve_1d(const InterpolationCurve& c, double t, double a, std::size_t mass_nodes = 400);
// Same layer-cake formula in n dimensions with the ball-pair I(R, r) (Gauss-Legendre tensor grid).
double interaction_on_curve_nd(const InterpolationCurve& c, double t, double a, std::size_t cells = 24);

struct ConvexityCertificate {
    std::vector<double> t, S, I, E;
    std::vector<double> d2S, d2I, d2E;  // second differences at interior points
    double scale_S = 0.0, scale_I = 0.0, scale_E = 0.0;
    double min_d2S = 0.0, max_d2S = 0.0, min_d2I = 0.0, min_d2E = 0.0;
    bool degenerate = false;        // identical endpoints
    bool interaction_convex = false;  // min d2I > 1e-10 scale_I
    bool energy_convex = false;       // min d2E > -tol scale_E
    bool entropy_concave = false;     // max d2S <= tol scale_S (expected for m < 2)
    bool pass = false;
    double m = 0.0;
    nlohmann::json to_json() const;
};
ConvexityCertificate certify_convexity(const InterpolationCurve& c, double m, const Potential& w, std::size_t t_points = 41,
                                       std::size_t nodes = 2048, double tol = 1e-7, std::size_t jobs = 0,
                                       double r_max = 0.0);

// Second differences x_{i-1} - 2 x_i + x_{i+1}.
std::vector<double> second_differences(const std::vector<double>& x);

struct DilationRow {
    double lambda, S, I, E;
};
struct DilationScan {
    std::vector<DilationRow> rows;
    double far_field = 0.0;         // lim_{lambda -> 0} E = W(inf)/2
    double fitted_exponent = 0.0;   // slope of log(E - far_field) over the two smallest lambda
};
// rho_lambda(x) = lambda^n rho(lambda x)
RadialDensity dilate(const RadialDensity& rho, double lambda);
DilationScan dilation_scan(const RadialDensity& rho, double m, const Potential& w, const std::vector<double>& lambdas);

}  // namespace aggsteady
