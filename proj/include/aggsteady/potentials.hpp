#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "aggsteady/error.hpp"

namespace aggsteady {

enum class PotentialKind { Riesz, Quadratic, Step, Tabulated, Modified, None };
enum class Growth { Bounded, Sublinear, Linear, Superlinear };

std::string to_string(PotentialKind kind);
std::string to_string(Growth growth);

// Smooth monotone cutoff: 0 for x <= 0, 1 for x >= 1, 6x^5 - 15x^4 + 10x^3 between.
double cutoff_eta(double x);
double cutoff_eta_prime(double x);
double cutoff_eta_second(double x);

class PotentialImpl;

// Radial interaction potential W(r), an immutable value. Besides W and W' it
// exposes the antiderivatives the product-integration convolution needs:
//   F1(x) = int_0^x W,  F2(x) = int_0^x F1,  Phi(u) = int_0^u t W(t) dt.
// Phi is only defined up to an additive constant when t W(t) is not integrable
// at 0; it is only ever used in differences.
class Potential {
public:
    Potential();  // zero potential

    static Potential riesz(double k);  // |x|^k / k, log|x| at k = 0
    static Potential quadratic();      // |x|^2 / 2
    static Potential step(double a);   // 1_{r >= a}
    // W' tabulated on 0 = r_0 < ... < r_J, monotone cubic between nodes,
    // held constant beyond r_J. W(0) = 0.
    static Potential tabulated(std::vector<double> r, std::vector<double> wprime);
    static Potential none();

    PotentialKind kind() const;
    // singularity / homogeneity exponent (W' <= C r^{k-1} near 0)
    double k() const;
    Growth growth() const;
    // true when W(lambda r) = lambda^k W(r) (k != 0) or W(r) + log(lambda) (k = 0)
    bool homogeneous() const;
    // F1, F2 exist (W locally integrable on the line).
    bool integrable_1d() const;

    double value(double r) const;
    double wprime(double r) const;  // rejects r <= 0 and step kind
    double wsecond(double r) const;
    double F1(double x) const;
    double F2(double x) const;
    double Phi(double u) const;

    // Adds a constant to W. Never changes forces or steady states.
    Potential shifted(double c) const;
    double shift() const { return shift_; }

    nlohmann::json to_json() const;
    static Potential from_json(const nlohmann::json& spec);
    // Accepts a JSON object or a shorthand such as "riesz:k=2", "quadratic", "step:a=1.5".
    static Potential parse(const std::string& text);
    std::string describe() const;
    // Canonical identity for caches (ignores the shift).
    std::string key() const;

    const PotentialImpl& impl() const { return *impl_; }
    explicit Potential(std::shared_ptr<const PotentialImpl> impl, double shift = 0.0);

private:
    std::shared_ptr<const PotentialImpl> impl_;
    double shift_ = 0.0;
};

double eval_wprime(const Potential& w, double r);

class PotentialImpl {
public:
    virtual ~PotentialImpl() = default;
    virtual PotentialKind kind() const = 0;
    virtual double k() const = 0;
    virtual Growth growth() const = 0;
    virtual bool homogeneous() const { return false; }
    virtual bool integrable_1d() const { return true; }
    virtual double value(double r) const = 0;
    virtual double wprime(double r) const = 0;
    virtual double wsecond(double r) const = 0;
    virtual double F1(double x) const = 0;
    virtual double F2(double x) const = 0;
    virtual double Phi(double u) const = 0;
    virtual nlohmann::json to_json() const = 0;
};

// Tail modification W_{R,eps} = w1 + w2 with
//   w1' = W'(1 - eta((r-2R)/R)),  w2' = eps eta((r-2R)/R),
// normalized so that w1(3R) = 0 and w2 = 0 on (0, 2R]. On (0, 2R] it differs
// from the base by the constant offset().
class ModifiedPotential {
public:
    ModifiedPotential(Potential base, double R, double epsilon);

    const Potential& base() const { return base_; }
    double R() const { return R_; }
    double epsilon() const { return eps_; }
    // W_{R,eps} - W on (0, 2R]
    double offset() const;
    const Potential& potential() const { return full_; }
    const Potential& w1() const { return w1_; }
    const Potential& w2() const { return w2_; }
    double w1_at_3R() const { return w1_.value(3.0 * R_); }
    // sup over r >= 2R of |w2'' + (n-1) w2'/r|, sampled
    double laplacian_w2_sup(int n, std::size_t samples = 20001) const;

private:
    Potential base_;
    double R_, eps_;
    Potential full_, w1_, w2_;
};

ModifiedPotential forge_tail(const Potential& w, double R, double epsilon);

// Weighted atoms (a_j, W'(a_j) da_j) with W(r) ~ sum_j weight_j 1_{r >= a_j} + w0 on [0, A].
struct StepDecomposition {
    std::vector<double> a;
    std::vector<double> weight;
    std::vector<double> width;  // quadrature cell of each atom (0 for an exact step)
    double w0 = 0.0;
    double reconstruct(double r) const;
};
StepDecomposition step_decompose(const Potential& w, double A, std::size_t nodes, double truncation = 0.0);

}  // namespace aggsteady
