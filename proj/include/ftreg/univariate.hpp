#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ftreg/errors.hpp"
#include "ftreg/interval.hpp"

namespace ftreg {

/// A family of basis functions on an interval. Two kinds:
///  - Legendre: polynomials orthonormalized with respect to the uniform
///    probability measure on the domain, so the Gram matrix is the identity.
///  - FixedKernel: Gaussian bumps exp(-(x-c)^2/sigma^2) at fixed centers.
class BasisSpec {
public:
    enum class Kind { Legendre, FixedKernel };

    static BasisSpec legendre(int degree, Interval domain);
    static BasisSpec fixed_kernel(std::vector<double> centers, double width,
                                  Interval domain);

    Kind kind() const { return kind_; }
    const Interval& domain() const { return domain_; }

    /// Number of basis functions.
    int size() const;

    int degree() const { return degree_; }
    const std::vector<double>& centers() const { return centers_; }
    double width() const { return width_; }

    /// Evaluates all basis functions at x into out (length size()).
    /// x outside the domain is clamped and counted, see clamp_warning_count().
    void eval_all(double x, std::span<double> out) const;

    /// Gram matrix <phi_i, phi_j> under the uniform probability measure on
    /// the domain (identity for Legendre, quadrature otherwise).
    Eigen::MatrixXd gram() const;

    bool operator==(const BasisSpec& o) const;

private:
    friend class UnivariateParam;
    BasisSpec() = default;

    Kind kind_ = Kind::Legendre;
    Interval domain_;
    int degree_ = 0;                // Legendre
    std::vector<double> centers_;   // FixedKernel
    double width_ = 1.0;            // FixedKernel
};

/// Total number of evaluations that required clamping x into a basis domain.
std::uint64_t clamp_warning_count();
void reset_clamp_warnings();

/// One scalar function of one variable together with its parameter block.
///
/// Variants:
///  - ConstZero / ConstOne: parameter-free tags (sparse core storage).
///  - Linear: theta' * phi(x) over a BasisSpec.
///  - MovingKernel: sum of Gaussians where both the coefficients and the
///    centers are parameters; theta = [coeffs..., centers...], width fixed.
class UnivariateParam {
public:
    enum class Kind { ConstZero, ConstOne, Linear, MovingKernel };

    static UnivariateParam zero();
    static UnivariateParam one();
    static UnivariateParam linear(BasisSpec basis, std::vector<double> coeffs);
    static UnivariateParam moving_kernel(std::vector<double> coeffs,
                                         std::vector<double> centers,
                                         double width, Interval domain);

    Kind kind() const { return kind_; }
    bool is_const() const {
        return kind_ == Kind::ConstZero || kind_ == Kind::ConstOne;
    }

    /// Number of optimizable parameters (0 for constants).
    int num_params() const { return static_cast<int>(theta_.size()); }

    /// Defined for Linear and MovingKernel.
    const Interval& domain() const;
    bool has_domain() const { return !is_const(); }

    /// Linear only.
    const BasisSpec& basis() const;

    /// MovingKernel only.
    double kernel_width() const;

    double eval(double x) const;

    /// d(eval)/d(theta_l) for all l into out (length num_params()).
    void grad(double x, std::span<double> out) const;

    /// Value and gradient in one pass; out may be empty for constants.
    double eval_grad(double x, std::span<double> out) const;

    std::span<const double> params() const { return theta_; }
    void set_params(std::span<const double> theta);
    UnivariateParam with_params(std::span<const double> theta) const;

private:
    UnivariateParam() = default;

    Kind kind_ = Kind::ConstZero;
    BasisSpec basis_;           // Linear
    std::vector<double> theta_;
    double width_ = 1.0;        // MovingKernel
    Interval domain_;
};

/// Integral of u1*u2 under the uniform probability measure on the domain.
/// For two Linear functions over the same orthonormal Legendre basis this is
/// the coefficient dot product; otherwise a 200-point Gauss-Legendre rule.
double inner_product(const UnivariateParam& u1, const UnivariateParam& u2,
                     const Interval& domain);

/// Evaluates every basis function at every point of a data column.
/// Returns an n x p matrix; row i holds phi(x_i).
Eigen::MatrixXd precompute_basis(const BasisSpec& basis,
                                 std::span<const double> column);

/// Precomputation for the basis of a Linear function. MovingKernel gradients
/// depend on the parameters, so they cannot be tabulated; throws
/// UnsupportedError for them (and for constants).
Eigen::MatrixXd precompute_basis(const UnivariateParam& u,
                                 std::span<const double> column);

} // namespace ftreg
