#pragma once

#include <functional>
#include <optional>

#include "phia/linalg.hpp"

namespace phia {

/// Smooth scalar energy function with gradient and Hessian evaluation.
///
/// When no analytic Hessian is supplied, hessian() returns the symmetrized
/// central finite difference of the gradient.
class HamiltonianFn {
 public:
  using ValueFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;
  using HessianFn = std::function<Matrix(const Vector&)>;

  HamiltonianFn(int dim, ValueFn value, GradientFn gradient,
                std::optional<HessianFn> hessian = std::nullopt);

  /// H(x) = 1/2 (x - center)^T Q (x - center), Q symmetric.
  static HamiltonianFn quadratic(const Matrix& q, const Vector& center);
  static HamiltonianFn quadratic(const Matrix& q);

  int dim() const { return dim_; }
  bool has_analytic_hessian() const { return hessian_.has_value(); }

  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  Matrix hessian(const Vector& x) const;

  /// Central-difference step used for all finite-difference checks.
  static double fd_step(const Vector& x) { return 1e-6 * (1.0 + x.norm()); }

  Vector finite_difference_gradient(const Vector& x) const;
  Matrix finite_difference_hessian(const Vector& x) const;

 private:
  void check_dim(const Vector& x) const;

  int dim_;
  ValueFn value_;
  GradientFn gradient_;
  std::optional<HessianFn> hessian_;
};

}  // namespace phia
