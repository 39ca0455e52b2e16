#include "phia/hamiltonian.hpp"

#include <string>
#include <utility>

namespace phia {

HamiltonianFn::HamiltonianFn(int dim, ValueFn value, GradientFn gradient,
                             std::optional<HessianFn> hessian)
    : dim_(dim),
      value_(std::move(value)),
      gradient_(std::move(gradient)),
      hessian_(std::move(hessian)) {
  require(dim > 0, "HamiltonianFn: dimension must be positive");
  require(static_cast<bool>(value_) && static_cast<bool>(gradient_),
          "HamiltonianFn: value and gradient are required");
}

HamiltonianFn HamiltonianFn::quadratic(const Matrix& q, const Vector& center) {
  require(q.rows() == q.cols(), "quadratic Hamiltonian: Q must be square");
  require(center.size() == q.rows(), "quadratic Hamiltonian: center dimension mismatch");
  const Matrix qs = 0.5 * (q + q.transpose());
  return HamiltonianFn(
      static_cast<int>(q.rows()),
      [qs, center](const Vector& x) {
        const Vector e = x - center;
        return 0.5 * e.dot(qs * e);
      },
      [qs, center](const Vector& x) -> Vector { return qs * (x - center); },
      [qs](const Vector&) -> Matrix { return qs; });
}

HamiltonianFn HamiltonianFn::quadratic(const Matrix& q) {
  return quadratic(q, Vector::Zero(q.rows()));
}

void HamiltonianFn::check_dim(const Vector& x) const {
  if (x.size() != dim_) {
    throw ContractViolation("HamiltonianFn: expected state of dimension " + std::to_string(dim_) +
                            ", got " + std::to_string(x.size()));
  }
}

double HamiltonianFn::value(const Vector& x) const {
  check_dim(x);
  return value_(x);
}

Vector HamiltonianFn::gradient(const Vector& x) const {
  check_dim(x);
  Vector g = gradient_(x);
  require(g.size() == dim_, "HamiltonianFn: gradient has wrong dimension");
  return g;
}

Matrix HamiltonianFn::hessian(const Vector& x) const {
  check_dim(x);
  if (hessian_) {
    Matrix h = (*hessian_)(x);
    require(h.rows() == dim_ && h.cols() == dim_, "HamiltonianFn: Hessian has wrong shape");
    return h;
  }
  return finite_difference_hessian(x);
}

Vector HamiltonianFn::finite_difference_gradient(const Vector& x) const {
  check_dim(x);
  const double h = fd_step(x);
  Vector g(dim_);
  Vector xp = x;
  for (int i = 0; i < dim_; ++i) {
    xp(i) = x(i) + h;
    const double fp = value_(xp);
    xp(i) = x(i) - h;
    const double fm = value_(xp);
    xp(i) = x(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

Matrix HamiltonianFn::finite_difference_hessian(const Vector& x) const {
  check_dim(x);
  const double h = fd_step(x);
  Matrix hess(dim_, dim_);
  Vector xp = x;
  for (int j = 0; j < dim_; ++j) {
    xp(j) = x(j) + h;
    const Vector gp = gradient_(xp);
    xp(j) = x(j) - h;
    const Vector gm = gradient_(xp);
    xp(j) = x(j);
    hess.col(j) = (gp - gm) / (2.0 * h);
  }
  return 0.5 * (hess + hess.transpose());
}

}  // namespace phia
