#pragma once

#include <functional>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace phia {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Matrix-valued field over the full plant state x = (x1, x2).
using MatrixField = std::function<Matrix(const Vector&)>;

// Dimension mismatch or other misuse of an operation's preconditions.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A structural assumption required by an operation does not hold.
class AssumptionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Solver or integrator failure.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractViolation(what);
}

inline MatrixField constant_field(Matrix value) {
  return [v = std::move(value)](const Vector&) { return v; };
}

namespace linalg {

// max |A + A^T|
inline double skew_defect(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return (a + a.transpose()).cwiseAbs().maxCoeff();
}

// max |A - A^T|
inline double symmetry_defect(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return (a - a.transpose()).cwiseAbs().maxCoeff();
}

// Smallest eigenvalue of the symmetric part of a square matrix.
inline double min_symmetric_eigenvalue(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// sigma_min / sigma_max over min(rows, cols) singular values; 0 for a zero matrix.
inline double rank_ratio(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& s = svd.singularValues();
  if (s(0) <= 0.0) return 0.0;
  return s(s.size() - 1) / s(0);
}

inline double condition_number(const Matrix& a) {
  const double r = rank_ratio(a);
  return r > 0.0 ? 1.0 / r : std::numeric_limits<double>::infinity();
}

inline Matrix block_diag(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

inline Vector concat(std::initializer_list<const Vector*> parts) {
  Eigen::Index n = 0;
  for (const auto* p : parts) n += p->size();
  Vector out(n);
  Eigen::Index at = 0;
  for (const auto* p : parts) {
    out.segment(at, p->size()) = *p;
    at += p->size();
  }
  return out;
}

inline double inf_norm(const Vector& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

// Solves a * x = b, refusing when a is numerically singular.
inline Vector solve_checked(const Matrix& a, const Vector& b, const std::string& what) {
  if (a.rows() != a.cols()) throw ContractViolation(what + ": matrix is not square");
  if (rank_ratio(a) <= 1e-12) throw AssumptionError(what + " is singular");
  return a.fullPivLu().solve(b);
}

inline Matrix inverse_checked(const Matrix& a, const std::string& what) {
  if (a.rows() != a.cols()) throw ContractViolation(what + ": matrix is not square");
  if (rank_ratio(a) <= 1e-12) throw AssumptionError(what + " is singular");
  return a.fullPivLu().inverse();
}

}  // namespace linalg
}  // namespace phia
