#pragma once

#include <random>

#include "phia/controller.hpp"
#include "phia/scenario.hpp"

namespace fx {

using namespace phia;

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline Matrix mat1(double a) { return Matrix::Constant(1, 1, a); }

inline PartitionedPHSystem rlc(double L = 1, double C = 1, double R = 1, double x2_star = 1) {
  return build_rlc({L, C, R, x2_star});
}

inline PartitionedPHSystem mechanical_scalar(double M = 1, double D = 1, double k = 1, double q_star = 0) {
  return build_mechanical({mat1(M), mat1(D), mat1(1.0), k, vec({q_star})});
}

inline Disturbance dist(const Vector& d1, const Vector& d2, double step = 0.0) { return {d1, d2, step}; }

inline Matrix random_skew(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  return a - a.transpose();
}

inline Matrix random_pd(int n, std::mt19937_64& rng, double floor = 0.5) {
  std::normal_distribution<double> g;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  return a * a.transpose() + floor * Matrix::Identity(n, n);
}

inline Matrix random_full_rank(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  for (;;) {
    Matrix a(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) a(i, j) = g(rng);
    if (linalg::rank_ratio(a) > 0.05) return a;
  }
}

// Constant-coefficient plant with separable quadratic H = 1/2 |x - x*|^2_Q.
inline PartitionedPHSystem linear(const Matrix& J1, const Matrix& J12, const Matrix& J2, const Matrix& R1,
                                  const Matrix& R2, const Matrix& Q, const Vector& x_star) {
  return build_linear({J1, J12, J2, R1, R2, Q, x_star});
}

// Random m = p plant with J12 invertible and block-diagonal PD Q.
inline PartitionedPHSystem random_square(int m, std::mt19937_64& rng) {
  const Matrix Q = linalg::block_diag(random_pd(m, rng), random_pd(m, rng));
  std::uniform_real_distribution<double> u(-1, 1);
  Vector xs(2 * m);
  for (int i = 0; i < 2 * m; ++i) xs(i) = u(rng);
  return linear(random_skew(m, rng), random_full_rank(m, m, rng), random_skew(m, rng), random_pd(m, rng),
                Matrix::Zero(m, m), Q, xs);
}

}  // namespace fx
