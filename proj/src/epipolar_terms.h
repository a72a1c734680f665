#pragma once

#include <array>

#include <Eigen/Core>

namespace radipose::internal {

// Row-major 3x3, templated so the same code runs on doubles and on dual
// numbers inside the LM Jacobian.
template <typename T>
using Mat3 = std::array<T, 9>;

template <typename T>
struct EpipolarTerms {
  T residual;  // u1^T F u2
  T grad_sq;   // |d residual / d(x1, y1, x2, y2)|^2
};

template <typename T>
EpipolarTerms<T> epipolar_terms(const Mat3<T>& F, const T& lambda1, const T& lambda2,
                                const Eigen::Vector2d& p1, const Eigen::Vector2d& p2) {
  const double x1 = p1.x(), y1 = p1.y(), x2 = p2.x(), y2 = p2.y();
  const T w1 = lambda1 * (x1 * x1 + y1 * y1) + 1.0;
  const T w2 = lambda2 * (x2 * x2 + y2 * y2) + 1.0;

  // F u2 and F^T u1.
  const T a0 = F[0] * x2 + F[1] * y2 + F[2] * w2;
  const T a1 = F[3] * x2 + F[4] * y2 + F[5] * w2;
  const T a2 = F[6] * x2 + F[7] * y2 + F[8] * w2;
  const T b0 = F[0] * x1 + F[3] * y1 + F[6] * w1;
  const T b1 = F[1] * x1 + F[4] * y1 + F[7] * w1;
  const T b2 = F[2] * x1 + F[5] * y1 + F[8] * w1;

  EpipolarTerms<T> out{a0 * x1 + a1 * y1 + a2 * w1, T{}};

  // d u / dx = [1, 0, 2 lambda x], d u / dy = [0, 1, 2 lambda y].
  const T g0 = a0 + a2 * (lambda1 * (2.0 * x1));
  const T g1 = a1 + a2 * (lambda1 * (2.0 * y1));
  const T g2 = b0 + b2 * (lambda2 * (2.0 * x2));
  const T g3 = b1 + b2 * (lambda2 * (2.0 * y2));
  out.grad_sq = g0 * g0 + g1 * g1 + g2 * g2 + g3 * g3;
  return out;
}

inline Mat3<double> to_array(const Eigen::Matrix3d& F) {
  return {F(0, 0), F(0, 1), F(0, 2), F(1, 0), F(1, 1), F(1, 2), F(2, 0), F(2, 1), F(2, 2)};
}

}  // namespace radipose::internal
