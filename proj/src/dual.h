#pragma once

#include <cmath>

#include <Eigen/Core>

namespace radipose::internal {

// Forward-mode dual number with a fixed-width tangent. Only the operations
// the epipolar residual needs are defined.
template <int N>
struct Dual {
  using Tangent = Eigen::Matrix<double, N, 1>;

  double a = 0.0;
  Tangent v = Tangent::Zero();

  Dual() = default;
  Dual(double value) : a(value) {}  // NOLINT: implicit lift of constants
  Dual(double value, const Tangent& tangent) : a(value), v(tangent) {}

  static Dual variable(double value, int index) {
    Dual d(value);
    d.v(index) = 1.0;
    return d;
  }
};

template <int N> Dual<N> operator+(const Dual<N>& x, const Dual<N>& y) { return {x.a + y.a, x.v + y.v}; }
template <int N> Dual<N> operator-(const Dual<N>& x, const Dual<N>& y) { return {x.a - y.a, x.v - y.v}; }
template <int N> Dual<N> operator-(const Dual<N>& x) { return {-x.a, -x.v}; }
template <int N> Dual<N> operator*(const Dual<N>& x, const Dual<N>& y) { return {x.a * y.a, x.a * y.v + y.a * x.v}; }
template <int N> Dual<N> operator/(const Dual<N>& x, const Dual<N>& y) {
  const double inv = 1.0 / y.a;
  return {x.a * inv, (x.v - (x.a * inv) * y.v) * inv};
}

template <int N> Dual<N> operator+(const Dual<N>& x, double s) { return {x.a + s, x.v}; }
template <int N> Dual<N> operator+(double s, const Dual<N>& x) { return {x.a + s, x.v}; }
template <int N> Dual<N> operator-(const Dual<N>& x, double s) { return {x.a - s, x.v}; }
template <int N> Dual<N> operator*(const Dual<N>& x, double s) { return {x.a * s, x.v * s}; }
template <int N> Dual<N> operator*(double s, const Dual<N>& x) { return {x.a * s, x.v * s}; }
template <int N> Dual<N> operator/(const Dual<N>& x, double s) { return {x.a / s, x.v / s}; }

template <int N> Dual<N> sqrt(const Dual<N>& x) {
  const double r = std::sqrt(x.a);
  return {r, x.v * (0.5 / r)};
}

}  // namespace radipose::internal
