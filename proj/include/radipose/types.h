#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

namespace radipose {

// Pixel size of an image. Normalized coordinates divide by max_side().
struct ImageDims {
  int width = 1;
  int height = 1;

  int max_side() const { return width > height ? width : height; }
  bool valid() const { return width >= 1 && height >= 1; }
};

// One-parameter division model. Undistortion lifts a distorted point x to
// [x, y, 1 + lambda * |x|^2] with the distortion center at the origin.
struct DivisionModel {
  static constexpr double kMinLambda = -2.0;
  static constexpr double kMaxLambda = 0.5;

  double lambda = 0.0;

  bool plausible() const { return lambda >= kMinLambda && lambda <= kMaxLambda; }
};

// A 2D-2D match in normalized distorted coordinates.
struct Correspondence {
  Eigen::Vector2d p1 = Eigen::Vector2d::Zero();
  Eigen::Vector2d p2 = Eigen::Vector2d::Zero();
};

// Scale-free 3x3 matrix F with u(p1)^T F u(p2) = 0. Stored canonicalized:
// unit Frobenius norm and the largest-magnitude entry positive.
class FundamentalMatrix {
 public:
  FundamentalMatrix() = default;
  // Throws Error(kInvalidArgument) on a zero or non-finite matrix.
  explicit FundamentalMatrix(const Eigen::Matrix3d& raw);

  const Eigen::Matrix3d& matrix() const { return m_; }

 private:
  Eigen::Matrix3d m_ = Eigen::Matrix3d::Zero();
};

// Maps camera-1 coordinates to camera-2 coordinates: X2 = R * X1 + t.
// translation is a unit direction.
struct RelativePose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::UnitX();
};

// Principal point and distortion center sit at the normalized origin.
// focal is in normalized units and may be unknown for uncalibrated solvers.
struct CameraModel {
  std::optional<double> focal;
  DivisionModel division;
};

struct TwoViewModel {
  FundamentalMatrix fundamental;
  CameraModel cam1;
  CameraModel cam2;
  std::optional<RelativePose> pose;
};

}  // namespace radipose
