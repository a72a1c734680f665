#include "radipose/geometry.h"

#include <cmath>

#include <Eigen/Dense>

#include "epipolar_terms.h"
#include "radipose/errors.h"

namespace radipose {

namespace {

constexpr double kMinHomogeneousScale = 1e-12;
constexpr double kMinGradientNorm = 1e-14;

}  // namespace

FundamentalMatrix::FundamentalMatrix(const Eigen::Matrix3d& raw) {
  const double norm = raw.norm();
  if (!std::isfinite(norm) || norm == 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "fundamental matrix must be finite and nonzero");
  }
  m_ = raw / norm;
  Eigen::Index row = 0, col = 0;
  m_.cwiseAbs().maxCoeff(&row, &col);
  if (m_(row, col) < 0.0) m_ = -m_;
}

Eigen::Vector2d normalize(const Eigen::Vector2d& pixel, const ImageDims& dims) {
  const Eigen::Vector2d center(0.5 * dims.width, 0.5 * dims.height);
  return (pixel - center) / static_cast<double>(dims.max_side());
}

Eigen::Vector2d denormalize(const Eigen::Vector2d& normalized, const ImageDims& dims) {
  const Eigen::Vector2d center(0.5 * dims.width, 0.5 * dims.height);
  return normalized * static_cast<double>(dims.max_side()) + center;
}

Eigen::Vector3d undistort_homogeneous(const Eigen::Vector2d& p, const DivisionModel& d) {
  return {p.x(), p.y(), 1.0 + d.lambda * p.squaredNorm()};
}

Eigen::Vector2d undistort(const Eigen::Vector2d& p, const DivisionModel& d) {
  const double w = 1.0 + d.lambda * p.squaredNorm();
  if (std::abs(w) < kMinHomogeneousScale) {
    throw Error(ErrorCode::kDegenerateUndistortion, "point maps to infinity");
  }
  return p / w;
}

Eigen::Vector2d distort(const Eigen::Vector2d& p_undistorted, const DivisionModel& d) {
  const double r_u = p_undistorted.norm();
  if (d.lambda == 0.0 || r_u == 0.0) return p_undistorted;
  const double disc = 1.0 - 4.0 * d.lambda * r_u * r_u;
  if (disc < 0.0) {
    throw Error(ErrorCode::kNoRealRoot, "no real distorted radius for this lambda");
  }
  // Smaller root of lambda r_u r_d^2 - r_d + r_u = 0, cancellation-free.
  const double r_d = 2.0 * r_u / (1.0 + std::sqrt(disc));
  return p_undistorted * (r_d / r_u);
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

FundamentalMatrix fundamental_from_pose(const RelativePose& pose, const CameraModel& cam1,
                                        const CameraModel& cam2) {
  if (!cam1.focal || !cam2.focal) {
    throw Error(ErrorCode::kInvalidArgument, "fundamental_from_pose needs both focals");
  }
  const Eigen::Matrix3d E = skew(pose.translation) * pose.rotation;
  const Eigen::Vector3d k1_inv(1.0 / *cam1.focal, 1.0 / *cam1.focal, 1.0);
  const Eigen::Vector3d k2_inv(1.0 / *cam2.focal, 1.0 / *cam2.focal, 1.0);
  return FundamentalMatrix(k1_inv.asDiagonal() * E.transpose() * k2_inv.asDiagonal());
}

TwoViewModel make_model(const RelativePose& pose, const CameraModel& cam1,
                        const CameraModel& cam2) {
  return {fundamental_from_pose(pose, cam1, cam2), cam1, cam2, pose};
}

double epipolar_residual(const Correspondence& c, const TwoViewModel& model) {
  const Eigen::Vector3d u1 = undistort_homogeneous(c.p1, model.cam1.division);
  const Eigen::Vector3d u2 = undistort_homogeneous(c.p2, model.cam2.division);
  return u1.dot(model.fundamental.matrix() * u2);
}

double tangent_sampson_error(const Correspondence& c, const TwoViewModel& model) {
  const auto terms = internal::epipolar_terms<double>(
      internal::to_array(model.fundamental.matrix()), model.cam1.division.lambda,
      model.cam2.division.lambda, c.p1, c.p2);
  if (terms.grad_sq < kMinGradientNorm * kMinGradientNorm) {
    throw Error(ErrorCode::kGradientDegenerate, "epipolar gradient vanishes");
  }
  return terms.residual * terms.residual / terms.grad_sq;
}

std::optional<Depths> triangulate_midpoint(const Eigen::Vector3d& ray1,
                                           const Eigen::Vector3d& ray2,
                                           const RelativePose& pose) {
  // Camera-2 center and ray expressed in the camera-1 frame.
  const Eigen::Vector3d center2 = -pose.rotation.transpose() * pose.translation;
  const Eigen::Vector3d dir2 = pose.rotation.transpose() * ray2;

  // Minimize |s1 ray1 - (center2 + s2 dir2)|^2.
  const double a = ray1.dot(ray1);
  const double b = ray1.dot(dir2);
  const double c = dir2.dot(dir2);
  const double d = ray1.dot(center2);
  const double e = dir2.dot(center2);
  const double denom = a * c - b * b;
  if (denom <= 1e-12 * a * c) return std::nullopt;

  const double s1 = (c * d - b * e) / denom;
  const double s2 = (b * d - a * e) / denom;
  const Eigen::Vector3d X = 0.5 * (s1 * ray1 + center2 + s2 * dir2);
  return Depths{X.z(), (pose.rotation * X + pose.translation).z()};
}

std::optional<Eigen::Vector3d> viewing_ray(const Eigen::Vector2d& p, const CameraModel& cam) {
  const Eigen::Vector3d u = undistort_homogeneous(p, cam.division);
  const double f = cam.focal.value_or(1.0);
  if (std::abs(u.z()) < kMinHomogeneousScale) return std::nullopt;
  // Scale so the third coordinate is +1: the ray points into the image.
  return Eigen::Vector3d(u.x() / (u.z() * f), u.y() / (u.z() * f), 1.0);
}

bool triangulate_cheirality(const Correspondence& c, const RelativePose& pose,
                            const CameraModel& cam1, const CameraModel& cam2) {
  const auto ray1 = viewing_ray(c.p1, cam1);
  const auto ray2 = viewing_ray(c.p2, cam2);
  if (!ray1 || !ray2) return false;
  const auto depths = triangulate_midpoint(*ray1, *ray2, pose);
  return depths && depths->depth1 > 0.0 && depths->depth2 > 0.0;
}

}  // namespace radipose
