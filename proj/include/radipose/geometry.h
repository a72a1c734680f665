#pragma once

#include <optional>

#include <Eigen/Core>

#include "radipose/types.h"

namespace radipose {

// (p - center) / max(width, height), center = (width / 2, height / 2).
Eigen::Vector2d normalize(const Eigen::Vector2d& pixel, const ImageDims& dims);
Eigen::Vector2d denormalize(const Eigen::Vector2d& normalized, const ImageDims& dims);

// Homogeneous undistorted point [x, y, 1 + lambda * r^2]. Never throws.
Eigen::Vector3d undistort_homogeneous(const Eigen::Vector2d& p, const DivisionModel& d);

// Dehomogenized undistortion. Throws kDegenerateUndistortion when the
// third coordinate vanishes.
Eigen::Vector2d undistort(const Eigen::Vector2d& p, const DivisionModel& d);

// Inverse of undistort along the same ray, using the root continuous at
// lambda = 0. Throws kNoRealRoot when no real distorted radius exists.
Eigen::Vector2d distort(const Eigen::Vector2d& p_undistorted, const DivisionModel& d);

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

// F = K1^-1 ([t]x R)^T K2^-1. Requires both focals.
FundamentalMatrix fundamental_from_pose(const RelativePose& pose, const CameraModel& cam1,
                                        const CameraModel& cam2);
TwoViewModel make_model(const RelativePose& pose, const CameraModel& cam1,
                        const CameraModel& cam2);

// u(p1, lambda1)^T F u(p2, lambda2) on homogeneous (not dehomogenized) lifts.
double epipolar_residual(const Correspondence& c, const TwoViewModel& model);

// First-order squared distance to the epipolar curve in the distorted
// images: eps^2 / |d eps / d(x1, y1, x2, y2)|^2. Throws kGradientDegenerate.
double tangent_sampson_error(const Correspondence& c, const TwoViewModel& model);

struct Depths {
  double depth1 = 0.0;
  double depth2 = 0.0;
};

// Midpoint triangulation of two viewing rays given in their own camera
// frames. Returns nullopt for near-parallel rays.
std::optional<Depths> triangulate_midpoint(const Eigen::Vector3d& ray1,
                                           const Eigen::Vector3d& ray2,
                                           const RelativePose& pose);

// Calibrated viewing ray of a distorted point, or nullopt when the point
// does not undistort to a finite position.
std::optional<Eigen::Vector3d> viewing_ray(const Eigen::Vector2d& p, const CameraModel& cam);

bool triangulate_cheirality(const Correspondence& c, const RelativePose& pose,
                            const CameraModel& cam1, const CameraModel& cam2);

}  // namespace radipose
