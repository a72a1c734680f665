#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "radipose/bench.h"
#include "radipose/errors.h"
#include "radipose/geometry.h"

namespace radipose {

namespace {

constexpr double kMeanDepth = 4.0;
constexpr int kMaxPoseAttempts = 100;

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector3d v;
  do {
    v = Eigen::Vector3d(n(rng), n(rng), n(rng));
  } while (v.norm() < 1e-6);
  return v.normalized();
}

// World-to-camera rotation whose optical axis points along `forward`.
Eigen::Matrix3d look_along(const Eigen::Vector3d& forward, const Eigen::Vector3d& up_hint) {
  const Eigen::Vector3d z = forward.normalized();
  Eigen::Vector3d x = up_hint.cross(z);
  if (x.norm() < 1e-6) x = Eigen::Vector3d::UnitX().cross(z);
  x.normalize();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d R;
  R.row(0) = x;
  R.row(1) = y;
  R.row(2) = z;
  return R;
}

bool inside(const Eigen::Vector2d& p, const ImageDims& dims) {
  const double s = dims.max_side();
  return std::abs(p.x()) <= 0.5 * dims.width / s && std::abs(p.y()) <= 0.5 * dims.height / s;
}

Eigen::Vector2d random_point(std::mt19937_64& rng, const ImageDims& dims) {
  const double s = dims.max_side();
  return {uniform(rng, -0.5, 0.5) * dims.width / s, uniform(rng, -0.5, 0.5) * dims.height / s};
}

}  // namespace

void ScenarioSpec::validate() const {
  if (pairs == 0 || points_per_pair == 0) {
    throw Error(ErrorCode::kInvalidArgument, "pairs and points per pair must be positive");
  }
  if (!(noise_px >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "noise must be >= 0");
  if (!(outlier_fraction >= 0.0 && outlier_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "outlier fraction must lie in [0, 1)");
  }
}

double sample_lambda(ScenarioKind kind, std::mt19937_64& rng) {
  switch (kind) {
    case ScenarioKind::kA: {
      // Density h on [-1.5, 0], falling linearly to h / 2 at -1.8.
      // Mass: 1.5 h uniform, 0.225 h in the ramp.
      constexpr double kUniformMass = 1.5 / 1.725;
      if (uniform(rng, 0.0, 1.0) < kUniformMass) return uniform(rng, -1.5, 0.0);
      // Inverse CDF of density 1 - s / 0.6 on s in [0, 0.3].
      const double u = uniform(rng, 0.0, 1.0);
      return -1.5 - 0.6 * (1.0 - std::sqrt(1.0 - 0.75 * u));
    }
    case ScenarioKind::kB: return uniform(rng, -0.3, 0.0);
    case ScenarioKind::kC: return uniform(rng, -1.8, -0.5);
  }
  return 0.0;
}

SyntheticPair generate_pair(const ScenarioSpec& spec, std::size_t index) {
  std::mt19937_64 rng(spec.seed ^ static_cast<std::uint64_t>(index));
  return generate_pair(spec, rng);
}

SyntheticPair generate_pair(const ScenarioSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  SyntheticPair out;
  out.dims1 = out.dims2 = kSyntheticDims;

  out.gt.cam1.focal = uniform(rng, 0.6, 1.5);
  out.gt.cam2.focal = spec.shared_lambda ? *out.gt.cam1.focal : uniform(rng, 0.6, 1.5);
  out.gt.cam1.division.lambda = sample_lambda(spec.kind, rng);
  out.gt.cam2.division.lambda =
      spec.shared_lambda ? out.gt.cam1.division.lambda : sample_lambda(spec.kind, rng);
  const CameraModel& cam1 = out.gt.cam1;
  const CameraModel& cam2 = out.gt.cam2;

  const std::size_t n = spec.points_per_pair;
  std::vector<Correspondence> clean;
  for (int attempt = 0; attempt < kMaxPoseAttempts && clean.size() < n; ++attempt) {
    clean.clear();
    // Camera 2 sits at baseline/depth ratio in [0.05, 0.5] and looks at the
    // scene center with a few degrees of jitter.
    const double baseline = uniform(rng, 0.05, 0.5) * kMeanDepth;
    const Eigen::Vector3d center2 = baseline * random_unit(rng);
    const Eigen::Vector3d target(0.0, 0.0, kMeanDepth);
    Eigen::Matrix3d R = look_along(target - center2, -Eigen::Vector3d::UnitY());
    const Eigen::Vector3d jitter = random_unit(rng) * uniform(rng, 0.0, 5.0) * std::numbers::pi / 180.0;
    R = Eigen::AngleAxisd(jitter.norm(), jitter.normalized()).toRotationMatrix() * R;
    const Eigen::Vector3d t = -R * center2;
    out.gt.pose = {R, t.normalized()};

    const std::size_t budget = 50 * n;
    for (std::size_t tries = 0; tries < budget && clean.size() < n; ++tries) {
      const Eigen::Vector2d d1 = random_point(rng, out.dims1);
      const double w1 = 1.0 + cam1.division.lambda * d1.squaredNorm();
      if (w1 < 0.05) continue;
      const Eigen::Vector2d u1 = d1 / w1;
      const double depth = uniform(rng, 0.5 * kMeanDepth, 1.5 * kMeanDepth);
      const Eigen::Vector3d X(u1.x() / *cam1.focal * depth, u1.y() / *cam1.focal * depth, depth);
      const Eigen::Vector3d X2 = R * X + t;
      if (X2.z() < 0.1) continue;
      const Eigen::Vector2d u2 = X2.head<2>() / X2.z() * *cam2.focal;
      Eigen::Vector2d d2;
      try {
        d2 = distort(u2, cam2.division);
      } catch (const Error&) {
        continue;
      }
      if (!inside(d2, out.dims2)) continue;
      if (1.0 + cam2.division.lambda * d2.squaredNorm() < 0.05) continue;
      clean.push_back({d1, d2});
    }
  }
  if (clean.size() < n) {
    throw Error(ErrorCode::kInvalidArgument, "generator could not place enough visible points");
  }

  std::normal_distribution<double> noise(0.0, spec.noise_px / out.dims1.max_side());
  out.corrs = std::move(clean);
  for (auto& c : out.corrs) {
    if (spec.noise_px > 0.0) {
      c.p1 += Eigen::Vector2d(noise(rng), noise(rng));
      c.p2 += Eigen::Vector2d(noise(rng), noise(rng));
    }
  }

  out.is_inlier.assign(n, true);
  const auto outliers =
      static_cast<std::size_t>(std::llround(spec.outlier_fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t k = 0; k < outliers; ++k) {
    const std::size_t i = order[k];
    out.corrs[i].p2 = random_point(rng, out.dims2);
    out.is_inlier[i] = false;
  }
  return out;
}

}  // namespace radipose
