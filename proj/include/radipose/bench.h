#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "radipose/types.h"

namespace radipose {

// A: wide range with a thinning tail below -1.5. B: small distortion.
// C: visible distortion.
enum class ScenarioKind { kA, kB, kC };

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::kC;
  bool shared_lambda = true;
  std::size_t pairs = 100;
  std::size_t points_per_pair = 500;
  double noise_px = 1.0;
  double outlier_fraction = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GroundTruth {
  RelativePose pose;
  CameraModel cam1;
  CameraModel cam2;
  bool has_lambda = true;  // false when no division-model reference exists
};

struct SyntheticPair {
  std::vector<Correspondence> corrs;
  std::vector<bool> is_inlier;
  GroundTruth gt;
  ImageDims dims1;
  ImageDims dims2;
};

// Image size used by the generator for both views.
inline constexpr ImageDims kSyntheticDims{1600, 1200};

double sample_lambda(ScenarioKind kind, std::mt19937_64& rng);

// Generator for pair `index` of a scenario; seeded with spec.seed ^ index.
SyntheticPair generate_pair(const ScenarioSpec& spec, std::size_t index);
SyntheticPair generate_pair(const ScenarioSpec& spec, std::mt19937_64& rng);

// Degrees.
double rotation_error(const Eigen::Matrix3d& R_gt, const Eigen::Matrix3d& R_est);
double translation_error(const Eigen::Vector3d& t_gt, const Eigen::Vector3d& t_est);

inline constexpr double kPoseFailureDeg = 180.0;
inline constexpr double kLambdaFailure = 10.0;
inline constexpr double kFocalFailure = 10.0;

struct PairEvaluation {
  double rot_err_deg = kPoseFailureDeg;
  double trans_err_deg = kPoseFailureDeg;
  double pose_err_deg = kPoseFailureDeg;
  std::optional<double> eps_lambda;  // absent when ground truth has no lambda
  std::optional<double> xi_focal;    // absent when ground truth has no focal
  double runtime = 0.0;              // seconds
  bool failed = false;               // a sentinel was substituted somewhere
};

PairEvaluation metric_errors(const GroundTruth& gt, const std::optional<TwoViewModel>& est,
                             bool shared);

// Exact area under the empirical recall curve on [0, tau], normalized.
double auc_at(std::span<const double> errors_deg, double tau_deg = 10.0);

struct AggregateReport {
  double avg_pose = 0.0, med_pose = 0.0;
  double auc_at_10 = 0.0;
  std::optional<double> avg_eps, med_eps;
  std::optional<double> avg_xi, med_xi;
  double avg_runtime = 0.0;  // seconds
  std::size_t count = 0;
  std::size_t failures = 0;
};

// Lower-middle median for even counts. Throws kEmptyInput.
double lower_median(std::vector<double> values);
AggregateReport aggregate(std::span<const PairEvaluation> evals);

}  // namespace radipose
