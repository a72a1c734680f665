#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "radipose/types.h"

namespace radipose {

// MSAC-style truncation of the tangent Sampson error.
struct TruncatedScore {
  double threshold_sq = 0.0;  // normalized units squared

  // (px / s)^2 where s is the longest side over both images.
  static TruncatedScore from_pixels(double threshold_px, const ImageDims& dims1,
                                    const ImageDims& dims2);
};

struct ScoreResult {
  double score = 0.0;  // sum of (threshold_sq - loss); higher is better
  std::vector<bool> inlier_mask;
  std::size_t num_inliers = 0;
};

ScoreResult score_model(const TwoViewModel& model, std::span<const Correspondence> corrs,
                        const TruncatedScore& s);

enum class Engine { kSevenPoint, kEightPoint, kNinePointFLambda };

int sample_size(Engine engine);

// Candidate undistortion parameters per camera. With shared = true only the
// diagonal pairs (u1[i], u1[i]) are tried, otherwise every combination.
struct SamplingStrategy {
  std::vector<double> u1{0.0};
  std::vector<double> u2{0.0};
  bool shared = false;

  static SamplingStrategy shared_set(std::vector<double> lambdas);
  void validate() const;
};

// Per-camera priors supplied as data. Gravity is carried along for callers
// but no in-library solver consumes it.
struct PriorInjection {
  std::optional<double> lambda1, lambda2;
  std::optional<double> focal1, focal2;
  std::optional<Eigen::Vector3d> gravity1, gravity2;

  bool calibrated() const { return focal1.has_value() && focal2.has_value(); }
  void validate() const;
};

using Strategy = std::variant<SamplingStrategy, PriorInjection>;

struct RefineBlocks {
  bool rotation = true;
  bool translation = true;
  bool focal1 = true;
  bool focal2 = true;
  bool lambda1 = true;
  bool lambda2 = true;

  static RefineBlocks all() { return {}; }
  static RefineBlocks pose_only() { return {true, true, false, false, false, false}; }
  // Comma list drawn from R, t, f1, f2, l1, l2; "none" for the empty set.
  static RefineBlocks parse(const std::string& text);
  std::string render() const;
  bool operator==(const RefineBlocks&) const = default;
};

struct RansacConfig {
  std::size_t max_iterations = 1000;
  std::size_t min_iterations = 20;
  double confidence = 0.9999;
  double inlier_threshold_px = 3.0;
  std::uint64_t seed = 0;
  RefineBlocks refine_blocks;
  std::size_t lo_max_lm_iterations = 25;
  std::size_t final_lm_iterations = 100;
  // Both images share one focal and one lambda: Sturm instead of Bougnoux,
  // and tied parameters during refinement.
  bool shared_intrinsics = false;

  void validate() const;
};

struct RansacResult {
  TwoViewModel model;
  std::vector<bool> inlier_mask;
  std::size_t num_inliers = 0;
  double score = 0.0;
  std::size_t iterations_run = 0;
  double wall_time = 0.0;  // seconds
  std::size_t lo_runs = 0;
  // Refinements whose truncated cost exceeded their starting cost; always 0.
  std::size_t lo_cost_increases = 0;
};

// Throws kNotEnoughCorrespondences or kNoModelFound.
RansacResult ransac_estimate(std::span<const Correspondence> corrs, const ImageDims& dims1,
                             const ImageDims& dims2, Engine engine, const Strategy& strategy,
                             const RansacConfig& cfg);

// Sum over masked points of min(tangent Sampson error, threshold_sq).
double truncated_cost(const TwoViewModel& model, std::span<const Correspondence> corrs,
                      const std::vector<bool>& mask, const TruncatedScore& s);

// Levenberg-Marquardt on the truncated tangent Sampson cost of the masked
// points. The model needs a pose or known focals to start from. Returns the
// input unchanged if refinement does not lower the cost. Throws
// kDecompositionFailed when no pose can be extracted.
TwoViewModel lo_refine(const TwoViewModel& model, std::span<const Correspondence> corrs,
                       const std::vector<bool>& mask, const TruncatedScore& s,
                       const RansacConfig& cfg, std::size_t max_lm_iterations);

inline TwoViewModel lo_refine(const TwoViewModel& model, std::span<const Correspondence> corrs,
                              const std::vector<bool>& mask, const TruncatedScore& s,
                              const RansacConfig& cfg) {
  return lo_refine(model, corrs, mask, s, cfg, cfg.lo_max_lm_iterations);
}

// Local parametrization used by lo_refine, exposed for derivative checks.
// Parameters are ordered rotation(3), translation(2), focal1, focal2,
// lambda1, lambda2, with disabled blocks dropped and tied entries merged
// when intrinsics are shared.
struct ResidualJacobian {
  double residual = 0.0;  // signed; residual^2 is the tangent Sampson error
  Eigen::VectorXd jacobian;
};

std::size_t parameter_count(const RefineBlocks& blocks, bool shared);

ResidualJacobian residual_jacobian(const TwoViewModel& model, const Correspondence& c,
                                   const RefineBlocks& blocks, bool shared);

// Applies a local increment: R <- exp([dr]x) R, t <- normalize(t + B dt),
// scalars additive with box projection. Requires a pose and focals.
TwoViewModel apply_increment(const TwoViewModel& model, const Eigen::VectorXd& delta,
                             const RefineBlocks& blocks, bool shared);

}  // namespace radipose
