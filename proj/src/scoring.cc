#include <algorithm>

#include "epipolar_terms.h"
#include "radipose/errors.h"
#include "radipose/robust.h"

namespace radipose {

TruncatedScore TruncatedScore::from_pixels(double threshold_px, const ImageDims& dims1,
                                           const ImageDims& dims2) {
  if (!(threshold_px > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "inlier threshold must be positive");
  }
  const double side = std::max(dims1.max_side(), dims2.max_side());
  const double t = threshold_px / side;
  return {t * t};
}

ScoreResult score_model(const TwoViewModel& model, std::span<const Correspondence> corrs,
                        const TruncatedScore& s) {
  const auto F = internal::to_array(model.fundamental.matrix());
  const double l1 = model.cam1.division.lambda;
  const double l2 = model.cam2.division.lambda;

  ScoreResult out;
  out.inlier_mask.assign(corrs.size(), false);
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const auto terms = internal::epipolar_terms<double>(F, l1, l2, corrs[i].p1, corrs[i].p2);
    if (!(terms.grad_sq > 1e-28)) continue;
    const double err = terms.residual * terms.residual / terms.grad_sq;
    if (err < s.threshold_sq) {
      out.score += s.threshold_sq - err;
      out.inlier_mask[i] = true;
      ++out.num_inliers;
    }
  }
  return out;
}

double truncated_cost(const TwoViewModel& model, std::span<const Correspondence> corrs,
                      const std::vector<bool>& mask, const TruncatedScore& s) {
  const auto F = internal::to_array(model.fundamental.matrix());
  const double l1 = model.cam1.division.lambda;
  const double l2 = model.cam2.division.lambda;
  double cost = 0.0;
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    if (!mask[i]) continue;
    const auto terms = internal::epipolar_terms<double>(F, l1, l2, corrs[i].p1, corrs[i].p2);
    const double err = terms.grad_sq > 1e-28 ? terms.residual * terms.residual / terms.grad_sq
                                             : s.threshold_sq;
    cost += err < s.threshold_sq ? err : s.threshold_sq;
  }
  return cost;
}

}  // namespace radipose
