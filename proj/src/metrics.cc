#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "radipose/bench.h"
#include "radipose/errors.h"

namespace radipose {

namespace {

double degrees(double radians) { return radians * 180.0 / std::numbers::pi; }

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double rotation_error(const Eigen::Matrix3d& R_gt, const Eigen::Matrix3d& R_est) {
  const double c = ((R_gt * R_est.transpose()).trace() - 1.0) / 2.0;
  return degrees(std::acos(std::clamp(c, -1.0, 1.0)));
}

double translation_error(const Eigen::Vector3d& t_gt, const Eigen::Vector3d& t_est) {
  const double c = t_gt.normalized().dot(t_est.normalized());
  return degrees(std::acos(std::clamp(c, -1.0, 1.0)));
}

PairEvaluation metric_errors(const GroundTruth& gt, const std::optional<TwoViewModel>& est,
                             bool shared) {
  PairEvaluation e;
  if (est && est->pose) {
    e.rot_err_deg = rotation_error(gt.pose.rotation, est->pose->rotation);
    e.trans_err_deg = translation_error(gt.pose.translation, est->pose->translation);
    e.pose_err_deg = std::max(e.rot_err_deg, e.trans_err_deg);
  } else {
    e.failed = true;
  }

  if (gt.has_lambda) {
    if (est) {
      const double d1 = std::abs(gt.cam1.division.lambda - est->cam1.division.lambda);
      const double d2 = std::abs(gt.cam2.division.lambda - est->cam2.division.lambda);
      e.eps_lambda = shared ? d1 : 0.5 * (d1 + d2);
    } else {
      e.eps_lambda = kLambdaFailure;
    }
  }

  if (gt.cam1.focal && gt.cam2.focal) {
    if (est && est->cam1.focal && est->cam2.focal) {
      const double x1 = std::abs(*gt.cam1.focal - *est->cam1.focal) / *gt.cam1.focal;
      const double x2 = std::abs(*gt.cam2.focal - *est->cam2.focal) / *gt.cam2.focal;
      e.xi_focal = shared ? x1 : 0.5 * (x1 + x2);
    } else {
      e.xi_focal = kFocalFailure;
      e.failed = true;
    }
  }
  return e;
}

double auc_at(std::span<const double> errors_deg, double tau_deg) {
  if (errors_deg.empty()) throw Error(ErrorCode::kEmptyInput, "auc_at needs at least one error");
  if (!(tau_deg > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tau must be positive");
  // recall(t) steps up by 1/N at each error; its integral over [0, tau] is
  // sum over errors below tau of (tau - err) / N.
  double area = 0.0;
  for (double err : errors_deg) {
    if (!(err >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "errors must be >= 0");
    if (err < tau_deg) area += tau_deg - err;
  }
  return area / (tau_deg * static_cast<double>(errors_deg.size()));
}

double lower_median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "median of empty list");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

AggregateReport aggregate(std::span<const PairEvaluation> evals) {
  if (evals.empty()) throw Error(ErrorCode::kEmptyInput, "aggregate needs at least one evaluation");
  std::vector<double> pose, eps, xi, runtime;
  AggregateReport r;
  for (const auto& e : evals) {
    pose.push_back(e.pose_err_deg);
    runtime.push_back(e.runtime);
    if (e.eps_lambda) eps.push_back(*e.eps_lambda);
    if (e.xi_focal) xi.push_back(*e.xi_focal);
    if (e.failed) ++r.failures;
  }
  r.count = evals.size();
  r.avg_pose = mean(pose);
  r.med_pose = lower_median(pose);
  r.auc_at_10 = auc_at(pose, 10.0);
  if (!eps.empty()) {
    r.avg_eps = mean(eps);
    r.med_eps = lower_median(eps);
  }
  if (!xi.empty()) {
    r.avg_xi = mean(xi);
    r.med_xi = lower_median(xi);
  }
  r.avg_runtime = mean(runtime);
  return r;
}

}  // namespace radipose
