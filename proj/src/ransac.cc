#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "radipose/errors.h"
#include "radipose/geometry.h"
#include "radipose/robust.h"
#include "radipose/solvers.h"

namespace radipose {

namespace {

struct Hypothesis {
  Eigen::Matrix3d F;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::optional<double> focal1, focal2;
};

std::vector<Correspondence> undistort_sample(std::span<const Correspondence> sample,
                                             double lambda1, double lambda2) {
  std::vector<Correspondence> out(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    out[i].p1 = undistort(sample[i].p1, {lambda1});
    out[i].p2 = undistort(sample[i].p2, {lambda2});
  }
  return out;
}

SolverOutput run_pinhole(Engine engine, std::span<const Correspondence> pts) {
  return engine == Engine::kSevenPoint ? seven_point_F(pts) : eight_point_F(pts);
}

// Every solver failure on a random sample just means no hypotheses.
// Candidates get the given lambdas, or keep their own when none are given.
template <typename Fn>
void collect(Fn&& solve, std::optional<std::pair<double, double>> lambdas,
             std::vector<Hypothesis>& out) {
  try {
    for (const auto& c : solve().candidates) {
      const auto [l1, l2] = lambdas.value_or(
          std::pair{c.cam1.division.lambda, c.cam2.division.lambda});
      out.push_back({c.fundamental.matrix(), l1, l2, std::nullopt, std::nullopt});
    }
  } catch (const Error&) {
  }
}

void pinhole_hypotheses(Engine engine, std::span<const Correspondence> sample, double lambda1,
                        double lambda2, std::vector<Hypothesis>& out) {
  collect(
      [&] {
        const auto pts = undistort_sample(sample, lambda1, lambda2);
        return run_pinhole(engine, pts);
      },
      std::pair{lambda1, lambda2}, out);
}

// Prior focals and lambdas: calibrate the sample, fit F linearly, project it
// onto the essential manifold and map back with the prior calibrations.
void calibrated_hypotheses(std::span<const Correspondence> sample, const PriorInjection& prior,
                           std::vector<Hypothesis>& out) {
  const double l1 = prior.lambda1.value_or(0.0), l2 = prior.lambda2.value_or(0.0);
  const double f1 = *prior.focal1, f2 = *prior.focal2;
  try {
    auto pts = undistort_sample(sample, l1, l2);
    for (auto& c : pts) {
      c.p1 /= f1;
      c.p2 /= f2;
    }
    const Eigen::Matrix3d Ecal = eight_point_F(pts).candidates.front().fundamental.matrix();
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(Ecal, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Matrix3d E =
        svd.matrixU() * Eigen::Vector3d(1.0, 1.0, 0.0).asDiagonal() * svd.matrixV().transpose();
    const Eigen::Vector3d k1(1.0 / f1, 1.0 / f1, 1.0), k2(1.0 / f2, 1.0 / f2, 1.0);
    out.push_back({k1.asDiagonal() * E * k2.asDiagonal(), l1, l2, f1, f2});
  } catch (const Error&) {
  }
}

// Completes intrinsics of a hypothesis; nullopt rejects it.
std::optional<TwoViewModel> to_model(const Hypothesis& h, bool shared) {
  if (!DivisionModel{h.lambda1}.plausible() || !DivisionModel{h.lambda2}.plausible()) {
    return std::nullopt;
  }
  if (!h.F.allFinite() || h.F.norm() == 0.0) return std::nullopt;
  TwoViewModel model;
  model.fundamental = FundamentalMatrix(h.F);
  model.cam1.division.lambda = h.lambda1;
  model.cam2.division.lambda = h.lambda2;
  if (h.focal1 && h.focal2) {
    model.cam1.focal = h.focal1;
    model.cam2.focal = h.focal2;
    return model;
  }
  const FundamentalMatrix F2 = project_rank2(h.F);
  if (shared) {
    const auto f = focal_sturm_shared(F2);
    if (!f || !(*f > 0.0)) return std::nullopt;
    model.cam1.focal = model.cam2.focal = *f;
  } else {
    const auto f = focal_bougnoux(F2);
    if (!f) return std::nullopt;
    model.cam1.focal = f->f1;
    model.cam2.focal = f->f2;
  }
  return model;
}

void attach_pose(TwoViewModel& model, std::span<const Correspondence> corrs,
                 const std::vector<bool>& mask) {
  if (model.pose || !model.cam1.focal || !model.cam2.focal) return;
  std::vector<Correspondence> inliers;
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    if (mask[i]) inliers.push_back(corrs[i]);
  }
  if (inliers.empty()) return;
  try {
    model.pose = decompose_to_pose(project_rank2(model.fundamental.matrix()), *model.cam1.focal,
                                   *model.cam2.focal, inliers, model.cam1.division,
                                   model.cam2.division);
  } catch (const Error&) {
  }
}

std::size_t required_iterations(std::size_t inliers, std::size_t n, int sample, double conf) {
  const double w = static_cast<double>(inliers) / static_cast<double>(n);
  const double p_good = std::pow(w, sample);
  if (p_good >= 1.0) return 0;
  if (p_good <= 0.0) return std::numeric_limits<std::size_t>::max();
  const double k = std::log(1.0 - conf) / std::log1p(-p_good);
  if (!std::isfinite(k) || k > 1e12) return std::numeric_limits<std::size_t>::max();
  return static_cast<std::size_t>(std::ceil(k));
}

}  // namespace

int sample_size(Engine engine) {
  switch (engine) {
    case Engine::kSevenPoint: return 7;
    case Engine::kEightPoint: return 8;
    case Engine::kNinePointFLambda: return 9;
  }
  return 0;
}

SamplingStrategy SamplingStrategy::shared_set(std::vector<double> lambdas) {
  SamplingStrategy s;
  s.u1 = lambdas;
  s.u2 = std::move(lambdas);
  s.shared = true;
  return s;
}

void SamplingStrategy::validate() const {
  if (u1.empty() || u2.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "sampling sets must be nonempty");
  }
  for (const auto* set : {&u1, &u2}) {
    for (double l : *set) {
      if (!DivisionModel{l}.plausible()) {
        throw Error(ErrorCode::kInvalidArgument, "sampled lambda outside [-2, 0.5]");
      }
    }
  }
  if (shared && u1 != u2) {
    throw Error(ErrorCode::kInvalidArgument, "shared sampling needs identical sets");
  }
}

void PriorInjection::validate() const {
  for (const auto& l : {lambda1, lambda2}) {
    if (l && !DivisionModel{*l}.plausible()) {
      throw Error(ErrorCode::kInvalidArgument, "prior lambda outside [-2, 0.5]");
    }
  }
  for (const auto& f : {focal1, focal2}) {
    if (f && !(*f > 0.0)) throw Error(ErrorCode::kInvalidArgument, "prior focal must be positive");
  }
  for (const auto& g : {gravity1, gravity2}) {
    if (g && std::abs(g->norm() - 1.0) > 1e-6) {
      throw Error(ErrorCode::kInvalidArgument, "gravity prior must be a unit vector");
    }
  }
}

void RansacConfig::validate() const {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "confidence must lie in (0, 1)");
  }
  if (!(inlier_threshold_px > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "inlier threshold must be positive");
  }
  if (max_iterations == 0) throw Error(ErrorCode::kInvalidArgument, "max_iterations must be > 0");
}

RansacResult ransac_estimate(std::span<const Correspondence> corrs, const ImageDims& dims1,
                             const ImageDims& dims2, Engine engine, const Strategy& strategy,
                             const RansacConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  std::visit([](const auto& s) { s.validate(); }, strategy);

  const int s = sample_size(engine);
  const std::size_t n = corrs.size();
  if (n < static_cast<std::size_t>(s)) {
    throw Error(ErrorCode::kNotEnoughCorrespondences,
                "need at least " + std::to_string(s) + " matches, got " + std::to_string(n));
  }
  for (const auto& c : corrs) {
    if (!c.p1.allFinite() || !c.p2.allFinite()) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite correspondence");
    }
  }

  const TruncatedScore scoring = TruncatedScore::from_pixels(cfg.inlier_threshold_px, dims1, dims2);
  const auto* sampling = std::get_if<SamplingStrategy>(&strategy);
  const auto* prior = std::get_if<PriorInjection>(&strategy);

  // (lambda1, lambda2) pairs tried by the pinhole engines each iteration.
  std::vector<std::pair<double, double>> lambda_pairs;
  if (sampling) {
    if (sampling->shared) {
      for (double l : sampling->u1) lambda_pairs.emplace_back(l, l);
    } else {
      for (double l1 : sampling->u1) {
        for (double l2 : sampling->u2) lambda_pairs.emplace_back(l1, l2);
      }
    }
  } else {
    lambda_pairs.emplace_back(prior->lambda1.value_or(0.0), prior->lambda2.value_or(0.0));
  }
  const bool calibrated_path = prior && prior->calibrated() && engine == Engine::kEightPoint;

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> idx(static_cast<std::size_t>(s));
  std::vector<Correspondence> sample(static_cast<std::size_t>(s));
  std::vector<Hypothesis> hyps;

  RansacResult best;
  bool have_best = false;
  std::size_t needed = cfg.max_iterations;
  std::size_t iter = 0;

  auto consider = [&](TwoViewModel model, ScoreResult score) {
    attach_pose(model, corrs, score.inlier_mask);
    if (model.pose && score.num_inliers >= 8) {
      ++best.lo_runs;
      const double before = truncated_cost(model, corrs, score.inlier_mask, scoring);
      try {
        TwoViewModel refined =
            lo_refine(model, corrs, score.inlier_mask, scoring, cfg, cfg.lo_max_lm_iterations);
        if (truncated_cost(refined, corrs, score.inlier_mask, scoring) > before) {
          ++best.lo_cost_increases;
        }
        ScoreResult rescored = score_model(refined, corrs, scoring);
        if (rescored.score >= score.score) {
          model = std::move(refined);
          score = std::move(rescored);
          attach_pose(model, corrs, score.inlier_mask);
        }
      } catch (const Error&) {
      }
    }
    if (!have_best || score.score > best.score) {
      best.model = std::move(model);
      best.score = score.score;
      best.num_inliers = score.num_inliers;
      best.inlier_mask = std::move(score.inlier_mask);
      have_best = true;
      needed = required_iterations(best.num_inliers, n, s, cfg.confidence);
    }
  };

  while (iter < cfg.max_iterations && iter < std::max(needed, cfg.min_iterations)) {
    ++iter;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      std::size_t candidate;
      do {
        candidate = pick(rng);
      } while (std::find(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), candidate) !=
               idx.begin() + static_cast<std::ptrdiff_t>(k));
      idx[k] = candidate;
      sample[k] = corrs[candidate];
    }

    hyps.clear();
    if (engine == Engine::kNinePointFLambda) {
      collect([&] { return nine_point_F_lambda(sample); }, std::nullopt, hyps);
    } else if (calibrated_path) {
      calibrated_hypotheses(sample, *prior, hyps);
    } else {
      for (const auto& [l1, l2] : lambda_pairs) pinhole_hypotheses(engine, sample, l1, l2, hyps);
    }

    for (const Hypothesis& h : hyps) {
      auto model = to_model(h, cfg.shared_intrinsics);
      if (!model) continue;
      ScoreResult score = score_model(*model, corrs, scoring);
      if (!have_best || score.score > best.score) consider(std::move(*model), std::move(score));
    }
  }

  if (!have_best) {
    throw Error(ErrorCode::kNoModelFound, "no valid model after " + std::to_string(iter) +
                                              " iterations");
  }

  // Final polish over all inliers of the best model.
  if (best.model.pose && best.num_inliers >= 8) {
    ++best.lo_runs;
    const double before = truncated_cost(best.model, corrs, best.inlier_mask, scoring);
    try {
      TwoViewModel refined =
          lo_refine(best.model, corrs, best.inlier_mask, scoring, cfg, cfg.final_lm_iterations);
      if (truncated_cost(refined, corrs, best.inlier_mask, scoring) > before) {
        ++best.lo_cost_increases;
      }
      ScoreResult rescored = score_model(refined, corrs, scoring);
      if (rescored.score >= best.score) {
        best.model = std::move(refined);
        best.score = rescored.score;
        best.num_inliers = rescored.num_inliers;
        best.inlier_mask = std::move(rescored.inlier_mask);
        attach_pose(best.model, corrs, best.inlier_mask);
      }
    } catch (const Error&) {
    }
  }

  best.iterations_run = iter;
  best.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return best;
}

}  // namespace radipose
