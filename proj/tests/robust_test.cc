#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "checked.h"
#include "radipose/bench.h"
#include "radipose/errors.h"
#include "radipose/geometry.h"
#include "radipose/robust.h"
#include "support.h"

namespace radipose {
namespace {

using test::uniform;

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kInvalidArgument;
}

TwoViewModel truth(const test::Scene& s) {
  return make_model({s.R, s.t}, {s.f1, {s.lambda1}}, {s.f2, {s.lambda2}});
}

double pose_error(const TwoViewModel& m, const test::Scene& s) {
  return std::max(rotation_error(s.R, m.pose->rotation), translation_error(s.t, m.pose->translation));
}

TEST(TruncatedScore, FromPixels) {
  const auto s = TruncatedScore::from_pixels(3.0, {1600, 1200}, {800, 600});
  EXPECT_DOUBLE_EQ(s.threshold_sq, (3.0 / 1600.0) * (3.0 / 1600.0));
  EXPECT_THROW(TruncatedScore::from_pixels(0.0, {10, 10}, {10, 10}), Error);
}

TEST(ScoreModel, CountsInliersAndTruncates) {
  std::mt19937_64 rng(1);
  test::Scene s = test::make_scene(rng, 40, 1.0, 1.0, -0.6, -0.6);
  const TwoViewModel m = truth(s);
  // Corrupt the last ten matches far beyond the threshold.
  for (std::size_t i = 30; i < 40; ++i) s.corrs[i].p2 = -s.corrs[i].p2 + Eigen::Vector2d(0.1, 0.2);
  const TruncatedScore sc{1e-6};
  const ScoreResult r = score_model(m, s.corrs, sc);
  double expected = 0.0;
  std::size_t inliers = 0;
  for (const auto& c : s.corrs) {
    const double e = tangent_sampson_error(c, m);
    if (e < sc.threshold_sq) {
      expected += sc.threshold_sq - e;
      ++inliers;
    }
  }
  EXPECT_EQ(r.num_inliers, inliers);
  EXPECT_GE(r.num_inliers, 30u);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_TRUE(r.inlier_mask[i]);
  EXPECT_NEAR(r.score, expected, 1e-18);
  EXPECT_NEAR(r.score, 30 * 1e-6, 1e-12);

  const std::vector<bool> all(40, true);
  double capped = 0.0;
  for (const auto& c : s.corrs) capped += std::min(tangent_sampson_error(c, m), sc.threshold_sq);
  EXPECT_NEAR(truncated_cost(m, s.corrs, all, sc), capped, 1e-18);
}

TEST(RefineBlocks, ParseRenderRoundTrip) {
  for (const std::string text : {"R,t,f1,f2,l1,l2", "R,t", "none", "l1,l2", "t,f2"}) {
    const RefineBlocks b = RefineBlocks::parse(text);
    EXPECT_EQ(b.render(), text);
    EXPECT_EQ(RefineBlocks::parse(b.render()), b);
  }
  EXPECT_EQ(RefineBlocks::parse("R,t"), RefineBlocks::pose_only());
  EXPECT_THROW(RefineBlocks::parse("R,q"), Error);
}

TEST(ParameterCount, BlocksAndSharing) {
  EXPECT_EQ(parameter_count(RefineBlocks::all(), false), 9u);
  EXPECT_EQ(parameter_count(RefineBlocks::all(), true), 7u);
  EXPECT_EQ(parameter_count(RefineBlocks::pose_only(), true), 5u);
  EXPECT_EQ(parameter_count(RefineBlocks::parse("none"), false), 0u);
}

TEST(Config, Validation) {
  RansacConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.confidence = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.inlier_threshold_px = -1.0;
  EXPECT_THROW(cfg.validate(), Error);

  SamplingStrategy s;
  s.u1.clear();
  EXPECT_THROW(s.validate(), Error);
  s = SamplingStrategy::shared_set({0.0, -0.6});
  EXPECT_NO_THROW(s.validate());
  s.u2 = {0.0};
  EXPECT_THROW(s.validate(), Error);
  s = SamplingStrategy::shared_set({-2.5});
  EXPECT_THROW(s.validate(), Error);

  PriorInjection p;
  p.lambda1 = 0.7;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.gravity1 = Eigen::Vector3d(0.0, 2.0, 0.0);
  EXPECT_THROW(p.validate(), Error);
}

// Central differences of the signed residual through apply_increment.
void check_jacobian(const TwoViewModel& m, const Correspondence& c, const RefineBlocks& blocks,
                    bool shared) {
  const ResidualJacobian rj = residual_jacobian(m, c, blocks, shared);
  const auto n = static_cast<Eigen::Index>(parameter_count(blocks, shared));
  ASSERT_EQ(rj.jacobian.size(), n);
  EXPECT_NEAR(rj.residual * rj.residual, tangent_sampson_error(c, m), 1e-15);
  const double h = 1e-6;
  Eigen::VectorXd numeric(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    d(k) = h;
    const double plus = residual_jacobian(apply_increment(m, d, blocks, shared), c, blocks, shared).residual;
    const double minus = residual_jacobian(apply_increment(m, -d, blocks, shared), c, blocks, shared).residual;
    numeric(k) = (plus - minus) / (2 * h);
  }
  EXPECT_LT((numeric - rj.jacobian).norm(), 1e-5 * rj.jacobian.norm())
      << "analytic " << rj.jacobian.transpose() << "\nnumeric  " << numeric.transpose();
}

TEST(Jacobian, MatchesCentralDifferences) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const test::Scene s = test::make_scene(rng, 5, uniform(rng, 0.7, 1.4), uniform(rng, 0.7, 1.4),
                                           uniform(rng, -1.5, -0.2), uniform(rng, -1.5, -0.2));
    const TwoViewModel m = truth(s);
    for (auto c : s.corrs) {
      c.p2 += Eigen::Vector2d(uniform(rng, -0.01, 0.01), uniform(rng, -0.01, 0.01));
      check_jacobian(m, c, RefineBlocks::all(), false);
      check_jacobian(m, c, RefineBlocks::pose_only(), false);
      check_jacobian(m, c, RefineBlocks::parse("f2,l1"), false);
    }
  }
}

TEST(Jacobian, SharedIntrinsics) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const double f = uniform(rng, 0.7, 1.4), l = uniform(rng, -1.5, -0.2);
    const test::Scene s = test::make_scene(rng, 5, f, f, l, l);
    const TwoViewModel m = truth(s);
    for (auto c : s.corrs) {
      c.p1 += Eigen::Vector2d(uniform(rng, -0.01, 0.01), uniform(rng, -0.01, 0.01));
      check_jacobian(m, c, RefineBlocks::all(), true);
    }
  }
}

TEST(LocalOptimization, GroundTruthIsStationary) {
  std::mt19937_64 rng(4);
  const test::Scene s = test::make_scene(rng, 60, 1.1, 1.1, -0.9, -0.9);
  const TwoViewModel m = truth(s);
  const std::vector<bool> mask(60, true);
  RansacConfig cfg;
  cfg.shared_intrinsics = true;
  const TwoViewModel out =
      test::checked_lo_refine(m, s.corrs, mask, TruncatedScore{1e-6}, cfg, 25);
  EXPECT_LT(pose_error(out, s), 1e-6);
  EXPECT_NEAR(out.cam1.division.lambda, -0.9, 1e-8);
  EXPECT_NEAR(*out.cam1.focal, 1.1, 1e-8);
}

TEST(LocalOptimization, ConvergesFromPerturbedLambda) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const double f = uniform(rng, 0.8, 1.3), l = uniform(rng, -1.4, -0.6);
    const test::Scene s = test::make_scene(rng, 100, f, f, l, l);
    TwoViewModel start = truth(s);
    start.cam1.division.lambda = start.cam2.division.lambda = l + 0.2;
    start.cam1.focal = start.cam2.focal = f * 1.05;
    start = make_model(*start.pose, start.cam1, start.cam2);
    const std::vector<bool> mask(100, true);
    RansacConfig cfg;
    cfg.shared_intrinsics = true;
    // Threshold wide enough that the perturbed start keeps every point.
    const TruncatedScore sc{1e-2};
    const TwoViewModel out = test::checked_lo_refine(start, s.corrs, mask, sc, cfg, 100);
    EXPECT_NEAR(out.cam1.division.lambda, l, 1e-4);
    EXPECT_NEAR(*out.cam1.focal, f, 1e-3);
    EXPECT_LT(pose_error(out, s), 1e-2);
  }
}

TEST(LocalOptimization, SeparateIntrinsics) {
  std::mt19937_64 rng(6);
  const test::Scene s = test::make_scene(rng, 150, 1.2, 0.9, -1.1, -0.4);
  TwoViewModel start = truth(s);
  start.cam1.division.lambda += 0.1;
  start.cam2.division.lambda -= 0.1;
  start = make_model(*start.pose, start.cam1, start.cam2);
  const std::vector<bool> mask(150, true);
  RansacConfig cfg;
  const TwoViewModel out =
      test::checked_lo_refine(start, s.corrs, mask, TruncatedScore{1e-2}, cfg, 100);
  EXPECT_NEAR(out.cam1.division.lambda, -1.1, 1e-3);
  EXPECT_NEAR(out.cam2.division.lambda, -0.4, 1e-3);
}

TEST(LocalOptimization, NeverIncreasesCost) {
  std::mt19937_64 rng(7);
  ScenarioSpec spec;
  spec.points_per_pair = 200;
  spec.outlier_fraction = 0.3;
  for (std::size_t pair = 0; pair < 5; ++pair) {
    spec.seed = 100 + pair;
    const SyntheticPair p = generate_pair(spec, pair);
    // Start from a deliberately poor model: ground truth with a bad lambda.
    TwoViewModel start = make_model(p.gt.pose, p.gt.cam1, p.gt.cam2);
    start.cam1.division.lambda = start.cam2.division.lambda = 0.0;
    start = make_model(*start.pose, start.cam1, start.cam2);
    const TruncatedScore sc = TruncatedScore::from_pixels(3.0, p.dims1, p.dims2);
    const std::vector<bool> mask = score_model(start, p.corrs, sc).inlier_mask;
    if (std::count(mask.begin(), mask.end(), true) < 8) continue;
    RansacConfig cfg;
    cfg.shared_intrinsics = true;
    for (std::size_t iters : {1u, 5u, 50u}) {
      test::checked_lo_refine(start, p.corrs, mask, sc, cfg, iters);
    }
  }
}

TEST(LocalOptimization, NeedsEightInliers) {
  std::mt19937_64 rng(8);
  const test::Scene s = test::make_scene(rng, 10, 1.0, 1.0, 0.0, 0.0);
  std::vector<bool> mask(10, false);
  std::fill(mask.begin(), mask.begin() + 7, true);
  EXPECT_EQ(code_of([&] { lo_refine(truth(s), s.corrs, mask, TruncatedScore{1e-6}, {}); }),
            ErrorCode::kInvalidArgument);
}

TEST(LocalOptimization, EmptyBlockSetKeepsModel) {
  std::mt19937_64 rng(9);
  const test::Scene s = test::make_scene(rng, 20, 1.0, 1.0, -0.5, -0.5);
  TwoViewModel m = truth(s);
  m.cam1.division.lambda = -0.3;
  m = make_model(*m.pose, m.cam1, m.cam2);
  RansacConfig cfg;
  cfg.refine_blocks = RefineBlocks::parse("none");
  const TwoViewModel out =
      test::checked_lo_refine(m, s.corrs, std::vector<bool>(20, true), TruncatedScore{1e-2}, cfg, 10);
  EXPECT_EQ(out.cam1.division.lambda, -0.3);
  EXPECT_LT((out.fundamental.matrix() - m.fundamental.matrix()).norm(), 1e-15);
}

SyntheticPair scenario_c_pair(std::uint64_t seed, std::size_t index, double outliers = 0.3) {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::kC;
  spec.shared_lambda = true;
  spec.points_per_pair = 300;
  spec.outlier_fraction = outliers;
  spec.seed = seed;
  return generate_pair(spec, index);
}

TEST(Ransac, SamplingRecoversPoseWithOutliers) {
  int good = 0;
  std::normal_distribution<double> noise(0.0, 1e-3);
  for (int trial = 0; trial < 100; ++trial) {
    std::mt19937_64 rng(1000 + trial);
    const double f = uniform(rng, 0.6, 1.5);
    test::Scene s = test::make_scene(rng, 500, f, f, -0.9, -0.9);
    for (std::size_t i = 0; i < s.corrs.size(); ++i) {
      if (i % 10 < 3) {
        s.corrs[i].p2 = {uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5)};
      } else {
        s.corrs[i].p1 += Eigen::Vector2d(noise(rng), noise(rng));
        s.corrs[i].p2 += Eigen::Vector2d(noise(rng), noise(rng));
      }
    }
    RansacConfig cfg;
    cfg.shared_intrinsics = true;
    cfg.max_iterations = 1000;
    cfg.seed = static_cast<std::uint64_t>(trial);
    const RansacResult r =
        test::checked_ransac(s.corrs, {1000, 1000}, {1000, 1000}, Engine::kSevenPoint,
                             SamplingStrategy::shared_set({-0.6, -0.9, -1.2}), cfg);
    ASSERT_GE(r.iterations_run, cfg.min_iterations);
    ASSERT_LE(r.iterations_run, cfg.max_iterations);
    if (!r.model.pose) continue;
    const double err = std::max(rotation_error(s.R, r.model.pose->rotation),
                                translation_error(s.t, r.model.pose->translation));
    good += err < 2.0 && std::abs(r.model.cam1.division.lambda + 0.9) < 0.1;
  }
  EXPECT_GE(good, 80);
}

TEST(Ransac, PerfectPinholeData) {
  std::mt19937_64 rng(50);
  const test::Scene s = test::make_scene(rng, 100, 1.0, 1.0, 0.0, 0.0);
  RansacConfig cfg;
  cfg.shared_intrinsics = true;
  const RansacResult r = test::checked_ransac(s.corrs, {1000, 1000}, {1000, 1000},
                                              Engine::kSevenPoint, SamplingStrategy{}, cfg);
  ASSERT_TRUE(r.model.pose.has_value());
  EXPECT_LT(pose_error(r.model, s), 1e-3);
  EXPECT_LT(r.iterations_run, cfg.max_iterations);
  EXPECT_EQ(r.num_inliers, 100u);
}

TEST(Ransac, ScenarioCMedianAccuracy) {
  std::vector<double> errors;
  for (std::size_t i = 0; i < 6; ++i) {
    const SyntheticPair p = scenario_c_pair(42, i);
    RansacConfig cfg;
    cfg.shared_intrinsics = true;
    cfg.seed = i;
    const RansacResult r = test::checked_ransac(
        p.corrs, p.dims1, p.dims2, Engine::kSevenPoint,
        SamplingStrategy::shared_set({-0.6, -0.9, -1.2}), cfg);
    errors.push_back(metric_errors(p.gt, r.model, true).pose_err_deg);
  }
  EXPECT_LT(lower_median(errors), 1.0);
}

TEST(Ransac, NinePointEngine) {
  const SyntheticPair p = scenario_c_pair(43, 0);
  RansacConfig cfg;
  cfg.shared_intrinsics = true;
  const RansacResult r = test::checked_ransac(p.corrs, p.dims1, p.dims2,
                                              Engine::kNinePointFLambda, SamplingStrategy{}, cfg);
  const PairEvaluation e = metric_errors(p.gt, r.model, true);
  EXPECT_LT(e.pose_err_deg, 2.0);
  EXPECT_LT(*e.eps_lambda, 0.1);
}

TEST(Ransac, CalibratedPriorPath) {
  const SyntheticPair p = scenario_c_pair(44, 0);
  PriorInjection prior;
  prior.focal1 = p.gt.cam1.focal;
  prior.focal2 = p.gt.cam2.focal;
  prior.lambda1 = prior.lambda2 = p.gt.cam1.division.lambda;
  RansacConfig cfg;
  cfg.shared_intrinsics = true;
  cfg.refine_blocks = RefineBlocks::pose_only();
  const RansacResult r =
      test::checked_ransac(p.corrs, p.dims1, p.dims2, Engine::kEightPoint, prior, cfg);
  EXPECT_EQ(r.model.cam1.division.lambda, p.gt.cam1.division.lambda);
  EXPECT_EQ(*r.model.cam1.focal, *p.gt.cam1.focal);
  EXPECT_LT(metric_errors(p.gt, r.model, true).pose_err_deg, 1.0);
}

TEST(Ransac, DeterministicForFixedSeed) {
  const SyntheticPair p = scenario_c_pair(45, 3);
  RansacConfig cfg;
  cfg.seed = 99;
  const auto strategy = SamplingStrategy::shared_set({0.0, -1.0});
  const RansacResult a =
      test::checked_ransac(p.corrs, p.dims1, p.dims2, Engine::kSevenPoint, strategy, cfg);
  const RansacResult b =
      test::checked_ransac(p.corrs, p.dims1, p.dims2, Engine::kSevenPoint, strategy, cfg);
  EXPECT_EQ(a.model.fundamental.matrix(), b.model.fundamental.matrix());
  EXPECT_EQ(a.inlier_mask, b.inlier_mask);
  EXPECT_EQ(a.iterations_run, b.iterations_run);
  EXPECT_EQ(a.score, b.score);
}

TEST(Ransac, CollinearMatchesFindNoModel) {
  std::vector<Correspondence> corrs;
  for (int i = 0; i < 50; ++i) {
    const double x = -0.45 + 0.018 * i;
    corrs.push_back({{x, 0.0}, {0.9 * x + 0.01, 0.0}});
  }
  EXPECT_EQ(code_of([&] {
              ransac_estimate(corrs, {1600, 1200}, {1600, 1200}, Engine::kSevenPoint,
                              SamplingStrategy::shared_set({0.0, -0.5}), RansacConfig{});
            }),
            ErrorCode::kNoModelFound);
}

TEST(Ransac, TooFewMatches) {
  const std::vector<Correspondence> corrs(6);
  EXPECT_EQ(code_of([&] {
              ransac_estimate(corrs, {10, 10}, {10, 10}, Engine::kSevenPoint, SamplingStrategy{},
                              RansacConfig{});
            }),
            ErrorCode::kNotEnoughCorrespondences);
}

}  // namespace
}  // namespace radipose
