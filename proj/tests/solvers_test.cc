#include <algorithm>
#include <complex>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "radipose/errors.h"
#include "radipose/geometry.h"
#include "radipose/solvers.h"
#include "oracles.h"
#include "support.h"

namespace radipose {
namespace {

using test::uniform;

Eigen::Matrix<double, 9, 1> stack(const Eigen::Matrix3d& F) {
  Eigen::Matrix<double, 9, 1> f;
  f << F(0, 0), F(0, 1), F(0, 2), F(1, 0), F(1, 1), F(1, 2), F(2, 0), F(2, 1), F(2, 2);
  return f;
}

std::vector<Correspondence> undistorted(const test::Scene& s) {
  std::vector<Correspondence> out;
  for (const auto& c : s.corrs) {
    out.push_back({undistort(c.p1, {s.lambda1}), undistort(c.p2, {s.lambda2})});
  }
  return out;
}

double best_distance(const SolverOutput& out, const Eigen::Matrix3d& F) {
  double best = 1e9;
  for (const auto& c : out.candidates) {
    best = std::min(best, test::projective_distance(c.fundamental.matrix(), F));
  }
  return best;
}

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

TEST(SolveCubic, KnownRoots) {
  // (x - 1)(x - 2)(x + 3) = x^3 - 7x + 6
  auto roots = solve_cubic_real(1.0, 0.0, -7.0, 6.0);
  std::sort(roots.begin(), roots.end());
  ASSERT_EQ(roots.size(), 3u);
  EXPECT_NEAR(roots[0], -3.0, 1e-12);
  EXPECT_NEAR(roots[1], 1.0, 1e-12);
  EXPECT_NEAR(roots[2], 2.0, 1e-12);
  // x^3 + x + 1 has one real root near -0.6823278.
  roots = solve_cubic_real(1.0, 0.0, 1.0, 1.0);
  ASSERT_EQ(roots.size(), 1u);
  EXPECT_NEAR(roots[0], -0.6823278038280193, 1e-12);
  // Quadratic fallback: 2x^2 - 8 = 0.
  roots = solve_cubic_real(0.0, 2.0, 0.0, -8.0);
  std::sort(roots.begin(), roots.end());
  ASSERT_EQ(roots.size(), 2u);
  EXPECT_NEAR(roots[0], -2.0, 1e-12);
  EXPECT_NEAR(roots[1], 2.0, 1e-12);
}

TEST(DesignMatrix, RowExpandsEpipolarConstraint) {
  std::mt19937_64 rng(1);
  const Eigen::Matrix3d F = Eigen::Matrix3d::NullaryExpr([&] { return uniform(rng, -1, 1); });
  std::vector<Correspondence> corrs;
  for (int i = 0; i < 5; ++i) {
    corrs.push_back({{uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5)},
                     {uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5)}});
  }
  const DesignMatrix A = design_matrix(corrs);
  for (int i = 0; i < 5; ++i) {
    const Eigen::Vector3d u1 = test::lift(corrs[i].p1, 0.0), u2 = test::lift(corrs[i].p2, 0.0);
    EXPECT_NEAR(A.row(i).dot(stack(F)), u1.dot(F * u2), 1e-14);
  }
}

TEST(SevenPoint, RecoversGroundTruth) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const test::Scene s = test::make_scene(rng, 7, uniform(rng, 0.6, 1.5), uniform(rng, 0.6, 1.5),
                                           0.0, 0.0);
    const SolverOutput out = seven_point_F(s.corrs);
    ASSERT_GE(out.candidates.size(), 1u);
    ASSERT_LE(out.candidates.size(), 3u);
    EXPECT_LT(best_distance(out, test::oracle_F(s)), 1e-8);
    for (const auto& c : out.candidates) {
      const Eigen::JacobiSVD<Eigen::Matrix3d> svd(c.fundamental.matrix());
      EXPECT_LT(svd.singularValues()(2), 1e-9);
      for (const auto& m : s.corrs) EXPECT_NEAR(epipolar_residual(m, c), 0.0, 1e-10);
    }
  }
}

TEST(SevenPoint, RejectsWrongCountAndDegenerateSample) {
  std::mt19937_64 rng(3);
  const test::Scene s = test::make_scene(rng, 8, 1.0, 1.0, 0.0, 0.0);
  EXPECT_EQ(code_of([&] { seven_point_F(s.corrs); }), ErrorCode::kInvalidArgument);
  const std::vector<Correspondence> same(7, s.corrs[0]);
  EXPECT_EQ(code_of([&] { seven_point_F(same); }), ErrorCode::kDegenerateSample);
}

TEST(EightPoint, RecoversGroundTruthAndIsRankTwo) {
  std::mt19937_64 rng(4);
  const test::Scene s = test::make_scene(rng, 20, 1.3, 0.7, 0.0, 0.0);
  const SolverOutput out = eight_point_F(s.corrs);
  ASSERT_EQ(out.candidates.size(), 1u);
  EXPECT_LT(best_distance(out, test::oracle_F(s)), 1e-9);
  EXPECT_NEAR(out.candidates[0].fundamental.matrix().determinant(), 0.0, 1e-14);
}

TEST(EightPoint, PermutationInvariant) {
  std::mt19937_64 rng(5);
  test::Scene s = test::make_scene(rng, 30, 1.0, 1.0, 0.0, 0.0);
  std::normal_distribution<double> noise(0.0, 1e-3);
  for (auto& c : s.corrs) c.p2 += Eigen::Vector2d(noise(rng), noise(rng));
  const Eigen::Matrix3d F = eight_point_F(s.corrs).candidates[0].fundamental.matrix();
  std::shuffle(s.corrs.begin(), s.corrs.end(), rng);
  const Eigen::Matrix3d G = eight_point_F(s.corrs).candidates[0].fundamental.matrix();
  EXPECT_LT((F - G).norm(), 1e-9);
  std::vector<Correspondence> too_few(s.corrs.begin(), s.corrs.begin() + 7);
  EXPECT_EQ(code_of([&] { eight_point_F(too_few); }), ErrorCode::kInvalidArgument);
}

TEST(Pencil, RowsExpandDistortedConstraint) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Matrix3d F = Eigen::Matrix3d::NullaryExpr([&] { return uniform(rng, -1, 1); });
    const double lambda = uniform(rng, -2.0, 0.5);
    std::vector<Correspondence> corrs;
    for (int i = 0; i < 12; ++i) {
      corrs.push_back({{uniform(rng, -0.5, 0.5), uniform(rng, -0.4, 0.4)},
                       {uniform(rng, -0.5, 0.5), uniform(rng, -0.4, 0.4)}});
    }
    const PencilMatrices P = build_pencil(corrs);
    const DesignMatrix M = P.A0 + lambda * P.A1 + lambda * lambda * P.A2;
    for (int i = 0; i < 12; ++i) {
      const double oracle =
          test::lift(corrs[i].p1, lambda).dot(F * test::lift(corrs[i].p2, lambda));
      EXPECT_NEAR(M.row(i).dot(stack(F)), oracle, 1e-13);
    }
  }
}

TEST(Pencil, GroundTruthIsInKernel) {
  std::mt19937_64 rng(7);
  const test::Scene s = test::make_scene(rng, 15, 1.1, 1.1, -0.9, -0.9);
  const PencilMatrices P = build_pencil(s.corrs);
  const Eigen::Matrix<double, 9, 1> f = stack(test::oracle_F(s)).normalized();
  const double l = s.lambda1;
  EXPECT_LT(((P.A0 + l * P.A1 + l * l * P.A2) * f).norm(), 1e-12);
}

TEST(NinePoint, ReducedMatrixMatchesFullCompanion) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<Correspondence> corrs;
    for (int i = 0; i < 9; ++i) {
      corrs.push_back({{uniform(rng, -0.5, 0.5), uniform(rng, -0.4, 0.4)},
                       {uniform(rng, -0.5, 0.5), uniform(rng, -0.4, 0.4)}});
    }
    const PencilMatrices P = build_pencil(corrs);
    const test::SpectrumCheck check = test::compare_spectra(P);
    EXPECT_TRUE(check.reduced_in_full) << "a reduced eigenvalue is missing from the 18x18 spectrum";
    EXPECT_TRUE(check.full_in_reduced) << "a nonzero eigenvalue of the 18x18 companion was dropped";
  }
}

TEST(NinePoint, RecoversLambdaAndF) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const double lambda = uniform(rng, -1.8, -0.1);
    const double f = uniform(rng, 0.6, 1.5);
    const test::Scene s = test::make_scene(rng, 9, f, f, lambda, lambda);
    const SolverOutput out = nine_point_F_lambda(s.corrs);
    ASSERT_LE(out.candidates.size(), 6u);
    double best = 1e9;
    const TwoViewModel* hit = nullptr;
    for (const auto& c : out.candidates) {
      EXPECT_EQ(c.cam1.division.lambda, c.cam2.division.lambda);
      EXPECT_TRUE(c.cam1.division.plausible());
      if (std::abs(c.cam1.division.lambda - lambda) < best) {
        best = std::abs(c.cam1.division.lambda - lambda);
        hit = &c;
      }
    }
    EXPECT_LT(best, 1e-8);
    ASSERT_NE(hit, nullptr);
    EXPECT_LT(test::projective_distance(hit->fundamental.matrix(), test::oracle_F(s)), 1e-7);
  }
}

TEST(NinePoint, OverdeterminedNoiseFree) {
  std::mt19937_64 rng(10);
  const test::Scene s = test::make_scene(rng, 30, 1.0, 1.0, -1.3, -1.3);
  const SolverOutput out = nine_point_F_lambda(s.corrs);
  double best = 1e9;
  for (const auto& c : out.candidates) best = std::min(best, std::abs(c.cam1.division.lambda + 1.3));
  EXPECT_LT(best, 1e-8);
}

TEST(NinePoint, SingularA0) {
  std::mt19937_64 rng(11);
  const test::Scene s = test::make_scene(rng, 9, 1.0, 1.0, -0.5, -0.5);
  const std::vector<Correspondence> same(9, s.corrs[0]);
  EXPECT_EQ(code_of([&] { nine_point_F_lambda(same); }), ErrorCode::kSingularA0);
  EXPECT_EQ(code_of([&] { nine_point_F_lambda(std::span(s.corrs).first(8)); }),
            ErrorCode::kInvalidArgument);
}

TEST(ProjectRank2, ClosestRankTwo) {
  std::mt19937_64 rng(12);
  const Eigen::Matrix3d M = Eigen::Matrix3d::NullaryExpr([&] { return uniform(rng, -1, 1); });
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(M);
  const Eigen::Matrix3d P = project_rank2(M).matrix();
  EXPECT_NEAR(P.determinant(), 0.0, 1e-15);
  const Eigen::Vector3d sv = Eigen::JacobiSVD<Eigen::Matrix3d>(P).singularValues();
  const double scale = std::hypot(svd.singularValues()(0), svd.singularValues()(1));
  EXPECT_NEAR(sv(0), svd.singularValues()(0) / scale, 1e-14);
  EXPECT_NEAR(sv(1), svd.singularValues()(1) / scale, 1e-14);
}

TEST(Focal, BougnouxDifferentFocals) {
  std::mt19937_64 rng(13);
  const test::Scene s = test::make_scene(rng, 8, 1.2, 0.8, 0.0, 0.0);
  const auto f = focal_bougnoux(FundamentalMatrix(test::oracle_F(s)));
  ASSERT_TRUE(f.has_value());
  EXPECT_NEAR(f->f1, 1.2, 1e-6);
  EXPECT_NEAR(f->f2, 0.8, 1e-6);
}

TEST(Focal, SturmSharedFocal) {
  std::mt19937_64 rng(14);
  const test::Scene s = test::make_scene(rng, 8, 1.1, 1.1, 0.0, 0.0);
  const auto f = focal_sturm_shared(FundamentalMatrix(test::oracle_F(s)));
  ASSERT_TRUE(f.has_value());
  EXPECT_NEAR(*f, 1.1, 1e-6);
}

TEST(Focal, SturmAgreesWithBougnouxOnSharedFocal) {
  std::mt19937_64 rng(15);
  int agreed = 0;
  const int trials = 200;
  for (int i = 0; i < trials; ++i) {
    const double f = uniform(rng, 0.6, 1.5);
    const test::Scene s = test::make_scene(rng, 8, f, f, 0.0, 0.0);
    const FundamentalMatrix F(test::oracle_F(s));
    const auto sturm = focal_sturm_shared(F);
    const auto boug = focal_bougnoux(F);
    if (!sturm || !boug) continue;
    if (std::abs(*sturm - f) < 1e-6 && std::abs(boug->f1 - f) < 1e-6 &&
        std::abs(boug->f2 - f) < 1e-6) {
      ++agreed;
    }
  }
  // Bougnoux is singular for some configurations (e.g. optical axes meeting
  // in a plane), so allow a small number of misses.
  EXPECT_GE(agreed, trials * 95 / 100);
}

TEST(Focal, BougnouxRejectsNegativeSquares) {
  std::mt19937_64 rng(16);
  int rejected = 0;
  for (int i = 0; i < 200; ++i) {
    const Eigen::Matrix3d M = Eigen::Matrix3d::NullaryExpr([&] { return uniform(rng, -1, 1); });
    const auto f = focal_bougnoux(project_rank2(M));
    if (!f) {
      ++rejected;
      continue;
    }
    EXPECT_GT(f->f1, 0.0);
    EXPECT_GT(f->f2, 0.0);
  }
  EXPECT_GT(rejected, 0);
}

TEST(Decompose, RecoversPose) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const double l1 = uniform(rng, -1.5, 0.0), l2 = uniform(rng, -1.5, 0.0);
    const test::Scene s = test::make_scene(rng, 40, 1.0, 1.3, l1, l2);
    const RelativePose pose = decompose_to_pose(FundamentalMatrix(test::oracle_F(s)), 1.0, 1.3,
                                                s.corrs, {l1}, {l2});
    EXPECT_LT((pose.rotation - s.R).norm(), 1e-8);
    EXPECT_LT((pose.translation - s.t).norm(), 1e-8);
  }
}

TEST(Decompose, EssentialCandidatesShareTheEssentialMatrix) {
  std::mt19937_64 rng(18);
  const test::Scene s = test::make_scene(rng, 8, 1.0, 1.0, 0.0, 0.0);
  const Eigen::Matrix3d E = test::oracle_F(s);
  const auto poses = poses_from_essential(E);
  ASSERT_EQ(poses.size(), 4u);
  for (const auto& p : poses) {
    EXPECT_NEAR(p.rotation.determinant(), 1.0, 1e-12);
    EXPECT_LT((p.rotation * p.rotation.transpose() - Eigen::Matrix3d::Identity()).norm(), 1e-12);
    const Eigen::Matrix3d Ep = (skew(p.translation) * p.rotation).transpose();
    EXPECT_LT(test::projective_distance(Ep, E), 1e-10);
  }
}

TEST(Decompose, Errors) {
  std::mt19937_64 rng(19);
  const test::Scene s = test::make_scene(rng, 8, 1.0, 1.0, 0.0, 0.0);
  const FundamentalMatrix F(test::oracle_F(s));
  EXPECT_EQ(code_of([&] { decompose_to_pose(F, 1.0, 1.0, {}, {}, {}); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { decompose_to_pose(F, 0.0, 1.0, s.corrs, {}, {}); }),
            ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace radipose
