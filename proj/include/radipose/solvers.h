#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "radipose/types.h"

namespace radipose {

// Candidates of a fundamental-matrix solver. Pinhole solvers leave the
// cameras at lambda = 0; the 9pt F-lambda solver attaches the recovered
// lambda to both cameras. Focal and pose are left unset.
struct SolverOutput {
  std::vector<TwoViewModel> candidates;
};

using DesignMatrix = Eigen::Matrix<double, Eigen::Dynamic, 9>;

// Quadratic eigenvalue pencil (A0 + lambda A1 + lambda^2 A2) f = 0, where f
// is F in row-major order. Row i expands u(p1)^T F u(p2) for match i, so the
// monomials are [x1x2, x1y2, x1, y1x2, y1y2, y1, x2, y2, 1] for A0,
// [0, 0, x1 r2^2, 0, 0, y1 r2^2, x2 r1^2, y2 r1^2, r1^2 + r2^2] for A1 and
// r1^2 r2^2 in the last column of A2.
struct PencilMatrices {
  DesignMatrix A0;
  DesignMatrix A1;
  DesignMatrix A2;
};

// Pinhole design matrix: one A0-style row per match, points used as given.
DesignMatrix design_matrix(std::span<const Correspondence> corrs);

// Exactly 7 matches; 1 to 3 rank-2 candidates. Throws kDegenerateSample.
SolverOutput seven_point_F(std::span<const Correspondence> corrs);

// n >= 8 matches; least-squares null vector followed by rank-2 projection.
// Throws kDegenerateSample.
SolverOutput eight_point_F(std::span<const Correspondence> corrs);

PencilMatrices build_pencil(std::span<const Correspondence> corrs);

// The 6x6 companion block that carries every nonzero eigenvalue sigma =
// 1 / lambda of the 18x18 linearization. Rows and columns follow
// [f9, sigma f3, sigma f6, sigma f7, sigma f8, sigma f9]. For n > 9 the
// products A0^-1 A_k are least-squares solutions. Throws kSingularA0.
Eigen::Matrix<double, 6, 6> nine_point_reduced_matrix(const PencilMatrices& pencil);

// Equal unknown distortion, n >= 9 matches on raw distorted points. Up to 6
// candidates with lambda in the plausible range; F is not rank-2 projected.
// Throws kSingularA0 or kNoRealSolutions.
SolverOutput nine_point_F_lambda(std::span<const Correspondence> corrs);

FundamentalMatrix project_rank2(const Eigen::Matrix3d& F_raw);

struct FocalPair {
  double f1 = 0.0;
  double f2 = 0.0;
};

// Bougnoux closed form with both principal points at the origin. Returns
// nullopt (the DegenerateFocal case) when a squared focal is not positive.
std::optional<FocalPair> focal_bougnoux(const FundamentalMatrix& F);

// Shared focal from the Kruppa equations of a semi-calibrated pair.
std::optional<double> focal_sturm_shared(const FundamentalMatrix& F);

// Up to four (R, t) hypotheses from an essential matrix in the
// u1^T E u2 = 0 convention of this library.
std::vector<RelativePose> poses_from_essential(const Eigen::Matrix3d& E);

// Pose from F and known focals; the candidate with most points in front of
// both cameras wins, ties going to the larger summed depth margin.
// Throws kInvalidArgument on empty input and kNoCheiralityWinner.
RelativePose decompose_to_pose(const FundamentalMatrix& F, double f1, double f2,
                               std::span<const Correspondence> inliers,
                               const DivisionModel& d1, const DivisionModel& d2);

// Real roots of c3 x^3 + c2 x^2 + c1 x + c0, closed form plus one Newton
// polish. Degrades to the quadratic/linear case when leading terms vanish.
std::vector<double> solve_cubic_real(double c3, double c2, double c1, double c0);

}  // namespace radipose
