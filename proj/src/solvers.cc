#include "radipose/solvers.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "radipose/errors.h"
#include "radipose/geometry.h"

namespace radipose {

namespace {

// Relative singular-value level below which a design matrix is rank deficient.
constexpr double kRankTolerance = 1e-10;
constexpr double kMinSigma = 1e-8;
constexpr double kImaginaryTolerance = 1e-6;

void fill_pinhole_row(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2,
                      Eigen::Ref<Eigen::Matrix<double, 1, 9>, 0, Eigen::InnerStride<>> row) {
  const double x1 = p1.x(), y1 = p1.y(), x2 = p2.x(), y2 = p2.y();
  row << x1 * x2, x1 * y2, x1, y1 * x2, y1 * y2, y1, x2, y2, 1.0;
}

Eigen::Matrix3d unstack(const Eigen::Matrix<double, 9, 1>& f) {
  Eigen::Matrix3d F;
  F << f(0), f(1), f(2), f(3), f(4), f(5), f(6), f(7), f(8);
  return F;
}

TwoViewModel uncalibrated_candidate(const Eigen::Matrix3d& F, double lambda) {
  TwoViewModel model;
  model.fundamental = FundamentalMatrix(F);
  model.cam1.division.lambda = lambda;
  model.cam2.division.lambda = lambda;
  return model;
}

double polish_root(double c3, double c2, double c1, double c0, double x) {
  const double p = ((c3 * x + c2) * x + c1) * x + c0;
  const double dp = (3.0 * c3 * x + 2.0 * c2) * x + c1;
  if (dp != 0.0 && std::isfinite(p / dp)) x -= p / dp;
  return x;
}

}  // namespace

std::vector<double> solve_cubic_real(double c3, double c2, double c1, double c0) {
  const double scale = std::max({std::abs(c3), std::abs(c2), std::abs(c1), std::abs(c0)});
  if (scale == 0.0) return {};
  std::vector<double> roots;

  if (std::abs(c3) < 1e-12 * scale) {
    if (std::abs(c2) < 1e-12 * scale) {
      if (c1 != 0.0) roots.push_back(-c0 / c1);
      return roots;
    }
    const double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc < 0.0) return roots;
    const double q = -0.5 * (c1 + std::copysign(std::sqrt(disc), c1));
    roots.push_back(q / c2);
    if (q != 0.0) roots.push_back(c0 / q);
    return roots;
  }

  // Depressed cubic t^3 + p t + q = 0 with x = t - b / 3.
  const double b = c2 / c3, c = c1 / c3, d = c0 / c3;
  const double p = c - b * b / 3.0;
  const double q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
  const double shift = -b / 3.0;
  const double disc = q * q / 4.0 + p * p * p / 27.0;

  if (disc > 0.0) {
    const double s = std::sqrt(disc);
    roots.push_back(std::cbrt(-q / 2.0 + s) + std::cbrt(-q / 2.0 - s) + shift);
  } else if (p == 0.0) {
    roots.push_back(shift);
  } else {
    // Three real roots, trigonometric form.
    const double m = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
    const double theta = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) {
      roots.push_back(m * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0) + shift);
    }
  }
  for (double& r : roots) r = polish_root(c3, c2, c1, c0, r);
  return roots;
}

DesignMatrix design_matrix(std::span<const Correspondence> corrs) {
  DesignMatrix A(static_cast<Eigen::Index>(corrs.size()), 9);
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    fill_pinhole_row(corrs[i].p1, corrs[i].p2, A.row(static_cast<Eigen::Index>(i)));
  }
  return A;
}

SolverOutput seven_point_F(std::span<const Correspondence> corrs) {
  if (corrs.size() != 7) {
    throw Error(ErrorCode::kInvalidArgument, "seven_point_F needs exactly 7 matches");
  }
  Eigen::Matrix<double, 7, 9> A;
  for (int i = 0; i < 7; ++i) fill_pinhole_row(corrs[i].p1, corrs[i].p2, A.row(i));

  Eigen::JacobiSVD<Eigen::Matrix<double, 7, 9>> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(6) < kRankTolerance * sv(0)) {
    throw Error(ErrorCode::kDegenerateSample, "7pt design matrix has rank < 7");
  }
  const Eigen::Matrix3d F1 = unstack(svd.matrixV().col(7));
  const Eigen::Matrix3d F2 = unstack(svd.matrixV().col(8));
  const Eigen::Matrix3d D = F1 - F2;

  // det(F2 + a D) sampled at a = 0, 1, -1, 2 and interpolated.
  const double p0 = F2.determinant();
  const double p1 = (F2 + D).determinant();
  const double pm1 = (F2 - D).determinant();
  const double p2 = (F2 + 2.0 * D).determinant();
  const double c0 = p0;
  const double c2 = 0.5 * (p1 + pm1) - c0;
  const double s = 0.5 * (p1 - pm1);
  const double c3 = ((p2 - c0 - 4.0 * c2) / 2.0 - s) / 3.0;
  const double c1 = s - c3;

  SolverOutput out;
  for (double a : solve_cubic_real(c3, c2, c1, c0)) {
    const Eigen::Matrix3d F = F2 + a * D;
    if (!F.allFinite() || F.norm() == 0.0) continue;
    out.candidates.push_back(uncalibrated_candidate(F, 0.0));
  }
  return out;
}

SolverOutput eight_point_F(std::span<const Correspondence> corrs) {
  if (corrs.size() < 8) {
    throw Error(ErrorCode::kInvalidArgument, "eight_point_F needs at least 8 matches");
  }
  const DesignMatrix A = design_matrix(corrs);
  Eigen::JacobiSVD<DesignMatrix> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(7) < kRankTolerance * sv(0)) {
    throw Error(ErrorCode::kDegenerateSample, "8pt design matrix has rank < 8");
  }
  SolverOutput out;
  TwoViewModel model;
  model.fundamental = project_rank2(unstack(svd.matrixV().col(8)));
  out.candidates.push_back(model);
  return out;
}

PencilMatrices build_pencil(std::span<const Correspondence> corrs) {
  const auto n = static_cast<Eigen::Index>(corrs.size());
  PencilMatrices pencil{DesignMatrix::Zero(n, 9), DesignMatrix::Zero(n, 9),
                        DesignMatrix::Zero(n, 9)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& c = corrs[static_cast<std::size_t>(i)];
    const double x1 = c.p1.x(), y1 = c.p1.y(), x2 = c.p2.x(), y2 = c.p2.y();
    const double r1 = c.p1.squaredNorm(), r2 = c.p2.squaredNorm();
    fill_pinhole_row(c.p1, c.p2, pencil.A0.row(i));
    pencil.A1(i, 2) = x1 * r2;
    pencil.A1(i, 5) = y1 * r2;
    pencil.A1(i, 6) = x2 * r1;
    pencil.A1(i, 7) = y2 * r1;
    pencil.A1(i, 8) = r1 + r2;
    pencil.A2(i, 8) = r1 * r2;
  }
  return pencil;
}

Eigen::Matrix<double, 6, 6> nine_point_reduced_matrix(const PencilMatrices& pencil) {
  const Eigen::Index n = pencil.A0.rows();
  if (n < 9) throw Error(ErrorCode::kInvalidArgument, "pencil needs at least 9 rows");

  const Eigen::ColPivHouseholderQR<DesignMatrix> qr(pencil.A0);
  if (qr.rank() < 9) throw Error(ErrorCode::kSingularA0, "A0 is rank deficient");

  // Surviving columns of the sigma f block: f3, f6, f7, f8, f9 (0-based 2, 5..8).
  static constexpr std::array<int, 5> kKept = {2, 5, 6, 7, 8};
  Eigen::Matrix<double, Eigen::Dynamic, 6> rhs(n, 6);
  rhs.col(0) = -pencil.A2.col(8);
  for (int j = 0; j < 5; ++j) rhs.col(j + 1) = -pencil.A1.col(kKept[j]);
  const Eigen::Matrix<double, 9, 6> X = qr.solve(rhs);

  Eigen::Matrix<double, 6, 6> C = Eigen::Matrix<double, 6, 6>::Zero();
  C(0, 5) = 1.0;  // f9 row of the identity block picks sigma f9.
  for (int k = 0; k < 5; ++k) C.row(k + 1) = X.row(kKept[k]);
  return C;
}

SolverOutput nine_point_F_lambda(std::span<const Correspondence> corrs) {
  if (corrs.size() < 9) {
    throw Error(ErrorCode::kInvalidArgument, "nine_point_F_lambda needs at least 9 matches");
  }
  const PencilMatrices pencil = build_pencil(corrs);
  const Eigen::Matrix<double, 6, 6> C = nine_point_reduced_matrix(pencil);
  const Eigen::EigenSolver<Eigen::Matrix<double, 6, 6>> eig(C, false);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::kNoRealSolutions, "eigenvalue iteration failed");
  }

  SolverOutput out;
  for (const std::complex<double>& sigma : eig.eigenvalues()) {
    if (std::abs(sigma.imag()) > kImaginaryTolerance * std::abs(sigma.real())) continue;
    if (std::abs(sigma.real()) <= kMinSigma) continue;
    const double lambda = 1.0 / sigma.real();
    if (!DivisionModel{lambda}.plausible()) continue;

    const DesignMatrix M = pencil.A0 + lambda * pencil.A1 + lambda * lambda * pencil.A2;
    const Eigen::JacobiSVD<DesignMatrix> svd(M, Eigen::ComputeFullV);
    out.candidates.push_back(uncalibrated_candidate(unstack(svd.matrixV().col(8)), lambda));
  }
  if (out.candidates.empty()) {
    throw Error(ErrorCode::kNoRealSolutions, "no real eigenvalue in the plausible lambda range");
  }
  return out;
}

FundamentalMatrix project_rank2(const Eigen::Matrix3d& F_raw) {
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(F_raw, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d s = svd.singularValues();
  s(2) = 0.0;
  return FundamentalMatrix(svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose());
}

std::optional<FocalPair> focal_bougnoux(const FundamentalMatrix& F) {
  // Work with G = F^T so that x2^T G x1 = 0.
  const Eigen::Matrix3d G = F.matrix().transpose();
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(G, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d e1 = svd.matrixV().col(2);
  const Eigen::Vector3d e2 = svd.matrixU().col(2);
  const Eigen::Vector3d p = Eigen::Vector3d::UnitZ();
  const Eigen::Matrix3d II = Eigen::Vector3d(1.0, 1.0, 0.0).asDiagonal();

  const double num1 = -(p.transpose() * skew(e2) * II * G * p * p.transpose() * G.transpose() * p)(0);
  const double den1 = (p.transpose() * skew(e2) * II * G * II * G.transpose() * p)(0);
  const double num2 = -(p.transpose() * skew(e1) * II * G.transpose() * p * p.transpose() * G * p)(0);
  const double den2 = (p.transpose() * skew(e1) * II * G.transpose() * II * G * p)(0);

  const double f1_sq = num1 / den1;
  const double f2_sq = num2 / den2;
  if (!std::isfinite(f1_sq) || !std::isfinite(f2_sq) || f1_sq <= 0.0 || f2_sq <= 0.0) {
    return std::nullopt;
  }
  return FocalPair{std::sqrt(f1_sq), std::sqrt(f2_sq)};
}

std::optional<double> focal_sturm_shared(const FundamentalMatrix& F) {
  // Kruppa equations with G = U diag(r, s, 0) V^T and the dual image of the
  // absolute conic w = diag(f^2, f^2, 1) in both views:
  //   u2'w u2 / (r^2 v1'w v1) = -u2'w u1 / (r s v1'w v2) = u1'w u1 / (s^2 v2'w v2).
  // Each term is affine in x = f^2; cross-multiplying gives three quadratics
  // which we solve jointly in the least-squares sense.
  const Eigen::Matrix3d G = F.matrix().transpose();
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(G, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& U = svd.matrixU();
  const Eigen::Matrix3d& V = svd.matrixV();
  const double r = svd.singularValues()(0);
  const double s = svd.singularValues()(1);

  // a^T w b = x (a0 b0 + a1 b1) + a2 b2, stored as {slope, intercept}.
  auto conic = [](const Eigen::Vector3d& a, const Eigen::Vector3d& b, double k) {
    return Eigen::Vector2d(k * (a(0) * b(0) + a(1) * b(1)), k * a(2) * b(2));
  };
  const Eigen::Vector2d A = conic(U.col(1), U.col(1), 1.0);
  const Eigen::Vector2d B = conic(V.col(0), V.col(0), r * r);
  const Eigen::Vector2d C = conic(U.col(1), U.col(0), -1.0);
  const Eigen::Vector2d D = conic(V.col(0), V.col(1), r * s);
  const Eigen::Vector2d E = conic(U.col(0), U.col(0), 1.0);
  const Eigen::Vector2d H = conic(V.col(1), V.col(1), s * s);

  // P * Q - R * S as quadratic coefficients {x^2, x, 1}.
  auto cross = [](const Eigen::Vector2d& P, const Eigen::Vector2d& Q, const Eigen::Vector2d& R,
                  const Eigen::Vector2d& S) {
    return Eigen::Vector3d(P(0) * Q(0) - R(0) * S(0),
                           P(0) * Q(1) + P(1) * Q(0) - R(0) * S(1) - R(1) * S(0),
                           P(1) * Q(1) - R(1) * S(1));
  };
  const std::array<Eigen::Vector3d, 3> quads = {cross(A, D, C, B), cross(C, H, E, D),
                                                cross(A, H, E, B)};

  double max_coeff = 0.0;
  for (const auto& q : quads) max_coeff = std::max(max_coeff, q.cwiseAbs().maxCoeff());
  if (!(max_coeff > 1e-12)) return std::nullopt;

  // Sum of squares S(x) is a quartic; its stationary points solve a cubic.
  Eigen::Matrix<double, 5, 1> quartic = Eigen::Matrix<double, 5, 1>::Zero();  // x^4 .. x^0
  for (const auto& q : quads) {
    quartic(0) += q(0) * q(0);
    quartic(1) += 2.0 * q(0) * q(1);
    quartic(2) += q(1) * q(1) + 2.0 * q(0) * q(2);
    quartic(3) += 2.0 * q(1) * q(2);
    quartic(4) += q(2) * q(2);
  }
  auto eval = [&](double x) {
    return (((quartic(0) * x + quartic(1)) * x + quartic(2)) * x + quartic(3)) * x + quartic(4);
  };

  std::optional<double> best;
  double best_cost = 0.0;
  for (double x : solve_cubic_real(4.0 * quartic(0), 3.0 * quartic(1), 2.0 * quartic(2),
                                   quartic(3))) {
    if (!(x > 0.0) || !std::isfinite(x)) continue;
    const double cost = eval(x);
    if (!best || cost < best_cost) {
      best = x;
      best_cost = cost;
    }
  }
  if (!best) return std::nullopt;
  return std::sqrt(*best);
}

std::vector<RelativePose> poses_from_essential(const Eigen::Matrix3d& E) {
  // Standard form ray2^T [t]x R ray1 = 0 is the transpose of ours.
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(E.transpose(),
                                             Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d U = svd.matrixU();
  Eigen::Matrix3d V = svd.matrixV();
  if (U.determinant() < 0.0) U = -U;
  if (V.determinant() < 0.0) V = -V;
  Eigen::Matrix3d W;
  W << 0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;

  const Eigen::Matrix3d Ra = U * W * V.transpose();
  const Eigen::Matrix3d Rb = U * W.transpose() * V.transpose();
  const Eigen::Vector3d t = U.col(2).normalized();
  return {{Ra, t}, {Ra, -t}, {Rb, t}, {Rb, -t}};
}

RelativePose decompose_to_pose(const FundamentalMatrix& F, double f1, double f2,
                               std::span<const Correspondence> inliers,
                               const DivisionModel& d1, const DivisionModel& d2) {
  if (inliers.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "decompose_to_pose needs at least one inlier");
  }
  if (!(f1 > 0.0) || !(f2 > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "focal lengths must be positive");
  }
  const Eigen::Vector3d k1(f1, f1, 1.0), k2(f2, f2, 1.0);
  const Eigen::Matrix3d E = k1.asDiagonal() * F.matrix() * k2.asDiagonal();

  const CameraModel cam1{f1, d1}, cam2{f2, d2};
  std::vector<std::pair<Eigen::Vector3d, Eigen::Vector3d>> rays;
  rays.reserve(inliers.size());
  for (const auto& c : inliers) {
    auto r1 = viewing_ray(c.p1, cam1);
    auto r2 = viewing_ray(c.p2, cam2);
    if (r1 && r2) rays.emplace_back(*r1, *r2);
  }

  std::optional<RelativePose> best;
  int best_votes = 0;
  double best_margin = 0.0;
  for (const RelativePose& pose : poses_from_essential(E)) {
    int votes = 0;
    double margin = 0.0;
    for (const auto& [r1, r2] : rays) {
      const auto depths = triangulate_midpoint(r1, r2, pose);
      if (!depths) continue;
      margin += std::min(depths->depth1, depths->depth2);
      if (depths->depth1 > 0.0 && depths->depth2 > 0.0) ++votes;
    }
    if (votes == 0) continue;
    if (!best || votes > best_votes || (votes == best_votes && margin > best_margin)) {
      best = pose;
      best_votes = votes;
      best_margin = margin;
    }
  }
  if (!best) throw Error(ErrorCode::kNoCheiralityWinner, "no pose puts any point in front");
  return *best;
}

}  // namespace radipose
