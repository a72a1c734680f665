#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "dual.h"
#include "epipolar_terms.h"
#include "radipose/errors.h"
#include "radipose/geometry.h"
#include "radipose/robust.h"
#include "radipose/solvers.h"

namespace radipose {

namespace {

constexpr int kMaxParams = 9;
using D = internal::Dual<kMaxParams>;

constexpr double kMinFocal = 1e-3;
constexpr double kMaxFocal = 1e3;

struct Slots {
  int rot = -1, trans = -1, f1 = -1, f2 = -1, l1 = -1, l2 = -1;
  int size = 0;
};

Slots make_slots(const RefineBlocks& blocks, bool shared) {
  Slots s;
  auto take = [&s](int n) {
    const int at = s.size;
    s.size += n;
    return at;
  };
  if (blocks.rotation) s.rot = take(3);
  if (blocks.translation) s.trans = take(2);
  if (shared) {
    if (blocks.focal1 || blocks.focal2) s.f1 = s.f2 = take(1);
    if (blocks.lambda1 || blocks.lambda2) s.l1 = s.l2 = take(1);
  } else {
    if (blocks.focal1) s.f1 = take(1);
    if (blocks.focal2) s.f2 = take(1);
    if (blocks.lambda1) s.l1 = take(1);
    if (blocks.lambda2) s.l2 = take(1);
  }
  return s;
}

// Orthonormal basis of the plane perpendicular to t.
Eigen::Matrix<double, 3, 2> tangent_basis(const Eigen::Vector3d& t) {
  Eigen::Index axis = 0;
  t.cwiseAbs().minCoeff(&axis);
  const Eigen::Vector3d b1 = t.cross(Eigen::Vector3d::Unit(axis)).normalized();
  Eigen::Matrix<double, 3, 2> B;
  B.col(0) = b1;
  B.col(1) = t.cross(b1);
  return B;
}

D scalar_param(double value, int slot) {
  return slot >= 0 ? D::variable(value, slot) : D(value);
}

// F(params) at zero increment with derivatives w.r.t. the active slots.
struct DualModel {
  internal::Mat3<D> F;
  D lambda1, lambda2;
};

DualModel dual_model(const TwoViewModel& model, const Slots& slots) {
  const Eigen::Matrix3d& R0 = model.pose->rotation;
  const Eigen::Vector3d& t0 = model.pose->translation;

  std::array<D, 3> dr;
  for (int k = 0; k < 3; ++k) dr[k] = slots.rot >= 0 ? D::variable(0.0, slots.rot + k) : D(0.0);
  // (I + [dr]x) R0; first-order exact at dr = 0.
  const std::array<std::array<D, 3>, 3> S = {{{D(0.0), -dr[2], dr[1]},
                                              {dr[2], D(0.0), -dr[0]},
                                              {-dr[1], dr[0], D(0.0)}}};
  std::array<std::array<D, 3>, 3> R;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      D v(R0(i, j));
      for (int k = 0; k < 3; ++k) v = v + S[i][k] * R0(k, j);
      R[i][j] = v;
    }
  }

  const auto B = tangent_basis(t0);
  std::array<D, 3> t;
  {
    const D a = slots.trans >= 0 ? D::variable(0.0, slots.trans) : D(0.0);
    const D b = slots.trans >= 0 ? D::variable(0.0, slots.trans + 1) : D(0.0);
    for (int i = 0; i < 3; ++i) t[i] = t0(i) + a * B(i, 0) + b * B(i, 1);
    const D norm = internal::sqrt(t[0] * t[0] + t[1] * t[1] + t[2] * t[2]);
    for (auto& ti : t) ti = ti / norm;
  }

  // E = [t]x R.
  const std::array<std::array<D, 3>, 3> T = {{{D(0.0), -t[2], t[1]},
                                              {t[2], D(0.0), -t[0]},
                                              {-t[1], t[0], D(0.0)}}};
  std::array<std::array<D, 3>, 3> E;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      E[i][j] = T[i][0] * R[0][j] + T[i][1] * R[1][j] + T[i][2] * R[2][j];
    }
  }

  const D f1 = scalar_param(*model.cam1.focal, slots.f1);
  const D f2 = scalar_param(*model.cam2.focal, slots.f2);
  const std::array<D, 3> k1 = {f1, f1, D(1.0)};
  const std::array<D, 3> k2 = {f2, f2, D(1.0)};

  DualModel out;
  // F = K1^-1 E^T K2^-1.
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) out.F[3 * i + j] = E[j][i] / (k1[i] * k2[j]);
  }
  out.lambda1 = scalar_param(model.cam1.division.lambda, slots.l1);
  out.lambda2 = scalar_param(model.cam2.division.lambda, slots.l2);
  return out;
}

void require_pose_and_focals(const TwoViewModel& model) {
  if (!model.pose || !model.cam1.focal || !model.cam2.focal) {
    throw Error(ErrorCode::kInvalidArgument, "model needs pose and focals for refinement");
  }
}

// Attaches focals (if missing) and a pose decomposed from the rank-2 part
// of the model's F.
TwoViewModel with_pose(const TwoViewModel& model, std::span<const Correspondence> corrs,
                       const std::vector<bool>& mask, bool shared) {
  TwoViewModel out = model;
  const FundamentalMatrix F2 = project_rank2(model.fundamental.matrix());
  if (!out.cam1.focal || !out.cam2.focal) {
    if (shared) {
      const auto f = focal_sturm_shared(F2);
      if (!f) throw Error(ErrorCode::kDecompositionFailed, "shared focal extraction failed");
      out.cam1.focal = out.cam2.focal = *f;
    } else {
      const auto f = focal_bougnoux(F2);
      if (!f) throw Error(ErrorCode::kDecompositionFailed, "Bougnoux focal extraction failed");
      out.cam1.focal = f->f1;
      out.cam2.focal = f->f2;
    }
  }
  std::vector<Correspondence> inliers;
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    if (mask[i]) inliers.push_back(corrs[i]);
  }
  try {
    out.pose = decompose_to_pose(F2, *out.cam1.focal, *out.cam2.focal, inliers,
                                 out.cam1.division, out.cam2.division);
  } catch (const Error& e) {
    throw Error(ErrorCode::kDecompositionFailed, e.what());
  }
  return out;
}

}  // namespace

RefineBlocks RefineBlocks::parse(const std::string& text) {
  RefineBlocks b{false, false, false, false, false, false};
  if (text == "none" || text.empty()) return b;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "R") b.rotation = true;
    else if (tok == "t") b.translation = true;
    else if (tok == "f1") b.focal1 = true;
    else if (tok == "f2") b.focal2 = true;
    else if (tok == "l1") b.lambda1 = true;
    else if (tok == "l2") b.lambda2 = true;
    else throw Error(ErrorCode::kInvalidArgument, "unknown refinement block '" + tok + "'");
  }
  return b;
}

std::string RefineBlocks::render() const {
  std::string out;
  auto add = [&out](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(rotation, "R");
  add(translation, "t");
  add(focal1, "f1");
  add(focal2, "f2");
  add(lambda1, "l1");
  add(lambda2, "l2");
  return out.empty() ? "none" : out;
}

std::size_t parameter_count(const RefineBlocks& blocks, bool shared) {
  return static_cast<std::size_t>(make_slots(blocks, shared).size);
}

ResidualJacobian residual_jacobian(const TwoViewModel& model, const Correspondence& c,
                                   const RefineBlocks& blocks, bool shared) {
  require_pose_and_focals(model);
  const Slots slots = make_slots(blocks, shared);
  const DualModel dm = dual_model(model, slots);
  const auto terms = internal::epipolar_terms<D>(dm.F, dm.lambda1, dm.lambda2, c.p1, c.p2);
  const D r = terms.residual / internal::sqrt(terms.grad_sq);
  return {r.a, r.v.head(slots.size)};
}

TwoViewModel apply_increment(const TwoViewModel& model, const Eigen::VectorXd& delta,
                             const RefineBlocks& blocks, bool shared) {
  require_pose_and_focals(model);
  const Slots slots = make_slots(blocks, shared);
  if (delta.size() != slots.size) {
    throw Error(ErrorCode::kInvalidArgument, "increment size does not match parameter count");
  }
  RelativePose pose = *model.pose;
  CameraModel cam1 = model.cam1, cam2 = model.cam2;

  if (slots.rot >= 0) {
    const Eigen::Vector3d w = delta.segment<3>(slots.rot);
    const double angle = w.norm();
    const Eigen::Matrix3d dR =
        angle > 0.0 ? Eigen::AngleAxisd(angle, w / angle).toRotationMatrix()
                    : Eigen::Matrix3d::Identity();
    pose.rotation = Eigen::Quaterniond(dR * pose.rotation).normalized().toRotationMatrix();
  }
  if (slots.trans >= 0) {
    const auto B = tangent_basis(pose.translation);
    pose.translation = (pose.translation + B * delta.segment<2>(slots.trans)).normalized();
  }
  auto focal = [&](int slot, double f) {
    return slot >= 0 ? std::clamp(f + delta(slot), kMinFocal, kMaxFocal) : f;
  };
  auto lambda = [&](int slot, double l) {
    return slot >= 0 ? std::clamp(l + delta(slot), DivisionModel::kMinLambda,
                                  DivisionModel::kMaxLambda)
                     : l;
  };
  cam1.focal = focal(slots.f1, *cam1.focal);
  cam2.focal = focal(slots.f2, *cam2.focal);
  cam1.division.lambda = lambda(slots.l1, cam1.division.lambda);
  cam2.division.lambda = lambda(slots.l2, cam2.division.lambda);
  return make_model(pose, cam1, cam2);
}

TwoViewModel lo_refine(const TwoViewModel& model, std::span<const Correspondence> corrs,
                       const std::vector<bool>& mask, const TruncatedScore& s,
                       const RansacConfig& cfg, std::size_t max_lm_iterations) {
  if (mask.size() != corrs.size()) {
    throw Error(ErrorCode::kInvalidArgument, "mask size does not match correspondences");
  }
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    if (mask[i]) active.push_back(i);
  }
  if (active.size() < 8) {
    throw Error(ErrorCode::kInvalidArgument, "local optimization needs at least 8 inliers");
  }

  const bool shared = cfg.shared_intrinsics;
  TwoViewModel current =
      model.pose && model.cam1.focal && model.cam2.focal ? model
                                                         : with_pose(model, corrs, mask, shared);
  current = make_model(*current.pose, current.cam1, current.cam2);

  const double initial_cost = truncated_cost(model, corrs, mask, s);
  const Slots slots = make_slots(cfg.refine_blocks, shared);
  double cost = truncated_cost(current, corrs, mask, s);

  if (slots.size > 0) {
    const int n = slots.size;
    double damping = 1e-3;
    for (std::size_t iter = 0; iter < max_lm_iterations && cost > 0.0; ++iter) {
      const DualModel dm = dual_model(current, slots);
      Eigen::MatrixXd JtJ = Eigen::MatrixXd::Zero(n, n);
      Eigen::VectorXd Jtr = Eigen::VectorXd::Zero(n);
      for (std::size_t i : active) {
        const auto terms =
            internal::epipolar_terms<D>(dm.F, dm.lambda1, dm.lambda2, corrs[i].p1, corrs[i].p2);
        if (!(terms.grad_sq.a > 1e-28)) continue;
        const D r = terms.residual / internal::sqrt(terms.grad_sq);
        if (!(r.a * r.a < s.threshold_sq)) continue;
        const auto J = r.v.head(n);
        JtJ.selfadjointView<Eigen::Lower>().rankUpdate(J);
        Jtr += r.a * J;
      }
      JtJ = JtJ.selfadjointView<Eigen::Lower>();

      // Damping loop: retry the same linearization until a step is accepted.
      bool accepted = false;
      bool converged = false;
      while (!accepted && damping < 1e12) {
        Eigen::MatrixXd H = JtJ;
        H.diagonal().array() += damping;
        const Eigen::VectorXd delta = H.ldlt().solve(-Jtr);
        if (!delta.allFinite() || delta.norm() < 1e-12) {
          converged = true;
          break;
        }
        const TwoViewModel trial = apply_increment(current, delta, cfg.refine_blocks, shared);
        const double trial_cost = truncated_cost(trial, corrs, mask, s);
        if (trial_cost < cost) {
          const double rel = (cost - trial_cost) / cost;
          current = trial;
          cost = trial_cost;
          damping = std::max(damping / 10.0, 1e-12);
          accepted = true;
          converged = rel < 1e-10;
        } else {
          damping *= 10.0;
        }
      }
      if (!accepted || converged) break;
    }
  }

  if (cost > initial_cost) return model;
  // The cost is blind to the sign of t, so settle the pose again by cheirality.
  if (slots.size > 0) {
    std::vector<Correspondence> inliers;
    for (std::size_t i : active) inliers.push_back(corrs[i]);
    try {
      const RelativePose voted =
          decompose_to_pose(current.fundamental, *current.cam1.focal, *current.cam2.focal, inliers,
                            current.cam1.division, current.cam2.division);
      // Keep the refined values unless the vote picks a different candidate.
      const double rot_gap = Eigen::AngleAxisd(voted.rotation.transpose() * current.pose->rotation).angle();
      if (rot_gap > 1e-3 || voted.translation.dot(current.pose->translation) < 0.0) {
        current.pose = voted;
      }
    } catch (const Error&) {
    }
  }
  return current;
}

}  // namespace radipose
