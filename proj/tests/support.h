#pragma once

// Scene construction for tests, written against Eigen only so that it can
// serve as an oracle for the library code.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "radipose/types.h"

namespace radipose::test {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng, double max_angle_rad) {
  std::normal_distribution<double> n(0.0, 1.0);
  const Eigen::Vector3d axis = Eigen::Vector3d(n(rng), n(rng), n(rng)).normalized();
  return Eigen::AngleAxisd(uniform(rng, -max_angle_rad, max_angle_rad), axis).toRotationMatrix();
}

// Distorted radius for an undistorted radius, via the quadratic
// lambda * ru * rd^2 - rd + ru = 0 on its branch through rd = ru at
// lambda = 0.
inline Eigen::Vector2d oracle_distort(const Eigen::Vector2d& u, double lambda) {
  const double ru = u.norm();
  if (ru == 0.0 || lambda == 0.0) return u;
  const double rd = (1.0 - std::sqrt(1.0 - 4.0 * lambda * ru * ru)) / (2.0 * lambda * ru);
  return u * (rd / ru);
}

struct Scene {
  Eigen::Matrix3d R;  // X2 = R X1 + t
  Eigen::Vector3d t;  // unit
  double f1, f2;
  double lambda1, lambda2;
  std::vector<Correspondence> corrs;  // distorted, normalized
  std::vector<Eigen::Vector3d> points;  // camera-1 frame
};

// Noise-free matches of random points seen by two cameras. Distorted
// coordinates stay inside |x|, |y| <= 0.5 and on the well-behaved side of
// the division model.
inline Scene make_scene(std::mt19937_64& rng, std::size_t n, double f1, double f2,
                        double lambda1, double lambda2) {
  Scene s;
  s.f1 = f1;
  s.f2 = f2;
  s.lambda1 = lambda1;
  s.lambda2 = lambda2;
  for (;;) {
    s.R = random_rotation(rng, 0.3);
    const Eigen::Vector3d c2 = Eigen::Vector3d(uniform(rng, -1, 1), uniform(rng, -1, 1),
                                               uniform(rng, -0.3, 0.3))
                                   .normalized() *
                               uniform(rng, 0.3, 1.0);
    const Eigen::Vector3d t = -s.R * c2;
    s.t = t.normalized();
    s.corrs.clear();
    s.points.clear();
    for (std::size_t tries = 0; tries < 200 * n && s.corrs.size() < n; ++tries) {
      const Eigen::Vector3d X(uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, 3, 7));
      const Eigen::Vector3d X2 = s.R * X + t;
      if (X2.z() < 0.5) continue;
      const Eigen::Vector2d u1 = f1 * X.head<2>() / X.z();
      const Eigen::Vector2d u2 = f2 * X2.head<2>() / X2.z();
      if (1.0 - 4.0 * lambda1 * u1.squaredNorm() < 0.05) continue;
      if (1.0 - 4.0 * lambda2 * u2.squaredNorm() < 0.05) continue;
      const Eigen::Vector2d d1 = oracle_distort(u1, lambda1);
      const Eigen::Vector2d d2 = oracle_distort(u2, lambda2);
      if (d1.cwiseAbs().maxCoeff() > 0.5 || d2.cwiseAbs().maxCoeff() > 0.5) continue;
      s.corrs.push_back({d1, d2});
      s.points.push_back(X);
    }
    if (s.corrs.size() == n) return s;
  }
}

// F with u1^T F u2 = 0 for undistorted normalized points.
inline Eigen::Matrix3d oracle_F(const Scene& s) {
  Eigen::Matrix3d tx;
  tx << 0, -s.t.z(), s.t.y(), s.t.z(), 0, -s.t.x(), -s.t.y(), s.t.x(), 0;
  const Eigen::Matrix3d E2 = tx * s.R;  // u2^T E2 u1 = 0 in calibrated coords
  const Eigen::Vector3d k1(1.0 / s.f1, 1.0 / s.f1, 1.0), k2(1.0 / s.f2, 1.0 / s.f2, 1.0);
  return k1.asDiagonal() * E2.transpose() * k2.asDiagonal();
}

inline Eigen::Vector3d lift(const Eigen::Vector2d& p, double lambda) {
  return {p.x(), p.y(), 1.0 + lambda * p.squaredNorm()};
}

// Distance between two scale-free matrices, insensitive to sign and scale.
inline double projective_distance(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const Eigen::Matrix3d an = a / a.norm(), bn = b / b.norm();
  return std::min((an - bn).norm(), (an + bn).norm());
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("radipose-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(file(name), std::ios::binary) << text;
    return file(name);
  }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace radipose::test
