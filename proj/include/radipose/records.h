#pragma once

#include <array>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "radipose/harness.h"

namespace radipose {

// Line-delimited JSON, one record per line; blank lines are ignored.
//
// Pair record:
//   {"pair_id": "a-b", "image1": "a", "image2": "b",
//    "dims1": [w, h], "dims2": [w, h],
//    "matches": [[x1, y1, x2, y2], ...],            pixel coordinates
//    "gt_rotation": [w, x, y, z], "gt_translation": [x, y, z],
//    "gt_f1": f, "gt_f2": f,                         focal / max(w, h)
//    "gt_lambda1": l, "gt_lambda2": l}
// image1/image2 are needed only by +prior methods. The ground-truth fields
// are needed by the benchmark; a pair without gt_lambda1/2 or gt_f1/2
// skips the matching metric.
//
// Prior record:
//   {"image_id": "a", "focal": f, "lambda": l, "gravity": [x, y, z]}
// with every field but image_id optional.
struct PairRecord {
  std::string pair_id;
  std::optional<std::string> image1, image2;
  ImageDims dims1, dims2;
  std::vector<std::array<double, 4>> matches;
  std::optional<Eigen::Vector4d> gt_rotation;  // w, x, y, z
  std::optional<Eigen::Vector3d> gt_translation;
  std::optional<double> gt_f1, gt_f2;
  std::optional<double> gt_lambda1, gt_lambda2;
};

struct PriorRecord {
  std::string image_id;
  std::optional<double> focal;
  std::optional<double> lambda;
  std::optional<Eigen::Vector3d> gravity;
};

inline constexpr std::size_t kMinMatches = 20;

// Throws Error(kInvalidArgument) naming the record (its id, or the line when
// the id is unreadable).
PairRecord parse_pair_record(const std::string& line, std::size_t line_number);
PriorRecord parse_prior_record(const std::string& line, std::size_t line_number);

struct PairFile {
  std::vector<PairRecord> pairs;
  std::size_t skipped = 0;  // pairs below kMinMatches
};
PairFile read_pairs(std::istream& in, std::size_t min_matches = kMinMatches);
std::map<std::string, PriorRecord> read_priors(std::istream& in);

// Normalizes the matches and attaches ground truth and priors. When
// `require_priors` is set both image ids must resolve in `priors`.
PairInput to_input(const PairRecord& record, const std::map<std::string, PriorRecord>* priors,
                   bool require_priors, bool require_gt);

}  // namespace radipose
