#include "radipose/records.h"

#include <cmath>

#include <Eigen/Geometry>
#include <json.hpp>

#include "radipose/errors.h"
#include "radipose/geometry.h"

namespace radipose {

namespace {

using nlohmann::json;

class RecordReader {
 public:
  RecordReader(const std::string& line, std::size_t line_number, const char* kind)
      : where_(std::string(kind) + " record on line " + std::to_string(line_number)) {
    try {
      doc_ = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(std::string("malformed JSON: ") + e.what());
    }
    if (!doc_.is_object()) fail("expected a JSON object");
  }

  void name(const std::string& id) { where_ += " ('" + id + "')"; }

  [[noreturn]] void fail(const std::string& why) const {
    throw Error(ErrorCode::kInvalidArgument, where_ + ": " + why);
  }

  bool has(const char* key) const { return doc_.contains(key) && !doc_[key].is_null(); }

  std::string string(const char* key) const {
    if (!has(key) || !doc_[key].is_string()) fail(std::string("'") + key + "' must be a string");
    return doc_[key].get<std::string>();
  }

  std::optional<std::string> opt_string(const char* key) const {
    if (!has(key)) return std::nullopt;
    return string(key);
  }

  static bool finite_number(const json& v) {
    return v.is_number() && std::isfinite(v.get<double>());
  }

  double number(const char* key) const {
    if (!has(key) || !finite_number(doc_[key])) fail(std::string("'") + key + "' must be a number");
    return doc_[key].get<double>();
  }

  std::optional<double> opt_number(const char* key) const {
    if (!has(key)) return std::nullopt;
    return number(key);
  }

  template <int N>
  Eigen::Matrix<double, N, 1> vector(const json& v, const std::string& what) const {
    if (!v.is_array() || v.size() != static_cast<std::size_t>(N)) {
      fail(what + " must be an array of " + std::to_string(N) + " numbers");
    }
    Eigen::Matrix<double, N, 1> out;
    for (int i = 0; i < N; ++i) {
      if (!finite_number(v[i])) fail(what + " must hold finite numbers");
      out[i] = v[i].get<double>();
    }
    return out;
  }

  template <int N>
  std::optional<Eigen::Matrix<double, N, 1>> opt_vector(const char* key) const {
    if (!has(key)) return std::nullopt;
    return vector<N>(doc_[key], std::string("'") + key + "'");
  }

  ImageDims dims(const char* key) const {
    if (!has(key)) fail(std::string("missing '") + key + "'");
    const Eigen::Vector2d v = vector<2>(doc_[key], std::string("'") + key + "'");
    ImageDims d{static_cast<int>(v.x()), static_cast<int>(v.y())};
    if (v.x() != d.width || v.y() != d.height || !d.valid()) {
      fail(std::string("'") + key + "' must hold two positive integers");
    }
    return d;
  }

  const json& at(const char* key) const { return doc_[key]; }

 private:
  json doc_;
  std::string where_;
};

}  // namespace

PairRecord parse_pair_record(const std::string& line, std::size_t line_number) {
  RecordReader r(line, line_number, "pair");
  PairRecord p;
  p.pair_id = r.string("pair_id");
  r.name(p.pair_id);
  p.image1 = r.opt_string("image1");
  p.image2 = r.opt_string("image2");
  p.dims1 = r.dims("dims1");
  p.dims2 = r.dims("dims2");

  if (!r.has("matches") || !r.at("matches").is_array()) r.fail("'matches' must be an array");
  const auto& matches = r.at("matches");
  p.matches.reserve(matches.size());
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const Eigen::Vector4d m = r.vector<4>(matches[i], "match " + std::to_string(i));
    p.matches.push_back({m[0], m[1], m[2], m[3]});
  }

  p.gt_rotation = r.opt_vector<4>("gt_rotation");
  if (p.gt_rotation && std::abs(p.gt_rotation->norm() - 1.0) > 1e-6) {
    r.fail("'gt_rotation' must be a unit quaternion");
  }
  p.gt_translation = r.opt_vector<3>("gt_translation");
  if (p.gt_translation && p.gt_translation->norm() < 1e-12) {
    r.fail("'gt_translation' must be nonzero");
  }
  p.gt_f1 = r.opt_number("gt_f1");
  p.gt_f2 = r.opt_number("gt_f2");
  for (const auto& f : {p.gt_f1, p.gt_f2}) {
    if (f && !(*f > 0.0)) r.fail("ground-truth focals must be positive");
  }
  p.gt_lambda1 = r.opt_number("gt_lambda1");
  p.gt_lambda2 = r.opt_number("gt_lambda2");
  if (p.gt_lambda1.has_value() != p.gt_lambda2.has_value()) {
    r.fail("give both or neither of 'gt_lambda1' and 'gt_lambda2'");
  }
  return p;
}

PriorRecord parse_prior_record(const std::string& line, std::size_t line_number) {
  RecordReader r(line, line_number, "prior");
  PriorRecord p;
  p.image_id = r.string("image_id");
  r.name(p.image_id);
  p.focal = r.opt_number("focal");
  if (p.focal && !(*p.focal > 0.0)) r.fail("'focal' must be positive");
  p.lambda = r.opt_number("lambda");
  if (p.lambda && !DivisionModel{*p.lambda}.plausible()) r.fail("'lambda' outside [-2, 0.5]");
  p.gravity = r.opt_vector<3>("gravity");
  if (p.gravity && std::abs(p.gravity->norm() - 1.0) > 1e-6) r.fail("'gravity' must be a unit vector");
  return p;
}

namespace {

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

PairFile read_pairs(std::istream& in, std::size_t min_matches) {
  PairFile out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (blank(line)) continue;
    PairRecord p = parse_pair_record(line, n);
    if (p.matches.size() < min_matches) {
      ++out.skipped;
      continue;
    }
    out.pairs.push_back(std::move(p));
  }
  return out;
}

std::map<std::string, PriorRecord> read_priors(std::istream& in) {
  std::map<std::string, PriorRecord> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (blank(line)) continue;
    PriorRecord p = parse_prior_record(line, n);
    if (out.count(p.image_id)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "prior record on line " + std::to_string(n) + ": duplicate image id '" +
                      p.image_id + "'");
    }
    out.emplace(p.image_id, std::move(p));
  }
  return out;
}

PairInput to_input(const PairRecord& record, const std::map<std::string, PriorRecord>* priors,
                   bool require_priors, bool require_gt) {
  PairInput in;
  in.id = record.pair_id;
  in.dims1 = record.dims1;
  in.dims2 = record.dims2;
  in.corrs.reserve(record.matches.size());
  for (const auto& m : record.matches) {
    in.corrs.push_back({normalize({m[0], m[1]}, record.dims1), normalize({m[2], m[3]}, record.dims2)});
  }

  if (record.gt_rotation && record.gt_translation) {
    GroundTruth gt;
    const Eigen::Vector4d& q = *record.gt_rotation;
    gt.pose.rotation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]).normalized().toRotationMatrix();
    gt.pose.translation = record.gt_translation->normalized();
    if (record.gt_f1 && record.gt_f2) {
      gt.cam1.focal = record.gt_f1;
      gt.cam2.focal = record.gt_f2;
    }
    gt.has_lambda = record.gt_lambda1.has_value();
    if (gt.has_lambda) {
      gt.cam1.division.lambda = *record.gt_lambda1;
      gt.cam2.division.lambda = *record.gt_lambda2;
    }
    in.gt = gt;
  } else if (require_gt) {
    throw Error(ErrorCode::kInvalidArgument,
                "pair record '" + record.pair_id + "' lacks 'gt_rotation' or 'gt_translation'");
  }

  if (require_priors) {
    PriorInjection prior;
    const std::optional<std::string>* ids[2] = {&record.image1, &record.image2};
    for (int k = 0; k < 2; ++k) {
      const auto& id = *ids[k];
      const char* field = k == 0 ? "image1" : "image2";
      if (!id) {
        throw Error(ErrorCode::kInvalidArgument,
                    "pair record '" + record.pair_id + "' needs '" + field + "' for prior lookup");
      }
      if (!priors || !priors->count(*id)) {
        throw Error(ErrorCode::kInvalidArgument, "no prior record for image id '" + *id +
                                                     "' referenced by pair '" + record.pair_id + "'");
      }
      const PriorRecord& pr = priors->at(*id);
      (k == 0 ? prior.focal1 : prior.focal2) = pr.focal;
      (k == 0 ? prior.lambda1 : prior.lambda2) = pr.lambda;
      (k == 0 ? prior.gravity1 : prior.gravity2) = pr.gravity;
    }
    in.priors = prior;
  }
  return in;
}

}  // namespace radipose
