#include "radipose/cli.h"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <Eigen/Geometry>
#include <json.hpp>

#include "radipose/errors.h"
#include "radipose/harness.h"
#include "radipose/method.h"
#include "radipose/records.h"
#include "radipose/report.h"

namespace radipose {

namespace {

constexpr const char* kMethodHelp = R"(Methods: ENGINE[:LAMBDAS][+prior][+shared]
  ENGINE   7pt | 8pt | 9ptFlambda
  LAMBDAS  comma list of candidate undistortion parameters for 7pt/8pt
           (default 0); each sample is tried with every candidate
  +prior   take lambda and focal from per-image priors; 8pt+prior needs
           prior focals and runs the calibrated path
  +shared  both images share focal and lambda
Lists of methods are comma separated: "7pt:0,-0.6,-1.2+shared,9ptFlambda".

Pair files are JSON lines with pair_id, dims1/dims2 ([w, h]), matches
([[x1, y1, x2, y2], ...] in pixels), gt_rotation (quaternion w, x, y, z),
gt_translation, gt_f1/gt_f2 (focal divided by the longer image side) and
optionally gt_lambda1/gt_lambda2, image1/image2. Prior files are JSON lines
with image_id and optional focal, lambda, gravity. Pairs with fewer than 20
matches are skipped by bench-data.

RADIPOSE_SEED overrides --seed.)";

struct RansacFlags {
  std::size_t max_iterations = 1000;
  std::size_t min_iterations = 20;
  double confidence = 0.9999;
  double threshold_px = 3.0;
  std::uint64_t seed = 0;
  std::string refine = "R,t,f1,f2,l1,l2";
  std::size_t lo_iterations = 25;
  std::size_t final_iterations = 100;
  bool no_timing = false;

  void attach(CLI::App* app) {
    app->add_option("--max-iterations", max_iterations, "RANSAC iteration cap")->capture_default_str();
    app->add_option("--min-iterations", min_iterations, "RANSAC iteration floor")->capture_default_str();
    app->add_option("--confidence", confidence, "termination confidence")->capture_default_str();
    app->add_option("--threshold-px", threshold_px, "inlier threshold in pixels")->capture_default_str();
    app->add_option("--seed", seed, "random seed")->capture_default_str();
    app->add_option("--refine", refine, "refined blocks: R,t,f1,f2,l1,l2 or none")
        ->capture_default_str();
    app->add_option("--lo-iterations", lo_iterations, "LM iterations per local optimization")
        ->capture_default_str();
    app->add_option("--final-iterations", final_iterations, "LM iterations of the final polish")
        ->capture_default_str();
    app->add_flag("--no-timing", no_timing, "record runtimes as 0 for reproducible reports");
  }

  RansacConfig config() const {
    RansacConfig c;
    c.max_iterations = max_iterations;
    c.min_iterations = min_iterations;
    c.confidence = confidence;
    c.inlier_threshold_px = threshold_px;
    c.seed = seed;
    c.refine_blocks = RefineBlocks::parse(refine);
    c.lo_max_lm_iterations = lo_iterations;
    c.final_lm_iterations = final_iterations;
    c.validate();
    return c;
  }

  void echo(BenchReport& r) const {
    r.config.emplace_back("max_iterations", std::to_string(max_iterations));
    r.config.emplace_back("min_iterations", std::to_string(min_iterations));
    r.config.emplace_back("confidence", format_double(confidence));
    r.config.emplace_back("threshold_px", format_double(threshold_px));
    r.config.emplace_back("refine", RefineBlocks::parse(refine).render());
    r.config.emplace_back("lo_iterations", std::to_string(lo_iterations));
    r.config.emplace_back("final_iterations", std::to_string(final_iterations));
    r.config.emplace_back("timing", no_timing ? "off" : "on");
  }
};

struct OutputFlags {
  std::string csv;
  std::string json;

  void attach(CLI::App* app) {
    app->add_option("--csv", csv, "write the CSV report here");
    app->add_option("--json", json, "write the JSON report here");
  }

  void write(const BenchReport& report, std::ostream& out) const {
    if (csv.empty() && json.empty()) {
      out << to_csv(report);
      return;
    }
    if (!csv.empty()) write_file(csv, to_csv(report));
    if (!json.empty()) write_file(json, to_json(report));
  }

  static void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) throw Error(ErrorCode::kInvalidArgument, "cannot write '" + path + "'");
  }
};

std::ifstream open_input(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kInvalidArgument, "cannot open '" + path + "'");
  return f;
}

void apply_seed_override(std::uint64_t& seed) {
  const char* env = std::getenv("RADIPOSE_SEED");
  if (!env || !*env) return;
  const std::string_view s(env);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kInvalidArgument, "RADIPOSE_SEED must be an unsigned integer");
  }
  seed = v;
}

std::size_t default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

bool any_prior(const std::vector<MethodSpec>& methods) {
  return std::any_of(methods.begin(), methods.end(), [](const MethodSpec& m) { return m.prior; });
}

std::string join_methods(const std::vector<MethodSpec>& methods) {
  std::string s;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    if (i) s += ',';
    s += methods[i].render();
  }
  return s;
}

nlohmann::ordered_json estimate_json(const std::string& pair_id, const MethodSpec& method,
                                     const RansacResult& r, bool timing) {
  using nlohmann::ordered_json;
  const TwoViewModel& m = r.model;
  ordered_json j;
  j["pair_id"] = pair_id;
  j["method"] = method.render();
  std::vector<double> f;
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) f.push_back(m.fundamental.matrix()(i, k));
  }
  j["fundamental"] = f;
  if (m.pose) {
    const Eigen::Quaterniond q(m.pose->rotation);
    j["rotation"] = {q.w(), q.x(), q.y(), q.z()};
    j["translation"] = {m.pose->translation.x(), m.pose->translation.y(), m.pose->translation.z()};
  } else {
    j["rotation"] = nullptr;
    j["translation"] = nullptr;
  }
  j["f1"] = m.cam1.focal ? ordered_json(*m.cam1.focal) : ordered_json(nullptr);
  j["f2"] = m.cam2.focal ? ordered_json(*m.cam2.focal) : ordered_json(nullptr);
  j["lambda1"] = m.cam1.division.lambda;
  j["lambda2"] = m.cam2.division.lambda;
  j["inliers"] = r.num_inliers;
  j["matches"] = r.inlier_mask.size();
  j["iterations"] = r.iterations_run;
  j["wall_time_s"] = timing ? r.wall_time : 0.0;
  return j;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-view relative pose for radially distorted cameras", "radipose"};
  app.footer(kMethodHelp);
  app.require_subcommand(1);

  // estimate
  auto* estimate = app.add_subcommand("estimate", "estimate the model of one pair");
  std::string est_pairs, est_pair_id, est_priors, est_method = "7pt:0,-0.6,-1.2";
  RansacFlags est_flags;
  estimate->add_option("--pairs", est_pairs, "pair file (JSON lines)")->required();
  estimate->add_option("--pair-id", est_pair_id, "pair to use (default: first record)");
  estimate->add_option("--priors", est_priors, "prior file (JSON lines)");
  estimate->add_option("--method", est_method, "method string")->capture_default_str();
  est_flags.attach(estimate);

  // bench-synth
  auto* synth = app.add_subcommand("bench-synth", "benchmark on generated pairs");
  std::string scenario = "C", synth_methods;
  bool shared = false;
  long long pairs = 100, points = 500;
  double noise_px = 1.0, outliers = 0.0;
  std::size_t synth_jobs = default_jobs();
  RansacFlags synth_flags;
  OutputFlags synth_out;
  synth->add_option("--scenario", scenario, "distortion scenario")
      ->check(CLI::IsMember({"A", "B", "C"}))
      ->capture_default_str();
  synth->add_flag("--shared", shared, "both cameras share focal and lambda");
  synth->add_option("--pairs", pairs, "number of pairs")->capture_default_str();
  synth->add_option("--points", points, "matches per pair")->capture_default_str();
  synth->add_option("--noise-px", noise_px, "Gaussian noise sigma in pixels")->capture_default_str();
  synth->add_option("--outliers", outliers, "outlier fraction in [0, 1)")->capture_default_str();
  synth->add_option("--methods", synth_methods, "method list")->required();
  synth->add_option("--jobs", synth_jobs, "worker threads")->capture_default_str();
  synth_flags.attach(synth);
  synth_out.attach(synth);

  // bench-data
  auto* data = app.add_subcommand("bench-data", "benchmark on precomputed correspondences");
  std::string data_pairs, data_priors, data_methods;
  std::size_t data_jobs = default_jobs();
  RansacFlags data_flags;
  OutputFlags data_out;
  data->add_option("--pairs", data_pairs, "pair file (JSON lines)")->required();
  data->add_option("--priors", data_priors, "prior file (JSON lines)");
  data->add_option("--methods", data_methods, "method list")->required();
  data->add_option("--jobs", data_jobs, "worker threads")->capture_default_str();
  data_flags.attach(data);
  data_out.attach(data);

  // report
  auto* report = app.add_subcommand("report", "print a JSON report as CSV or JSON");
  std::string report_input, report_format = "csv";
  report->add_option("--input", report_input, "JSON report")->required();
  report->add_option("--format", report_format, "output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (estimate->parsed()) {
      apply_seed_override(est_flags.seed);
      const RansacConfig cfg = est_flags.config();
      const MethodSpec method = MethodSpec::parse(est_method);
      auto in = open_input(est_pairs);
      PairFile file = read_pairs(in, 0);
      const PairRecord* record = nullptr;
      for (const auto& p : file.pairs) {
        if (est_pair_id.empty() || p.pair_id == est_pair_id) {
          record = &p;
          break;
        }
      }
      if (!record) {
        throw Error(ErrorCode::kInvalidArgument,
                    est_pair_id.empty() ? "pair file is empty" : "no pair '" + est_pair_id + "'");
      }
      std::map<std::string, PriorRecord> priors;
      if (!est_priors.empty()) {
        auto pin = open_input(est_priors);
        priors = read_priors(pin);
      }
      const PairInput pair = to_input(*record, &priors, method.prior, false);
      RansacConfig rc = cfg;
      rc.shared_intrinsics = method.shared;
      try {
        const RansacResult r = ransac_estimate(pair.corrs, pair.dims1, pair.dims2, method.engine,
                                               strategy_for(pair, method), rc);
        out << estimate_json(pair.id, method, r, !est_flags.no_timing).dump(2) << "\n";
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kNoModelFound) {
          err << "error: " << e.what() << "\n";
          return 2;
        }
        throw;
      }
      return 0;
    }

    if (synth->parsed()) {
      apply_seed_override(synth_flags.seed);
      if (pairs <= 0 || points <= 0) {
        throw Error(ErrorCode::kInvalidArgument, "--pairs and --points must be positive");
      }
      ScenarioSpec spec;
      spec.kind = scenario == "A" ? ScenarioKind::kA
                  : scenario == "B" ? ScenarioKind::kB
                                    : ScenarioKind::kC;
      spec.shared_lambda = shared;
      spec.pairs = static_cast<std::size_t>(pairs);
      spec.points_per_pair = static_cast<std::size_t>(points);
      spec.noise_px = noise_px;
      spec.outlier_fraction = outliers;
      spec.seed = synth_flags.seed;
      spec.validate();
      const auto methods = parse_method_list(synth_methods);

      HarnessConfig hc;
      hc.ransac = synth_flags.config();
      hc.jobs = synth_jobs;
      hc.timing = !synth_flags.no_timing;
      BenchReport rep;
      rep.seed = synth_flags.seed;
      rep.config = {{"command", "bench-synth"},
                    {"scenario", scenario},
                    {"shared", shared ? "true" : "false"},
                    {"pairs", std::to_string(spec.pairs)},
                    {"points", std::to_string(spec.points_per_pair)},
                    {"noise_px", format_double(noise_px)},
                    {"outliers", format_double(outliers)},
                    {"methods", join_methods(methods)}};
      synth_flags.echo(rep);
      rep.rows = run_benchmark(
          spec.pairs, [&](std::size_t i) { return synthetic_input(spec, i); }, methods, hc);
      synth_out.write(rep, out);
      return 0;
    }

    if (data->parsed()) {
      apply_seed_override(data_flags.seed);
      const auto methods = parse_method_list(data_methods);
      const bool need_priors = any_prior(methods);
      std::map<std::string, PriorRecord> priors;
      if (!data_priors.empty()) {
        auto pin = open_input(data_priors);
        priors = read_priors(pin);
      } else if (need_priors) {
        throw Error(ErrorCode::kInvalidArgument, "+prior methods need --priors");
      }
      auto in = open_input(data_pairs);
      const PairFile file = read_pairs(in);
      // Resolve everything up front so schema problems surface before any work.
      std::vector<PairInput> inputs;
      for (const auto& p : file.pairs) inputs.push_back(to_input(p, &priors, need_priors, true));
      if (need_priors) {
        for (const auto& p : inputs) {
          for (const auto& m : methods) {
            if (m.prior) strategy_for(p, m);
          }
        }
      }
      if (inputs.empty()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "no pair with at least " + std::to_string(kMinMatches) + " matches");
      }

      HarnessConfig hc;
      hc.ransac = data_flags.config();
      hc.jobs = data_jobs;
      hc.timing = !data_flags.no_timing;
      BenchReport rep;
      rep.seed = data_flags.seed;
      rep.config = {{"command", "bench-data"},
                    {"pairs_file", data_pairs},
                    {"priors_file", data_priors},
                    {"methods", join_methods(methods)}};
      data_flags.echo(rep);
      rep.skipped_pairs = file.skipped;
      if (file.skipped) {
        err << "warning: skipped " << file.skipped << " pair(s) with fewer than " << kMinMatches
            << " matches\n";
      }
      rep.rows = run_benchmark(
          inputs.size(), [&](std::size_t i) { return inputs[i]; }, methods, hc);
      data_out.write(rep, out);
      return 0;
    }

    if (report->parsed()) {
      auto in = open_input(report_input);
      std::stringstream buf;
      buf << in.rdbuf();
      const BenchReport rep = parse_report_json(buf.str());
      out << (report_format == "csv" ? to_csv(rep) : to_json(rep));
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace radipose
