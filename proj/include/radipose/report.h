#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "radipose/harness.h"

namespace radipose {

// Fixed column order shared by the CSV header and the JSON row keys.
inline constexpr const char* kReportColumns[] = {
    "method",         "refinement",     "sample",   "avg_pose_deg", "med_pose_deg",
    "auc10",          "avg_eps_lambda", "med_eps_lambda", "avg_xi_f", "med_xi_f",
    "time_ms",        "pairs",          "failures",
};

struct BenchReport {
  std::uint64_t seed = 0;
  // Echo of the command configuration, in insertion order.
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<MethodReport> rows;
  std::size_t skipped_pairs = 0;
};

// Header row plus one row per method. Missing metrics are empty fields;
// fields holding a comma or quote are quoted.
std::string to_csv(const BenchReport& report);
// {"meta": {"seed", "config"}, "rows": [...], "warnings": {"skipped_pairs"}}
std::string to_json(const BenchReport& report);
// Inverse of to_json. Throws Error(kInvalidArgument).
BenchReport parse_report_json(const std::string& text);

}  // namespace radipose
