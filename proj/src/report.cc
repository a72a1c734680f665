#include "radipose/report.h"

#include <optional>
#include <variant>

#include <json.hpp>

#include "radipose/errors.h"

namespace radipose {

namespace {

using nlohmann::ordered_json;

// Cell values of one row, in column order. Numbers are kept as doubles so
// the CSV and JSON writers format the same values.
using Cell = std::variant<std::string, std::optional<double>, std::size_t>;

std::vector<Cell> cells(const MethodReport& r) {
  const AggregateReport& s = r.summary;
  return {r.method.render(),
          r.refine.render(),
          r.method.sample_label(),
          std::optional<double>(s.avg_pose),
          std::optional<double>(s.med_pose),
          std::optional<double>(s.auc_at_10),
          s.avg_eps,
          s.med_eps,
          s.avg_xi,
          s.med_xi,
          std::optional<double>(s.avg_runtime * 1000.0),
          s.count,
          s.failures};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string to_csv(const BenchReport& report) {
  std::string out;
  bool first = true;
  for (const char* c : kReportColumns) {
    if (!first) out += ',';
    out += c;
    first = false;
  }
  out += '\n';
  for (const auto& row : report.rows) {
    first = true;
    for (const Cell& cell : cells(row)) {
      if (!first) out += ',';
      first = false;
      if (const auto* s = std::get_if<std::string>(&cell)) {
        out += csv_field(*s);
      } else if (const auto* d = std::get_if<std::optional<double>>(&cell)) {
        if (*d) out += format_double(**d);
      } else {
        out += std::to_string(std::get<std::size_t>(cell));
      }
    }
    out += '\n';
  }
  return out;
}

std::string to_json(const BenchReport& report) {
  ordered_json doc;
  ordered_json config = ordered_json::object();
  for (const auto& [k, v] : report.config) config[k] = v;
  doc["meta"] = {{"seed", report.seed}, {"config", config}};
  ordered_json rows = ordered_json::array();
  for (const auto& row : report.rows) {
    ordered_json obj = ordered_json::object();
    const auto values = cells(row);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const char* key = kReportColumns[i];
      if (const auto* s = std::get_if<std::string>(&values[i])) {
        obj[key] = *s;
      } else if (const auto* d = std::get_if<std::optional<double>>(&values[i])) {
        obj[key] = *d ? ordered_json(**d) : ordered_json(nullptr);
      } else {
        obj[key] = std::get<std::size_t>(values[i]);
      }
    }
    rows.push_back(std::move(obj));
  }
  doc["rows"] = std::move(rows);
  doc["warnings"] = {{"skipped_pairs", report.skipped_pairs}};
  return doc.dump(2) + "\n";
}

BenchReport parse_report_json(const std::string& text) {
  try {
    const ordered_json doc = ordered_json::parse(text);
    BenchReport r;
    r.seed = doc.at("meta").at("seed").get<std::uint64_t>();
    for (const auto& [k, v] : doc.at("meta").at("config").items()) {
      r.config.emplace_back(k, v.get<std::string>());
    }
    r.skipped_pairs = doc.at("warnings").at("skipped_pairs").get<std::size_t>();
    auto opt = [](const ordered_json& v) -> std::optional<double> {
      if (v.is_null()) return std::nullopt;
      return v.get<double>();
    };
    for (const auto& row : doc.at("rows")) {
      MethodReport m;
      m.method = MethodSpec::parse(row.at("method").get<std::string>());
      m.refine = RefineBlocks::parse(row.at("refinement").get<std::string>());
      AggregateReport& s = m.summary;
      s.avg_pose = row.at("avg_pose_deg").get<double>();
      s.med_pose = row.at("med_pose_deg").get<double>();
      s.auc_at_10 = row.at("auc10").get<double>();
      s.avg_eps = opt(row.at("avg_eps_lambda"));
      s.med_eps = opt(row.at("med_eps_lambda"));
      s.avg_xi = opt(row.at("avg_xi_f"));
      s.med_xi = opt(row.at("med_xi_f"));
      s.avg_runtime = row.at("time_ms").get<double>() / 1000.0;
      s.count = row.at("pairs").get<std::size_t>();
      s.failures = row.at("failures").get<std::size_t>();
      r.rows.push_back(std::move(m));
    }
    return r;
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("malformed report: ") + e.what());
  }
}

}  // namespace radipose
