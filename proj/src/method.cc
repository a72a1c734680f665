#include "radipose/method.h"

#include <charconv>
#include <cmath>
#include <system_error>

#include "radipose/errors.h"

namespace radipose {

namespace {

constexpr std::string_view kValidMethods =
    "valid engines: 7pt, 8pt, 9ptFlambda; grammar ENGINE[:LAMBDAS][+prior][+shared]";

[[noreturn]] void fail(std::string_view text, std::string_view why) {
  throw Error(ErrorCode::kInvalidArgument,
              "bad method '" + std::string(text) + "': " + std::string(why) + " (" +
                  std::string(kValidMethods) + ")");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

// A list token that continues a lambda list: a number, possibly followed by
// the +flags of its method.
bool is_lambda_token(std::string_view s) {
  s = trim(s);
  const auto plus = s.find('+', 1);
  double v = 0.0;
  return parse_double(s.substr(0, plus), v);
}

}  // namespace

std::string_view engine_name(Engine engine) {
  switch (engine) {
    case Engine::kSevenPoint: return "7pt";
    case Engine::kEightPoint: return "8pt";
    case Engine::kNinePointFLambda: return "9ptFlambda";
  }
  return "?";
}

std::string format_double(double value) {
  if (value == 0.0) return "0";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

MethodSpec MethodSpec::parse(std::string_view text) {
  const std::string_view all = trim(text);
  std::string_view head = all;
  MethodSpec m;

  // Suffix flags, in any order.
  for (;;) {
    const auto plus = head.rfind('+');
    if (plus == std::string_view::npos) break;
    const std::string_view flag = trim(head.substr(plus + 1));
    if (flag == "prior") {
      if (m.prior) fail(all, "repeated +prior");
      m.prior = true;
    } else if (flag == "shared") {
      if (m.shared) fail(all, "repeated +shared");
      m.shared = true;
    } else {
      fail(all, "unknown flag '+" + std::string(flag) + "'");
    }
    head = head.substr(0, plus);
  }

  std::string_view engine = trim(head);
  std::string_view list;
  bool has_list = false;
  if (const auto colon = head.find(':'); colon != std::string_view::npos) {
    engine = trim(head.substr(0, colon));
    list = head.substr(colon + 1);
    has_list = true;
  }

  if (engine == "7pt") {
    m.engine = Engine::kSevenPoint;
  } else if (engine == "8pt") {
    m.engine = Engine::kEightPoint;
  } else if (engine == "9ptFlambda") {
    m.engine = Engine::kNinePointFLambda;
  } else {
    fail(all, "unknown engine '" + std::string(engine) + "'");
  }

  if (has_list) {
    if (m.engine == Engine::kNinePointFLambda) fail(all, "9ptFlambda takes no lambda list");
    if (m.prior) fail(all, "a lambda list cannot be combined with +prior");
    m.lambdas.clear();
    std::size_t start = 0;
    while (start <= list.size()) {
      const auto comma = list.find(',', start);
      const auto token = list.substr(start, comma == std::string_view::npos ? list.npos : comma - start);
      double v = 0.0;
      if (!parse_double(token, v)) fail(all, "bad lambda '" + std::string(trim(token)) + "'");
      if (!DivisionModel{v}.plausible()) fail(all, "lambda outside [-2, 0.5]");
      m.lambdas.push_back(v);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
  }
  if (m.engine == Engine::kNinePointFLambda || m.prior) m.lambdas.clear();
  if (m.engine == Engine::kNinePointFLambda && m.prior) fail(all, "9ptFlambda takes no +prior");
  return m;
}

std::string MethodSpec::render() const {
  std::string out(engine_name(engine));
  if (!lambdas.empty()) {
    out += ':';
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      if (i) out += ',';
      out += format_double(lambdas[i]);
    }
  }
  if (prior) out += "+prior";
  if (shared) out += "+shared";
  return out;
}

std::string MethodSpec::sample_label() const {
  if (prior) return "prior";
  if (engine == Engine::kNinePointFLambda) return "solver";
  std::string out;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (i) out += ';';
    out += format_double(lambdas[i]);
  }
  return out;
}

std::vector<MethodSpec> parse_method_list(std::string_view text) {
  std::vector<std::string> groups;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto token = text.substr(start, comma == std::string_view::npos ? text.npos : comma - start);
    if (is_lambda_token(token) && !groups.empty()) {
      groups.back() += ',';
      groups.back() += token;
    } else {
      groups.emplace_back(token);
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  std::vector<MethodSpec> methods;
  for (const auto& g : groups) methods.push_back(MethodSpec::parse(g));
  if (methods.empty()) throw Error(ErrorCode::kInvalidArgument, "empty method list");
  return methods;
}

}  // namespace radipose
