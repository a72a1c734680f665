#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "radipose/robust.h"

namespace radipose {

// Estimation method as written on the command line:
//
//   ENGINE[:LAMBDAS][+prior][+shared]
//
// ENGINE is 7pt, 8pt or 9ptFlambda. LAMBDAS is a comma list of candidate
// undistortion parameters for the pinhole engines (default 0). +prior takes
// lambda and focal values from per-image priors instead of sampling; with
// 8pt it requires prior focals and runs the calibrated path. +shared ties
// focal and lambda across both images.
//
// Examples: "7pt:0,-0.6,-1.2+shared", "9ptFlambda", "8pt+prior".
struct MethodSpec {
  Engine engine = Engine::kSevenPoint;
  std::vector<double> lambdas{0.0};
  bool prior = false;
  bool shared = false;

  // Throws Error(kInvalidArgument) with the list of valid engines.
  static MethodSpec parse(std::string_view text);
  std::string render() const;
  // Sample column of a report: the lambda list joined by ';', "prior" or
  // "solver".
  std::string sample_label() const;
  bool operator==(const MethodSpec&) const = default;
};

// Splits a comma-separated method list. A token that reads as a number
// continues the lambda list of the method before it, so
// "7pt:0,-0.6,9ptFlambda" yields two methods.
std::vector<MethodSpec> parse_method_list(std::string_view text);

std::string_view engine_name(Engine engine);

// Shortest text that reads back to the same double.
std::string format_double(double value);

}  // namespace radipose
