#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "radipose/bench.h"
#include "radipose/method.h"
#include "radipose/robust.h"

namespace radipose {

// One benchmark pair in normalized coordinates.
struct PairInput {
  std::string id;
  std::vector<Correspondence> corrs;
  ImageDims dims1;
  ImageDims dims2;
  std::optional<GroundTruth> gt;
  // Filled for pairs that have prior records; consumed by +prior methods.
  std::optional<PriorInjection> priors;
};

struct HarnessConfig {
  RansacConfig ransac;
  std::size_t jobs = 1;
  // When false every runtime is recorded as 0 so reports are reproducible
  // byte for byte.
  bool timing = true;
};

// Sampling or prior strategy for a method on a pair. Throws
// Error(kInvalidArgument) when a +prior method finds no usable priors.
Strategy strategy_for(const PairInput& pair, const MethodSpec& method);

// Runs one method on one pair. ransac.seed is used as given. A method that
// finds no model yields std::nullopt; configuration problems throw.
struct MethodRun {
  std::optional<RansacResult> result;
  double seconds = 0.0;
};
MethodRun run_method(const PairInput& pair, const MethodSpec& method, RansacConfig cfg,
                     bool timing);

struct MethodReport {
  MethodSpec method;
  RefineBlocks refine;
  AggregateReport summary;
};

// Evaluates every method on pairs 0 .. count - 1 produced by `make_pair`
// (called from worker threads, so it must be safe to call concurrently).
// Pair i runs with RANSAC seed cfg.ransac.seed ^ i. Rows follow the order of
// `methods` and do not depend on the number of jobs.
std::vector<MethodReport> run_benchmark(std::size_t count,
                                        const std::function<PairInput(std::size_t)>& make_pair,
                                        const std::vector<MethodSpec>& methods,
                                        const HarnessConfig& cfg);

// Adapter from the synthetic generator. Priors carry the ground-truth
// intrinsics.
PairInput synthetic_input(const ScenarioSpec& spec, std::size_t index);

}  // namespace radipose
