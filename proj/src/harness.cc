#include "radipose/harness.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

#include "radipose/errors.h"

namespace radipose {

Strategy strategy_for(const PairInput& pair, const MethodSpec& method) {
  if (method.prior) {
    if (!pair.priors) {
      throw Error(ErrorCode::kInvalidArgument, "pair '" + pair.id + "' has no priors for " +
                                                   method.render());
    }
    if (method.engine == Engine::kEightPoint && !pair.priors->calibrated()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "pair '" + pair.id + "' lacks prior focals needed by " + method.render());
    }
    return *pair.priors;
  }
  if (method.engine == Engine::kNinePointFLambda) return SamplingStrategy{};
  SamplingStrategy s;
  s.u1 = s.u2 = method.lambdas;
  s.shared = method.shared;
  return s;
}

MethodRun run_method(const PairInput& pair, const MethodSpec& method, RansacConfig cfg,
                     bool timing) {
  cfg.shared_intrinsics = method.shared;
  const Strategy strategy = strategy_for(pair, method);

  MethodRun run;
  const auto start = std::chrono::steady_clock::now();
  try {
    run.result = ransac_estimate(pair.corrs, pair.dims1, pair.dims2, method.engine, strategy, cfg);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoModelFound && e.code() != ErrorCode::kNotEnoughCorrespondences) {
      throw;
    }
  }
  if (timing) {
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return run;
}

std::vector<MethodReport> run_benchmark(std::size_t count,
                                        const std::function<PairInput(std::size_t)>& make_pair,
                                        const std::vector<MethodSpec>& methods,
                                        const HarnessConfig& cfg) {
  if (count == 0) throw Error(ErrorCode::kEmptyInput, "benchmark has no pairs");
  if (methods.empty()) throw Error(ErrorCode::kInvalidArgument, "benchmark has no methods");
  cfg.ransac.validate();

  // evals[m][i]: method m on pair i.
  std::vector<std::vector<PairEvaluation>> evals(methods.size(),
                                                 std::vector<PairEvaluation>(count));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        const PairInput pair = make_pair(i);
        if (!pair.gt) {
          throw Error(ErrorCode::kInvalidArgument, "pair '" + pair.id + "' has no ground truth");
        }
        RansacConfig rc = cfg.ransac;
        rc.seed = cfg.ransac.seed ^ static_cast<std::uint64_t>(i);
        for (std::size_t m = 0; m < methods.size(); ++m) {
          const MethodRun run = run_method(pair, methods[m], rc, cfg.timing);
          std::optional<TwoViewModel> est;
          if (run.result) est = run.result->model;
          PairEvaluation e = metric_errors(*pair.gt, est, methods[m].shared);
          e.runtime = run.seconds;
          evals[m][i] = e;
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
        return;
      }
    }
  };

  const std::size_t jobs = std::clamp<std::size_t>(cfg.jobs, 1, count);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<MethodReport> rows;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    rows.push_back({methods[m], cfg.ransac.refine_blocks, aggregate(evals[m])});
  }
  return rows;
}

PairInput synthetic_input(const ScenarioSpec& spec, std::size_t index) {
  SyntheticPair s = generate_pair(spec, index);
  PairInput p;
  p.id = "synthetic-" + std::to_string(index);
  p.corrs = std::move(s.corrs);
  p.dims1 = s.dims1;
  p.dims2 = s.dims2;
  PriorInjection prior;
  prior.focal1 = s.gt.cam1.focal;
  prior.focal2 = s.gt.cam2.focal;
  prior.lambda1 = s.gt.cam1.division.lambda;
  prior.lambda2 = s.gt.cam2.division.lambda;
  p.priors = prior;
  p.gt = std::move(s.gt);
  return p;
}

}  // namespace radipose
