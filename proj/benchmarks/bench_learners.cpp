#include <benchmark/benchmark.h>

#include <map>
#include <memory>
#include <vector>

#include "occfm/eval.hpp"
#include "occfm/learners.hpp"
#include "occfm/rng.hpp"

using namespace occfm;

namespace {

constexpr double kDelta = 2.5;
constexpr int kHorizon = 2000;

const std::vector<AugmentedInstance>& shared_stream(int dim) {
  static std::map<int, std::vector<AugmentedInstance>> cache;
  auto it = cache.find(dim);
  if (it == cache.end()) {
    SyntheticSpec spec;
    spec.dim = dim;
    spec.horizon = kHorizon;
    spec.delta = kDelta;
    spec.noise = 0.1;
    spec.density = 0.3;
    spec.seed = 17;
    it = cache.emplace(dim, synthetic_stream(spec)).first;
  }
  return it->second;
}

LearnerConfig bench_config(int dim) {
  LearnerConfig cfg;
  cfg.dim = dim;
  cfg.delta = kDelta;
  cfg.horizon = kHorizon;
  cfg.loss = LossKind{};
  cfg.seed = Rng::derive(29, static_cast<std::uint64_t>(dim));
  // Dense keeps the gradient-sum apply cost flat across rounds, so the
  // timings do not depend on where in the stream an iteration lands.
  cfg.ledger_mode = LedgerMode::dense;
  return cfg;
}

// One online round: predict on the next instance, then update. Wraps by
// rebuilding the learner off the clock when the pregenerated stream runs out.
void BM_learner_round(benchmark::State& state, const char* name) {
  const int dim = static_cast<int>(state.range(0));
  const auto& stream = shared_stream(dim);
  const LearnerConfig cfg = bench_config(dim);
  std::unique_ptr<OnlineLearner> learner = make_learner(name, cfg);
  std::size_t i = 0;
  for (auto _ : state) {
    if (i == stream.size()) {
      state.PauseTiming();
      learner = make_learner(name, cfg);
      i = 0;
      state.ResumeTiming();
    }
    const AugmentedInstance& inst = stream[i++];
    double yhat = learner->predict(inst.features);
    benchmark::DoNotOptimize(yhat);
    learner->update(inst);
  }
}

#define LEARNER_BENCH(tag, name)                 \
  BENCHMARK_CAPTURE(BM_learner_round, tag, name) \
      ->Arg(51)                                  \
      ->Arg(201)                                 \
      ->Unit(benchmark::kMicrosecond)

LEARNER_BENCH(occfm, "occfm");
LEARNER_BENCH(ccfm_ogd, "ccfm-ogd");
LEARNER_BENCH(ccfm_pa, "ccfm-pa");
LEARNER_BENCH(ccfm_ftrl, "ccfm-ftrl");
LEARNER_BENCH(fm_ftrl, "fm-ftrl");
LEARNER_BENCH(cfm_ftrl, "cfm-ftrl");

#undef LEARNER_BENCH

void BM_synthetic_stream(benchmark::State& state) {
  SyntheticSpec spec;
  spec.dim = static_cast<int>(state.range(0));
  spec.horizon = 1000;
  spec.seed = 3;
  for (auto _ : state) {
    auto stream = synthetic_stream(spec);
    benchmark::DoNotOptimize(stream.data());
  }
}
BENCHMARK(BM_synthetic_stream)->Arg(51)->Arg(201);

}  // namespace

BENCHMARK_MAIN();
