#include <benchmark/benchmark.h>

#include <vector>

#include "occfm/eigen.hpp"
#include "occfm/projection.hpp"
#include "occfm/rng.hpp"
#include "occfm/scaled_sym.hpp"
#include "occfm/sym_matrix.hpp"

using namespace occfm;

namespace {

SymMatrix random_sym(int n, std::uint64_t seed) {
  Rng rng(seed);
  SymMatrix m(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) m.at(i, j) = rng.uniform(-1.0, 1.0);
  return m;
}

void BM_sym_matvec(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const SymMatrix m = random_sym(n, 1);
  const auto v = Rng(2).unit_vector(n);
  std::vector<double> out(n);
  for (auto _ : state) {
    m.matvec(v.data(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_sym_matvec)->Arg(64)->Arg(256)->Arg(1024);

void BM_sym_matvec_block4(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const SymMatrix m = random_sym(n, 1);
  Rng rng(2);
  std::vector<double> V(static_cast<std::size_t>(n) * 4);
  for (double& x : V) x = rng.uniform(-1.0, 1.0);
  std::vector<double> Out(V.size());
  for (auto _ : state) {
    sym_matvec_block(m, 4, V.data(), Out.data());
    benchmark::DoNotOptimize(Out.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n * 4);
}
BENCHMARK(BM_sym_matvec_block4)->Arg(64)->Arg(256)->Arg(1024);

// The convex-combination iterate update: O(1) rescale plus a queued rank-1
// term, with the periodic fused flush amortized in.
void BM_scaled_sym_update(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  ScaledSym c(n);
  const auto q = Rng(3).unit_vector(n);
  for (auto _ : state) {
    c.rescale(0.99);
    c.add_rank1(0.01, q.data());
  }
}
BENCHMARK(BM_scaled_sym_update)->Arg(64)->Arg(256)->Arg(1024);

void BM_dominant_eigenpair(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const SymMatrix m = random_sym(n, 4);
  PowerOptions opts;
  opts.seed = 5;
  opts.max_iter = 5000;
  for (auto _ : state) {
    EigenPair p = dominant_eigenpair(m, opts);
    benchmark::DoNotOptimize(p.value);
  }
}
BENCHMARK(BM_dominant_eigenpair)->Arg(64)->Arg(256);

// Re-solving a slowly drifting operator with a warm Ritz basis: the per-round
// cost profile of the projection-free learner.
void BM_tracked_eigenpair_drift(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  SymMatrix m = random_sym(n, 6);
  MatrixOperator op(m);
  PowerOptions opts;
  opts.seed = 7;
  opts.max_iter = 2000;
  TrackedPowerState tracked;
  Rng rng(8);
  for (auto _ : state) {
    EigenPair p = dominant_eigenpair_tracked(op, opts, tracked);
    benchmark::DoNotOptimize(p.value);
    state.PauseTiming();
    const auto q = rng.unit_vector(n);
    m.add_rank1_dense(0.05, q.data());
    state.ResumeTiming();
  }
}
BENCHMARK(BM_tracked_eigenpair_drift)->Arg(64)->Arg(256);

void BM_symmetric_eigh(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const SymMatrix m = random_sym(n, 9);
  for (auto _ : state) {
    EighResult r = symmetric_eigh(m);
    benchmark::DoNotOptimize(r.values.data());
  }
}
BENCHMARK(BM_symmetric_eigh)->Arg(64)->Arg(256);

// What every projected baseline pays per round.
void BM_project_nuclear_ball(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const SymMatrix m = random_sym(n, 10);
  for (auto _ : state) {
    SymMatrix p = project_nuclear_ball_symmetric(m, 1.5);
    benchmark::DoNotOptimize(p.packed());
  }
}
BENCHMARK(BM_project_nuclear_ball)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
