// Serial per-record reference kernels against the chunked kernels (OpenMP
// over 512-row chunks when built with it), at the shape of a desk-scale
// sample B (about 2,200 rows) and a full-scale design (about 6,500 rows) with
// 51 columns, plus a large sweep where threading can pay off.

#include "drcombine/design.hpp"
#include "drcombine/estimating_system.hpp"
#include "drcombine/rng.hpp"

#include <benchmark/benchmark.h>

#include <map>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace drcombine;

namespace {

struct Inputs {
  Eigen::MatrixXd x;
  Eigen::VectorXd c;
};

const Inputs& inputs(Eigen::Index n) {
  static std::map<Eigen::Index, Inputs> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  Philox g(1);
  Inputs in;
  in.x.resize(n, 51);
  in.c.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    in.x(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < 51; ++j) in.x(i, j) = g.normal();
    in.c[i] = g.uniform();
  }
  return cache.emplace(n, std::move(in)).first->second;
}

void threads_from_arg(const benchmark::State& state) {
#ifdef _OPENMP
  omp_set_num_threads(static_cast<int>(state.range(1)));
#else
  (void)state;
#endif
}

void BM_ColumnSumsSerial(benchmark::State& state) {
  const Inputs& in = inputs(state.range(0));
  const RowRange r{0, in.x.rows()};
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::column_sums(in.x, r, in.c));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ColumnSumsChunked(benchmark::State& state) {
  threads_from_arg(state);
  const Inputs& in = inputs(state.range(0));
  const RowRange r{0, in.x.rows()};
  for (auto _ : state) benchmark::DoNotOptimize(kernels::column_sums(in.x, r, in.c));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_GramSerial(benchmark::State& state) {
  const Inputs& in = inputs(state.range(0));
  const RowRange r{0, in.x.rows()};
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::weighted_gram(in.x, r, in.c));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_GramChunked(benchmark::State& state) {
  threads_from_arg(state);
  const Inputs& in = inputs(state.range(0));
  const RowRange r{0, in.x.rows()};
  for (auto _ : state) benchmark::DoNotOptimize(kernels::weighted_gram(in.x, r, in.c));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

// One full score evaluation on a synthetic combined design.
void BM_ScoreU(benchmark::State& state) {
  threads_from_arg(state);
  const Eigen::Index n = state.range(0);
  const Inputs& in = inputs(n);
  Design dz;
  dz.x = in.x;
  dz.n_a = n / 6;
  dz.n_b1 = (n - dz.n_a) / 2;
  dz.n_b0 = n - dz.n_a - dz.n_b1;
  dz.y = in.c;
  dz.t = Eigen::VectorXd::Zero(n);
  dz.t.segment(dz.n_a, dz.n_b1).setOnes();
  dz.wa = Eigen::VectorXd::Zero(n);
  dz.wa.head(dz.n_a).setConstant(50.0);
  dz.pop_size = 50.0 * static_cast<double>(dz.n_a);
  NuisanceParams w = NuisanceParams::zeros(51);
  w.alpha[0] = -2.0;
  for (auto _ : state) benchmark::DoNotOptimize(score_u(dz, w, ModelSpec{}));
  state.SetItemsProcessed(state.iterations() * n);
}

void thread_args(benchmark::internal::Benchmark* b) {
  for (long n : {2200L, 6500L, 100000L}) {
    for (long t : {1L, 2L, 4L}) b->Args({n, t});
  }
}

}  // namespace

BENCHMARK(BM_ColumnSumsSerial)->Arg(2200)->Arg(6500)->Arg(100000);
BENCHMARK(BM_ColumnSumsChunked)->Apply(thread_args);
BENCHMARK(BM_GramSerial)->Arg(2200)->Arg(6500)->Arg(100000);
BENCHMARK(BM_GramChunked)->Apply(thread_args);
BENCHMARK(BM_ScoreU)->Apply(thread_args);

BENCHMARK_MAIN();
