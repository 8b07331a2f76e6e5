#include <benchmark/benchmark.h>

#include "warpbox/compactdp.hpp"
#include "warpbox/generate.hpp"

using namespace warpbox;
using S = std::int64_t;

namespace {

std::pair<PointSeq<S>, PointSeq<S>> fixed_instance(int n) {
  std::mt19937_64 rng(20240101);
  InstanceParams p;
  p.min_len = p.max_len = n;
  return random_instance<S>(rng, p);
}

void BM_DtwQuadratic(benchmark::State& state) {
  auto [a, b] = fixed_instance(static_cast<int>(state.range(0)));
  Metric m{MetricKind::Abs1D, 1};
  for (auto _ : state) {
    auto res = dtw_quadratic<S>(a, b, m, nullptr, false);
    benchmark::DoNotOptimize(res.value);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DtwQuadratic)->Arg(64)->Arg(256)->Arg(1024)->Complexity();

void BM_DtwSubquadratic(benchmark::State& state) {
  auto [a, b] = fixed_instance(static_cast<int>(state.range(0)));
  Metric m{MetricKind::Abs1D, 1};
  int g = static_cast<int>(state.range(1));
  for (auto _ : state) {
    auto res = dtw_subquadratic<S>(a, b, g, m);
    benchmark::DoNotOptimize(res.value);
  }
}
BENCHMARK(BM_DtwSubquadratic)->Args({64, 3})->Args({256, 3})->Args({256, 5})->Args({1024, 4});

void BM_Preprocess(benchmark::State& state) {
  auto [a, b] = fixed_instance(static_cast<int>(state.range(0)));
  Metric m{MetricKind::Abs1D, 1};
  int g = static_cast<int>(state.range(1));
  auto grid = decompose<S>(a, b, g, m);
  BoxGeometry geom(g);
  auto model = GridCostModel<S>::dtw(m);
  for (auto _ : state) {
    auto pre = preprocess_direct(grid, geom, model);
    benchmark::DoNotOptimize(pre.pool.size());
  }
}
BENCHMARK(BM_Preprocess)->Args({256, 3})->Args({256, 6})->Args({1024, 4});

void BM_DominancePairs(benchmark::State& state) {
  std::mt19937_64 rng(7);
  int total = static_cast<int>(state.range(0));
  int dim = static_cast<int>(state.range(1));
  ColoredPointSet<S> set(dim);
  std::vector<S> v(dim);
  for (int i = 0; i < total; ++i) {
    for (auto& x : v) x = static_cast<S>(bounded(rng, 2001)) - 1000;
    if (i % 2)
      set.add_red(static_cast<std::uint32_t>(i), v);
    else
      set.add_blue(static_cast<std::uint32_t>(i), v);
  }
  bool naive = state.range(2) != 0;
  for (auto _ : state) {
    auto out = naive ? dominating_pairs_naive(set) : dominating_pairs_dnc(set);
    benchmark::DoNotOptimize(out.size());
  }
}
BENCHMARK(BM_DominancePairs)
    ->Args({500, 4, 0})
    ->Args({500, 4, 1})
    ->Args({2000, 6, 0})
    ->Args({2000, 6, 1});

void BM_PathEnumeration(benchmark::State& state) {
  int g = static_cast<int>(state.range(0));
  for (auto _ : state) {
    std::uint64_t count = 0;
    visit_paths(g, [&](PackedPath p) {
      benchmark::DoNotOptimize(p.word);
      ++count;
    });
    benchmark::DoNotOptimize(count);
  }
}
BENCHMARK(BM_PathEnumeration)->Arg(4)->Arg(6)->Arg(8);

}  // namespace

BENCHMARK_MAIN();
