#include <benchmark/benchmark.h>

#include "sgncl/graph.hpp"
#include "sgncl/rng.hpp"
#include "sgncl/sgn.hpp"

namespace {

using namespace sgncl;

AttributedGraph random_graph(std::size_t n, double avg_degree, std::size_t d, std::size_t r,
                             std::uint64_t seed) {
  Rng rng(seed);
  const double p = avg_degree / static_cast<double>(n - 1);
  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j)
      if (rng.uniform() < p) edges.push_back({i, j});
  Matrix x(n, d), u(edges.size(), r);
  for (double& v : x.data()) v = rng.uniform(-1, 1);
  for (double& v : u.data()) v = rng.uniform(-1, 1);
  return AttributedGraph(n, std::move(edges), std::move(x), std::move(u));
}

void BM_LineGraph(benchmark::State& state) {
  const AttributedGraph g = random_graph(state.range(0), 4.0, 0, 0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(line_graph(g));
  state.counters["edges"] = static_cast<double>(g.n_edges());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.n_edges()));
}
BENCHMARK(BM_LineGraph)->RangeMultiplier(4)->Range(16, 4096);

void BM_OpenTriangles(benchmark::State& state) {
  const AttributedGraph g = random_graph(state.range(0), 4.0, 0, 0, 2);
  for (auto _ : state) benchmark::DoNotOptimize(open_triangle_count(g));
}
BENCHMARK(BM_OpenTriangles)->RangeMultiplier(4)->Range(16, 4096);

// MUTAG-like graphs: ~18 nodes, 7 node and 4 edge features.
void BM_SgnOrder(benchmark::State& state) {
  const SgnView v{random_graph(18, 2.2, 7, 4, 3), 0, 0};
  const int order = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sgn(v, order));
}
BENCHMARK(BM_SgnOrder)->Arg(1)->Arg(2);

void BM_SgnSecondOrderDense(benchmark::State& state) {
  const SgnView v{random_graph(state.range(0), 8.0, 4, 2, 4), 0, 0};
  for (auto _ : state) benchmark::DoNotOptimize(sgn(v, 2));
}
BENCHMARK(BM_SgnSecondOrderDense)->Arg(20)->Arg(40)->Arg(80);

}  // namespace
