#include <benchmark/benchmark.h>

#include <vector>

#include "sgncl/contrastive.hpp"
#include "sgncl/encoder.hpp"
#include "sgncl/rng.hpp"

namespace {

using namespace sgncl;

std::vector<AttributedGraph> corpus(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<AttributedGraph> out;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t n = 12 + rng.below(12);
    std::vector<Edge> edges;
    for (NodeId i = 1; i < n; ++i) edges.push_back({static_cast<NodeId>(rng.below(i)), i});
    for (int extra = 0; extra < 3; ++extra) {
      NodeId a = static_cast<NodeId>(rng.below(n)), b = static_cast<NodeId>(rng.below(n));
      if (a != b) edges.push_back({std::min(a, b), std::max(a, b)});
    }
    Matrix x(n, 7);
    for (NodeId i = 0; i < n; ++i) x(i, rng.below(7)) = 1.0;
    out.push_back(AttributedGraph::from_raw(n, edges, x, Matrix(edges.size(), 4, 0.5)));
  }
  return out;
}

struct Fixture {
  std::vector<AttributedGraph> graphs = corpus(32, 1);
  std::vector<const AttributedGraph*> ptrs;
  GraphBatch batch;
  EncoderStack stack;

  explicit Fixture(std::size_t hidden) {
    for (const auto& g : graphs) ptrs.push_back(&g);
    batch = GraphBatch::pack(ptrs);
    std::vector<ViewShape> shapes{shape_at_order(7, 4, 0)};
    stack = EncoderStack::create({hidden, 3, Pooling::sum}, shapes, 0);
  }
};

void BM_EncoderForward(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    Tape tape;
    benchmark::DoNotOptimize(
        project(tape, f.stack.head(), graph_representations(tape, f.stack, 0, f.batch)).value());
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_EncoderForward)->Arg(16)->Arg(32)->Arg(64);

void BM_EncoderForwardBackward(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    Tape tape;
    Tensor z = project(tape, f.stack.head(), graph_representations(tape, f.stack, 0, f.batch));
    Tensor loss = nt_xent(z, z, 0.5);
    tape.backward(loss);
    benchmark::DoNotOptimize(tape.gradient(f.stack.head().first.weight));
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_EncoderForwardBackward)->Arg(16)->Arg(32)->Arg(64);

}  // namespace
