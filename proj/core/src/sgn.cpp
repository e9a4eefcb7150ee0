#include "sgncl/sgn.hpp"

#include <algorithm>
#include <string>

#include "sgncl/error.hpp"

namespace sgncl {

namespace {

std::vector<Edge> triangle_edges(const std::vector<OpenTriangle>& triangles) {
  std::vector<Edge> edges;
  edges.reserve(triangles.size());
  for (const auto& t : triangles) edges.push_back({t.edge_a, t.edge_b});
  return edges;
}

void check_guard(const AttributedGraph& input, std::size_t origin, int next_order,
                 const SizeGuard& guard) {
  const std::size_t nodes = input.n_edges();
  if (nodes > guard.max_nodes) {
    throw GuardExceeded(origin, next_order, "nodes", nodes, guard.max_nodes);
  }
  const std::size_t edges = open_triangle_count(input);
  if (edges > guard.max_edges) {
    throw GuardExceeded(origin, next_order, "edges", edges, guard.max_edges);
  }
}

}  // namespace

AttributedGraph line_graph(const AttributedGraph& graph) {
  auto edges = triangle_edges(open_triangles(graph));
  const std::size_t n = graph.n_edges();
  const std::size_t m = edges.size();
  return AttributedGraph(n, std::move(edges), Matrix(n, 0), Matrix(m, 0));
}

SgnView edge_to_node(const SgnView& view) {
  const AttributedGraph& g = view.graph;
  const std::size_t d = g.node_dim();
  const std::size_t r = g.edge_dim();
  const Matrix& x = g.node_attrs();
  const Matrix& u = g.edge_attrs();

  const auto triangles = open_triangles(g);
  if (d == 0 && !triangles.empty()) {
    throw DataError("edge_to_node: graph " + std::to_string(view.origin) + " at order " +
                    std::to_string(view.order) +
                    " has no node attributes; edge attributes of the next order are undefined");
  }

  Matrix nodes(g.n_edges(), 2 * d);
  for (std::size_t k = 0; k < g.n_edges(); ++k) {
    const Edge& e = g.edges()[k];
    auto out = nodes.row(k);
    std::ranges::copy(x.row(e.u), out.begin());
    std::ranges::copy(x.row(e.v), out.begin() + static_cast<std::ptrdiff_t>(d));
  }

  Matrix edges(triangles.size(), 2 * r + d);
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const auto& tri = triangles[t];
    auto out = edges.row(t).begin();
    out = std::ranges::copy(u.row(tri.edge_a), out).out;
    out = std::ranges::copy(x.row(tri.center), out).out;
    std::ranges::copy(u.row(tri.edge_b), out);
  }

  return SgnView{AttributedGraph(g.n_edges(), triangle_edges(triangles), std::move(nodes),
                                 std::move(edges)),
                 view.order + 1, view.origin};
}

SgnView sgn(const SgnView& view, int target_order, const SizeGuard& guard) {
  return sgn_chain(view, target_order, guard).back();
}

std::vector<SgnView> sgn_chain(const SgnView& view, int target_order, const SizeGuard& guard) {
  if (target_order != 1 && target_order != 2) {
    throw DataError("sgn: target order must be 1 or 2, got " + std::to_string(target_order));
  }
  if (view.order != 0) {
    throw DataError("sgn: input view must be order 0, got order " + std::to_string(view.order));
  }
  std::vector<SgnView> chain;
  chain.reserve(static_cast<std::size_t>(target_order));
  const SgnView* current = &view;
  for (int step = 1; step <= target_order; ++step) {
    check_guard(current->graph, view.origin, step, guard);
    chain.push_back(edge_to_node(*current));
    current = &chain.back();
  }
  return chain;
}

}  // namespace sgncl
