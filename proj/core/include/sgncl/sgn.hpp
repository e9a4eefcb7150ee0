#pragma once

#include <cstddef>
#include <vector>

#include "sgncl/graph.hpp"

namespace sgncl {

// A graph after `order` Edge-to-Node applications (0 = the original).
struct SgnView {
  AttributedGraph graph;
  int order = 0;
  std::size_t origin = 0;

  friend bool operator==(const SgnView&, const SgnView&) = default;
};

// Ceiling on augmented-view size. Second-order views grow roughly with the
// sum of squared degrees of the first-order view.
struct SizeGuard {
  std::size_t max_nodes = 20'000;
  std::size_t max_edges = 200'000;
};

// Topology-only line graph: node i stands for edge e_i, and two nodes are
// adjacent iff their edges share an endpoint.
AttributedGraph line_graph(const AttributedGraph& graph);

// Attributed line graph. Node k (edge (v_i, v_j), i < j) carries
// [x_i | x_j]; the edge for open triangle (e_a, v_c, e_b), a < b, carries
// [u_a | x_c | u_b]. Widths become d' = 2d and r' = 2r + d.
//
// Throws DataError if d = 0 while an open triangle exists.
SgnView edge_to_node(const SgnView& view);

// Applies edge_to_node `target_order` (1 or 2) times to an order-0 view,
// checking `guard` before each application is materialized.
SgnView sgn(const SgnView& view, int target_order, const SizeGuard& guard = {});

// Same as sgn() but keeps every intermediate view: element k has order k + 1.
std::vector<SgnView> sgn_chain(const SgnView& view, int target_order, const SizeGuard& guard = {});

}  // namespace sgncl
