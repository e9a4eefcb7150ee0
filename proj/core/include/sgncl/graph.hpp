#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sgncl/matrix.hpp"

namespace sgncl {

using NodeId = std::uint32_t;
using EdgeIndex = std::uint32_t;

// Undirected edge stored with u < v.
struct Edge {
  NodeId u = 0;
  NodeId v = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Pair of distinct edges sharing the node `center`; edge_a < edge_b.
struct OpenTriangle {
  EdgeIndex edge_a = 0;
  NodeId center = 0;
  EdgeIndex edge_b = 0;

  friend bool operator==(const OpenTriangle&, const OpenTriangle&) = default;
};

// Counts of what canonicalization removed from a raw edge list.
struct CanonicalizeReport {
  std::size_t self_loops = 0;
  std::size_t duplicates = 0;
};

// Undirected simple graph with dense node and edge attribute matrices.
//
// Edges are kept in dictionary order over (u, v) with u < v; the position of
// an edge in that order is its index everywhere else in the library. The
// class is immutable once built.
class AttributedGraph {
 public:
  AttributedGraph() = default;

  // Validates every invariant and throws DataError on violation. `edges` must
  // already be canonical. An empty attribute matrix with the right row count
  // may be passed as Matrix(n, 0).
  AttributedGraph(std::size_t n_nodes, std::vector<Edge> edges, Matrix node_attrs,
                  Matrix edge_attrs);

  // Builds a graph from an arbitrary edge list: orients each pair, drops
  // self-loops, deduplicates (keeping the first attribute row seen) and sorts.
  // `edge_attrs` rows align with `raw_edges`.
  static AttributedGraph from_raw(std::size_t n_nodes, std::span<const Edge> raw_edges,
                                  Matrix node_attrs, Matrix edge_attrs,
                                  CanonicalizeReport* report = nullptr);

  // Topology-only graph (d = r = 0).
  static AttributedGraph topology(std::size_t n_nodes, std::span<const Edge> raw_edges);

  std::size_t n_nodes() const noexcept { return n_nodes_; }
  std::size_t n_edges() const noexcept { return edges_.size(); }
  std::size_t node_dim() const noexcept { return node_attrs_.cols(); }
  std::size_t edge_dim() const noexcept { return edge_attrs_.cols(); }

  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Matrix& node_attrs() const noexcept { return node_attrs_; }
  const Matrix& edge_attrs() const noexcept { return edge_attrs_; }

  std::vector<std::size_t> degrees() const;
  // For each node, the indices of incident edges in ascending order.
  std::vector<std::vector<EdgeIndex>> incident_edges() const;

  friend bool operator==(const AttributedGraph&, const AttributedGraph&) = default;

 private:
  std::size_t n_nodes_ = 0;
  std::vector<Edge> edges_;
  Matrix node_attrs_;
  Matrix edge_attrs_;
};

// Canonical edge relabeling: oriented, deduplicated, self-loop-free edges in
// dictionary order. Output position i is the identity of edge e_i.
std::vector<Edge> canonical_edges(std::span<const Edge> edges);
std::vector<Edge> canonical_edges(const AttributedGraph& graph);

// Every unordered pair of distinct edges sharing a node, ordered by
// (edge_a, edge_b). Size equals the sum over nodes of C(deg, 2).
std::vector<OpenTriangle> open_triangles(const AttributedGraph& graph);

// Sum over nodes of C(deg, 2), without materializing the triangles.
std::size_t open_triangle_count(const AttributedGraph& graph);

// Relabels node i as perm[i]. Throws DataError unless perm is a bijection.
AttributedGraph permute_nodes(const AttributedGraph& graph, std::span<const NodeId> perm);

// Node-disjoint union; nodes of `b` are shifted by a.n_nodes(). Widths must agree.
AttributedGraph disjoint_union(const AttributedGraph& a, const AttributedGraph& b);

}  // namespace sgncl
