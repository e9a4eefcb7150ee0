#include "sgncl/graph.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <tuple>

#include "sgncl/error.hpp"

namespace sgncl {

namespace {

Edge oriented(Edge e) { return e.u < e.v ? e : Edge{e.v, e.u}; }

}  // namespace

AttributedGraph::AttributedGraph(std::size_t n_nodes, std::vector<Edge> edges,
                                 Matrix node_attrs, Matrix edge_attrs)
    : n_nodes_(n_nodes),
      edges_(std::move(edges)),
      node_attrs_(std::move(node_attrs)),
      edge_attrs_(std::move(edge_attrs)) {
  if (node_attrs_.rows() != n_nodes_) {
    throw DataError("node attribute rows (" + std::to_string(node_attrs_.rows()) +
                    ") != node count (" + std::to_string(n_nodes_) + ")");
  }
  if (edge_attrs_.rows() != edges_.size()) {
    throw DataError("edge attribute rows (" + std::to_string(edge_attrs_.rows()) +
                    ") != edge count (" + std::to_string(edges_.size()) + ")");
  }
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    if (e.u >= e.v) throw DataError("edge " + std::to_string(i) + " is not stored with u < v");
    if (e.v >= n_nodes_) {
      throw DataError("edge " + std::to_string(i) + " references node " + std::to_string(e.v) +
                      " outside [0, " + std::to_string(n_nodes_) + ")");
    }
    if (i > 0 && !(edges_[i - 1] < e)) {
      throw DataError("edge list is not in strict dictionary order at index " +
                      std::to_string(i));
    }
  }
  if (!node_attrs_.all_finite()) throw DataError("non-finite node attribute");
  if (!edge_attrs_.all_finite()) throw DataError("non-finite edge attribute");
}

AttributedGraph AttributedGraph::from_raw(std::size_t n_nodes, std::span<const Edge> raw_edges,
                                          Matrix node_attrs, Matrix edge_attrs,
                                          CanonicalizeReport* report) {
  if (edge_attrs.rows() != raw_edges.size()) {
    throw DataError("edge attribute rows do not align with the raw edge list");
  }
  CanonicalizeReport local;
  std::vector<std::size_t> keep;
  keep.reserve(raw_edges.size());
  for (std::size_t i = 0; i < raw_edges.size(); ++i) {
    if (raw_edges[i].u == raw_edges[i].v) {
      ++local.self_loops;
    } else {
      keep.push_back(i);
    }
  }
  std::stable_sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) {
    return oriented(raw_edges[a]) < oriented(raw_edges[b]);
  });
  std::vector<Edge> edges;
  std::vector<std::size_t> rows;
  for (std::size_t idx : keep) {
    Edge e = oriented(raw_edges[idx]);
    if (!edges.empty() && edges.back() == e) {
      ++local.duplicates;
      continue;
    }
    edges.push_back(e);
    rows.push_back(idx);
  }
  Matrix attrs(edges.size(), edge_attrs.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::ranges::copy(edge_attrs.row(rows[i]), attrs.row(i).begin());
  }
  if (report != nullptr) *report = local;
  return AttributedGraph(n_nodes, std::move(edges), std::move(node_attrs), std::move(attrs));
}

AttributedGraph AttributedGraph::topology(std::size_t n_nodes, std::span<const Edge> raw_edges) {
  return from_raw(n_nodes, raw_edges, Matrix(n_nodes, 0), Matrix(raw_edges.size(), 0));
}

std::vector<std::size_t> AttributedGraph::degrees() const {
  std::vector<std::size_t> deg(n_nodes_, 0);
  for (const Edge& e : edges_) {
    ++deg[e.u];
    ++deg[e.v];
  }
  return deg;
}

std::vector<std::vector<EdgeIndex>> AttributedGraph::incident_edges() const {
  std::vector<std::vector<EdgeIndex>> inc(n_nodes_);
  for (EdgeIndex i = 0; i < edges_.size(); ++i) {
    inc[edges_[i].u].push_back(i);
    inc[edges_[i].v].push_back(i);
  }
  return inc;
}

std::vector<Edge> canonical_edges(std::span<const Edge> edges) {
  std::vector<Edge> out;
  out.reserve(edges.size());
  for (Edge e : edges) {
    if (e.u != e.v) out.push_back(oriented(e));
  }
  std::ranges::sort(out);
  auto dup = std::ranges::unique(out);
  out.erase(dup.begin(), dup.end());
  return out;
}

std::vector<Edge> canonical_edges(const AttributedGraph& graph) {
  return canonical_edges(std::span<const Edge>(graph.edges()));
}

std::vector<OpenTriangle> open_triangles(const AttributedGraph& graph) {
  std::vector<OpenTriangle> out;
  out.reserve(open_triangle_count(graph));
  const auto inc = graph.incident_edges();
  for (NodeId c = 0; c < inc.size(); ++c) {
    const auto& list = inc[c];
    for (std::size_t i = 0; i < list.size(); ++i) {
      for (std::size_t j = i + 1; j < list.size(); ++j) {
        out.push_back({list[i], c, list[j]});
      }
    }
  }
  std::ranges::sort(out, [](const OpenTriangle& x, const OpenTriangle& y) {
    return std::tie(x.edge_a, x.edge_b) < std::tie(y.edge_a, y.edge_b);
  });
  return out;
}

std::size_t open_triangle_count(const AttributedGraph& graph) {
  std::size_t total = 0;
  for (std::size_t d : graph.degrees()) {
    if (d > 1) total += d * (d - 1) / 2;
  }
  return total;
}

AttributedGraph permute_nodes(const AttributedGraph& graph, std::span<const NodeId> perm) {
  const std::size_t n = graph.n_nodes();
  if (perm.size() != n) throw DataError("permutation length does not match node count");
  std::vector<bool> seen(n, false);
  for (NodeId p : perm) {
    if (p >= n || seen[p]) throw DataError("node permutation is not a bijection");
    seen[p] = true;
  }
  Matrix nodes(n, graph.node_dim());
  for (std::size_t i = 0; i < n; ++i) {
    std::ranges::copy(graph.node_attrs().row(i), nodes.row(perm[i]).begin());
  }
  std::vector<Edge> raw;
  raw.reserve(graph.n_edges());
  for (const Edge& e : graph.edges()) raw.push_back({perm[e.u], perm[e.v]});
  return AttributedGraph::from_raw(n, raw, std::move(nodes), graph.edge_attrs());
}

AttributedGraph disjoint_union(const AttributedGraph& a, const AttributedGraph& b) {
  if (a.node_dim() != b.node_dim() || a.edge_dim() != b.edge_dim()) {
    throw DataError("disjoint_union: attribute widths differ");
  }
  const auto shift = static_cast<NodeId>(a.n_nodes());
  std::vector<Edge> edges = a.edges();
  for (const Edge& e : b.edges()) edges.push_back({e.u + shift, e.v + shift});
  auto stack = [](const Matrix& x, const Matrix& y) {
    std::vector<double> data = x.data();
    data.insert(data.end(), y.data().begin(), y.data().end());
    return Matrix(x.rows() + y.rows(), x.cols(), std::move(data));
  };
  return AttributedGraph(a.n_nodes() + b.n_nodes(), std::move(edges),
                         stack(a.node_attrs(), b.node_attrs()),
                         stack(a.edge_attrs(), b.edge_attrs()));
}

}  // namespace sgncl
