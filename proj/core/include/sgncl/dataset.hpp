#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "sgncl/graph.hpp"
#include "sgncl/sgn.hpp"

namespace sgncl {

// Ordered graphs with integer class labels in [0, class_count). `orders` and
// `origins` track augmentation provenance; freshly loaded datasets have
// order 0 and origin = position.
struct GraphDataset {
  std::string name;
  std::size_t class_count = 0;
  std::vector<AttributedGraph> graphs;
  std::vector<int> labels;
  std::vector<int> orders;
  std::vector<std::size_t> origins;

  std::size_t size() const noexcept { return graphs.size(); }
  SgnView view(std::size_t i) const { return {graphs[i], orders[i], origins[i]}; }
  void push_back(AttributedGraph graph, int label, int order, std::size_t origin);

  // Throws DataError if labels, orders or origins are misaligned or a label is
  // out of range.
  void validate() const;

  friend bool operator==(const GraphDataset&, const GraphDataset&) = default;
};

struct DatasetStats {
  std::size_t graph_count = 0;
  std::size_t class_count = 0;
  double avg_nodes = 0.0;
  double avg_edges = 0.0;
};

// Reads a TUDataset directory. `directory` may hold the name_*.txt files
// directly or contain a `name/` subdirectory that does. Graph labels are
// remapped to 0..c-1 in ascending order of their raw values; categorical
// node/edge labels become one-hot columns (labels first, then any continuous
// attributes).
GraphDataset load_tud(const std::filesystem::path& directory, const std::string& name);

enum class DegreeMode { append, replace };

// One-hot of min(degree, max_degree) over max_degree + 1 buckets (bucket 0
// holds isolated nodes). Graphs without edge attributes receive a constant
// width-1 column of ones.
GraphDataset degree_featurize(const GraphDataset& dataset, std::size_t max_degree,
                              DegreeMode mode = DegreeMode::append);

// Default preparation before augmentation: degree features (replace) when a
// dataset has no node attributes, constant edge column when it has no edge
// attributes. A no-op otherwise.
GraphDataset prepare_for_sgn(const GraphDataset& dataset, std::size_t max_degree = 64);

DatasetStats stats(const GraphDataset& dataset);

// Line-delimited JSON interchange format; see docs/interchange.md.
void write_interchange(const GraphDataset& dataset, const std::filesystem::path& path);
GraphDataset read_interchange(const std::filesystem::path& path);

}  // namespace sgncl
