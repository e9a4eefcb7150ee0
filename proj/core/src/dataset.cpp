#include "sgncl/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <string_view>

#include <nlohmann/json.hpp>

#include "sgncl/error.hpp"
#include "sgncl/log.hpp"

namespace sgncl {

namespace fs = std::filesystem;

void GraphDataset::push_back(AttributedGraph graph, int label, int order, std::size_t origin) {
  graphs.push_back(std::move(graph));
  labels.push_back(label);
  orders.push_back(order);
  origins.push_back(origin);
}

void GraphDataset::validate() const {
  if (labels.size() != graphs.size() || orders.size() != graphs.size() ||
      origins.size() != graphs.size()) {
    throw DataError("dataset '" + name + "': per-graph columns are misaligned");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= class_count) {
      throw DataError("dataset '" + name + "': label " + std::to_string(labels[i]) +
                      " of graph " + std::to_string(i) + " outside [0, " +
                      std::to_string(class_count) + ")");
    }
  }
}

namespace {

struct TextFile {
  fs::path path;
  std::vector<std::string> lines;

  std::string where(std::size_t line) const {
    return path.filename().string() + ":" + std::to_string(line + 1);
  }
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::optional<TextFile> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  TextFile file{path, {}};
  std::string line;
  while (std::getline(in, line)) file.lines.push_back(line);
  // Trailing blank lines are tolerated.
  while (!file.lines.empty() && trim(file.lines.back()).empty()) file.lines.pop_back();
  return file;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

long parse_long(std::string_view text, const TextFile& file, std::size_t line) {
  long value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw DataError(file.where(line) + ": expected an integer, got '" + std::string(text) + "'");
  }
  return value;
}

double parse_double(std::string_view text, const TextFile& file, std::size_t line) {
  double value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw DataError(file.where(line) + ": expected a number, got '" + std::string(text) + "'");
  }
  return value;
}

std::vector<long> read_column(const TextFile& file) {
  std::vector<long> out;
  out.reserve(file.lines.size());
  for (std::size_t i = 0; i < file.lines.size(); ++i) out.push_back(parse_long(trim(file.lines[i]), file, i));
  return out;
}

Matrix read_real_matrix(const TextFile& file) {
  if (file.lines.empty()) return {};
  const std::size_t width = split_fields(file.lines.front()).size();
  Matrix m(file.lines.size(), width);
  for (std::size_t i = 0; i < file.lines.size(); ++i) {
    const auto fields = split_fields(file.lines[i]);
    if (fields.size() != width) {
      throw DataError(file.where(i) + ": expected " + std::to_string(width) + " values, got " +
                      std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < width; ++c) m(i, c) = parse_double(fields[c], file, i);
  }
  return m;
}

// Maps each distinct raw value to its rank among the sorted distinct values.
std::map<long, std::size_t> value_index(const std::vector<long>& values) {
  std::map<long, std::size_t> index;
  for (long v : values) index.emplace(v, 0);
  std::size_t next = 0;
  for (auto& [value, slot] : index) slot = next++;
  return index;
}

void expect_rows(const TextFile& file, std::size_t rows, std::string_view what) {
  if (file.lines.size() != rows) {
    throw DataError(file.path.filename().string() + ": expected " + std::to_string(rows) + " " +
                    std::string(what) + " rows, found " + std::to_string(file.lines.size()));
  }
}

// Builds [one-hot(labels) | continuous] with rows aligned to `rows`.
Matrix attribute_block(std::size_t rows, const std::optional<TextFile>& label_file,
                       const std::optional<TextFile>& attr_file, std::string_view what) {
  std::vector<long> labels;
  std::map<long, std::size_t> label_slots;
  Matrix continuous(rows, 0);
  if (label_file) {
    expect_rows(*label_file, rows, what);
    labels = read_column(*label_file);
    label_slots = value_index(labels);
  }
  if (attr_file) {
    expect_rows(*attr_file, rows, what);
    continuous = read_real_matrix(*attr_file);
    if (rows == 0) continuous = Matrix(0, 0);
  }
  const std::size_t onehot = label_slots.size();
  Matrix out(rows, onehot + continuous.cols());
  for (std::size_t i = 0; i < rows; ++i) {
    if (label_file) out(i, label_slots.at(labels[i])) = 1.0;
    for (std::size_t c = 0; c < continuous.cols(); ++c) out(i, onehot + c) = continuous(i, c);
  }
  return out;
}

fs::path locate(const fs::path& directory, const std::string& name) {
  const std::string a_file = name + "_A.txt";
  if (fs::exists(directory / a_file)) return directory;
  if (fs::exists(directory / name / a_file)) return directory / name;
  throw DataError("missing mandatory file " + (directory / a_file).string());
}

}  // namespace

GraphDataset load_tud(const fs::path& directory, const std::string& name) {
  const fs::path base = locate(directory, name);
  auto file = [&](const std::string& suffix) { return read_lines(base / (name + suffix)); };

  auto adjacency = file("_A.txt");
  auto indicator = file("_graph_indicator.txt");
  if (!adjacency) throw DataError("missing mandatory file " + (base / (name + "_A.txt")).string());
  if (!indicator) {
    throw DataError("missing mandatory file " + (base / (name + "_graph_indicator.txt")).string());
  }
  const auto graph_labels_file = file("_graph_labels.txt");
  const auto node_labels = file("_node_labels.txt");
  const auto node_attrs = file("_node_attributes.txt");
  const auto edge_labels = file("_edge_labels.txt");
  const auto edge_attrs = file("_edge_attributes.txt");

  const std::vector<long> owner = read_column(*indicator);
  const std::size_t total_nodes = owner.size();
  long graph_count = 0;
  for (std::size_t i = 0; i < owner.size(); ++i) {
    if (owner[i] < 1) throw DataError(indicator->where(i) + ": graph ids are 1-based");
    graph_count = std::max(graph_count, owner[i]);
  }

  std::vector<long> raw_labels(static_cast<std::size_t>(graph_count), 0);
  if (graph_labels_file) {
    raw_labels = read_column(*graph_labels_file);
    if (raw_labels.size() < static_cast<std::size_t>(graph_count)) {
      expect_rows(*graph_labels_file, static_cast<std::size_t>(graph_count), "graph label");
    }
    graph_count = static_cast<long>(raw_labels.size());
  }
  const auto n_graphs = static_cast<std::size_t>(graph_count);

  std::vector<std::size_t> local(total_nodes);
  std::vector<std::size_t> graph_size(n_graphs, 0);
  for (std::size_t i = 0; i < total_nodes; ++i) {
    local[i] = graph_size[static_cast<std::size_t>(owner[i] - 1)]++;
  }

  const Matrix all_node_attrs = attribute_block(total_nodes, node_labels, node_attrs, "node");

  // Edge lines.
  struct RawEdge {
    std::size_t line;
    std::size_t graph;
    Edge edge;
  };
  std::vector<RawEdge> raw;
  raw.reserve(adjacency->lines.size());
  for (std::size_t i = 0; i < adjacency->lines.size(); ++i) {
    const auto fields = split_fields(adjacency->lines[i]);
    if (fields.size() != 2) throw DataError(adjacency->where(i) + ": expected 'row, col'");
    const long a = parse_long(fields[0], *adjacency, i);
    const long b = parse_long(fields[1], *adjacency, i);
    for (long id : {a, b}) {
      if (id < 1 || static_cast<std::size_t>(id) > total_nodes) {
        throw DataError(adjacency->where(i) + ": dangling node reference " + std::to_string(id) +
                        " (dataset has " + std::to_string(total_nodes) + " nodes)");
      }
    }
    const auto ia = static_cast<std::size_t>(a - 1);
    const auto ib = static_cast<std::size_t>(b - 1);
    if (owner[ia] != owner[ib]) {
      throw DataError(adjacency->where(i) + ": edge connects nodes of different graphs");
    }
    raw.push_back({i, static_cast<std::size_t>(owner[ia] - 1),
                   {static_cast<NodeId>(local[ia]), static_cast<NodeId>(local[ib])}});
  }
  const Matrix all_edge_attrs = attribute_block(raw.size(), edge_labels, edge_attrs, "edge");

  std::vector<std::vector<std::size_t>> edges_of(n_graphs);
  for (std::size_t i = 0; i < raw.size(); ++i) edges_of[raw[i].graph].push_back(i);
  std::vector<std::vector<std::size_t>> nodes_of(n_graphs);
  for (std::size_t i = 0; i < total_nodes; ++i) nodes_of[static_cast<std::size_t>(owner[i] - 1)].push_back(i);

  const auto label_slots = value_index(raw_labels);
  GraphDataset ds;
  ds.name = name;
  ds.class_count = label_slots.size();
  std::size_t self_loops = 0;
  for (std::size_t g = 0; g < n_graphs; ++g) {
    Matrix x(nodes_of[g].size(), all_node_attrs.cols());
    for (std::size_t k = 0; k < nodes_of[g].size(); ++k) {
      std::ranges::copy(all_node_attrs.row(nodes_of[g][k]), x.row(k).begin());
    }
    std::vector<Edge> edges;
    Matrix u(edges_of[g].size(), all_edge_attrs.cols());
    for (std::size_t k = 0; k < edges_of[g].size(); ++k) {
      edges.push_back(raw[edges_of[g][k]].edge);
      std::ranges::copy(all_edge_attrs.row(edges_of[g][k]), u.row(k).begin());
    }
    CanonicalizeReport report;
    auto graph = AttributedGraph::from_raw(nodes_of[g].size(), edges, std::move(x), std::move(u),
                                           &report);
    self_loops += report.self_loops;
    ds.push_back(std::move(graph), static_cast<int>(label_slots.at(raw_labels[g])), 0, g);
  }
  if (self_loops > 0) {
    log::warn("dataset '" + name + "': dropped " + std::to_string(self_loops) + " self-loop(s)");
  }
  ds.validate();
  return ds;
}

GraphDataset degree_featurize(const GraphDataset& dataset, std::size_t max_degree,
                              DegreeMode mode) {
  if (max_degree < 1) throw DataError("degree_featurize: max_degree must be >= 1");
  GraphDataset out = dataset;
  for (auto& g : out.graphs) {
    const auto deg = g.degrees();
    const std::size_t keep = mode == DegreeMode::append ? g.node_dim() : 0;
    Matrix x(g.n_nodes(), keep + max_degree + 1);
    for (std::size_t i = 0; i < g.n_nodes(); ++i) {
      for (std::size_t c = 0; c < keep; ++c) x(i, c) = g.node_attrs()(i, c);
      x(i, keep + std::min(deg[i], max_degree)) = 1.0;
    }
    Matrix u = g.edge_dim() == 0 ? Matrix(g.n_edges(), 1, 1.0) : g.edge_attrs();
    g = AttributedGraph(g.n_nodes(), g.edges(), std::move(x), std::move(u));
  }
  return out;
}

GraphDataset prepare_for_sgn(const GraphDataset& dataset, std::size_t max_degree) {
  bool has_node_attrs = false;
  bool has_edge_attrs = false;
  for (const auto& g : dataset.graphs) {
    has_node_attrs = has_node_attrs || g.node_dim() > 0;
    has_edge_attrs = has_edge_attrs || g.edge_dim() > 0;
  }
  if (!has_node_attrs) return degree_featurize(dataset, max_degree, DegreeMode::replace);
  if (has_edge_attrs) return dataset;
  GraphDataset out = dataset;
  for (auto& g : out.graphs) {
    g = AttributedGraph(g.n_nodes(), g.edges(), g.node_attrs(), Matrix(g.n_edges(), 1, 1.0));
  }
  return out;
}

DatasetStats stats(const GraphDataset& dataset) {
  if (dataset.graphs.empty()) throw DataError("stats: dataset '" + dataset.name + "' is empty");
  std::size_t nodes = 0;
  std::size_t edges = 0;
  for (const auto& g : dataset.graphs) {
    nodes += g.n_nodes();
    edges += g.n_edges();
  }
  const auto n = static_cast<double>(dataset.graphs.size());
  return {dataset.graphs.size(), dataset.class_count, static_cast<double>(nodes) / n,
          static_cast<double>(edges) / n};
}

// Interchange format --------------------------------------------------------

namespace {

constexpr const char* kFormatTag = "sgncl-interchange";
constexpr int kFormatVersion = 1;

nlohmann::json matrix_json(const Matrix& m) {
  auto rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols,
                        const std::string& field) {
  if (!j.is_array() || j.size() != rows) {
    throw DataError("field '" + field + "' must hold " + std::to_string(rows) + " rows");
  }
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || row.size() != cols) {
      throw DataError("field '" + field + "' row " + std::to_string(r) + " must hold " +
                      std::to_string(cols) + " values");
    }
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = row[c].get<double>();
  }
  return m;
}

}  // namespace

void write_interchange(const GraphDataset& dataset, const fs::path& path) {
  dataset.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  nlohmann::json header = {{"format", kFormatTag},
                           {"version", kFormatVersion},
                           {"name", dataset.name},
                           {"class_count", dataset.class_count},
                           {"count", dataset.size()}};
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& g = dataset.graphs[i];
    auto edges = nlohmann::json::array();
    for (const Edge& e : g.edges()) edges.push_back({e.u, e.v});
    nlohmann::json record = {{"n", g.n_nodes()},
                             {"d", g.node_dim()},
                             {"r", g.edge_dim()},
                             {"edges", std::move(edges)},
                             {"node_attrs", matrix_json(g.node_attrs())},
                             {"edge_attrs", matrix_json(g.edge_attrs())},
                             {"label", dataset.labels[i]},
                             {"order", dataset.orders[i]},
                             {"origin", dataset.origins[i]}};
    out << record.dump() << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

GraphDataset read_interchange(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  const std::string file = path.filename().string();
  auto fail = [&](std::size_t line, const std::string& what) -> DataError {
    return DataError(file + ":" + std::to_string(line) + ": " + what);
  };

  std::string text;
  std::size_t line_no = 0;
  auto next_json = [&](nlohmann::json& j) {
    if (!std::getline(in, text)) return false;
    ++line_no;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw fail(line_no, std::string("parse error: ") + e.what());
    }
    return true;
  };

  nlohmann::json header;
  if (!next_json(header)) throw fail(1, "empty file");
  GraphDataset ds;
  std::size_t count = 0;
  try {
    if (header.at("format").get<std::string>() != kFormatTag) throw fail(1, "not an interchange file");
    if (header.at("version").get<int>() != kFormatVersion) throw fail(1, "unsupported version");
    ds.name = header.at("name").get<std::string>();
    ds.class_count = header.at("class_count").get<std::size_t>();
    count = header.at("count").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw fail(1, std::string("bad header: ") + e.what());
  }

  for (std::size_t i = 0; i < count; ++i) {
    nlohmann::json rec;
    if (!next_json(rec)) {
      throw fail(line_no + 1, "truncated: expected " + std::to_string(count) + " records, found " +
                                  std::to_string(i));
    }
    try {
      const auto n = rec.at("n").get<std::size_t>();
      const auto d = rec.at("d").get<std::size_t>();
      const auto r = rec.at("r").get<std::size_t>();
      std::vector<Edge> edges;
      for (const auto& e : rec.at("edges")) {
        if (!e.is_array() || e.size() != 2) throw DataError("edge entries must be [u, v] pairs");
        edges.push_back({e[0].get<NodeId>(), e[1].get<NodeId>()});
      }
      const std::size_t m = edges.size();
      Matrix x = matrix_from_json(rec.at("node_attrs"), n, d, "node_attrs");
      Matrix u = matrix_from_json(rec.at("edge_attrs"), m, r, "edge_attrs");
      ds.push_back(AttributedGraph(n, std::move(edges), std::move(x), std::move(u)),
                   rec.at("label").get<int>(), rec.at("order").get<int>(),
                   rec.at("origin").get<std::size_t>());
    } catch (const nlohmann::json::exception& e) {
      throw fail(line_no, e.what());
    } catch (const DataError& e) {
      throw fail(line_no, e.what());
    }
  }
  while (std::getline(in, text)) {
    ++line_no;
    if (!trim(text).empty()) throw fail(line_no, "unexpected content after last record");
  }
  try {
    ds.validate();
  } catch (const DataError& e) {
    throw fail(line_no, e.what());
  }
  return ds;
}

}  // namespace sgncl
