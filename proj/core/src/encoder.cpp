#include "sgncl/encoder.hpp"

#include <cmath>

#include "sgncl/error.hpp"
#include "sgncl/rng.hpp"

namespace sgncl {

namespace ag = autograd;

std::string to_string(Pooling pool) {
  switch (pool) {
    case Pooling::sum: return "sum";
    case Pooling::mean: return "mean";
    case Pooling::max: return "max";
  }
  return "sum";
}

Pooling parse_pooling(const std::string& text) {
  if (text == "sum") return Pooling::sum;
  if (text == "mean") return Pooling::mean;
  if (text == "max") return Pooling::max;
  throw DataError("unknown pooling '" + text + "' (expected sum, mean or max)");
}

Tensor Linear::operator()(Tape& tape, const Tensor& x) const {
  return ag::add_row(ag::matmul(x, tape.parameter(weight)), tape.parameter(bias));
}

ViewShape shape_at_order(std::size_t node_dim, std::size_t edge_dim, int order) {
  ViewShape s{0, node_dim, edge_dim};
  for (int l = 1; l <= order; ++l) s = {l, 2 * s.node_dim, 2 * s.edge_dim + s.node_dim};
  return s;
}

namespace {

std::string view_prefix(int order) { return order == 0 ? "ori" : "sgn" + std::to_string(order); }

Linear make_linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
  Matrix w(in, out);
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  for (double& v : w.data()) v = rng.uniform(-bound, bound);
  return {{name + ".weight", std::move(w)}, {name + ".bias", Matrix(1, out)}};
}

void collect(const Linear& l, std::vector<const Parameter*>& out) {
  out.push_back(&l.weight);
  out.push_back(&l.bias);
}

void collect(const ViewEncoder& v, std::vector<const Parameter*>& out) {
  collect(v.input_proj, out);
  for (const auto& layer : v.layers) {
    collect(layer.mlp_in, out);
    collect(layer.mlp_out, out);
    collect(layer.edge_map, out);
  }
}

void check_order(int order) {
  if (order < 0 || order > 2) throw DataError("view order must be 0, 1 or 2");
}

}  // namespace

EncoderStack EncoderStack::create(const EncoderConfig& config, std::span<const ViewShape> views,
                                  std::uint64_t seed) {
  if (config.hidden == 0 || config.layers == 0) {
    throw DataError("encoder hidden width and layer count must be positive");
  }
  EncoderStack stack;
  stack.config_ = config;
  const std::size_t h = config.hidden;
  for (const ViewShape& shape : views) {
    check_order(shape.order);
    const std::string prefix = view_prefix(shape.order);
    Rng rng = Rng::stream(seed, "encoder/" + prefix);
    ViewEncoder enc;
    enc.order = shape.order;
    enc.node_dim = shape.node_dim;
    enc.edge_dim = shape.edge_dim;
    enc.input_proj = make_linear(prefix + ".input", shape.node_dim, h, rng);
    for (std::size_t k = 0; k < config.layers; ++k) {
      const std::string lp = prefix + ".layer" + std::to_string(k);
      GinLayer layer;
      layer.mlp_in = make_linear(lp + ".mlp_in", h, h, rng);
      layer.mlp_out = make_linear(lp + ".mlp_out", h, h, rng);
      layer.edge_map = make_linear(lp + ".edge_map", shape.edge_dim, h, rng);
      enc.layers.push_back(std::move(layer));
    }
    stack.set_view(std::move(enc));
  }
  Rng head_rng = Rng::stream(seed, "head");
  const std::size_t w = stack.embedding_width();
  stack.head_.first = make_linear("head.first", w, w, head_rng);
  stack.head_.second = make_linear("head.second", w, w, head_rng);
  stack.head_.third = make_linear("head.third", w, w, head_rng);
  return stack;
}

bool EncoderStack::has_view(int order) const {
  return order >= 0 && order <= 2 && views_[static_cast<std::size_t>(order)].has_value();
}

const ViewEncoder& EncoderStack::view(int order) const {
  if (!has_view(order)) throw DataError("encoder stack has no encoder for order " + std::to_string(order));
  return *views_[static_cast<std::size_t>(order)];
}

ViewEncoder& EncoderStack::view(int order) {
  if (!has_view(order)) throw DataError("encoder stack has no encoder for order " + std::to_string(order));
  return *views_[static_cast<std::size_t>(order)];
}

void EncoderStack::set_view(ViewEncoder encoder) {
  check_order(encoder.order);
  const auto slot = static_cast<std::size_t>(encoder.order);
  views_[slot] = std::move(encoder);
}

std::vector<const Parameter*> EncoderStack::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& v : views_) {
    if (v) collect(*v, out);
  }
  collect(head_.first, out);
  collect(head_.second, out);
  collect(head_.third, out);
  return out;
}

std::vector<Parameter*> EncoderStack::parameters() {
  std::vector<Parameter*> out;
  for (const Parameter* p : std::as_const(*this).parameters()) out.push_back(const_cast<Parameter*>(p));
  return out;
}

std::vector<const Parameter*> EncoderStack::view_parameters(int order) const {
  std::vector<const Parameter*> out;
  collect(view(order), out);
  return out;
}

GraphBatch GraphBatch::pack(std::span<const AttributedGraph* const> graphs) {
  GraphBatch b;
  b.graph_count = graphs.size();
  std::size_t d = 0, r = 0, nodes = 0, edges = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const auto& g = *graphs[i];
    if (i == 0) {
      d = g.node_dim();
      r = g.edge_dim();
    } else if (g.node_dim() != d || g.edge_dim() != r) {
      throw DataError("GraphBatch: graphs in a batch must share attribute widths");
    }
    nodes += g.n_nodes();
    edges += g.n_edges();
  }
  b.node_count = nodes;
  std::vector<double> x, u;
  x.reserve(nodes * d);
  u.reserve(edges * r);
  b.node_graph.reserve(nodes);
  b.message_src.reserve(2 * edges);
  b.message_dst.reserve(2 * edges);
  b.message_edge.reserve(2 * edges);
  std::size_t node_offset = 0;
  std::size_t edge_offset = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const auto& g = *graphs[i];
    x.insert(x.end(), g.node_attrs().data().begin(), g.node_attrs().data().end());
    u.insert(u.end(), g.edge_attrs().data().begin(), g.edge_attrs().data().end());
    b.node_graph.insert(b.node_graph.end(), g.n_nodes(), i);
    for (std::size_t k = 0; k < g.n_edges(); ++k) {
      const Edge& e = g.edges()[k];
      b.message_src.push_back(node_offset + e.u);
      b.message_dst.push_back(node_offset + e.v);
      b.message_edge.push_back(edge_offset + k);
      b.message_src.push_back(node_offset + e.v);
      b.message_dst.push_back(node_offset + e.u);
      b.message_edge.push_back(edge_offset + k);
    }
    node_offset += g.n_nodes();
    edge_offset += g.n_edges();
  }
  b.node_attrs = Matrix(nodes, d, std::move(x));
  b.edge_attrs = Matrix(edges, r, std::move(u));
  return b;
}

std::vector<Tensor> encode_nodes(Tape& tape, const ViewEncoder& encoder, const GraphBatch& batch) {
  if (batch.node_attrs.cols() != encoder.node_dim || batch.edge_attrs.cols() != encoder.edge_dim) {
    throw DataError("order-" + std::to_string(encoder.order) + " view has widths (d=" +
                    std::to_string(batch.node_attrs.cols()) + ", r=" +
                    std::to_string(batch.edge_attrs.cols()) + "), encoder expects (d=" +
                    std::to_string(encoder.node_dim) + ", r=" + std::to_string(encoder.edge_dim) +
                    ")");
  }
  const Tensor x = tape.constant(batch.node_attrs);
  const Tensor u = tape.constant(batch.edge_attrs);
  Tensor h = encoder.input_proj(tape, x);
  std::vector<Tensor> out;
  out.reserve(encoder.layers.size());
  for (const GinLayer& layer : encoder.layers) {
    const Tensor edge_term = layer.edge_map(tape, u);
    const Tensor messages = ag::relu(ag::add(ag::gather_rows(h, batch.message_src),
                                             ag::gather_rows(edge_term, batch.message_edge)));
    const Tensor aggregated = ag::scatter_add_rows(messages, batch.message_dst, batch.node_count);
    const Tensor self = layer.epsilon == 0.0 ? h : ag::scale(h, 1.0 + layer.epsilon);
    h = layer.mlp_out(tape, ag::relu(layer.mlp_in(tape, ag::add(self, aggregated))));
    out.push_back(h);
  }
  return out;
}

Tensor readout(const std::vector<Tensor>& layers, const GraphBatch& batch, Pooling pool) {
  if (layers.empty()) throw DataError("readout needs at least one layer");
  std::vector<Tensor> pooled;
  pooled.reserve(layers.size());
  for (const Tensor& h : layers) {
    switch (pool) {
      case Pooling::sum: pooled.push_back(ag::segment_sum(h, batch.node_graph, batch.graph_count)); break;
      case Pooling::mean: pooled.push_back(ag::segment_mean(h, batch.node_graph, batch.graph_count)); break;
      case Pooling::max: pooled.push_back(ag::segment_max(h, batch.node_graph, batch.graph_count)); break;
    }
  }
  return ag::concat_cols(pooled);
}

Tensor project(Tape& tape, const ProjectionHead& head, const Tensor& graph_reps) {
  if (graph_reps.cols() != head.first.in()) {
    throw DataError("projection head expects width " + std::to_string(head.first.in()) + ", got " +
                    std::to_string(graph_reps.cols()));
  }
  Tensor z = ag::relu(head.first(tape, graph_reps));
  z = ag::relu(head.second(tape, z));
  z = head.third(tape, z);
  return ag::l2_normalize_rows(z);
}

Tensor graph_representations(Tape& tape, const EncoderStack& stack, int order,
                             const GraphBatch& batch) {
  return readout(encode_nodes(tape, stack.view(order), batch), batch, stack.config().pool);
}

std::vector<Matrix> encode_nodes(const SgnView& view, const EncoderStack& stack) {
  const AttributedGraph* g = &view.graph;
  const GraphBatch batch = GraphBatch::pack(std::span(&g, 1));
  Tape tape;
  std::vector<Matrix> out;
  for (const Tensor& t : encode_nodes(tape, stack.view(view.order), batch)) out.push_back(t.value());
  return out;
}

Matrix readout(const std::vector<Matrix>& layers, Pooling pool) {
  if (layers.empty()) throw DataError("readout needs at least one layer");
  Tape tape;
  GraphBatch shape;
  shape.graph_count = 1;
  shape.node_count = layers.front().rows();
  shape.node_graph.assign(shape.node_count, 0);
  std::vector<Tensor> tensors;
  for (const Matrix& m : layers) tensors.push_back(tape.constant(m));
  return readout(tensors, shape, pool).value();
}

Matrix project(const EncoderStack& stack, const Matrix& graph_reps) {
  Tape tape;
  return project(tape, stack.head(), tape.constant(graph_reps)).value();
}

Matrix graph_representations(const EncoderStack& stack, int order,
                             std::span<const AttributedGraph* const> graphs) {
  if (graphs.empty()) return Matrix(0, stack.embedding_width());
  Tape tape;
  return graph_representations(tape, stack, order, GraphBatch::pack(graphs)).value();
}

}  // namespace sgncl
