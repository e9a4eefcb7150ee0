#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgncl/autograd.hpp"
#include "sgncl/graph.hpp"
#include "sgncl/sgn.hpp"

namespace sgncl {

using autograd::Parameter;
using autograd::Tape;
using autograd::Tensor;

enum class Pooling { sum, mean, max };

std::string to_string(Pooling pool);
Pooling parse_pooling(const std::string& text);

// Affine map x W + b with W in x out and b 1 x out.
struct Linear {
  Parameter weight;
  Parameter bias;

  std::size_t in() const { return weight.value.rows(); }
  std::size_t out() const { return weight.value.cols(); }
  Tensor operator()(Tape& tape, const Tensor& x) const;

  friend bool operator==(const Linear&, const Linear&) = default;
};

// h' = mlp_out(relu(mlp_in((1 + epsilon) h + sum_u relu(h_u + edge_map(u_uv)))))
struct GinLayer {
  Linear mlp_in;
  Linear mlp_out;
  Linear edge_map;
  double epsilon = 0.0;

  friend bool operator==(const GinLayer&, const GinLayer&) = default;
};

// Encoder for one view order: input projection then K GIN layers.
struct ViewEncoder {
  int order = 0;
  std::size_t node_dim = 0;
  std::size_t edge_dim = 0;
  Linear input_proj;
  std::vector<GinLayer> layers;

  friend bool operator==(const ViewEncoder&, const ViewEncoder&) = default;
};

// Three affine maps with ReLU between; outputs are L2-normalized rows.
struct ProjectionHead {
  Linear first;
  Linear second;
  Linear third;

  friend bool operator==(const ProjectionHead&, const ProjectionHead&) = default;
};

struct EncoderConfig {
  std::size_t hidden = 32;
  std::size_t layers = 3;
  Pooling pool = Pooling::sum;

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

// Input widths of one view order.
struct ViewShape {
  int order = 0;
  std::size_t node_dim = 0;
  std::size_t edge_dim = 0;
};

// Widths an order-`order` view has when the original graph has (d, r).
ViewShape shape_at_order(std::size_t node_dim, std::size_t edge_dim, int order);

// Per-view encoders with disjoint parameters plus one shared projection head.
class EncoderStack {
 public:
  EncoderStack() = default;

  // Weights are uniform in +-sqrt(6 / (fan_in + fan_out)); biases start at
  // zero. Each view and the head draw from their own seeded stream, so adding
  // or dropping a view leaves the others unchanged.
  static EncoderStack create(const EncoderConfig& config, std::span<const ViewShape> views,
                             std::uint64_t seed);

  const EncoderConfig& config() const noexcept { return config_; }
  std::size_t embedding_width() const noexcept { return config_.hidden * config_.layers; }

  bool has_view(int order) const;
  // Throws DataError when the order has no encoder.
  const ViewEncoder& view(int order) const;
  ViewEncoder& view(int order);
  const ProjectionHead& head() const noexcept { return head_; }
  ProjectionHead& head() noexcept { return head_; }

  // Stable order: views by ascending order, then the head.
  std::vector<const Parameter*> parameters() const;
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> view_parameters(int order) const;

  void set_view(ViewEncoder encoder);

  friend bool operator==(const EncoderStack&, const EncoderStack&) = default;

 private:
  EncoderConfig config_;
  std::array<std::optional<ViewEncoder>, 3> views_;
  ProjectionHead head_;
};

// Several graphs packed as one block-diagonal graph.
struct GraphBatch {
  std::size_t graph_count = 0;
  std::size_t node_count = 0;
  Matrix node_attrs;
  Matrix edge_attrs;
  // One message per edge direction: src -> dst carrying edge `message_edge`.
  std::vector<std::size_t> message_src;
  std::vector<std::size_t> message_dst;
  std::vector<std::size_t> message_edge;
  // Owning graph of each node.
  std::vector<std::size_t> node_graph;

  // All graphs must share attribute widths.
  static GraphBatch pack(std::span<const AttributedGraph* const> graphs);
};

// ---- tape-level forward passes (used by training) ------------------------

// Per-layer node representations h^(1..K). Throws DataError naming the order
// and expected widths when the batch does not match the encoder.
std::vector<Tensor> encode_nodes(Tape& tape, const ViewEncoder& encoder, const GraphBatch& batch);
// graph_count x (K * hidden): concatenation over layers of the pooled nodes.
Tensor readout(const std::vector<Tensor>& layers, const GraphBatch& batch, Pooling pool);
Tensor project(Tape& tape, const ProjectionHead& head, const Tensor& graph_reps);

// H for every graph of a batch, in batch order.
Tensor graph_representations(Tape& tape, const EncoderStack& stack, int order,
                             const GraphBatch& batch);

// ---- value-level conveniences ----------------------------------------------

std::vector<Matrix> encode_nodes(const SgnView& view, const EncoderStack& stack);
// Pools one graph's per-layer node representations into a 1 x (K * hidden) row.
Matrix readout(const std::vector<Matrix>& layers, Pooling pool);
// Normalized projection of each row of H.
Matrix project(const EncoderStack& stack, const Matrix& graph_reps);
// H rows for a list of graphs of one order (projection head not applied).
Matrix graph_representations(const EncoderStack& stack, int order,
                             std::span<const AttributedGraph* const> graphs);

}  // namespace sgncl
