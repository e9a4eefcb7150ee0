#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sgncl/dataset.hpp"
#include "sgncl/encoder.hpp"
#include "sgncl/sgn.hpp"

namespace sgncl {

enum class OrderMode { sgn1, sgn2, fused };
enum class DenominatorMode { negatives_only, include_positive };

std::string to_string(OrderMode mode);
std::string to_string(DenominatorMode mode);
OrderMode parse_order_mode(const std::string& text);
DenominatorMode parse_denominator_mode(const std::string& text);

struct TrainConfig {
  OrderMode order_mode = OrderMode::sgn1;
  double tau = 0.5;
  double q = 0.5;
  std::size_t epochs = 40;
  std::size_t batch = 32;
  std::size_t hidden = 32;
  std::size_t layers = 3;
  double lr = 0.01;
  std::uint64_t seed = 0;
  SizeGuard guard;
  Pooling pool = Pooling::sum;
  DenominatorMode denominator = DenominatorMode::negatives_only;

  // Throws DataError on out-of-range values.
  void validate() const;
  // Augmented orders the mode contrasts against the original view.
  std::vector<int> view_orders() const;
  // One "key=value" per line, stable order.
  std::string describe() const;
};

// ---- losses ------------------------------------------------------------------

// Per-row ratio S_i = exp(cos(z_i, zt_i)/tau) / sum_{j != i} exp(cos(z_i, zt_j)/tau)
// (the sum includes j = i under include_positive). I x 1.
Tensor similarity_ratios(const Tensor& z, const Tensor& z_tilde, double tau,
                         DenominatorMode mode = DenominatorMode::negatives_only);

// Batch mean of -log S_i. Throws DataError when I < 2 or tau <= 0.
Tensor nt_xent(const Tensor& z, const Tensor& z_tilde, double tau,
               DenominatorMode mode = DenominatorMode::negatives_only);

// Batch mean of -log(q S1_i + (1 - q) S2_i).
Tensor fused_loss(const Tensor& z, const Tensor& z1, const Tensor& z2, double tau, double q,
                  DenominatorMode mode = DenominatorMode::negatives_only);

double nt_xent(const Matrix& z, const Matrix& z_tilde, double tau,
               DenominatorMode mode = DenominatorMode::negatives_only);
double fused_loss(const Matrix& z, const Matrix& z1, const Matrix& z2, double tau, double q,
                  DenominatorMode mode = DenominatorMode::negatives_only);

// ---- optimizer ---------------------------------------------------------------

class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // grads[i] pairs with params[i]; the parameter list must be stable across calls.
  void step(const std::vector<Parameter*>& params, const std::vector<Matrix>& grads);

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<Matrix> m_, v_;
};

// ---- augmentation cache --------------------------------------------------------

// SGN views of a dataset, computed once. `views[o][i]` is the order-o view of
// graph i (order 0 is the graph itself). `reached[i]` is the highest order
// built for graph i before the size guard stopped it.
struct AugmentedCorpus {
  int max_order = 0;
  std::vector<std::vector<AttributedGraph>> views;  // indexed [order][graph]
  std::vector<int> reached;

  const AttributedGraph& view(int order, std::size_t graph) const;
  // Graphs whose views exist up to `order`, ascending.
  std::vector<std::size_t> usable(int order) const;
};

AugmentedCorpus augment_corpus(const GraphDataset& dataset, int max_order, const SizeGuard& guard);

// ---- training ------------------------------------------------------------------

struct EpochRecord {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double mean_pos_sim = 0.0;
  std::size_t skipped_graphs = 0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainResult {
  EncoderStack stack;
  // Row 0 evaluates the freshly initialized model; rows 1..epochs follow each
  // training epoch.
  std::vector<EpochRecord> history;
  std::size_t skipped_graphs = 0;
};

// Adam on every encoder and head parameter. Deterministic given the config.
// `corpus` may be passed to reuse a precomputed cache.
TrainResult train(const GraphDataset& dataset, const TrainConfig& config,
                  const AugmentedCorpus* corpus = nullptr);

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);

// ---- checkpoints ---------------------------------------------------------------

struct Checkpoint {
  EncoderStack stack;
  TrainConfig config;
};

void save_checkpoint(const std::filesystem::path& path, const EncoderStack& stack,
                     const TrainConfig& config);
Checkpoint load_checkpoint(const std::filesystem::path& path);
// Throws DataError if the dataset's order-0 widths differ from the encoder's.
void check_compatible(const EncoderStack& stack, const GraphDataset& dataset);

}  // namespace sgncl
