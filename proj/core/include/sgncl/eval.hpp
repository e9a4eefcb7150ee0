#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "sgncl/contrastive.hpp"
#include "sgncl/dataset.hpp"
#include "sgncl/encoder.hpp"

namespace sgncl {

// One H row per graph from the order-0 encoder; the projection head is not
// applied.
struct EmbeddingTable {
  Matrix rows;
  std::vector<int> labels;
  std::size_t class_count = 0;
};

EmbeddingTable embed(const GraphDataset& dataset, const EncoderStack& stack);

// graph_id,label,h0..h{D-1}
void write_embeddings_csv(std::ostream& out, const EmbeddingTable& table);
EmbeddingTable read_embeddings_csv(const std::filesystem::path& path);

struct EvalCell {
  std::uint64_t seed = 0;
  std::size_t fold = 0;
  double accuracy = 0.0;

  friend bool operator==(const EvalCell&, const EvalCell&) = default;
};

// Raw (seed, fold) accuracy grid. Aggregates are always derived from it.
struct EvalReport {
  std::vector<EvalCell> cells;

  double mean() const;
  // Population standard deviation over all cells.
  double stddev() const;
};

// seed,fold,accuracy
void write_eval_csv(std::ostream& out, const EvalReport& report);

// L2-regularized multinomial logistic regression fitted by full-batch
// gradient descent on features standardized with training-fold statistics.
struct ProbeConfig {
  double lambda = 1e-3;
  std::size_t iterations = 500;
  double lr = 0.1;
};

// Test-index sets of a stratified split: each class is shuffled with the
// seed and dealt round-robin across folds.
std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels,
                                                       std::size_t folds, std::uint64_t seed);

// Throws DataError if folds < 2, folds > rows, or some training split misses a
// class.
EvalReport kfold_probe(const EmbeddingTable& table, std::size_t folds,
                       std::span<const std::uint64_t> seeds, const ProbeConfig& probe = {});

// For each seed: train with that seed, embed, and probe with the same seed.
EvalReport evaluate_protocol(const GraphDataset& dataset, const TrainConfig& config,
                             std::size_t folds, std::span<const std::uint64_t> seeds,
                             const ProbeConfig& probe = {}, const AugmentedCorpus* corpus = nullptr);

struct QSweepRow {
  double q = 0.0;
  EvalReport report;
};

// Fused-mode evaluate_protocol for every q of the grid (values in [0, 1]).
std::vector<QSweepRow> sweep_q(const GraphDataset& dataset, const TrainConfig& config,
                               std::span<const double> grid, std::size_t folds,
                               std::span<const std::uint64_t> seeds, const ProbeConfig& probe = {});

// q,mean,std
void write_sweep_csv(std::ostream& out, const std::vector<QSweepRow>& rows);

// Cosine similarity between sampled originals' z (rows) and their order-k
// views' z (columns).
struct SimilarityMatrix {
  std::vector<std::size_t> graph_ids;
  std::vector<int> labels;
  Matrix values;

  double mean_diagonal() const;
  double mean_off_diagonal() const;
};

struct SimilarityOptions {
  std::size_t sample = 128;
  bool group_by_label = false;
  int view_order = 1;
  std::uint64_t seed = 0;
  SizeGuard guard;
};

// Samples without replacement among graphs whose view fits the guard,
// ordered by id, or label 1 block first when grouping (then other labels
// ascending).
SimilarityMatrix similarity_matrix(const GraphDataset& dataset, const EncoderStack& stack,
                                   const SimilarityOptions& options);

// Header "graph_id,<id...>", then one row per sampled original.
void write_similarity_csv(std::ostream& out, const SimilarityMatrix& matrix);

}  // namespace sgncl
