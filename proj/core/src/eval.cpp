#include "sgncl/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <string>

#include "sgncl/csv.hpp"
#include "sgncl/error.hpp"
#include "sgncl/parallel.hpp"
#include "sgncl/rng.hpp"

namespace sgncl {

namespace {

constexpr std::size_t kEmbedChunk = 256;

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view text, const std::string& where) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw DataError(where + ": cannot parse '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

// ---- embeddings ----------------------------------------------------------------

EmbeddingTable embed(const GraphDataset& dataset, const EncoderStack& stack) {
  check_compatible(stack, dataset);
  EmbeddingTable table;
  table.rows = Matrix(dataset.size(), stack.embedding_width());
  table.labels = dataset.labels;
  table.class_count = dataset.class_count;
  for (std::size_t start = 0; start < dataset.size(); start += kEmbedChunk) {
    const std::size_t end = std::min(dataset.size(), start + kEmbedChunk);
    std::vector<const AttributedGraph*> graphs;
    for (std::size_t i = start; i < end; ++i) graphs.push_back(&dataset.graphs[i]);
    const Matrix h = graph_representations(stack, 0, graphs);
    std::ranges::copy(h.data(), table.rows.data().begin() +
                                    static_cast<std::ptrdiff_t>(start * table.rows.cols()));
  }
  return table;
}

void write_embeddings_csv(std::ostream& out, const EmbeddingTable& table) {
  out << "graph_id,label";
  for (std::size_t c = 0; c < table.rows.cols(); ++c) out << ",h" << c;
  out << '\n';
  for (std::size_t i = 0; i < table.rows.rows(); ++i) {
    out << i << ',' << table.labels[i];
    for (double v : table.rows.row(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

EmbeddingTable read_embeddings_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  const std::string file = path.filename().string();
  std::string line;
  if (!std::getline(in, line)) throw DataError(file + ": empty embeddings file");
  const auto header = split_csv(line);
  if (header.size() < 2 || header[0] != "graph_id" || header[1] != "label") {
    throw DataError(file + ":1: expected header 'graph_id,label,h0,...'");
  }
  const std::size_t width = header.size() - 2;
  std::vector<double> data;
  EmbeddingTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = file + ":" + std::to_string(line_no);
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) throw DataError(where + ": wrong number of columns");
    if (parse_number<std::size_t>(fields[0], where) != table.labels.size()) {
      throw DataError(where + ": graph ids must be consecutive from 0");
    }
    const int label = parse_number<int>(fields[1], where);
    if (label < 0) throw DataError(where + ": negative label");
    table.labels.push_back(label);
    for (std::size_t c = 0; c < width; ++c) data.push_back(parse_number<double>(fields[2 + c], where));
  }
  table.rows = Matrix(table.labels.size(), width, std::move(data));
  int max_label = -1;
  for (int l : table.labels) max_label = std::max(max_label, l);
  table.class_count = static_cast<std::size_t>(max_label + 1);
  return table;
}

// ---- report --------------------------------------------------------------------

double EvalReport::mean() const {
  if (cells.empty()) return 0.0;
  double s = 0.0;
  for (const auto& c : cells) s += c.accuracy;
  return s / static_cast<double>(cells.size());
}

double EvalReport::stddev() const {
  if (cells.empty()) return 0.0;
  const double m = mean();
  double s = 0.0;
  for (const auto& c : cells) s += (c.accuracy - m) * (c.accuracy - m);
  return std::sqrt(s / static_cast<double>(cells.size()));
}

void write_eval_csv(std::ostream& out, const EvalReport& report) {
  out << "seed,fold,accuracy\n";
  for (const auto& c : report.cells) out << c.seed << ',' << c.fold << ',' << format_double(c.accuracy) << '\n';
}

// ---- probe ---------------------------------------------------------------------

std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels,
                                                       std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw DataError("k-fold evaluation needs at least 2 folds");
  if (folds > labels.size()) {
    throw DataError("cannot split " + std::to_string(labels.size()) + " graphs into " +
                    std::to_string(folds) + " folds");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Rng rng = Rng::stream(seed, "folds");
  std::vector<std::vector<std::size_t>> out(folds);
  std::size_t next = 0;
  for (auto& [label, members] : by_class) {
    rng.shuffle(std::span(members));
    for (std::size_t idx : members) out[next++ % folds].push_back(idx);
  }
  for (auto& f : out) std::ranges::sort(f);
  return out;
}

namespace {

// Trains on `train` rows and returns accuracy on `test` rows.
double probe_fold(const EmbeddingTable& table, const std::vector<std::size_t>& train,
                  const std::vector<std::size_t>& test, const ProbeConfig& cfg) {
  const std::size_t d = table.rows.cols();
  const std::size_t c = table.class_count;
  const std::size_t n = train.size();

  std::vector<double> mu(d, 0.0), sigma(d, 0.0);
  for (std::size_t i : train) {
    for (std::size_t j = 0; j < d; ++j) mu[j] += table.rows(i, j);
  }
  for (double& m : mu) m /= static_cast<double>(n);
  for (std::size_t i : train) {
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = table.rows(i, j) - mu[j];
      sigma[j] += diff * diff;
    }
  }
  for (double& s : sigma) {
    s = std::sqrt(s / static_cast<double>(n));
    if (s < 1e-12) s = 1.0;
  }
  auto standardized = [&](const std::vector<std::size_t>& idx) {
    Matrix x(idx.size(), d);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      for (std::size_t j = 0; j < d; ++j) x(r, j) = (table.rows(idx[r], j) - mu[j]) / sigma[j];
    }
    return x;
  };
  const Matrix x = standardized(train);
  Matrix w(d, c);
  std::vector<double> b(c, 0.0);
  Matrix p(n, c);
  Matrix gw(d, c);
  std::vector<double> gb(c);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    for (std::size_t r = 0; r < n; ++r) {
      double mx = -INFINITY;
      for (std::size_t k = 0; k < c; ++k) {
        double z = b[k];
        for (std::size_t j = 0; j < d; ++j) z += x(r, j) * w(j, k);
        p(r, k) = z;
        mx = std::max(mx, z);
      }
      double total = 0.0;
      for (std::size_t k = 0; k < c; ++k) {
        p(r, k) = std::exp(p(r, k) - mx);
        total += p(r, k);
      }
      for (std::size_t k = 0; k < c; ++k) p(r, k) /= total;
      p(r, static_cast<std::size_t>(table.labels[train[r]])) -= 1.0;
    }
    std::ranges::fill(gw.data(), 0.0);
    std::ranges::fill(gb, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t k = 0; k < c; ++k) {
        const double e = p(r, k) / static_cast<double>(n);
        gb[k] += e;
        for (std::size_t j = 0; j < d; ++j) gw(j, k) += x(r, j) * e;
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t k = 0; k < c; ++k) w(j, k) -= cfg.lr * (gw(j, k) + cfg.lambda * w(j, k));
    }
    for (std::size_t k = 0; k < c; ++k) b[k] -= cfg.lr * gb[k];
  }

  const Matrix xt = standardized(test);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < test.size(); ++r) {
    std::size_t best = 0;
    double best_z = -INFINITY;
    for (std::size_t k = 0; k < c; ++k) {
      double z = b[k];
      for (std::size_t j = 0; j < d; ++j) z += xt(r, j) * w(j, k);
      if (z > best_z) {
        best_z = z;
        best = k;
      }
    }
    if (static_cast<int>(best) == table.labels[test[r]]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace

EvalReport kfold_probe(const EmbeddingTable& table, std::size_t folds,
                       std::span<const std::uint64_t> seeds, const ProbeConfig& probe) {
  if (table.labels.size() != table.rows.rows()) throw DataError("embedding table labels misaligned");
  if (!table.rows.all_finite()) throw DataError("embedding table holds non-finite entries");
  for (int l : table.labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= table.class_count) throw DataError("label out of range");
  }
  const std::set<int> classes(table.labels.begin(), table.labels.end());

  struct Job {
    std::uint64_t seed;
    std::size_t fold;
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
  };
  std::vector<Job> jobs;
  for (std::uint64_t seed : seeds) {
    const auto split = stratified_folds(table.labels, folds, seed);
    for (std::size_t f = 0; f < folds; ++f) {
      Job job{seed, f, {}, split[f]};
      for (std::size_t g = 0; g < folds; ++g) {
        if (g != f) job.train.insert(job.train.end(), split[g].begin(), split[g].end());
      }
      std::ranges::sort(job.train);
      std::set<int> seen;
      for (std::size_t i : job.train) seen.insert(table.labels[i]);
      if (seen != classes) {
        throw DataError("fold " + std::to_string(f) + " (seed " + std::to_string(seed) +
                        ") leaves a class out of its training split; use fewer folds");
      }
      if (job.test.empty()) throw DataError("empty test fold; use fewer folds");
      jobs.push_back(std::move(job));
    }
  }
  EvalReport report;
  report.cells.resize(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t j) {
    report.cells[j] = {jobs[j].seed, jobs[j].fold, probe_fold(table, jobs[j].train, jobs[j].test, probe)};
  });
  return report;
}

EvalReport evaluate_protocol(const GraphDataset& dataset, const TrainConfig& config,
                             std::size_t folds, std::span<const std::uint64_t> seeds,
                             const ProbeConfig& probe, const AugmentedCorpus* corpus) {
  std::vector<EvalReport> per_seed(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t s) {
    TrainConfig cfg = config;
    cfg.seed = seeds[s];
    const TrainResult trained = train(dataset, cfg, corpus);
    const std::uint64_t one[] = {seeds[s]};
    per_seed[s] = kfold_probe(embed(dataset, trained.stack), folds, one, probe);
  });
  EvalReport report;
  for (const auto& r : per_seed) report.cells.insert(report.cells.end(), r.cells.begin(), r.cells.end());
  return report;
}

std::vector<QSweepRow> sweep_q(const GraphDataset& dataset, const TrainConfig& config,
                               std::span<const double> grid, std::size_t folds,
                               std::span<const std::uint64_t> seeds, const ProbeConfig& probe) {
  for (double q : grid) {
    if (!(q >= 0.0 && q <= 1.0)) throw DataError("q grid values must lie in [0, 1]");
  }
  const AugmentedCorpus corpus = augment_corpus(dataset, 2, config.guard);
  std::vector<QSweepRow> rows(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    TrainConfig cfg = config;
    cfg.order_mode = OrderMode::fused;
    cfg.q = grid[i];
    rows[i] = {grid[i], evaluate_protocol(dataset, cfg, folds, seeds, probe, &corpus)};
  });
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<QSweepRow>& rows) {
  out << "q,mean,std\n";
  for (const auto& r : rows) {
    out << format_double(r.q) << ',' << format_double(r.report.mean()) << ','
        << format_double(r.report.stddev()) << '\n';
  }
}

// ---- similarity matrix ---------------------------------------------------------

double SimilarityMatrix::mean_diagonal() const {
  const std::size_t n = values.rows();
  if (n == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += values(i, i);
  return s / static_cast<double>(n);
}

double SimilarityMatrix::mean_off_diagonal() const {
  const std::size_t n = values.rows();
  if (n < 2) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) s += values(i, j);
    }
  }
  return s / static_cast<double>(n * (n - 1));
}

SimilarityMatrix similarity_matrix(const GraphDataset& dataset, const EncoderStack& stack,
                                   const SimilarityOptions& options) {
  check_compatible(stack, dataset);
  if (options.view_order < 1 || options.view_order > 2) throw DataError("similarity view order must be 1 or 2");
  const AugmentedCorpus corpus = augment_corpus(dataset, options.view_order, options.guard);
  std::vector<std::size_t> pool = corpus.usable(options.view_order);
  if (options.sample == 0 || options.sample > pool.size()) {
    throw DataError("similarity sample size " + std::to_string(options.sample) + " outside [1, " +
                    std::to_string(pool.size()) + "]");
  }
  Rng rng = Rng::stream(options.seed, "simmatrix");
  rng.shuffle(std::span(pool));
  pool.resize(options.sample);
  std::ranges::sort(pool);
  if (options.group_by_label) {
    auto rank = [&](std::size_t i) {
      const int l = dataset.labels[i];
      return l == 1 ? -1 : l;
    };
    std::ranges::stable_sort(pool, [&](std::size_t a, std::size_t b) { return rank(a) < rank(b); });
  }

  std::vector<const AttributedGraph*> originals, views;
  for (std::size_t i : pool) {
    originals.push_back(&corpus.view(0, i));
    views.push_back(&corpus.view(options.view_order, i));
  }
  const Matrix z = project(stack, graph_representations(stack, 0, originals));
  const Matrix zt = project(stack, graph_representations(stack, options.view_order, views));
  Tape tape;
  SimilarityMatrix out;
  out.graph_ids = pool;
  for (std::size_t i : pool) out.labels.push_back(dataset.labels[i]);
  out.values = autograd::cosine_similarity(tape.constant(z), tape.constant(zt)).value();
  return out;
}

void write_similarity_csv(std::ostream& out, const SimilarityMatrix& matrix) {
  out << "graph_id";
  for (std::size_t id : matrix.graph_ids) out << ',' << id;
  out << '\n';
  for (std::size_t r = 0; r < matrix.values.rows(); ++r) {
    out << matrix.graph_ids[r];
    for (double v : matrix.values.row(r)) out << ',' << format_double(v);
    out << '\n';
  }
}

}  // namespace sgncl
