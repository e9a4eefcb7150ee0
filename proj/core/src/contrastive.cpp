#include "sgncl/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sgncl/csv.hpp"
#include "sgncl/error.hpp"
#include "sgncl/log.hpp"
#include "sgncl/parallel.hpp"
#include "sgncl/rng.hpp"

namespace sgncl {

namespace ag = autograd;

std::string to_string(OrderMode mode) {
  switch (mode) {
    case OrderMode::sgn1: return "sgn1";
    case OrderMode::sgn2: return "sgn2";
    case OrderMode::fused: return "fused";
  }
  return "sgn1";
}

std::string to_string(DenominatorMode mode) {
  return mode == DenominatorMode::negatives_only ? "negatives_only" : "include_positive";
}

OrderMode parse_order_mode(const std::string& text) {
  if (text == "sgn1") return OrderMode::sgn1;
  if (text == "sgn2") return OrderMode::sgn2;
  if (text == "fused") return OrderMode::fused;
  throw DataError("unknown mode '" + text + "' (expected sgn1, sgn2 or fused)");
}

DenominatorMode parse_denominator_mode(const std::string& text) {
  if (text == "negatives_only") return DenominatorMode::negatives_only;
  if (text == "include_positive") return DenominatorMode::include_positive;
  throw DataError("unknown denominator mode '" + text + "'");
}

void TrainConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DataError("tau must be positive");
  if (!(q >= 0.0 && q <= 1.0)) throw DataError("q must lie in [0, 1]");
  if (batch < 2) throw DataError("batch size must be at least 2");
  if (hidden == 0 || layers == 0) throw DataError("hidden width and layer count must be positive");
  if (!(lr > 0.0)) throw DataError("learning rate must be positive");
  if (guard.max_nodes == 0 || guard.max_edges == 0) throw DataError("size guard limits must be positive");
}

std::vector<int> TrainConfig::view_orders() const {
  switch (order_mode) {
    case OrderMode::sgn1: return {1};
    case OrderMode::sgn2: return {2};
    case OrderMode::fused: return {1, 2};
  }
  return {1};
}

std::string TrainConfig::describe() const {
  std::ostringstream out;
  out << "mode=" << to_string(order_mode) << '\n'
      << "tau=" << format_double(tau) << '\n'
      << "q=" << format_double(q) << '\n'
      << "epochs=" << epochs << '\n'
      << "batch=" << batch << '\n'
      << "hidden=" << hidden << '\n'
      << "layers=" << layers << '\n'
      << "lr=" << format_double(lr) << '\n'
      << "seed=" << seed << '\n'
      << "max_nodes=" << guard.max_nodes << '\n'
      << "max_edges=" << guard.max_edges << '\n'
      << "pool=" << to_string(pool) << '\n'
      << "denominator=" << to_string(denominator) << '\n';
  return out.str();
}

// ---- losses ------------------------------------------------------------------

namespace {

void check_loss_inputs(const Tensor& z, const Tensor& z_tilde, double tau) {
  if (z.rows() != z_tilde.rows() || z.cols() != z_tilde.cols()) {
    throw ShapeError("contrastive loss: view shapes " + z.value().shape_string() + " and " +
                     z_tilde.value().shape_string() + " differ");
  }
  if (z.rows() < 2) throw DataError("contrastive loss needs at least 2 graphs per batch (no negatives)");
  if (!(tau > 0.0)) throw DataError("temperature tau must be positive");
}

Tensor negative_mean_log(const Tensor& ratios) { return ag::scale(ag::mean(ag::log(ratios)), -1.0); }

}  // namespace

Tensor similarity_ratios(const Tensor& z, const Tensor& z_tilde, double tau, DenominatorMode mode) {
  check_loss_inputs(z, z_tilde, tau);
  const Tensor e = ag::exp(ag::scale(ag::cosine_similarity(z, z_tilde), 1.0 / tau));
  const Tensor denom = mode == DenominatorMode::negatives_only ? ag::off_diagonal_row_sums(e)
                                                               : ag::row_sums(e);
  return ag::div(ag::diagonal(e), denom);
}

Tensor nt_xent(const Tensor& z, const Tensor& z_tilde, double tau, DenominatorMode mode) {
  return negative_mean_log(similarity_ratios(z, z_tilde, tau, mode));
}

Tensor fused_loss(const Tensor& z, const Tensor& z1, const Tensor& z2, double tau, double q,
                  DenominatorMode mode) {
  if (!(q >= 0.0 && q <= 1.0)) throw DataError("q must lie in [0, 1]");
  const Tensor s1 = similarity_ratios(z, z1, tau, mode);
  const Tensor s2 = similarity_ratios(z, z2, tau, mode);
  return negative_mean_log(ag::add(ag::scale(s1, q), ag::scale(s2, 1.0 - q)));
}

double nt_xent(const Matrix& z, const Matrix& z_tilde, double tau, DenominatorMode mode) {
  Tape tape;
  return nt_xent(tape.constant(z), tape.constant(z_tilde), tau, mode).item();
}

double fused_loss(const Matrix& z, const Matrix& z1, const Matrix& z2, double tau, double q,
                  DenominatorMode mode) {
  Tape tape;
  return fused_loss(tape.constant(z), tape.constant(z1), tape.constant(z2), tau, q, mode).item();
}

// ---- Adam --------------------------------------------------------------------

void Adam::step(const std::vector<Parameter*>& params, const std::vector<Matrix>& grads) {
  if (grads.size() != params.size()) throw ShapeError("Adam: gradient count != parameter count");
  if (m_.empty()) {
    for (const Parameter* p : params) {
      m_.emplace_back(p->value.rows(), p->value.cols());
      v_.emplace_back(p->value.rows(), p->value.cols());
    }
  }
  if (m_.size() != params.size()) throw ShapeError("Adam: parameter list changed between steps");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& value = params[p]->value.data();
    const auto& g = grads[p].data();
    auto& m = m_[p].data();
    auto& v = v_[p].data();
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      value[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
}

// ---- augmentation cache --------------------------------------------------------

const AttributedGraph& AugmentedCorpus::view(int order, std::size_t graph) const {
  if (order > max_order || reached.at(graph) < order) {
    throw DataError("no order-" + std::to_string(order) + " view for graph " + std::to_string(graph));
  }
  return views[static_cast<std::size_t>(order)][graph];
}

std::vector<std::size_t> AugmentedCorpus::usable(int order) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < reached.size(); ++i) {
    if (reached[i] >= order) out.push_back(i);
  }
  return out;
}

AugmentedCorpus augment_corpus(const GraphDataset& dataset, int max_order, const SizeGuard& guard) {
  if (max_order < 0 || max_order > 2) throw DataError("augment_corpus: order must be 0, 1 or 2");
  AugmentedCorpus corpus;
  corpus.max_order = max_order;
  const std::size_t n = dataset.size();
  corpus.views.assign(static_cast<std::size_t>(max_order) + 1, std::vector<AttributedGraph>(n));
  corpus.views[0] = dataset.graphs;
  corpus.reached.assign(n, 0);
  parallel_for(n, [&](std::size_t i) {
    const SgnView original = dataset.view(i);
    if (original.order != 0) throw DataError("augment_corpus expects original (order-0) graphs");
    for (int o = 1; o <= max_order; ++o) {
      try {
        auto chain = sgn_chain(original, o, guard);
        corpus.views[static_cast<std::size_t>(o)][i] = std::move(chain.back().graph);
        corpus.reached[i] = o;
      } catch (const GuardExceeded& e) {
        log::warn(e.what());
        break;
      }
    }
  });
  return corpus;
}

// ---- training ------------------------------------------------------------------

namespace {

struct BatchOutcome {
  double loss = 0.0;
  std::vector<double> pos_sim;  // per row, already mixed by q in fused mode
};

// Forward (and optionally backward + step) on one batch of graph indices.
BatchOutcome run_batch(const EncoderStack& stack, const AugmentedCorpus& corpus,
                       const TrainConfig& config, std::span<const std::size_t> members,
                       Adam* optimizer, EncoderStack* mutable_stack) {
  Tape tape;
  auto project_order = [&](int order) {
    std::vector<const AttributedGraph*> graphs;
    graphs.reserve(members.size());
    for (std::size_t i : members) graphs.push_back(&corpus.view(order, i));
    const GraphBatch batch = GraphBatch::pack(graphs);
    return project(tape, stack.head(), graph_representations(tape, stack, order, batch));
  };

  const Tensor z = project_order(0);
  BatchOutcome outcome;
  std::vector<Matrix> sims;
  Tensor loss;
  if (config.order_mode == OrderMode::fused) {
    const Tensor z1 = project_order(1);
    const Tensor z2 = project_order(2);
    loss = fused_loss(z, z1, z2, config.tau, config.q, config.denominator);
    sims.push_back(ag::cosine_similarity(z, z1).value());
    sims.push_back(ag::cosine_similarity(z, z2).value());
  } else {
    const int order = config.order_mode == OrderMode::sgn1 ? 1 : 2;
    const Tensor zt = project_order(order);
    loss = nt_xent(z, zt, config.tau, config.denominator);
    sims.push_back(ag::cosine_similarity(z, zt).value());
  }
  outcome.loss = loss.item();
  outcome.pos_sim.resize(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) {
    outcome.pos_sim[i] = sims.size() == 1
                             ? sims[0](i, i)
                             : config.q * sims[0](i, i) + (1.0 - config.q) * sims[1](i, i);
  }
  if (optimizer != nullptr) {
    tape.backward(loss);
    std::vector<Parameter*> params = mutable_stack->parameters();
    std::vector<Matrix> grads;
    grads.reserve(params.size());
    for (const Parameter* p : params) grads.push_back(tape.gradient(*p));
    optimizer->step(params, grads);
  }
  return outcome;
}

std::vector<std::vector<std::size_t>> make_batches(std::vector<std::size_t> order,
                                                   std::size_t batch) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < order.size(); start += batch) {
    const std::size_t end = std::min(order.size(), start + batch);
    if (end - start < 2) {
      if (!out.empty()) out.back().push_back(order[start]);
      continue;
    }
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

}  // namespace

TrainResult train(const GraphDataset& dataset, const TrainConfig& config,
                  const AugmentedCorpus* corpus) {
  config.validate();
  if (dataset.size() == 0) throw DataError("train: dataset is empty");
  const int needed_order = config.order_mode == OrderMode::sgn1 ? 1 : 2;
  std::optional<AugmentedCorpus> local;
  if (corpus == nullptr) {
    local = augment_corpus(dataset, needed_order, config.guard);
    corpus = &*local;
  }
  if (corpus->max_order < needed_order || corpus->reached.size() != dataset.size()) {
    throw DataError("train: augmented corpus does not cover order " + std::to_string(needed_order));
  }
  const std::vector<std::size_t> usable = corpus->usable(needed_order);
  const std::size_t skipped = dataset.size() - usable.size();
  if (usable.size() < 2) {
    throw DataError("train: " + std::to_string(usable.size()) +
                    " usable graph(s) after augmentation; need at least 2");
  }
  if (skipped > 0) log::warn("train: skipped " + std::to_string(skipped) + " graph(s) over the size guard");

  const AttributedGraph& first = dataset.graphs.front();
  std::vector<ViewShape> shapes{shape_at_order(first.node_dim(), first.edge_dim(), 0)};
  for (int o : config.view_orders()) shapes.push_back(shape_at_order(first.node_dim(), first.edge_dim(), o));
  const EncoderConfig enc{config.hidden, config.layers, config.pool};

  TrainResult result;
  result.stack = EncoderStack::create(enc, shapes, config.seed);
  result.skipped_graphs = skipped;
  Adam adam(config.lr);
  Rng batch_rng = Rng::stream(config.seed, "batches");

  auto run_epoch = [&](std::size_t epoch, const std::vector<std::vector<std::size_t>>& batches,
                       bool update) {
    double loss_sum = 0.0;
    double sim_sum = 0.0;
    std::size_t rows = 0;
    for (const auto& members : batches) {
      const BatchOutcome out = run_batch(result.stack, *corpus, config, members,
                                         update ? &adam : nullptr, &result.stack);
      loss_sum += out.loss;
      for (double s : out.pos_sim) sim_sum += s;
      rows += out.pos_sim.size();
    }
    result.history.push_back({epoch, loss_sum / static_cast<double>(batches.size()),
                              sim_sum / static_cast<double>(rows), skipped});
  };

  run_epoch(0, make_batches(usable, config.batch), false);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<std::size_t> order = usable;
    batch_rng.shuffle(std::span(order));
    run_epoch(epoch, make_batches(std::move(order), config.batch), true);
  }
  return result;
}

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,mean_loss,mean_pos_sim,skipped_graphs\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << format_double(r.mean_loss) << ',' << format_double(r.mean_pos_sim)
        << ',' << r.skipped_graphs << '\n';
  }
}

// ---- checkpoints ---------------------------------------------------------------

namespace {

constexpr const char* kCheckpointTag = "sgncl-checkpoint";
constexpr int kCheckpointVersion = 1;

nlohmann::json param_json(const Parameter& p) {
  return {{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}, {"data", p.value.data()}};
}

void read_param(const nlohmann::json& j, Parameter& p) {
  if (j.at("name").get<std::string>() != p.name) {
    throw DataError("checkpoint: expected parameter '" + p.name + "', found '" +
                    j.at("name").get<std::string>() + "'");
  }
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  if (rows != p.value.rows() || cols != p.value.cols()) {
    throw DataError("checkpoint: parameter '" + p.name + "' has shape [" + std::to_string(rows) + "x" +
                    std::to_string(cols) + "], expected " + p.value.shape_string());
  }
  p.value = Matrix(rows, cols, j.at("data").get<std::vector<double>>());
}

nlohmann::json config_json(const TrainConfig& c) {
  return {{"mode", to_string(c.order_mode)}, {"tau", c.tau},       {"q", c.q},
          {"epochs", c.epochs},              {"batch", c.batch},   {"hidden", c.hidden},
          {"layers", c.layers},              {"lr", c.lr},         {"seed", c.seed},
          {"max_nodes", c.guard.max_nodes},  {"max_edges", c.guard.max_edges},
          {"pool", to_string(c.pool)},       {"denominator", to_string(c.denominator)}};
}

TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.order_mode = parse_order_mode(j.at("mode").get<std::string>());
  c.tau = j.at("tau").get<double>();
  c.q = j.at("q").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch = j.at("batch").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.layers = j.at("layers").get<std::size_t>();
  c.lr = j.at("lr").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.guard.max_nodes = j.at("max_nodes").get<std::size_t>();
  c.guard.max_edges = j.at("max_edges").get<std::size_t>();
  c.pool = parse_pooling(j.at("pool").get<std::string>());
  c.denominator = parse_denominator_mode(j.at("denominator").get<std::string>());
  return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const EncoderStack& stack,
                     const TrainConfig& config) {
  nlohmann::json views = nlohmann::json::array();
  for (int o = 0; o <= 2; ++o) {
    if (!stack.has_view(o)) continue;
    const ViewEncoder& v = stack.view(o);
    nlohmann::json params = nlohmann::json::array();
    for (const Parameter* p : stack.view_parameters(o)) params.push_back(param_json(*p));
    views.push_back({{"order", o}, {"node_dim", v.node_dim}, {"edge_dim", v.edge_dim}, {"params", params}});
  }
  nlohmann::json head = nlohmann::json::array();
  for (const Linear* l : {&stack.head().first, &stack.head().second, &stack.head().third}) {
    head.push_back(param_json(l->weight));
    head.push_back(param_json(l->bias));
  }
  const nlohmann::json doc = {{"format", kCheckpointTag},
                              {"version", kCheckpointVersion},
                              {"config", config_json(config)},
                              {"encoder",
                               {{"hidden", stack.config().hidden},
                                {"layers", stack.config().layers},
                                {"pool", to_string(stack.config().pool)},
                                {"views", views},
                                {"head", head}}}};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << doc.dump() << '\n';
  if (!out) throw DataError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  try {
    const nlohmann::json doc = nlohmann::json::parse(in);
    if (doc.at("format").get<std::string>() != kCheckpointTag) throw DataError("not a checkpoint file");
    if (doc.at("version").get<int>() != kCheckpointVersion) throw DataError("unsupported checkpoint version");
    Checkpoint ck;
    ck.config = config_from_json(doc.at("config"));
    const auto& enc = doc.at("encoder");
    const EncoderConfig ec{enc.at("hidden").get<std::size_t>(), enc.at("layers").get<std::size_t>(),
                           parse_pooling(enc.at("pool").get<std::string>())};
    std::vector<ViewShape> shapes;
    for (const auto& v : enc.at("views")) {
      shapes.push_back({v.at("order").get<int>(), v.at("node_dim").get<std::size_t>(),
                        v.at("edge_dim").get<std::size_t>()});
    }
    ck.stack = EncoderStack::create(ec, shapes, 0);
    for (const auto& v : enc.at("views")) {
      const int order = v.at("order").get<int>();
      auto params = ck.stack.view_parameters(order);
      const auto& stored = v.at("params");
      if (stored.size() != params.size()) throw DataError("checkpoint: parameter count mismatch");
      for (std::size_t i = 0; i < params.size(); ++i) read_param(stored[i], const_cast<Parameter&>(*params[i]));
    }
    const auto& head = enc.at("head");
    Linear* layers[] = {&ck.stack.head().first, &ck.stack.head().second, &ck.stack.head().third};
    if (head.size() != 6) throw DataError("checkpoint: projection head must hold 6 tensors");
    for (std::size_t i = 0; i < 3; ++i) {
      read_param(head[2 * i], layers[i]->weight);
      read_param(head[2 * i + 1], layers[i]->bias);
    }
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint " + path.string() + ": " + e.what());
  }
}

void check_compatible(const EncoderStack& stack, const GraphDataset& dataset) {
  if (dataset.size() == 0) return;
  const ViewEncoder& ori = stack.view(0);
  const auto& g = dataset.graphs.front();
  if (g.node_dim() != ori.node_dim || g.edge_dim() != ori.edge_dim) {
    throw DataError("checkpoint expects order-0 widths (d=" + std::to_string(ori.node_dim) +
                    ", r=" + std::to_string(ori.edge_dim) + ") but dataset has (d=" +
                    std::to_string(g.node_dim()) + ", r=" + std::to_string(g.edge_dim()) + ")");
  }
}

}  // namespace sgncl
