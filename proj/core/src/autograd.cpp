#include "sgncl/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sgncl/error.hpp"

namespace sgncl::autograd {

namespace {

[[noreturn]] void shape_mismatch(std::string_view op, const Matrix& a, const Matrix& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
                   b.shape_string());
}

// C = A * B
Matrix mm(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  const std::size_t k_dim = a.cols();
  const std::size_t m = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* ci = c.data().data() + i * m;
    for (std::size_t k = 0; k < k_dim; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* bk = b.data().data() + k * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

// C = A^T * B
Matrix mm_tn(const Matrix& a, const Matrix& b) {
  Matrix c(a.cols(), b.cols());
  const std::size_t m = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* bk = b.data().data() + k * m;
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      double* ci = c.data().data() + i * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

// C = A * B^T
Matrix mm_nt(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.rows());
  const std::size_t k_dim = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.data().data() + i * k_dim;
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* bj = b.data().data() + j * k_dim;
      double s = 0.0;
      for (std::size_t k = 0; k < k_dim; ++k) s += ai[k] * bj[k];
      c(i, j) = s;
    }
  }
  return c;
}

Matrix transposed(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

template <typename F>
Matrix map(const Matrix& a, F f) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = f(a.data()[i]);
  return out;
}

template <typename F>
Matrix zip(const Matrix& a, const Matrix& b, F f) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = f(a.data()[i], b.data()[i]);
  return out;
}

void same_shape(std::string_view op, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_mismatch(op, a.value(), b.value());
}

void check_segments(std::string_view op, const Tensor& a, std::span<const std::size_t> segment,
                    std::size_t count) {
  if (segment.size() != a.rows()) {
    throw ShapeError(std::string(op) + ": " + std::to_string(segment.size()) +
                     " segment ids for input " + a.value().shape_string());
  }
  for (std::size_t s : segment) {
    if (s >= count) throw ShapeError(std::string(op) + ": segment id out of range");
  }
}

// Shared by max_rows/segment_max: for each (segment, column) the first row
// attaining the maximum, or npos when the segment is empty.
constexpr std::size_t kNone = static_cast<std::size_t>(-1);

}  // namespace

// ---- Parameter / Tensor / Tape ------------------------------------------

const Matrix& Tensor::value() const { return tape_->nodes_[id_].value; }
const Matrix& Tensor::grad() const { return tape_->nodes_[id_].grad; }
bool Tensor::requires_grad() const { return tape_->nodes_[id_].requires_grad; }

double Tensor::item() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw ShapeError("item() on non-scalar " + v.shape_string());
  return v(0, 0);
}

Tensor Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::constant(Matrix value) {
  if (!value.all_finite()) throw NumericError("constant holds a non-finite value");
  return push({std::move(value), {}, false, nullptr});
}

Tensor Tape::variable(Matrix value) {
  if (!value.all_finite()) throw NumericError("variable holds a non-finite value");
  return push({std::move(value), {}, true, nullptr});
}

Tensor Tape::parameter(const Parameter& param) {
  if (auto it = params_.find(&param); it != params_.end()) return Tensor(this, it->second);
  if (!param.value.all_finite()) throw NumericError("parameter '" + param.name + "' is not finite");
  Tensor t = push({param.value, {}, true, nullptr});
  params_.emplace(&param, t.id_);
  return t;
}

Matrix Tape::gradient(const Parameter& param) const {
  if (auto it = params_.find(&param); it != params_.end()) {
    const Node& node = nodes_[it->second];
    if (!node.grad.empty()) return node.grad;
  }
  return Matrix(param.value.rows(), param.value.cols());
}

Tensor Tape::record(std::string_view op, Matrix value, std::initializer_list<Tensor> parents,
                    BackwardFn fn) {
  return record(op, std::move(value), std::span<const Tensor>(parents.begin(), parents.size()),
                std::move(fn));
}

Tensor Tape::record(std::string_view op, Matrix value, std::span<const Tensor> parents,
                    BackwardFn fn) {
  bool needs_grad = false;
  for (const Tensor& p : parents) {
    if (&p.tape() != this) throw NumericError(std::string(op) + ": operand from another tape");
    needs_grad = needs_grad || p.requires_grad();
  }
  if (!value.all_finite()) throw NumericError(std::string(op) + " produced a non-finite value");
  return push({std::move(value), {}, needs_grad, needs_grad ? std::move(fn) : nullptr});
}

void Tape::accumulate(const Tensor& t, const Matrix& g) {
  Node& node = nodes_[t.id_];
  if (!node.requires_grad) return;
  if (g.rows() != node.value.rows() || g.cols() != node.value.cols()) {
    shape_mismatch("accumulate", node.value, g);
  }
  if (node.grad.empty() && !node.value.empty()) {
    node.grad = g;
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i) node.grad.data()[i] += g.data()[i];
}

void Tape::backward(const Tensor& loss) {
  if (&loss.tape() != this) throw NumericError("backward: loss belongs to another tape");
  if (backward_done_) throw NumericError("backward called twice on the same tape");
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw ShapeError("backward: loss must be scalar, got " + loss.value().shape_string());
  }
  backward_done_ = true;
  if (!nodes_[loss.id_].requires_grad) return;
  nodes_[loss.id_].grad = Matrix(1, 1, 1.0);
  for (std::size_t id = loss.id_ + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.requires_grad || node.grad.empty()) continue;
    if (node.backward) node.backward(*this, node.value, node.grad);
  }
}

// ---- ops ----------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) shape_mismatch("matmul", a.value(), b.value());
  return a.tape().record("matmul", mm(a.value(), b.value()), {a, b},
                         [a, b](Tape& t, const Matrix&, const Matrix& g) {
                           if (a.requires_grad()) t.accumulate(a, mm_nt(g, b.value()));
                           if (b.requires_grad()) t.accumulate(b, mm_tn(a.value(), g));
                         });
}

Tensor transpose(const Tensor& a) {
  return a.tape().record("transpose", transposed(a.value()), {a},
                         [a](Tape& t, const Matrix&, const Matrix& g) {
                           t.accumulate(a, transposed(g));
                         });
}

Tensor add(const Tensor& a, const Tensor& b) {
  same_shape("add", a, b);
  return a.tape().record("add", zip(a.value(), b.value(), std::plus<>()), {a, b},
                         [a, b](Tape& t, const Matrix&, const Matrix& g) {
                           t.accumulate(a, g);
                           t.accumulate(b, g);
                         });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) shape_mismatch("add_row", a.value(), row.value());
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += row.value()(0, j);
  }
  return a.tape().record("add_row", std::move(out), {a, row},
                         [a, row](Tape& t, const Matrix&, const Matrix& g) {
                           t.accumulate(a, g);
                           if (!row.requires_grad()) return;
                           Matrix gr(1, g.cols());
                           for (std::size_t i = 0; i < g.rows(); ++i) {
                             for (std::size_t j = 0; j < g.cols(); ++j) gr(0, j) += g(i, j);
                           }
                           t.accumulate(row, gr);
                         });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  same_shape("mul", a, b);
  return a.tape().record("mul", zip(a.value(), b.value(), std::multiplies<>()), {a, b},
                         [a, b](Tape& t, const Matrix&, const Matrix& g) {
                           if (a.requires_grad()) t.accumulate(a, zip(g, b.value(), std::multiplies<>()));
                           if (b.requires_grad()) t.accumulate(b, zip(g, a.value(), std::multiplies<>()));
                         });
}

Tensor div(const Tensor& a, const Tensor& b) {
  same_shape("div", a, b);
  return a.tape().record(
      "div", zip(a.value(), b.value(), std::divides<>()), {a, b},
      [a, b](Tape& t, const Matrix& out, const Matrix& g) {
        if (a.requires_grad()) t.accumulate(a, zip(g, b.value(), std::divides<>()));
        if (b.requires_grad()) {
          Matrix gb(g.rows(), g.cols());
          for (std::size_t i = 0; i < g.size(); ++i) {
            gb.data()[i] = -g.data()[i] * out.data()[i] / b.value().data()[i];
          }
          t.accumulate(b, gb);
        }
      });
}

Tensor scale(const Tensor& a, double s) {
  return a.tape().record("scale", map(a.value(), [s](double v) { return v * s; }), {a},
                         [a, s](Tape& t, const Matrix&, const Matrix& g) {
                           t.accumulate(a, map(g, [s](double v) { return v * s; }));
                         });
}

Tensor add_scalar(const Tensor& a, double s) {
  return a.tape().record("add_scalar", map(a.value(), [s](double v) { return v + s; }), {a},
                         [a](Tape& t, const Matrix&, const Matrix& g) { t.accumulate(a, g); });
}

Tensor relu(const Tensor& a) {
  return a.tape().record("relu", map(a.value(), [](double v) { return v > 0.0 ? v : 0.0; }), {a},
                         [a](Tape& t, const Matrix&, const Matrix& g) {
                           t.accumulate(a, zip(g, a.value(), [](double gv, double av) {
                                          return av > 0.0 ? gv : 0.0;
                                        }));
                         });
}

Tensor exp(const Tensor& a) {
  return a.tape().record("exp", map(a.value(), [](double v) { return std::exp(v); }), {a},
                         [a](Tape& t, const Matrix& out, const Matrix& g) {
                           t.accumulate(a, zip(g, out, std::multiplies<>()));
                         });
}

Tensor log(const Tensor& a) {
  return a.tape().record("log", map(a.value(), [](double v) { return std::log(v); }), {a},
                         [a](Tape& t, const Matrix&, const Matrix& g) {
                           t.accumulate(a, zip(g, a.value(), std::divides<>()));
                         });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const Tensor& p : parts) {
    if (p.cols() != cols) shape_mismatch("concat_rows", parts.front().value(), p.value());
    rows += p.rows();
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const Tensor& p : parts) data.insert(data.end(), p.value().data().begin(), p.value().data().end());
  std::vector<Tensor> keep(parts.begin(), parts.end());
  return parts.front().tape().record(
      "concat_rows", Matrix(rows, cols, std::move(data)), parts,
      [keep](Tape& t, const Matrix&, const Matrix& g) {
        std::size_t offset = 0;
        for (const Tensor& p : keep) {
          if (p.requires_grad()) {
            const auto begin = g.data().begin() + static_cast<std::ptrdiff_t>(offset * g.cols());
            const auto end = begin + static_cast<std::ptrdiff_t>(p.rows() * g.cols());
            t.accumulate(p, Matrix(p.rows(), g.cols(), std::vector<double>(begin, end)));
          }
          offset += p.rows();
        }
      });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const Tensor& p : parts) {
    if (p.rows() != rows) shape_mismatch("concat_cols", parts.front().value(), p.value());
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    for (std::size_t i = 0; i < rows; ++i) {
      std::ranges::copy(p.value().row(i), out.row(i).begin() + static_cast<std::ptrdiff_t>(offset));
    }
    offset += p.cols();
  }
  std::vector<Tensor> keep(parts.begin(), parts.end());
  return parts.front().tape().record(
      "concat_cols", std::move(out), parts, [keep](Tape& t, const Matrix&, const Matrix& g) {
        std::size_t off = 0;
        for (const Tensor& p : keep) {
          if (p.requires_grad()) {
            Matrix gp(g.rows(), p.cols());
            for (std::size_t i = 0; i < g.rows(); ++i) {
              for (std::size_t j = 0; j < p.cols(); ++j) gp(i, j) = g(i, off + j);
            }
            t.accumulate(p, gp);
          }
          off += p.cols();
        }
      });
}

Tensor segment_sum(const Tensor& a, std::span<const std::size_t> segment, std::size_t count) {
  check_segments("segment_sum", a, segment, count);
  Matrix out(count, a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(segment[i]);
    auto src = a.value().row(i);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
  std::vector<std::size_t> seg(segment.begin(), segment.end());
  return a.tape().record("segment_sum", std::move(out), {a},
                         [a, seg](Tape& t, const Matrix&, const Matrix& g) {
                           Matrix ga(seg.size(), g.cols());
                           for (std::size_t i = 0; i < seg.size(); ++i) {
                             std::ranges::copy(g.row(seg[i]), ga.row(i).begin());
                           }
                           t.accumulate(a, ga);
                         });
}

Tensor segment_mean(const Tensor& a, std::span<const std::size_t> segment, std::size_t count) {
  check_segments("segment_mean", a, segment, count);
  std::vector<double> n(count, 0.0);
  for (std::size_t s : segment) n[s] += 1.0;
  Matrix out(count, a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(segment[i]);
    auto src = a.value().row(i);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
  for (std::size_t s = 0; s < count; ++s) {
    if (n[s] == 0.0) continue;
    for (double& v : out.row(s)) v /= n[s];
  }
  std::vector<std::size_t> seg(segment.begin(), segment.end());
  return a.tape().record("segment_mean", std::move(out), {a},
                         [a, seg, n](Tape& t, const Matrix&, const Matrix& g) {
                           Matrix ga(seg.size(), g.cols());
                           for (std::size_t i = 0; i < seg.size(); ++i) {
                             for (std::size_t j = 0; j < g.cols(); ++j) ga(i, j) = g(seg[i], j) / n[seg[i]];
                           }
                           t.accumulate(a, ga);
                         });
}

Tensor segment_max(const Tensor& a, std::span<const std::size_t> segment, std::size_t count) {
  check_segments("segment_max", a, segment, count);
  const std::size_t cols = a.cols();
  std::vector<std::size_t> arg(count * cols, kNone);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      std::size_t& best = arg[segment[i] * cols + j];
      if (best == kNone || a.value()(i, j) > a.value()(best, j)) best = i;
    }
  }
  Matrix out(count, cols);
  for (std::size_t s = 0; s < count; ++s) {
    for (std::size_t j = 0; j < cols; ++j) {
      const std::size_t best = arg[s * cols + j];
      if (best != kNone) out(s, j) = a.value()(best, j);
    }
  }
  return a.tape().record("segment_max", std::move(out), {a},
                         [a, arg, cols](Tape& t, const Matrix&, const Matrix& g) {
                           Matrix ga(a.rows(), cols);
                           for (std::size_t s = 0; s < g.rows(); ++s) {
                             for (std::size_t j = 0; j < cols; ++j) {
                               const std::size_t best = arg[s * cols + j];
                               if (best != kNone) ga(best, j) += g(s, j);
                             }
                           }
                           t.accumulate(a, ga);
                         });
}

Tensor sum_rows(const Tensor& a) {
  const std::vector<std::size_t> seg(a.rows(), 0);
  return segment_sum(a, seg, 1);
}

Tensor mean_rows(const Tensor& a) {
  const std::vector<std::size_t> seg(a.rows(), 0);
  return segment_mean(a, seg, 1);
}

Tensor max_rows(const Tensor& a) {
  const std::vector<std::size_t> seg(a.rows(), 0);
  return segment_max(a, seg, 1);
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index) {
  Matrix out(index.size(), a.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= a.rows()) throw ShapeError("gather_rows: index out of range for " + a.value().shape_string());
    std::ranges::copy(a.value().row(index[i]), out.row(i).begin());
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  const std::size_t n = a.rows();
  return a.tape().record("gather_rows", std::move(out), {a},
                         [a, idx, n](Tape& t, const Matrix&, const Matrix& g) {
                           Matrix ga(n, g.cols());
                           for (std::size_t i = 0; i < idx.size(); ++i) {
                             auto dst = ga.row(idx[i]);
                             auto src = g.row(i);
                             for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
                           }
                           t.accumulate(a, ga);
                         });
}

Tensor scatter_add_rows(const Tensor& a, std::span<const std::size_t> index, std::size_t count) {
  if (index.size() != a.rows()) {
    throw ShapeError("scatter_add_rows: " + std::to_string(index.size()) + " indices for " +
                     a.value().shape_string());
  }
  check_segments("scatter_add_rows", a, index, count);
  Matrix out(count, a.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    auto dst = out.row(index[i]);
    auto src = a.value().row(i);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return a.tape().record("scatter_add_rows", std::move(out), {a},
                         [a, idx](Tape& t, const Matrix&, const Matrix& g) {
                           Matrix ga(idx.size(), g.cols());
                           for (std::size_t i = 0; i < idx.size(); ++i) {
                             std::ranges::copy(g.row(idx[i]), ga.row(i).begin());
                           }
                           t.accumulate(a, ga);
                         });
}

Tensor l2_normalize_rows(const Tensor& a, double floor) {
  const Matrix& x = a.value();
  std::vector<double> norms(x.rows(), 0.0);
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (double v : x.row(i)) s += v * v;
    norms[i] = std::sqrt(s);
    const double denom = norms[i] + floor;
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(i, j) / denom;
  }
  return a.tape().record(
      "l2_normalize_rows", std::move(out), {a},
      [a, norms, floor](Tape& t, const Matrix&, const Matrix& g) {
        const Matrix& x = a.value();
        Matrix ga(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i) {
          const double denom = norms[i] + floor;
          double dot = 0.0;
          for (std::size_t j = 0; j < x.cols(); ++j) dot += x(i, j) * g(i, j);
          // d/dx [x / (|x| + f)] = I/(|x|+f) - x x^T / (|x| (|x|+f)^2); the
          // second term is dropped at x = 0.
          const double coef = norms[i] > 0.0 ? dot / (norms[i] * denom * denom) : 0.0;
          for (std::size_t j = 0; j < x.cols(); ++j) ga(i, j) = g(i, j) / denom - coef * x(i, j);
        }
        t.accumulate(a, ga);
      });
}

namespace {

// Rows divided by max(|row|, floor), exact for rows longer than the floor.
Tensor unit_rows(const Tensor& a) {
  const Matrix& x = a.value();
  std::vector<double> denoms(x.rows(), 0.0);
  std::vector<bool> clamped(x.rows(), false);
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (double v : x.row(i)) s += v * v;
    const double norm = std::sqrt(s);
    clamped[i] = norm < kNormFloor;
    denoms[i] = clamped[i] ? kNormFloor : norm;
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(i, j) / denoms[i];
  }
  return a.tape().record(
      "unit_rows", std::move(out), {a},
      [a, denoms, clamped](Tape& t, const Matrix& y, const Matrix& g) {
        Matrix ga(y.rows(), y.cols());
        for (std::size_t i = 0; i < y.rows(); ++i) {
          double dot = 0.0;
          if (!clamped[i]) {
            for (std::size_t j = 0; j < y.cols(); ++j) dot += y(i, j) * g(i, j);
          }
          for (std::size_t j = 0; j < y.cols(); ++j) ga(i, j) = (g(i, j) - dot * y(i, j)) / denoms[i];
        }
        t.accumulate(a, ga);
      });
}

}  // namespace

Tensor cosine_similarity(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) shape_mismatch("cosine_similarity", a.value(), b.value());
  return matmul(unit_rows(a), transpose(unit_rows(b)));
}

Tensor diagonal(const Tensor& a) {
  if (a.rows() != a.cols()) throw ShapeError("diagonal: non-square " + a.value().shape_string());
  Matrix out(a.rows(), 1);
  for (std::size_t i = 0; i < a.rows(); ++i) out(i, 0) = a.value()(i, i);
  return a.tape().record("diagonal", std::move(out), {a},
                         [a](Tape& t, const Matrix&, const Matrix& g) {
                           Matrix ga(a.rows(), a.cols());
                           for (std::size_t i = 0; i < a.rows(); ++i) ga(i, i) = g(i, 0);
                           t.accumulate(a, ga);
                         });
}

Tensor row_sums(const Tensor& a) {
  Matrix out(a.rows(), 1);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (double v : a.value().row(i)) out(i, 0) += v;
  }
  return a.tape().record("row_sums", std::move(out), {a},
                         [a](Tape& t, const Matrix&, const Matrix& g) {
                           Matrix ga(a.rows(), a.cols());
                           for (std::size_t i = 0; i < a.rows(); ++i) {
                             for (double& v : ga.row(i)) v = g(i, 0);
                           }
                           t.accumulate(a, ga);
                         });
}

Tensor off_diagonal_row_sums(const Tensor& a) {
  if (a.rows() != a.cols()) {
    throw ShapeError("off_diagonal_row_sums: non-square " + a.value().shape_string());
  }
  Matrix out(a.rows(), 1);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (j != i) out(i, 0) += a.value()(i, j);
    }
  }
  return a.tape().record("off_diagonal_row_sums", std::move(out), {a},
                         [a](Tape& t, const Matrix&, const Matrix& g) {
                           Matrix ga(a.rows(), a.cols());
                           for (std::size_t i = 0; i < a.rows(); ++i) {
                             for (std::size_t j = 0; j < a.cols(); ++j) {
                               if (j != i) ga(i, j) = g(i, 0);
                             }
                           }
                           t.accumulate(a, ga);
                         });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.tape().record("sum", Matrix(1, 1, s), {a}, [a](Tape& t, const Matrix&, const Matrix& g) {
    t.accumulate(a, Matrix(a.rows(), a.cols(), g(0, 0)));
  });
}

Tensor mean(const Tensor& a) {
  if (a.value().empty()) throw ShapeError("mean of an empty tensor");
  const auto n = static_cast<double>(a.value().size());
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.tape().record("mean", Matrix(1, 1, s / n), {a},
                         [a, n](Tape& t, const Matrix&, const Matrix& g) {
                           t.accumulate(a, Matrix(a.rows(), a.cols(), g(0, 0) / n));
                         });
}

// ---- grad_check ---------------------------------------------------------

GradCheckResult grad_check(const LossFn& loss, std::span<Parameter* const> params,
                           double epsilon) {
  if (!(epsilon > 0.0)) throw NumericError("grad_check: epsilon must be positive");
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  {
    Tape tape;
    Tensor l = loss(tape);
    tape.backward(l);
    for (const Parameter* p : params) analytic.push_back(tape.gradient(*p));
  }
  auto evaluate = [&] {
    Tape tape;
    return loss(tape).item();
  };

  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& values = params[pi]->value.data();
    for (std::size_t c = 0; c < values.size(); ++c) {
      const double original = values[c];
      values[c] = original + epsilon;
      const double hi = values[c];
      const double up = evaluate();
      values[c] = original - epsilon;
      const double lo = values[c];
      const double down = evaluate();
      values[c] = original;
      const double numeric = (up - down) / (hi - lo);
      const double a = analytic[pi].data()[c];
      const double rel = std::abs(a - numeric) / (std::max(std::abs(a), std::abs(numeric)) + 1e-8);
      ++result.coords_checked;
      if (rel > result.max_rel_error || result.coords_checked == 1) {
        result.max_rel_error = rel;
        result.worst_param = pi;
        result.worst_coord = c;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace sgncl::autograd
