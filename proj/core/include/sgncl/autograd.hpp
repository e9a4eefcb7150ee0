#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sgncl/matrix.hpp"

namespace sgncl::autograd {

// A trainable matrix living outside any tape. Forward passes read it; the
// gradient of a backward pass is held by the tape (Tape::gradient).
struct Parameter {
  std::string name;
  Matrix value;

  friend bool operator==(const Parameter&, const Parameter&) = default;
};

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
// lives.
class Tensor {
 public:
  Tensor() = default;

  const Matrix& value() const;
  // Gradient after backward(); an empty matrix if nothing flowed here.
  const Matrix& grad() const;
  bool requires_grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  // Value of a 1x1 tensor.
  double item() const;

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Tensor(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Records operations in creation order, which is a topological order; one
// backward() pass walks it in reverse. A tape belongs to one thread.
class Tape {
 public:
  using BackwardFn =
      std::function<void(Tape&, const Matrix& out_value, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor constant(Matrix value);
  Tensor variable(Matrix value);  // requires_grad leaf not tied to a Parameter
  // Each parameter is recorded once per tape; later calls return the same
  // leaf so its gradient sums every use.
  Tensor parameter(const Parameter& param);

  // Gradient of `param` after backward(); zeros if it never reached the loss.
  Matrix gradient(const Parameter& param) const;

  // Runs reverse accumulation from a 1x1 loss. Throws ShapeError for
  // non-scalar losses and NumericError when called twice on one tape.
  void backward(const Tensor& loss);

  // Appends an op node. `parents` decide requires_grad; `fn` is skipped when
  // no parent needs gradients. Throws NumericError on non-finite output.
  Tensor record(std::string_view op, Matrix value, std::initializer_list<Tensor> parents,
                BackwardFn fn);
  Tensor record(std::string_view op, Matrix value, std::span<const Tensor> parents,
                BackwardFn fn);

  // Adds `g` into the gradient of `t` (no-op when t does not require grad).
  void accumulate(const Tensor& t, const Matrix& g);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  friend class Tensor;

  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Tensor push(Node node);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> params_;
  bool backward_done_ = false;
};

// ---- forward ops -----------------------------------------------------------
// Every op validates shapes (ShapeError naming both operands) and registers
// its gradient rule.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
// a (n x c) plus a 1 x c row broadcast over rows.
Tensor add_row(const Tensor& a, const Tensor& row);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
// Subgradient at 0 is 0.
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);

// Vertical and horizontal stacking.
Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);

// Reductions over rows, yielding 1 x cols. max_rows routes the gradient to
// the first maximal row; an empty input gives zeros.
Tensor sum_rows(const Tensor& a);
Tensor mean_rows(const Tensor& a);
Tensor max_rows(const Tensor& a);

// Per-segment versions: row i belongs to segment[i] < count; output is
// count x cols. Empty segments give zero rows.
Tensor segment_sum(const Tensor& a, std::span<const std::size_t> segment, std::size_t count);
Tensor segment_mean(const Tensor& a, std::span<const std::size_t> segment, std::size_t count);
Tensor segment_max(const Tensor& a, std::span<const std::size_t> segment, std::size_t count);

// out[i] = a[index[i]].
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index);
// out[index[i]] += a[i], out has `count` rows.
Tensor scatter_add_rows(const Tensor& a, std::span<const std::size_t> index, std::size_t count);

// Each row divided by (||row|| + floor).
inline constexpr double kNormFloor = 1e-12;
Tensor l2_normalize_rows(const Tensor& a, double floor = kNormFloor);
// Entry (i, j) = cos(a_i, b_j); rows shorter than kNormFloor are scaled by
// 1 / kNormFloor instead of their norm.
Tensor cosine_similarity(const Tensor& a, const Tensor& b);

// n x n -> n x 1 diagonal.
Tensor diagonal(const Tensor& a);
// Sum across columns, r x c -> r x 1.
Tensor row_sums(const Tensor& a);
// Sum across columns skipping the diagonal entry, n x n -> n x 1.
Tensor off_diagonal_row_sums(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// ---- verification ------------------------------------------------------------

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_coord = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coords_checked = 0;
};

// Builds the loss on the given tape, reading parameters via tape.parameter().
using LossFn = std::function<Tensor(Tape&)>;

// Compares reverse-mode gradients against central differences
// (f(t + eps) - f(t - eps)) / 2eps for every coordinate of every parameter.
// Relative error is |a - n| / (max(|a|, |n|) + 1e-8). Parameter values are
// restored before returning.
GradCheckResult grad_check(const LossFn& loss, std::span<Parameter* const> params,
                           double epsilon = 1e-5);

}  // namespace sgncl::autograd
