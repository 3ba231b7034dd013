#pragma once

// Dense f64 tensors with define-by-run reverse-mode differentiation.
//
// A Tensor is a shared handle: copies alias the same storage and tape node.
// Every op returns a fresh node; when any input requires a gradient the node
// records its parents and a backward closure. The tape is rebuilt on each
// forward pass and consumed by backward().

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace scopealign {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

namespace detail {
struct Node;
}

class Tensor {
 public:
  /// Constant scalar zero.
  Tensor();

  static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                       bool requires_grad = false);

  const Shape& shape() const noexcept;
  std::size_t rank() const noexcept { return shape().size(); }
  std::size_t numel() const noexcept;
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const noexcept;
  /// In-place access for parameter updates; only valid on leaves.
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t i) const;
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const noexcept;
  bool has_grad() const noexcept;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();
  void clear_grad();

  bool is_leaf() const noexcept;
  Tensor detach() const;
  bool same_node(const Tensor& other) const noexcept { return node_ == other.node_; }

 private:
  friend struct TensorAccess;
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
/// x[n×m] + bias broadcast over rows; bias has m elements.
Tensor add_row_bias(const Tensor& x, const Tensor& bias);
Tensor tanh(const Tensor& x);
Tensor sum(const Tensor& x);
/// Column-wise mean over rows: [n×d] -> [1×d].
Tensor mean_rows(const Tensor& x);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor select_rows(const Tensor& x, std::span<const std::size_t> rows);

inline constexpr double kNormEpsilon = 1e-12;

/// Rows scaled to unit Euclidean norm. Throws DegenerateRow below kNormEpsilon.
Tensor l2_normalize_rows(const Tensor& x);
/// Row-wise softmax, stabilised by subtracting the row maximum.
Tensor softmax_rows(const Tensor& x);
/// -(1/n) sum_i sum_j targets[i,j] * log softmax(scores[i,:] / temperature)[j].
/// `targets` is treated as a constant; its rows must be non-negative and sum to one.
Tensor soft_cross_entropy(const Tensor& scores, const Tensor& targets, double temperature);

/// Accumulates d(loss)/d(x) into every requires_grad leaf reachable from `loss`.
/// A loss can be differentiated once; a second call is a tape error.
void backward(const Tensor& loss);

}  // namespace scopealign
