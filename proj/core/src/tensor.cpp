#include "scopealign/tensor.hpp"

#include "scopealign/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace scopealign {

namespace detail {
struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;
  bool consumed = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;
};
}  // namespace detail

using detail::Node;

struct TensorAccess {
  static const std::shared_ptr<Node>& node(const Tensor& t) { return t.node_; }
  static Tensor wrap(std::shared_ptr<Node> n) { return Tensor(std::move(n)); }
};

namespace {

std::size_t product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::vector<double>& grad_buffer(Node& n) {
  if (n.grad.empty()) n.grad.assign(n.data.size(), 0.0);
  return n.grad;
}

Node& node_of(const Tensor& t) { return *TensorAccess::node(t); }

// Builds a result node; the tape is only recorded when some input needs it.
Tensor make_result(Shape shape, std::vector<double> data, std::initializer_list<Tensor> inputs,
                   std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  for (const Tensor& in : inputs) n->requires_grad = n->requires_grad || in.requires_grad();
  if (n->requires_grad) {
    for (const Tensor& in : inputs) n->parents.push_back(TensorAccess::node(in));
    n->backward = std::move(backward_fn);
  }
  return TensorAccess::wrap(std::move(n));
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2)
    throw Error(ErrorKind::Rank,
                std::string(op) + " expects a matrix, got shape " + shape_string(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw Error(ErrorKind::Dimension, std::string(op) + ": shapes " + shape_string(a.shape()) +
                                          " and " + shape_string(b.shape()) + " differ");
}

void require_finite(std::span<const double> v, const char* op) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i]))
      throw Error(ErrorKind::NonFinite, std::string(op) + ": element " + std::to_string(i) +
                                            " is not finite");
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// --- Tensor ----------------------------------------------------------------

Tensor::Tensor() : Tensor(Tensor::scalar(0.0)) {}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
  if (product(shape) != data.size())
    throw Error(ErrorKind::Dimension, "shape " + shape_string(shape) + " holds " +
                                          std::to_string(product(shape)) + " elements, got " +
                                          std::to_string(data.size()));
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t count = product(shape);
  return from(std::move(shape), std::vector<double>(count, 0.0), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                      bool requires_grad) {
  return from({rows, cols}, std::move(data), requires_grad);
}

const Shape& Tensor::shape() const noexcept { return node_->shape; }
std::size_t Tensor::numel() const noexcept { return node_->data.size(); }

std::size_t Tensor::rows() const {
  require_rank2(*this, "rows()");
  return node_->shape[0];
}

std::size_t Tensor::cols() const {
  require_rank2(*this, "cols()");
  return node_->shape[1];
}

std::span<const double> Tensor::data() const noexcept { return node_->data; }

std::span<double> Tensor::mutable_data() {
  if (!is_leaf()) throw Error(ErrorKind::Tape, "in-place write to a non-leaf tensor");
  return node_->data;
}

double Tensor::item() const {
  if (numel() != 1)
    throw Error(ErrorKind::Rank, "item() on tensor of shape " + shape_string(shape()));
  return node_->data[0];
}

double Tensor::at(std::size_t i) const { return node_->data.at(i); }

double Tensor::at(std::size_t r, std::size_t c) const {
  return node_->data.at(r * cols() + c);
}

bool Tensor::requires_grad() const noexcept { return node_->requires_grad; }
bool Tensor::has_grad() const noexcept { return !node_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!has_grad()) throw Error(ErrorKind::Tape, "tensor has no gradient");
  return node_->grad;
}

std::span<double> Tensor::mutable_grad() { return grad_buffer(*node_); }

void Tensor::zero_grad() {
  if (has_grad()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::clear_grad() { node_->grad.clear(); }

bool Tensor::is_leaf() const noexcept { return node_->parents.empty(); }

Tensor Tensor::detach() const { return from(node_->shape, node_->data, false); }

// --- ops -------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k)
    throw Error(ErrorKind::Dimension, "matmul: inner dimensions of " + shape_string(a.shape()) +
                                          " and " + shape_string(b.shape()) + " disagree");
  std::vector<double> out(m * n, 0.0);
  const auto A = a.data();
  const auto B = b.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * B[p * n + j];
    }
  return make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    Node& na = *self.parents[0];
    Node& nb = *self.parents[1];
    const auto& G = self.grad;
    if (na.requires_grad) {
      auto& ga = grad_buffer(na);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += G[i * n + j] * nb.data[p * n + j];
          ga[i * k + p] += acc;
        }
    }
    if (nb.requires_grad) {
      auto& gb = grad_buffer(nb);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = na.data[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * G[i * n + j];
        }
    }
  });
}

Tensor transpose(const Tensor& x) {
  require_rank2(x, "transpose");
  const std::size_t r = x.rows(), c = x.cols();
  std::vector<double> out(r * c);
  const auto X = x.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = X[i * c + j];
  return make_result({c, r}, std::move(out), {x}, [r, c](Node& self) {
    auto& gx = grad_buffer(*self.parents[0]);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += self.grad[j * r + i];
  });
}

namespace {
template <class F, class DA, class DB>
Tensor elementwise(const Tensor& a, const Tensor& b, const char* op, F f, DA da, DB db) {
  require_same_shape(a, b, op);
  const auto A = a.data();
  const auto B = b.data();
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(A[i], B[i]);
  return make_result(a.shape(), std::move(out), {a, b}, [da, db](Node& self) {
    Node& na = *self.parents[0];
    Node& nb = *self.parents[1];
    if (na.requires_grad) {
      auto& g = grad_buffer(na);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * da(na.data[i], nb.data[i]);
    }
    if (nb.requires_grad) {
      auto& g = grad_buffer(nb);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * db(na.data[i], nb.data[i]);
    }
  });
}
}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return elementwise(
      a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return elementwise(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return elementwise(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.data().begin(), x.data().end());
  for (double& v : out) v *= factor;
  return make_result(x.shape(), std::move(out), {x}, [factor](Node& self) {
    auto& g = grad_buffer(*self.parents[0]);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
  });
}

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
  require_rank2(x, "add_row_bias");
  const std::size_t n = x.rows(), m = x.cols();
  if (bias.numel() != m)
    throw Error(ErrorKind::Dimension, "add_row_bias: bias " + shape_string(bias.shape()) +
                                          " does not match " + shape_string(x.shape()));
  std::vector<double> out(x.data().begin(), x.data().end());
  const auto Bv = bias.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] += Bv[j];
  return make_result({n, m}, std::move(out), {x, bias}, [n, m](Node& self) {
    Node& nx = *self.parents[0];
    Node& nb = *self.parents[1];
    if (nx.requires_grad) {
      auto& g = grad_buffer(nx);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (nb.requires_grad) {
      auto& g = grad_buffer(nb);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) g[j] += self.grad[i * m + j];
    }
  });
}

Tensor tanh(const Tensor& x) {
  std::vector<double> out(x.numel());
  const auto X = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(X[i]);
  return make_result(x.shape(), std::move(out), {x}, [](Node& self) {
    auto& g = grad_buffer(*self.parents[0]);
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] += self.grad[i] * (1.0 - self.data[i] * self.data[i]);
  });
}

Tensor sum(const Tensor& x) {
  const auto X = x.data();
  const double total = std::accumulate(X.begin(), X.end(), 0.0);
  return make_result({}, {total}, {x}, [](Node& self) {
    auto& g = grad_buffer(*self.parents[0]);
    for (double& v : g) v += self.grad[0];
  });
}

Tensor mean_rows(const Tensor& x) {
  require_rank2(x, "mean_rows");
  const std::size_t n = x.rows(), d = x.cols();
  if (n == 0) throw Error(ErrorKind::EmptyInput, "mean_rows of an empty matrix");
  std::vector<double> out(d, 0.0);
  const auto X = x.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[j] += X[i * d + j];
  for (double& v : out) v /= static_cast<double>(n);
  return make_result({1, d}, std::move(out), {x}, [n, d](Node& self) {
    auto& g = grad_buffer(*self.parents[0]);
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) g[i * d + j] += self.grad[j] * inv;
  });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw Error(ErrorKind::EmptyInput, "concat_rows of no tensors");
  const std::size_t d = parts[0].cols();
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    if (p.cols() != d)
      throw Error(ErrorKind::Dimension, "concat_rows: " + shape_string(p.shape()) +
                                            " does not have " + std::to_string(d) + " columns");
    total += p.rows();
  }
  auto n = std::make_shared<Node>();
  n->shape = {total, d};
  n->data.reserve(total * d);
  for (const Tensor& p : parts) {
    n->data.insert(n->data.end(), p.data().begin(), p.data().end());
    n->requires_grad = n->requires_grad || p.requires_grad();
  }
  if (n->requires_grad) {
    for (const Tensor& p : parts) n->parents.push_back(TensorAccess::node(p));
    n->backward = [](Node& self) {
      std::size_t offset = 0;
      for (auto& parent : self.parents) {
        const std::size_t count = parent->data.size();
        if (parent->requires_grad) {
          auto& g = grad_buffer(*parent);
          for (std::size_t i = 0; i < count; ++i) g[i] += self.grad[offset + i];
        }
        offset += count;
      }
    };
  }
  return TensorAccess::wrap(std::move(n));
}

Tensor select_rows(const Tensor& x, std::span<const std::size_t> rows) {
  require_rank2(x, "select_rows");
  const std::size_t d = x.cols();
  std::vector<double> out;
  out.reserve(rows.size() * d);
  const auto X = x.data();
  for (std::size_t r : rows) {
    if (r >= x.rows())
      throw Error(ErrorKind::Dimension, "select_rows: row " + std::to_string(r) +
                                            " out of range for " + shape_string(x.shape()));
    out.insert(out.end(), X.begin() + static_cast<std::ptrdiff_t>(r * d),
               X.begin() + static_cast<std::ptrdiff_t>((r + 1) * d));
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return make_result({idx.size(), d}, std::move(out), {x}, [idx, d](Node& self) {
    auto& g = grad_buffer(*self.parents[0]);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < d; ++j) g[idx[i] * d + j] += self.grad[i * d + j];
  });
}

Tensor l2_normalize_rows(const Tensor& x) {
  require_rank2(x, "l2_normalize_rows");
  const std::size_t n = x.rows(), d = x.cols();
  const auto X = x.data();
  std::vector<double> norms(n);
  std::vector<double> out(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    double ss = 0.0;
    for (std::size_t j = 0; j < d; ++j) ss += X[i * d + j] * X[i * d + j];
    norms[i] = std::sqrt(ss);
    if (!(norms[i] >= kNormEpsilon))
      throw Error(ErrorKind::DegenerateRow, "row " + std::to_string(i) + " has norm " +
                                                std::to_string(norms[i]));
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = X[i * d + j] / norms[i];
  }
  return make_result({n, d}, std::move(out), {x}, [n, d, norms](Node& self) {
    auto& g = grad_buffer(*self.parents[0]);
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += self.data[i * d + j] * self.grad[i * d + j];
      for (std::size_t j = 0; j < d; ++j)
        g[i * d + j] += (self.grad[i * d + j] - self.data[i * d + j] * dot) / norms[i];
    }
  });
}

Tensor softmax_rows(const Tensor& x) {
  require_rank2(x, "softmax_rows");
  require_finite(x.data(), "softmax_rows");
  const std::size_t n = x.rows(), m = x.cols();
  const auto X = x.data();
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = X.data() + i * m;
    const double mx = *std::max_element(row, row + m);
    double z = 0.0;
    for (std::size_t j = 0; j < m; ++j) z += (out[i * m + j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] /= z;
  }
  return make_result({n, m}, std::move(out), {x}, [n, m](Node& self) {
    auto& g = grad_buffer(*self.parents[0]);
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < m; ++j) dot += self.data[i * m + j] * self.grad[i * m + j];
      for (std::size_t j = 0; j < m; ++j)
        g[i * m + j] += self.data[i * m + j] * (self.grad[i * m + j] - dot);
    }
  });
}

Tensor soft_cross_entropy(const Tensor& scores, const Tensor& targets, double temperature) {
  require_rank2(scores, "soft_cross_entropy");
  require_same_shape(scores, targets, "soft_cross_entropy");
  if (!(temperature > 0.0))
    throw Error(ErrorKind::Config, "temperature must be positive, got " + std::to_string(temperature));
  require_finite(scores.data(), "soft_cross_entropy");
  const std::size_t n = scores.rows(), m = scores.cols();
  if (n == 0) throw Error(ErrorKind::EmptyInput, "soft_cross_entropy of an empty batch");
  const auto S = scores.data();
  const auto T = targets.data();
  for (std::size_t i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double t = T[i * m + j];
      if (!(t >= 0.0))
        throw Error(ErrorKind::TargetNormalization,
                    "target row " + std::to_string(i) + " has a negative entry");
      row_sum += t;
    }
    if (std::abs(row_sum - 1.0) > 1e-9)
      throw Error(ErrorKind::TargetNormalization,
                  "target row " + std::to_string(i) + " sums to " + std::to_string(row_sum));
  }

  std::vector<double> probs(n * m);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = S.data() + i * m;
    double mx = row[0] / temperature;
    for (std::size_t j = 1; j < m; ++j) mx = std::max(mx, row[j] / temperature);
    double z = 0.0;
    for (std::size_t j = 0; j < m; ++j) z += std::exp(row[j] / temperature - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < m; ++j) {
      const double logp = row[j] / temperature - lse;
      probs[i * m + j] = std::exp(logp);
      loss -= T[i * m + j] * logp;
    }
  }
  loss /= static_cast<double>(n);

  std::vector<double> tcopy(T.begin(), T.end());
  return make_result(
      {}, {loss}, {scores},
      [n, m, temperature, probs = std::move(probs), tcopy = std::move(tcopy)](Node& self) {
        auto& g = grad_buffer(*self.parents[0]);
        const double coeff = self.grad[0] / (static_cast<double>(n) * temperature);
        for (std::size_t i = 0; i < n; ++i) {
          double row_sum = 0.0;
          for (std::size_t j = 0; j < m; ++j) row_sum += tcopy[i * m + j];
          for (std::size_t j = 0; j < m; ++j)
            g[i * m + j] += coeff * (probs[i * m + j] * row_sum - tcopy[i * m + j]);
        }
      });
}

void backward(const Tensor& loss) {
  if (loss.numel() != 1)
    throw Error(ErrorKind::Rank,
                "backward needs a scalar loss, got shape " + shape_string(loss.shape()));
  Node& root = node_of(loss);
  if (root.consumed) throw Error(ErrorKind::Tape, "backward called twice on the same loss");
  if (!root.requires_grad) return;

  // Iterative post-order DFS gives a topological order (parents before children).
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{&root, 0}};
  seen.insert(&root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior gradients are per-pass; leaves accumulate across passes.
  for (Node* n : order) {
    if (n->parents.empty())
      grad_buffer(*n);
    else
      n->grad.assign(n->data.size(), 0.0);
  }
  root.grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward) (*it)->backward(**it);
  root.consumed = true;
}

}  // namespace scopealign
