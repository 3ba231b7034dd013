#pragma once

// Independent reference computations for the tests. Nothing here touches the
// tape; everything is plain loops over std::vector.

#include "scopealign/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat to_mat(const scopealign::Tensor& t) {
  Mat m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = t.at(i, j);
  return m;
}

inline std::vector<double> flat(const Mat& m) {
  std::vector<double> out;
  for (const auto& r : m) out.insert(out.end(), r.begin(), r.end());
  return out;
}

inline scopealign::Tensor tensor(const Mat& m, bool grad = false) {
  return scopealign::Tensor::matrix(m.size(), m.front().size(), flat(m), grad);
}

inline Mat random_mat(std::mt19937_64& rng, std::size_t r, std::size_t c, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  Mat m(r, std::vector<double>(c));
  for (auto& row : m)
    for (double& x : row) x = u(rng);
  return m;
}

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat c(a.size(), std::vector<double>(b.front().size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.front().size(); ++j)
      for (std::size_t k = 0; k < b.size(); ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline Mat transpose(const Mat& a) {
  Mat t(a.front().size(), std::vector<double>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) t[j][i] = a[i][j];
  return t;
}

inline Mat normalize_rows(Mat m) {
  for (auto& r : m) {
    double n = 0;
    for (double x : r) n += x * x;
    n = std::sqrt(n);
    for (double& x : r) x /= n;
  }
  return m;
}

// -(1/n) sum_i sum_j T[i][j] * (s[i][j]/tau - logsumexp_k s[i][k]/tau)
inline double soft_ce(const Mat& s, const Mat& t, double tau) {
  double total = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    long double mx = -INFINITY;
    for (double x : s[i]) mx = std::max<long double>(mx, x / tau);
    long double z = 0;
    for (double x : s[i]) z += std::exp(static_cast<long double>(x / tau) - mx);
    const long double lse = mx + std::log(z);
    for (std::size_t j = 0; j < s[i].size(); ++j)
      total -= static_cast<double>(t[i][j] * (static_cast<long double>(s[i][j] / tau) - lse));
  }
  return total / static_cast<double>(s.size());
}

// Symmetric InfoNCE over S and S^T with the matched pair on the diagonal.
inline double info_nce(const Mat& s, double tau) {
  const std::size_t n = s.size();
  auto one_dir = [&](const Mat& m) {
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double z = 0;
      for (std::size_t j = 0; j < n; ++j) z += std::exp(m[i][j] / tau);
      total += std::log(z) - m[i][i] / tau;
    }
    return total / static_cast<double>(n);
  };
  return 0.5 * (one_dir(s) + one_dir(transpose(s)));
}

inline std::vector<long double> softmax_ld(const std::vector<double>& row) {
  long double mx = *std::max_element(row.begin(), row.end());
  std::vector<long double> e;
  long double z = 0;
  for (double x : row) {
    e.push_back(std::exp(static_cast<long double>(x) - mx));
    z += e.back();
  }
  for (auto& x : e) x /= z;
  return e;
}

// Cross-attention by explicit loops: alpha[k][l] from <Wq q_k, Wk kv_l>/sqrt(d),
// output row k = sum_l alpha[k][l] * Wv kv_l.
inline Mat attention(const Mat& wq, const Mat& wk, const Mat& wv, const Mat& q, const Mat& kv,
                     Mat* alpha_out = nullptr) {
  const std::size_t d = wq.size();
  auto apply = [&](const Mat& w, const std::vector<double>& x) {
    std::vector<double> y(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) y[i] += w[i][j] * x[j];
    return y;
  };
  Mat out(q.size(), std::vector<double>(d, 0.0)), alpha(q.size(), std::vector<double>(kv.size()));
  for (std::size_t k = 0; k < q.size(); ++k) {
    const auto qk = apply(wq, q[k]);
    std::vector<double> logits;
    for (const auto& row : kv) {
      const auto kl = apply(wk, row);
      double dot = 0;
      for (std::size_t i = 0; i < d; ++i) dot += qk[i] * kl[i];
      logits.push_back(dot / std::sqrt(static_cast<double>(d)));
    }
    const auto a = softmax_ld(logits);
    for (std::size_t l = 0; l < kv.size(); ++l) {
      alpha[k][l] = static_cast<double>(a[l]);
      const auto vl = apply(wv, kv[l]);
      for (std::size_t i = 0; i < d; ++i) out[k][i] += alpha[k][l] * vl[i];
    }
  }
  if (alpha_out) *alpha_out = alpha;
  return out;
}

// AUROC over every positive/negative pair: twice the count of wins plus ties,
// over 2PN.
inline double auroc_pairs(const std::vector<double>& s, const std::vector<int>& y) {
  std::uint64_t twice = 0, p = 0, n = 0;
  for (std::size_t i = 0; i < s.size(); ++i) (y[i] ? p : n) += 1;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) twice += s[i] > s[j] ? 2 : s[i] == s[j] ? 1 : 0;
  return static_cast<double>(twice) / (2.0 * static_cast<double>(p) * static_cast<double>(n));
}

// AUPR by enumerating each distinct score as a threshold (predict positive when
// score >= t), from the highest threshold down, summing recall increments
// weighted by precision at that threshold.
inline double aupr_thresholds(const std::vector<double>& s, const std::vector<int>& y) {
  std::set<double, std::greater<>> thresholds(s.begin(), s.end());
  std::size_t p = 0;
  for (int v : y) p += static_cast<std::size_t>(v);
  double area = 0;
  std::size_t prev_tp = 0;
  for (double t : thresholds) {
    std::size_t tp = 0, predicted = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i] >= t) {
        ++predicted;
        tp += static_cast<std::size_t>(y[i]);
      }
    if (tp > prev_tp)
      area += static_cast<double>(tp - prev_tp) * (static_cast<double>(tp) / static_cast<double>(predicted));
    prev_tp = tp;
  }
  return area / static_cast<double>(p);
}

// Central finite differences of f with respect to every entry of x.
inline std::vector<double> numeric_grad(const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> x, double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

// max_i |a_i - b_i| / max(1, |a_i|, |b_i|) style relative error, with a floor so
// near-zero gradients are compared absolutely.
inline double rel_error(const std::vector<double>& a, std::span<const double> b) {
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({1e-3, std::abs(a[i]), std::abs(b[i])});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace oracle
