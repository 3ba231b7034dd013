#include <doctest.h>

#include "scopealign/error.hpp"
#include "scopealign/tensor.hpp"
#include "oracles.hpp"
#include "random_graph.hpp"

#include <cmath>
#include <numbers>

using namespace scopealign;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an scopealign::Error");
  return ErrorKind::Io;
}

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST_CASE("matmul") {
  const Tensor eye = Tensor::matrix(2, 2, {1, 0, 0, 1});
  const Tensor m = Tensor::matrix(2, 2, {3, 4, 5, 6});
  CHECK(values(matmul(eye, m)) == std::vector<double>{3, 4, 5, 6});
  CHECK(matmul(Tensor::matrix(1, 2, {1, 2}), Tensor::matrix(2, 1, {3, 4})).item() == 11.0);

  std::mt19937_64 rng(3);
  const auto a = oracle::random_mat(rng, 4, 5), b = oracle::random_mat(rng, 5, 3);
  const auto want = oracle::flat(oracle::matmul(a, b));
  const auto got = values(matmul(oracle::tensor(a), oracle::tensor(b)));
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-12);
}

TEST_CASE("matmul shape mismatch names both shapes") {
  try {
    matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3}));
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Dimension);
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
  }
}

TEST_CASE("l2_normalize_rows") {
  const auto r = values(l2_normalize_rows(Tensor::matrix(1, 2, {3, 4})));
  CHECK(r[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(r[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(values(l2_normalize_rows(Tensor::matrix(2, 2, {2, 0, 0, -5}))) == std::vector<double>{1, 0, 0, -1});

  std::mt19937_64 rng(11);
  const Tensor x = oracle::tensor(oracle::random_mat(rng, 5, 4));
  const auto once = values(l2_normalize_rows(x));
  const auto twice = values(l2_normalize_rows(l2_normalize_rows(x)));
  for (std::size_t i = 0; i < once.size(); ++i) CHECK(std::abs(once[i] - twice[i]) <= 1e-12);

  try {
    l2_normalize_rows(Tensor::matrix(3, 2, {1, 0, 0, 0, 0, 1}));
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateRow);
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
}

TEST_CASE("softmax_rows") {
  CHECK(values(softmax_rows(Tensor::matrix(1, 2, {0, 0}))) == std::vector<double>{0.5, 0.5});
  for (double c : {-50.0, 0.0, 3.5, 700.0}) {
    const auto s = values(softmax_rows(Tensor::matrix(1, 3, {c, c, c})));
    for (double v : s) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));
  }
  const auto big = values(softmax_rows(Tensor::matrix(1, 2, {1000, 0})));
  const auto ld = oracle::softmax_ld({1000, 0});
  CHECK(std::isfinite(big[0]));
  CHECK(std::abs(big[0] - static_cast<double>(ld[0])) <= 1e-15);
  CHECK(std::abs(big[1] - static_cast<double>(ld[1])) <= 1e-300);

  std::mt19937_64 rng(5);
  const auto m = oracle::random_mat(rng, 6, 7, -20, 20);
  const auto s = values(softmax_rows(oracle::tensor(m)));
  auto shifted = m;
  for (std::size_t i = 0; i < shifted.size(); ++i)
    for (double& x : shifted[i]) x += static_cast<double>(i) * 13.0 - 40.0;
  const auto s2 = values(softmax_rows(oracle::tensor(shifted)));
  for (std::size_t i = 0; i < 6; ++i) {
    double row = 0;
    for (std::size_t j = 0; j < 7; ++j) {
      row += s[i * 7 + j];
      CHECK(std::abs(s[i * 7 + j] - s2[i * 7 + j]) <= 1e-12);
    }
    CHECK(std::abs(row - 1.0) <= 1e-12);
  }

  CHECK(kind_of([] { softmax_rows(Tensor::matrix(1, 2, {NAN, 0})); }) == ErrorKind::NonFinite);
  CHECK(kind_of([] { softmax_rows(Tensor::matrix(1, 2, {INFINITY, 0})); }) == ErrorKind::NonFinite);
}

TEST_CASE("soft_cross_entropy") {
  const Tensor uniform = Tensor::matrix(2, 2, {0, 0, 0, 0});
  const Tensor eye = Tensor::matrix(2, 2, {1, 0, 0, 1});
  const Tensor half = Tensor::matrix(2, 2, {.5, .5, .5, .5});
  CHECK(soft_cross_entropy(uniform, eye, 1.0).item() == doctest::Approx(std::numbers::ln2).epsilon(1e-15));
  CHECK(soft_cross_entropy(uniform, half, 1.0).item() == doctest::Approx(std::numbers::ln2).epsilon(1e-15));

  const oracle::Mat s{{10, 0}, {0, 10}};
  const double lse = std::log(std::exp(10.0) + std::exp(0.0));
  const double hand = ((lse - 10) + (lse - 10)) / 2;
  CHECK(std::abs(soft_cross_entropy(oracle::tensor(s), eye, 1.0).item() - hand) <= 1e-10);

  CHECK(kind_of([&] { soft_cross_entropy(uniform, Tensor::matrix(2, 2, {1, 1, 0, 1}), 1.0); }) ==
        ErrorKind::TargetNormalization);
  CHECK(kind_of([&] { soft_cross_entropy(uniform, Tensor::matrix(2, 2, {1.5, -.5, 0, 1}), 1.0); }) ==
        ErrorKind::TargetNormalization);
  CHECK(kind_of([&] { soft_cross_entropy(uniform, eye, 0.0); }) == ErrorKind::Config);
  CHECK(kind_of([&] { soft_cross_entropy(uniform, eye, -1.0); }) == ErrorKind::Config);
}

TEST_CASE("one-hot cross-entropy equals the log-sum-exp InfoNCE formula") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = oracle::random_mat(rng, 5, 5);
    const Tensor st = oracle::tensor(s);
    oracle::Mat id(5, std::vector<double>(5, 0.0));
    for (int i = 0; i < 5; ++i) id[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1;
    const double ce = 0.5 * (soft_cross_entropy(st, oracle::tensor(id), 0.07).item() +
                             soft_cross_entropy(transpose(st), oracle::tensor(id), 0.07).item());
    CHECK(std::abs(ce - oracle::info_nce(s, 0.07)) <= 1e-10);
  }
}

TEST_CASE("backward on simple functions") {
  const Tensor x = Tensor::from({3}, {1, 2, 3}, true);
  backward(sum(x));
  CHECK(std::vector<double>(x.grad().begin(), x.grad().end()) == std::vector<double>{1, 1, 1});

  const Tensor y = Tensor::from({3}, {1, 2, 3}, true);
  backward(sum(mul(y, y)));
  CHECK(std::vector<double>(y.grad().begin(), y.grad().end()) == std::vector<double>{2, 4, 6});
}

TEST_CASE("backward errors") {
  const Tensor x = Tensor::matrix(2, 2, {1, 2, 3, 4}, true);
  CHECK(kind_of([&] { backward(tanh(x)); }) == ErrorKind::Rank);
  const Tensor loss = sum(tanh(x));
  backward(loss);
  CHECK(kind_of([&] { backward(loss); }) == ErrorKind::Tape);
}

TEST_CASE("leaf gradients accumulate until cleared") {
  Tensor x = Tensor::from({2}, {1, 2}, true);
  backward(sum(x));
  backward(sum(scale(x, 2.0)));
  CHECK(x.grad()[0] == 3.0);
  x.zero_grad();
  CHECK(x.grad()[0] == 0.0);
  x.clear_grad();
  CHECK_FALSE(x.has_grad());
}

TEST_CASE("normalize -> matmul -> softmax -> cross-entropy matches finite differences") {
  std::mt19937_64 rng(23);
  const auto a = oracle::random_mat(rng, 3, 4), b = oracle::random_mat(rng, 3, 4);
  const oracle::Mat t{{.6, .3, .1}, {.2, .5, .3}, {0, 0, 1}};
  auto loss_of = [&](const std::vector<double>& av, bool grad, Tensor* leaf) {
    const Tensor at = Tensor::matrix(3, 4, av, grad);
    if (leaf) *leaf = at;
    const Tensor s = matmul(l2_normalize_rows(at), transpose(l2_normalize_rows(oracle::tensor(b))));
    const Tensor p = softmax_rows(scale(s, 3.0));
    return soft_cross_entropy(p, oracle::tensor(t), 0.2);
  };
  Tensor leaf;
  backward(loss_of(oracle::flat(a), true, &leaf));
  const auto num = oracle::numeric_grad([&](const std::vector<double>& v) { return loss_of(v, false, nullptr).item(); },
                                        oracle::flat(a));
  CHECK(oracle::rel_error(num, leaf.grad()) <= 1e-5);
}

TEST_CASE("random composite graphs pass finite-difference checks") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    graphs::Built b = graphs::build(seed, nullptr);
    backward(b.loss);
    std::vector<std::vector<double>> vals;
    for (const Tensor& l : b.leaves) vals.push_back(values(l));
    for (std::size_t li = 0; li < vals.size(); ++li) {
      auto f = [&](const std::vector<double>& x) {
        auto v = vals;
        v[li] = x;
        return graphs::build(seed, &v).loss.item();
      };
      CAPTURE(seed);
      CAPTURE(li);
      CHECK(oracle::rel_error(oracle::numeric_grad(f, vals[li]), b.leaves[li].grad()) <= 1e-4);
    }
  }
}

TEST_CASE("mean_rows, concat_rows and select_rows values") {
  const Tensor x = Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 9});
  CHECK(values(mean_rows(x)) == std::vector<double>{3, 5});
  const Tensor parts[] = {x, Tensor::matrix(1, 2, {7, 8})};
  CHECK(concat_rows(parts).rows() == 4);
  const std::size_t idx[] = {2, 0, 2};
  CHECK(values(select_rows(x, idx)) == std::vector<double>{5, 9, 1, 2, 5, 9});
  const std::size_t bad[] = {3};
  CHECK(kind_of([&] { select_rows(x, bad); }) == ErrorKind::Dimension);
}

TEST_CASE("shape invariant holds on construction") {
  CHECK(kind_of([] { Tensor::from({2, 3}, {1, 2, 3}); }) == ErrorKind::Dimension);
  const Tensor t = Tensor::zeros({2, 3});
  CHECK(t.numel() == 6);
  CHECK(t.data().size() == 6);
}
