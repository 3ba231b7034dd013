#include "scopealign/metrics.hpp"

#include "scopealign/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace scopealign {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw Error(ErrorKind::Dimension, std::to_string(scores.size()) + " scores but " +
                                          std::to_string(labels.size()) + " labels");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1)
      throw Error(ErrorKind::Config, "label " + std::to_string(i) + " is not 0 or 1");
    if (!std::isfinite(scores[i]))
      throw Error(ErrorKind::NonFinite, "score " + std::to_string(i) + " is not finite");
  }
}

std::vector<std::size_t> descending(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0)
    throw Error(ErrorKind::MetricUndefined, "auroc needs both classes (" + std::to_string(pos) +
                                                " positive, " + std::to_string(neg) + " negative)");
  // Walk blocks of equal score from the top. Twice the pair count is an
  // integer, so the single division at the end is the only rounding.
  const auto order = descending(scores);
  std::uint64_t twice = 0, neg_above = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::uint64_t p = 0, n = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? p : n) += 1;
      ++j;
    }
    twice += p * (2 * (neg - neg_above - n) + n);
    neg_above += n;
    i = j;
  }
  return static_cast<double>(twice) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

double aupr(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (pos == 0) throw Error(ErrorKind::MetricUndefined, "aupr needs at least one positive");
  const auto order = descending(scores);
  double area = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i, block_tp = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      block_tp += labels[order[j]] ? 1 : 0;
      ++j;
    }
    tp += block_tp;
    seen = j;
    if (block_tp)
      area += static_cast<double>(block_tp) * (static_cast<double>(tp) / static_cast<double>(seen));
    i = j;
  }
  return area / static_cast<double>(pos);
}

MetricReport MetricReport::compute(std::span<const double> scores, std::span<const int> labels,
                                   std::string setting) {
  MetricReport r;
  r.auroc = scopealign::auroc(scores, labels);
  r.aupr = scopealign::aupr(scores, labels);
  r.n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  r.n_neg = labels.size() - r.n_pos;
  r.setting = std::move(setting);
  return r;
}

}  // namespace scopealign
