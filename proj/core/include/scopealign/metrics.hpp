#pragma once

#include <span>
#include <string>

namespace scopealign {

/// Mann-Whitney statistic over all positive/negative pairs, ties counted as 1/2.
/// Labels are 0 or 1. Throws MetricUndefined when either class is missing.
double auroc(std::span<const double> scores, std::span<const int> labels);

/// Step-wise area under precision-recall: sweep thresholds in descending score
/// order, tied scores as one block, sum of recall increments times precision.
/// Throws MetricUndefined without positives.
double aupr(std::span<const double> scores, std::span<const int> labels);

struct MetricReport {
  double auroc = 0.0;
  double aupr = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::string setting;  // "zero-shot" or "few-shot:<ratio>"

  static MetricReport compute(std::span<const double> scores, std::span<const int> labels,
                              std::string setting);
};

}  // namespace scopealign
