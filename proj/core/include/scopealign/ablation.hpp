#pragma once

// Variant grid over data composition (single / multi-polyp cases) and method
// (morphology targets vs one-hot, cross-attention vs averaging).

#include "scopealign/evaluation.hpp"
#include "scopealign/pipeline.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace scopealign {

struct AblationVariant {
  std::string name;
  bool single_polyp = false;
  bool multi_polyp = false;
  bool morphology_targets = false;
  bool cross_attention = false;

  bool operator==(const AblationVariant&) const = default;
};

/// "base" (cleansing stage only), "full" (sp+mp+mc+ca), or flags joined by '+'
/// drawn from sp, mp, mc, ca. Anything else raises Config.
AblationVariant parse_variant(std::string_view spec);

struct AblationConfig {
  PipelineConfig pipeline;
  EvalSetConfig eval;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<std::string> variants{"sp+mc", "mp+mc+ca", "sp+mp+ca", "sp+mp+mc", "full"};
  std::vector<std::string> tasks{"malignancy"};
  std::vector<std::string> settings{"zero-shot"};
};

struct AblationRow {
  std::string variant;
  std::uint64_t seed = 0;
  std::vector<MetricReport> metrics;  // tasks x settings, task-major
};

struct AblationReport {
  std::vector<std::string> tasks;
  std::vector<std::string> settings;
  std::vector<AblationRow> rows;  // seed-major, variants in request order

  const MetricReport& metric(const AblationRow& row, std::string_view task,
                             std::string_view setting) const;
  const AblationRow& row(std::string_view variant, std::uint64_t seed) const;
  std::string to_json() const;
  /// Plain-text table, one line per (variant, seed) plus per-variant means.
  std::string to_table() const;
};

/// Each seed trains the cleansing stage once and every variant continues from
/// that shared checkpoint; all variants are scored on the same held-out sets.
AblationReport run_ablation(const Corpus& corpus, const SyntheticWorld& world,
                            const AblationConfig& cfg);

}  // namespace scopealign
