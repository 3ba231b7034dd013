#pragma once

// Downstream evaluation on held-out synthetic frames: zero-shot prompt scoring,
// a frozen-feature logistic probe for the few-shot setting, and embedding export.

#include "scopealign/checkpoint.hpp"
#include "scopealign/metrics.hpp"
#include "scopealign/records.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace scopealign {

struct EvalItem {
  std::string id;
  std::vector<double> image;
  int label = 0;
};

struct EvalTask {
  std::string name;  // "detection" or "malignancy"
  std::vector<EvalItem> items;
  std::string prompt_pos;
  std::string prompt_neg;

  std::vector<int> labels() const;
  /// Throws MetricUndefined unless both classes are present.
  void validate() const;
};

inline constexpr std::string_view kMalignantPrompt = "This is a malignant polyp.";
inline constexpr std::string_view kBenignPrompt = "This is a benign polyp.";

/// Sizes of the held-out sets; defaults follow the 2308:608 and 68:16 shapes.
struct EvalSetConfig {
  std::size_t detection_normal = 2308;
  std::size_t detection_polyp = 608;
  std::size_t malignancy_malignant = 68;
  std::size_t malignancy_benign = 16;
  std::uint64_t seed = 1;

  std::string to_json() const;
  static EvalSetConfig from_json(std::string_view text);
};

/// Normal frames (label 0) followed by polyp frames with random attributes (label 1).
EvalTask detection_task(const SyntheticWorld& world, std::size_t n_normal, std::size_t n_polyp,
                        std::uint64_t seed);
/// One polyp frame per item; label 1 iff the malignancy aspect takes its malignant value.
EvalTask malignancy_task(const SyntheticWorld& world, std::size_t n_malignant,
                         std::size_t n_benign, std::uint64_t seed);
EvalTask make_task(std::string_view name, const SyntheticWorld& world, const EvalSetConfig& cfg);

/// Frozen unit-norm image embeddings, one row per item.
std::vector<std::vector<double>> embed_items(const StageCheckpoint& ckpt,
                                             const std::vector<EvalItem>& items);

/// Softmax over the two prompt similarities divided by the temperature; the
/// positive component per item.
std::vector<double> zero_shot_scores(const StageCheckpoint& ckpt, const EvalTask& task);

/// Per class, round(ratio * count) items go to train, clamped so that each
/// class with two or more items lands on both sides.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};
Split stratified_split(const std::vector<int>& labels, double train_ratio, std::uint64_t seed);

struct LinearProbe {
  std::vector<double> weights;
  double bias = 0.0;

  /// Full-batch gradient descent on the mean logistic loss from zero weights.
  static LinearProbe fit(const std::vector<std::vector<double>>& features,
                         const std::vector<int>& labels, std::size_t steps = 500, double lr = 0.1);
  double predict(const std::vector<double>& x) const;
};

struct FewShotResult {
  std::vector<double> scores;  // held-out items, in split order
  std::vector<int> labels;
  Split split;
  bool degenerate = false;  // a class was missing from train
};

FewShotResult few_shot_probe(const StageCheckpoint& ckpt, const EvalTask& task, double train_ratio,
                             std::uint64_t seed);

/// `setting` is "zero-shot" or "few-shot:<ratio>".
MetricReport evaluate_task(const StageCheckpoint& ckpt, const EvalTask& task,
                           std::string_view setting, std::uint64_t seed);

std::string metric_report_json(const MetricReport& r, const std::string& task,
                               const std::string& config_fingerprint,
                               const std::string& corpus_fingerprint);

/// CSV header item_id,label,e0..e{d-1}; numbers with 17 significant digits.
std::string export_embeddings_csv(const StageCheckpoint& ckpt, const std::vector<EvalItem>& items);

}  // namespace scopealign
