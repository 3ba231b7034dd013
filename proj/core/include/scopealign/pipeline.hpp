#pragma once

// Progressive three-stage training: cleansing (two rounds of the detection
// loss with prevalence-guided frame selection in between), attunement
// (single-polyp cases with morphology soft targets) and unification
// (cross-attention over all polyp cases with the union loss).

#include "scopealign/checkpoint.hpp"
#include "scopealign/records.hpp"
#include "scopealign/report.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace scopealign {

/// Cases together with their parsed reports and provenance.
struct Corpus {
  std::vector<MedicalCase> cases;
  std::vector<ParsedReport> reports;
  AttributeSchema schema;
  std::string fingerprint;

  static Corpus from_cases(std::vector<MedicalCase> cases, AttributeSchema schema,
                           std::string fingerprint = {});

  /// Every report sentence plus the two standardized sentences.
  std::vector<std::string> vocabulary_sentences() const;
  std::size_t image_dim() const;
  std::vector<std::size_t> single_polyp_cases() const;
  std::vector<std::size_t> multi_polyp_cases() const;
};

struct TrainingConfig {
  int stage = 1;
  std::size_t batch_size = 32;
  std::size_t epochs = 100;
  std::size_t warmup_epochs = 50;
  double learning_rate = 5e-5;
  double weight_decay = 0.01;
  double temperature = 0.07;
  double prevalence_estimate = 0.15;
  std::uint64_t seed = 0;
  // Ablation switches: soft morphology targets (else one-hot InfoNCE) and
  // cross-attention before patient averaging (else plain averaging).
  bool morphology_targets = true;
  bool cross_attention = true;
  double attention_init_noise = 0.01;

  /// Batch sizes 32/32/8, 100 epochs with 50 warm-up, learning rate 5e-5.
  static TrainingConfig defaults_for_stage(int stage);
  void validate() const;
  std::string to_json() const;
  static TrainingConfig from_json(std::string_view text, int stage);
  std::string fingerprint(const std::string& schema_version) const;
};

/// Linear ramp from 0 over the warm-up epochs, constant afterwards.
double warmup_learning_rate(const TrainingConfig& cfg, std::size_t epoch);

struct TrainResult {
  StageCheckpoint checkpoint;
  std::vector<double> epoch_losses;
  std::size_t skipped_batches = 0;
  std::size_t excluded_cases = 0;
};

struct FilteredFrameSet {
  std::vector<std::vector<std::size_t>> retained;     // ascending frame indices per case
  std::vector<std::vector<double>> probabilities;     // per frame, empty for unscored cases

  /// Fraction of retained frames in positive cases that truly show a polyp.
  double purity(const std::vector<MedicalCase>& cases) const;
  std::size_t retained_positive_frames(const std::vector<MedicalCase>& cases) const;
  std::string to_json() const;
  static FilteredFrameSet from_json(std::string_view text);
  static FilteredFrameSet all_frames(const std::vector<MedicalCase>& cases);
};

StageCheckpoint initial_checkpoint(const Corpus& corpus, const EncoderDims& dims,
                                   std::uint64_t seed, double temperature);

TrainResult stage1_round1(const Corpus& corpus, const StageCheckpoint& init, const TrainingConfig& cfg);

/// exp(pos/tau) / (exp(pos/tau) + exp(neg/tau)), computed without overflow.
double prompt_probability(double sim_pos, double sim_neg, double temperature);

/// Probability that each frame of `c` shows a polyp: softmax over the cosine
/// similarities to the two standardized sentences divided by the temperature.
std::vector<double> score_frames(const StageCheckpoint& ckpt, const MedicalCase& c);

/// Positive cases keep the ceil(prevalence * K) highest-probability frames
/// (ties to the lower index); negative cases keep one seeded random frame.
FilteredFrameSet prevalence_filter(const std::vector<std::vector<double>>& scores,
                                   double prevalence_estimate,
                                   const std::vector<MedicalCase>& cases, std::uint64_t seed);
std::size_t retained_count(double prevalence_estimate, std::size_t frames);

TrainResult stage1_round2(const Corpus& corpus, const FilteredFrameSet& filtered,
                          const StageCheckpoint& round1, const TrainingConfig& cfg);

TrainResult stage2_train(const Corpus& corpus, std::span<const std::size_t> case_indices,
                         const FilteredFrameSet& filtered, const StageCheckpoint& init,
                         const TrainingConfig& cfg);

TrainResult stage3_train(const Corpus& corpus, std::span<const std::size_t> case_indices,
                         const FilteredFrameSet& filtered, const StageCheckpoint& init,
                         const TrainingConfig& cfg);

/// Stage-3 loss for one batch of patients, exposed for reduction checks.
Tensor stage3_batch_loss(const Model& model, const Corpus& corpus,
                         std::span<const std::size_t> batch, const FilteredFrameSet& filtered,
                         const TrainingConfig& cfg);
/// Stage-2 loss for one batch with explicit frame choices.
Tensor stage2_batch_loss(const Model& model, const Corpus& corpus,
                         std::span<const std::size_t> batch, std::span<const std::size_t> frames,
                         const TrainingConfig& cfg);

struct PipelineConfig {
  EncoderDims dims;  // image_dim is taken from the corpus
  TrainingConfig stage1 = TrainingConfig::defaults_for_stage(1);
  TrainingConfig stage2 = TrainingConfig::defaults_for_stage(2);
  TrainingConfig stage3 = TrainingConfig::defaults_for_stage(3);
  bool use_single_polyp = true;
  bool use_multi_polyp = true;
  std::uint64_t seed = 0;

  std::string to_json() const;
};

struct RunResult {
  std::vector<StageCheckpoint> checkpoints;  // in training order
  std::vector<TrainResult> stages;
  FilteredFrameSet filtered;
  double filter_purity = 0.0;
  std::string manifest_json;

  const StageCheckpoint& final_checkpoint() const { return checkpoints.back(); }
  const StageCheckpoint& checkpoint(std::string_view stage) const;
};

std::vector<std::vector<double>> score_corpus(const StageCheckpoint& ckpt,
                                              const std::vector<MedicalCase>& cases);

RunResult run_all(const Corpus& corpus, const PipelineConfig& cfg);

}  // namespace scopealign
