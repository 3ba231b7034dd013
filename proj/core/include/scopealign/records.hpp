#pragma once

// Synthetic colonoscopy records: many frames per case, few of them polyp-bearing,
// single- and multi-polyp reports rendered from a fixed sentence template.

#include "scopealign/rng.hpp"
#include "scopealign/schema.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace scopealign {

struct GeneratorConfig {
  std::size_t num_cases = 500;
  std::size_t frames_per_case_min = 10;
  std::size_t frames_per_case_max = 30;
  double polyp_positive_rate = 0.45;
  double multi_polyp_fraction = 0.43;  // among positive cases
  std::size_t max_polyps_per_case = 4;
  double polyp_frame_prevalence = 0.15;  // within positive cases
  std::size_t image_dim = 192;
  double noise_std = 0.2;
  std::size_t max_filler_sentences = 3;
  std::uint64_t seed = 0;

  /// Throws Config on out-of-range fields or image_dim < schema.total_bits().
  void validate(const AttributeSchema& schema) const;
  std::string to_json() const;
  static GeneratorConfig from_json(std::string_view text);
};

struct MedicalCase {
  std::string case_id;
  std::vector<std::vector<double>> images;
  std::vector<bool> frame_labels;
  // Raw report, diagnostic and non-diagnostic sentences interleaved.
  std::vector<std::string> sentences;
  // Ground truth for the polyp sentences, in report order (L_i entries).
  std::vector<AttributeVector> sentence_attributes;
  bool polyp_positive = false;

  std::size_t polyp_count() const noexcept { return sentence_attributes.size(); }
  std::size_t frame_count() const noexcept { return images.size(); }
  bool operator==(const MedicalCase&) const = default;
};

/// Fixed geometry shared by a corpus and every held-out set drawn from it:
/// a background vector plus one unit direction per schema category, all
/// mutually orthogonal.
class SyntheticWorld {
 public:
  SyntheticWorld(const GeneratorConfig& cfg, const AttributeSchema& schema);

  std::vector<double> normal_frame(Rng& rng) const;
  std::vector<double> polyp_frame(const Assignment& polyp, Rng& rng) const;
  Assignment random_assignment(Rng& rng) const;

  const AttributeSchema& schema() const noexcept { return schema_; }
  std::size_t image_dim() const noexcept { return background_.size(); }

 private:
  AttributeSchema schema_;
  double noise_std_;
  std::vector<double> background_;
  std::vector<std::vector<double>> directions_;  // indexed by schema bit
};

inline constexpr double kBackgroundNorm = 4.0;

/// "Polyp <k>: <aspect>=<value>; ...; <aspect>=<value>."
std::string render_polyp_sentence(const AttributeSchema& schema, std::size_t polyp_number,
                                  const Assignment& assignment);

const std::vector<std::string>& filler_sentences();

std::vector<MedicalCase> generate_corpus(const GeneratorConfig& cfg, const AttributeSchema& schema);

struct StatsReport {
  std::size_t num_cases = 0;
  std::size_t num_positive = 0;
  std::size_t num_multi_polyp = 0;
  std::size_t total_frames = 0;
  std::size_t polyp_frames = 0;
  double positive_rate = 0.0;
  double multi_polyp_fraction = 0.0;  // among positives, 0 when none
  double mean_frames_per_case = 0.0;
  double polyp_frame_prevalence = 0.0;  // polyp frames / frames of positive cases

  std::string to_json() const;
};

StatsReport corpus_stats(const std::vector<MedicalCase>& cases);

std::string case_to_json(const MedicalCase& c);
MedicalCase case_from_json(std::string_view line);
void write_corpus(std::ostream& out, const std::vector<MedicalCase>& cases);
std::vector<MedicalCase> read_corpus(std::istream& in);

}  // namespace scopealign
