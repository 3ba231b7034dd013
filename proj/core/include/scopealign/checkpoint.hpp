#pragma once

#include "scopealign/encoders.hpp"
#include "scopealign/objectives.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace scopealign {

struct Model {
  VisionEncoder vision;
  TextEncoder text;
  std::optional<CrossAttentionBlock> cross_attention;

  static Model initialize(const EncoderDims& dims, Vocabulary vocab, std::uint64_t seed);

  /// Deep copy with fresh leaves; `trainable` controls requires_grad.
  Model clone(bool trainable = true) const;
  std::vector<Tensor> encoder_parameters() const;
  std::vector<Tensor> parameters() const;
  std::size_t embed_dim() const { return vision.embed_dim(); }
};

inline constexpr int kCheckpointFormatVersion = 1;

struct StageCheckpoint {
  int format_version = kCheckpointFormatVersion;
  std::string stage;  // "init", "stage1-round1", "stage1-round2", "stage2", "stage3"
  Model model;
  double temperature = 0.07;
  std::string config_fingerprint;
  std::string corpus_fingerprint;
  std::string schema_version;

  std::string to_json() const;
  static StageCheckpoint from_json(std::string_view text);
};

void save_checkpoint(const std::filesystem::path& path, const StageCheckpoint& ckpt);
StageCheckpoint load_checkpoint(const std::filesystem::path& path);

/// 16 hex digits of FNV-1a over the given text.
std::string fingerprint_hex(std::string_view text);

}  // namespace scopealign
