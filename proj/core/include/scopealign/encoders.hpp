#pragma once

#include "scopealign/rng.hpp"
#include "scopealign/tensor.hpp"

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scopealign {

/// Row i is the embedding of item i. When `normalized`, rows have unit norm.
struct EmbeddingBatch {
  Tensor matrix;
  bool normalized = false;

  std::size_t size() const { return matrix.rows(); }
};

struct EncoderDims {
  std::size_t image_dim = 192;
  std::size_t hidden_dim = 64;
  std::size_t embed_dim = 32;
};

/// p -> tanh(x W1 + b1) W2 + b2 -> unit sphere in R^d.
class VisionEncoder {
 public:
  VisionEncoder(const EncoderDims& dims, Rng& rng);
  VisionEncoder(Tensor w1, Tensor b1, Tensor w2, Tensor b2);

  std::size_t image_dim() const { return w1_.rows(); }
  std::size_t embed_dim() const { return w2_.cols(); }
  std::vector<Tensor> parameters() const { return {w1_, b1_, w2_, b2_}; }

  EmbeddingBatch encode(const Tensor& frames) const;

 private:
  Tensor w1_, b1_, w2_, b2_;
};

/// Lowercase, punctuation replaced by whitespace, split on whitespace.
std::vector<std::string> tokenize(std::string_view sentence);

class Vocabulary {
 public:
  static constexpr std::size_t kUnknown = 0;
  static constexpr std::string_view kUnknownToken = "<unk>";

  /// Sorted token list built from every token in `sentences`.
  static Vocabulary build(const std::vector<std::string>& sentences);
  /// `tokens[0]` must be the reserved unknown token.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t index(std::string_view token) const;
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, std::size_t, std::less<>> lookup_;
};

/// Bag of tokens: mean of token embeddings, linear projection, unit norm.
class TextEncoder {
 public:
  TextEncoder(Vocabulary vocab, const EncoderDims& dims, Rng& rng);
  TextEncoder(Vocabulary vocab, Tensor embedding, Tensor projection);

  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  std::size_t embed_dim() const { return projection_.cols(); }
  std::vector<Tensor> parameters() const { return {embedding_, projection_}; }

  EmbeddingBatch encode(const std::vector<std::string>& sentences) const;

 private:
  Vocabulary vocab_;
  Tensor embedding_;
  Tensor projection_;
};

Tensor frame_matrix(std::span<const std::vector<double>* const> frames);
Tensor frame_matrix(std::span<const std::vector<double>> frames);

EmbeddingBatch encode_images(const VisionEncoder& enc, std::span<const std::vector<double>> frames);
EmbeddingBatch encode_images(const VisionEncoder& enc,
                             std::span<const std::vector<double>* const> frames);
EmbeddingBatch encode_texts(const TextEncoder& enc, const std::vector<std::string>& sentences);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) matrix flagged as a parameter.
Tensor uniform_parameter(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng);

}  // namespace scopealign
