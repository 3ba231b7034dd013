#include "scopealign/encoders.hpp"

#include "scopealign/error.hpp"

#include <cctype>
#include <cmath>
#include <set>

namespace scopealign {

Tensor uniform_parameter(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> data(rows * cols);
  for (double& v : data) v = dist(rng);
  return Tensor::matrix(rows, cols, std::move(data), true);
}

// --- vision ------------------------------------------------------------------

VisionEncoder::VisionEncoder(const EncoderDims& dims, Rng& rng)
    : w1_(uniform_parameter(dims.image_dim, dims.hidden_dim, dims.image_dim, rng)),
      b1_(Tensor::zeros({1, dims.hidden_dim}, true)),
      w2_(uniform_parameter(dims.hidden_dim, dims.embed_dim, dims.hidden_dim, rng)),
      b2_(Tensor::zeros({1, dims.embed_dim}, true)) {}

VisionEncoder::VisionEncoder(Tensor w1, Tensor b1, Tensor w2, Tensor b2)
    : w1_(std::move(w1)), b1_(std::move(b1)), w2_(std::move(w2)), b2_(std::move(b2)) {
  if (w1_.cols() != b1_.numel() || w1_.cols() != w2_.rows() || w2_.cols() != b2_.numel())
    throw Error(ErrorKind::Dimension, "vision encoder parameter shapes do not chain");
}

EmbeddingBatch VisionEncoder::encode(const Tensor& frames) const {
  if (frames.rank() != 2 || frames.cols() != image_dim())
    throw Error(ErrorKind::Dimension, "frames " + shape_string(frames.shape()) +
                                          " do not have dimension " + std::to_string(image_dim()));
  const Tensor hidden = tanh(add_row_bias(matmul(frames, w1_), b1_));
  return {l2_normalize_rows(add_row_bias(matmul(hidden, w2_), b2_)), true};
}

Tensor frame_matrix(std::span<const std::vector<double>* const> frames) {
  if (frames.empty()) throw Error(ErrorKind::EmptyInput, "no frames to encode");
  const std::size_t p = frames.front()->size();
  std::vector<double> data;
  data.reserve(frames.size() * p);
  for (const auto* f : frames) {
    if (f->size() != p)
      throw Error(ErrorKind::Dimension, "frame of dimension " + std::to_string(f->size()) +
                                            " in a batch of dimension " + std::to_string(p));
    data.insert(data.end(), f->begin(), f->end());
  }
  return Tensor::matrix(frames.size(), p, std::move(data));
}

Tensor frame_matrix(std::span<const std::vector<double>> frames) {
  std::vector<const std::vector<double>*> ptrs;
  ptrs.reserve(frames.size());
  for (const auto& f : frames) ptrs.push_back(&f);
  return frame_matrix(ptrs);
}

EmbeddingBatch encode_images(const VisionEncoder& enc, std::span<const std::vector<double>> frames) {
  return enc.encode(frame_matrix(frames));
}

EmbeddingBatch encode_images(const VisionEncoder& enc,
                             std::span<const std::vector<double>* const> frames) {
  return enc.encode(frame_matrix(frames));
}

// --- text ----------------------------------------------------------------------

std::vector<std::string> tokenize(std::string_view sentence) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : sentence) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c) || std::ispunct(c)) {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += static_cast<char>(std::tolower(c));
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& sentences) {
  std::set<std::string> uniq;
  for (const auto& s : sentences)
    for (auto& t : tokenize(s)) uniq.insert(std::move(t));
  std::vector<std::string> tokens{std::string(kUnknownToken)};
  tokens.insert(tokens.end(), uniq.begin(), uniq.end());
  return Vocabulary(std::move(tokens));
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.empty() || tokens_.front() != kUnknownToken)
    throw Error(ErrorKind::Config, "vocabulary must start with the unknown token");
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    if (!lookup_.emplace(tokens_[i], i).second)
      throw Error(ErrorKind::Config, "duplicate vocabulary token '" + tokens_[i] + "'");
}

std::size_t Vocabulary::index(std::string_view token) const {
  auto it = lookup_.find(token);
  return it == lookup_.end() ? kUnknown : it->second;
}

TextEncoder::TextEncoder(Vocabulary vocab, const EncoderDims& dims, Rng& rng)
    : vocab_(std::move(vocab)),
      embedding_(uniform_parameter(vocab_.size(), dims.hidden_dim, 1, rng)),
      projection_(uniform_parameter(dims.hidden_dim, dims.embed_dim, dims.hidden_dim, rng)) {}

TextEncoder::TextEncoder(Vocabulary vocab, Tensor embedding, Tensor projection)
    : vocab_(std::move(vocab)), embedding_(std::move(embedding)), projection_(std::move(projection)) {
  if (embedding_.rows() != vocab_.size() || embedding_.cols() != projection_.rows())
    throw Error(ErrorKind::Dimension, "text encoder parameter shapes do not chain");
}

EmbeddingBatch TextEncoder::encode(const std::vector<std::string>& sentences) const {
  if (sentences.empty()) throw Error(ErrorKind::EmptyInput, "no sentences to encode");
  const std::size_t v = vocab_.size();
  std::vector<double> pool(sentences.size() * v, 0.0);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const auto tokens = tokenize(sentences[i]);
    if (tokens.empty())
      throw Error(ErrorKind::EmptyText, "sentence " + std::to_string(i) + " has no tokens");
    const double w = 1.0 / static_cast<double>(tokens.size());
    for (const auto& t : tokens) pool[i * v + vocab_.index(t)] += w;
  }
  const Tensor pooled = matmul(Tensor::matrix(sentences.size(), v, std::move(pool)), embedding_);
  return {l2_normalize_rows(matmul(pooled, projection_)), true};
}

EmbeddingBatch encode_texts(const TextEncoder& enc, const std::vector<std::string>& sentences) {
  return enc.encode(sentences);
}

}  // namespace scopealign
