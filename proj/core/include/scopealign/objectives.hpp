#pragma once

#include "scopealign/encoders.hpp"
#include "scopealign/rng.hpp"
#include "scopealign/schema.hpp"
#include "scopealign/tensor.hpp"

#include <utility>
#include <vector>

namespace scopealign {

enum class Direction { VisionToText, TextToVision };

struct SimilarityMatrix {
  Tensor scores;  // N x N
  Direction direction = Direction::VisionToText;
};

enum class TargetKind { OneHot, MorphologySoft, UnionSoft };

/// N x N constant targets, rows non-negative and summing to one.
struct TargetMatrix {
  Tensor values;
  TargetKind kind = TargetKind::OneHot;

  static TargetMatrix one_hot(std::size_t n);
  std::size_t size() const { return values.rows(); }
};

/// Single-head scaled dot-product attention with square d x d projections.
struct CrossAttentionBlock {
  Tensor w_query;
  Tensor w_key;
  Tensor w_value;

  /// Identity plus Uniform(-noise, noise) perturbation, as trainable parameters.
  static CrossAttentionBlock near_identity(std::size_t dim, double noise, Rng& rng);
  std::size_t dim() const { return w_query.rows(); }
  std::vector<Tensor> parameters() const { return {w_query, w_key, w_value}; }
};

struct PatientEmbedding {
  Tensor v_hat;  // 1 x d, unit norm
  Tensor t_hat;  // 1 x d, unit norm
  AttributeVector union_attributes;
};

/// S(v->t) = V T^T and S(t->v) = its transpose. Inputs must be unit-norm rows.
std::pair<SimilarityMatrix, SimilarityMatrix> cosine_similarity_matrices(const EmbeddingBatch& v,
                                                                         const EmbeddingBatch& t);

/// Symmetric InfoNCE with one-hot diagonal targets.
Tensor detection_loss(const SimilarityMatrix& sv, const SimilarityMatrix& st, double temperature);

/// Row-normalized multi-hot cosine similarity, both directions.
std::pair<TargetMatrix, TargetMatrix> morphology_targets(const std::vector<AttributeVector>& av,
                                                         const std::vector<AttributeVector>& at);

/// Symmetric soft-target cross-entropy: (CE(Sv, Mv) + CE(St, Mt)) / 2.
Tensor morph_loss(const SimilarityMatrix& sv, const SimilarityMatrix& st, const TargetMatrix& mv,
                  const TargetMatrix& mt, double temperature);

/// alpha = softmax_rows((Q Wq^T)(KV Wk^T)^T / sqrt(d)).
Tensor attention_weights(const CrossAttentionBlock& block, const Tensor& queries,
                         const Tensor& keys_values);
/// Row k = sum_l alpha[k,l] * (Wv kv_l).
Tensor cross_attend(const CrossAttentionBlock& block, const Tensor& queries,
                    const Tensor& keys_values);

PatientEmbedding aggregate_patient(const Tensor& attended_v, const Tensor& attended_t,
                                   const std::vector<AttributeVector>& attrs);

/// Patient-level loss over stacked v_hat / t_hat. With `soft_targets` false the
/// targets fall back to the one-hot diagonal (the InfoNCE ablation).
Tensor union_loss(const std::vector<PatientEmbedding>& patients, double temperature,
                  bool soft_targets = true);

}  // namespace scopealign
