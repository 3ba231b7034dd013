#include "scopealign/objectives.hpp"

#include "scopealign/error.hpp"
#include "scopealign/log.hpp"
#include "scopealign/report.hpp"

#include <cmath>

namespace scopealign {

namespace {

void check_pair(const SimilarityMatrix& sv, const SimilarityMatrix& st) {
  if (sv.scores.rank() != 2 || sv.scores.rows() != sv.scores.cols() ||
      sv.scores.shape() != st.scores.shape())
    throw Error(ErrorKind::Dimension, "similarity matrices " + shape_string(sv.scores.shape()) +
                                          " and " + shape_string(st.scores.shape()) +
                                          " are not matching square matrices");
  if (sv.scores.rows() == 0) throw Error(ErrorKind::EmptyInput, "empty batch");
  if (sv.scores.rows() == 1) warn("degenerate batch of one item; contrastive loss is zero");
}

void check_normalized(const EmbeddingBatch& b, const char* which) {
  if (!b.normalized) throw Error(ErrorKind::Normalization, std::string(which) + " batch is not normalized");
  const std::size_t n = b.matrix.rows(), d = b.matrix.cols();
  const auto x = b.matrix.data();
  for (std::size_t i = 0; i < n; ++i) {
    double ss = 0.0;
    for (std::size_t j = 0; j < d; ++j) ss += x[i * d + j] * x[i * d + j];
    if (std::abs(std::sqrt(ss) - 1.0) > 1e-9)
      throw Error(ErrorKind::Normalization,
                  std::string(which) + " row " + std::to_string(i) + " is not unit norm");
  }
}

TargetMatrix cosine_targets(const std::vector<AttributeVector>& rows_attrs,
                            const std::vector<AttributeVector>& cols_attrs, TargetKind kind) {
  const std::size_t n = rows_attrs.size();
  std::vector<double> m(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) row_sum += (m[i * n + j] = multi_hot_cosine(rows_attrs[i], cols_attrs[j]));
    if (!(row_sum > 0.0))
      throw Error(ErrorKind::InvalidAttribute, "target row " + std::to_string(i) + " has no overlap");
    for (std::size_t j = 0; j < n; ++j) m[i * n + j] /= row_sum;
  }
  return {Tensor::matrix(n, n, std::move(m)), kind};
}

void check_attrs(const std::vector<AttributeVector>& attrs) {
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    if (attrs[i].popcount() == 0)
      throw Error(ErrorKind::InvalidAttribute, "attribute vector " + std::to_string(i) + " is all zero");
    if (attrs[i].schema_version != attrs.front().schema_version)
      throw Error(ErrorKind::Schema, "attribute vectors mix schema versions");
  }
}

}  // namespace

TargetMatrix TargetMatrix::one_hot(std::size_t n) {
  std::vector<double> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) m[i * n + i] = 1.0;
  return {Tensor::matrix(n, n, std::move(m)), TargetKind::OneHot};
}

CrossAttentionBlock CrossAttentionBlock::near_identity(std::size_t dim, double noise, Rng& rng) {
  std::uniform_real_distribution<double> jitter(-noise, noise);
  auto make = [&] {
    std::vector<double> w(dim * dim);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) w[i * dim + j] = (i == j ? 1.0 : 0.0) + (noise > 0 ? jitter(rng) : 0.0);
    return Tensor::matrix(dim, dim, std::move(w), true);
  };
  Tensor q = make();
  Tensor k = make();
  Tensor v = make();
  return {q, k, v};
}

std::pair<SimilarityMatrix, SimilarityMatrix> cosine_similarity_matrices(const EmbeddingBatch& v,
                                                                         const EmbeddingBatch& t) {
  if (v.matrix.shape() != t.matrix.shape())
    throw Error(ErrorKind::Dimension, "image batch " + shape_string(v.matrix.shape()) +
                                          " and text batch " + shape_string(t.matrix.shape()) +
                                          " differ");
  check_normalized(v, "image");
  check_normalized(t, "text");
  Tensor s = matmul(v.matrix, transpose(t.matrix));
  Tensor st = transpose(s);
  return {SimilarityMatrix{s, Direction::VisionToText}, SimilarityMatrix{st, Direction::TextToVision}};
}

Tensor morph_loss(const SimilarityMatrix& sv, const SimilarityMatrix& st, const TargetMatrix& mv,
                  const TargetMatrix& mt, double temperature) {
  check_pair(sv, st);
  const Tensor a = soft_cross_entropy(sv.scores, mv.values, temperature);
  const Tensor b = soft_cross_entropy(st.scores, mt.values, temperature);
  return scale(add(a, b), 0.5);
}

Tensor detection_loss(const SimilarityMatrix& sv, const SimilarityMatrix& st, double temperature) {
  check_pair(sv, st);
  const TargetMatrix y = TargetMatrix::one_hot(sv.scores.rows());
  return morph_loss(sv, st, y, y, temperature);
}

std::pair<TargetMatrix, TargetMatrix> morphology_targets(const std::vector<AttributeVector>& av,
                                                         const std::vector<AttributeVector>& at) {
  if (av.size() != at.size())
    throw Error(ErrorKind::Dimension, "attribute lists differ in length");
  if (av.empty()) throw Error(ErrorKind::EmptyInput, "empty attribute list");
  check_attrs(av);
  check_attrs(at);
  if (av.front().schema_version != at.front().schema_version)
    throw Error(ErrorKind::Schema, "image and text attributes use different schemas");
  return {cosine_targets(av, at, TargetKind::MorphologySoft),
          cosine_targets(at, av, TargetKind::MorphologySoft)};
}

Tensor attention_weights(const CrossAttentionBlock& block, const Tensor& queries,
                         const Tensor& keys_values) {
  if (keys_values.rank() != 2 || keys_values.rows() == 0)
    throw Error(ErrorKind::EmptyAttendee, "cross-attention needs at least one key/value row");
  const Tensor q = matmul(queries, transpose(block.w_query));
  const Tensor k = matmul(keys_values, transpose(block.w_key));
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(block.dim()));
  return softmax_rows(scale(matmul(q, transpose(k)), inv_sqrt_d));
}

Tensor cross_attend(const CrossAttentionBlock& block, const Tensor& queries,
                    const Tensor& keys_values) {
  const Tensor alpha = attention_weights(block, queries, keys_values);
  return matmul(alpha, matmul(keys_values, transpose(block.w_value)));
}

PatientEmbedding aggregate_patient(const Tensor& attended_v, const Tensor& attended_t,
                                   const std::vector<AttributeVector>& attrs) {
  if (attended_v.rank() != 2 || attended_v.rows() == 0 || attended_t.rank() != 2 ||
      attended_t.rows() == 0)
    throw Error(ErrorKind::EmptyInput, "patient aggregation needs at least one image and one text row");
  auto mean_unit = [](const Tensor& x, const char* which) {
    const Tensor m = mean_rows(x);
    double ss = 0.0;
    for (double v : m.data()) ss += v * v;
    if (!(std::sqrt(ss) >= kNormEpsilon))
      throw Error(ErrorKind::DegenerateAggregate, std::string(which) + " rows cancel to zero");
    return l2_normalize_rows(m);
  };
  return {mean_unit(attended_v, "image"), mean_unit(attended_t, "text"), union_attributes(attrs)};
}

Tensor union_loss(const std::vector<PatientEmbedding>& patients, double temperature,
                  bool soft_targets) {
  if (patients.size() < 2)
    throw Error(ErrorKind::DegenerateBatch, "union loss needs at least two patients");
  std::vector<Tensor> vs, ts;
  std::vector<AttributeVector> attrs;
  for (const PatientEmbedding& p : patients) {
    vs.push_back(p.v_hat);
    ts.push_back(p.t_hat);
    attrs.push_back(p.union_attributes);
  }
  const EmbeddingBatch v{concat_rows(vs), true};
  const EmbeddingBatch t{concat_rows(ts), true};
  const auto [sv, st] = cosine_similarity_matrices(v, t);
  if (!soft_targets) return detection_loss(sv, st, temperature);
  check_attrs(attrs);
  const TargetMatrix mv = cosine_targets(attrs, attrs, TargetKind::UnionSoft);
  const TargetMatrix mt = cosine_targets(attrs, attrs, TargetKind::UnionSoft);
  return morph_loss(sv, st, mv, mt, temperature);
}

}  // namespace scopealign
