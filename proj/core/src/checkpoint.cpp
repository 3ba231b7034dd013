#include "scopealign/checkpoint.hpp"

#include "scopealign/error.hpp"
#include "json_text.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace scopealign {

using json_text::json;

namespace {

Tensor copy_tensor(const Tensor& t, bool trainable) {
  const auto d = t.data();
  return Tensor::from(t.shape(), std::vector<double>(d.begin(), d.end()), trainable);
}

json tensor_json(const Tensor& t) {
  const auto d = t.data();
  return {{"shape", t.shape()}, {"data", json_text::doubles({d.begin(), d.end()})}};
}

Tensor tensor_from(const json& j, std::string_view what) {
  try {
    Shape shape = json_text::require(j, "shape").get<Shape>();
    return Tensor::from(std::move(shape), json_text::to_doubles(json_text::require(j, "data"), what),
                        true);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string fingerprint_hex(std::string_view text) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

Model Model::initialize(const EncoderDims& dims, Vocabulary vocab, std::uint64_t seed) {
  Rng vision_rng = make_rng(seed, "init-vision");
  Rng text_rng = make_rng(seed, "init-text");
  return Model{VisionEncoder(dims, vision_rng), TextEncoder(std::move(vocab), dims, text_rng),
               std::nullopt};
}

Model Model::clone(bool trainable) const {
  const auto vp = vision.parameters();
  const auto tp = text.parameters();
  Model m{VisionEncoder(copy_tensor(vp[0], trainable), copy_tensor(vp[1], trainable),
                        copy_tensor(vp[2], trainable), copy_tensor(vp[3], trainable)),
          TextEncoder(text.vocabulary(), copy_tensor(tp[0], trainable), copy_tensor(tp[1], trainable)),
          std::nullopt};
  if (cross_attention)
    m.cross_attention = CrossAttentionBlock{copy_tensor(cross_attention->w_query, trainable),
                                            copy_tensor(cross_attention->w_key, trainable),
                                            copy_tensor(cross_attention->w_value, trainable)};
  return m;
}

std::vector<Tensor> Model::encoder_parameters() const {
  auto p = vision.parameters();
  for (auto& t : text.parameters()) p.push_back(t);
  return p;
}

std::vector<Tensor> Model::parameters() const {
  auto p = encoder_parameters();
  if (cross_attention)
    for (auto& t : cross_attention->parameters()) p.push_back(t);
  return p;
}

std::string StageCheckpoint::to_json() const {
  const auto vp = model.vision.parameters();
  const auto tp = model.text.parameters();
  json doc = {
      {"format_version", format_version},
      {"stage", stage},
      {"temperature", temperature},
      {"config_fingerprint", config_fingerprint},
      {"corpus_fingerprint", corpus_fingerprint},
      {"schema_version", schema_version},
      {"vision", {{"w1", tensor_json(vp[0])}, {"b1", tensor_json(vp[1])},
                  {"w2", tensor_json(vp[2])}, {"b2", tensor_json(vp[3])}}},
      {"text", {{"vocabulary", model.text.vocabulary().tokens()},
                {"embedding", tensor_json(tp[0])},
                {"projection", tensor_json(tp[1])}}},
      {"cross_attention", nullptr},
  };
  if (model.cross_attention)
    doc["cross_attention"] = {{"w_query", tensor_json(model.cross_attention->w_query)},
                              {"w_key", tensor_json(model.cross_attention->w_key)},
                              {"w_value", tensor_json(model.cross_attention->w_value)}};
  return json_text::dump(doc);
}

StageCheckpoint StageCheckpoint::from_json(std::string_view text) {
  using namespace json_text;
  const json doc = parse(text, "checkpoint");
  const auto version = static_cast<int>(get_u64(doc, "format_version"));
  if (version != kCheckpointFormatVersion)
    throw Error(ErrorKind::Parse, "unsupported checkpoint format version " + std::to_string(version));
  const json& v = require(doc, "vision");
  const json& t = require(doc, "text");
  std::vector<std::string> vocab;
  try {
    vocab = require(t, "vocabulary").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("checkpoint vocabulary: ") + e.what());
  }
  StageCheckpoint c{
      version,
      get_string(doc, "stage"),
      Model{VisionEncoder(tensor_from(require(v, "w1"), "w1"), tensor_from(require(v, "b1"), "b1"),
                          tensor_from(require(v, "w2"), "w2"), tensor_from(require(v, "b2"), "b2")),
            TextEncoder(Vocabulary(std::move(vocab)), tensor_from(require(t, "embedding"), "embedding"),
                        tensor_from(require(t, "projection"), "projection")),
            std::nullopt},
      get_double(doc, "temperature"),
      get_string(doc, "config_fingerprint"),
      get_string(doc, "corpus_fingerprint"),
      get_string(doc, "schema_version"),
  };
  const json& ca = require(doc, "cross_attention");
  if (!ca.is_null())
    c.model.cross_attention = CrossAttentionBlock{tensor_from(require(ca, "w_query"), "w_query"),
                                                  tensor_from(require(ca, "w_key"), "w_key"),
                                                  tensor_from(require(ca, "w_value"), "w_value")};
  if (c.model.vision.embed_dim() != c.model.text.embed_dim())
    throw Error(ErrorKind::Dimension, "vision and text embedding dimensions differ");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const StageCheckpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << ckpt.to_json() << '\n';
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

StageCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return StageCheckpoint::from_json(ss.str());
}

}  // namespace scopealign
