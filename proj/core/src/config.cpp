#include "scopealign/config.hpp"

#include "scopealign/checkpoint.hpp"
#include "scopealign/error.hpp"
#include "json_text.hpp"

namespace scopealign {

using json_text::json;

namespace {

const json& section(const json& doc, const char* key) {
  static const json empty = json::object();
  const auto it = doc.find(key);
  if (it == doc.end()) return empty;
  if (!it->is_object()) throw Error(ErrorKind::Config, std::string("section '") + key + "' must be an object");
  return *it;
}

void merge(json& base, const json& overrides) {
  for (auto it = overrides.begin(); it != overrides.end(); ++it) base[it.key()] = it.value();
}

std::vector<std::string> strings(const json& obj, const char* key, std::vector<std::string> fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    return it->get<std::vector<std::string>>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::Config, std::string("'") + key + "' must be a list of strings");
  }
}

TrainingConfig stage_config(const json& doc, int stage, std::uint64_t seed, double prevalence) {
  json s = json::parse(TrainingConfig::defaults_for_stage(stage).to_json());
  s["seed"] = seed;
  s["prevalence_estimate"] = prevalence;
  merge(s, section(doc, ("stage" + std::to_string(stage)).c_str()));
  return TrainingConfig::from_json(s.dump(), stage);
}

}  // namespace

RunConfig RunConfig::defaults(std::uint64_t seed) {
  return from_json(json_text::dump(json{{"seed", seed}}));
}

RunConfig RunConfig::from_json(std::string_view text) {
  using namespace json_text;
  const json doc = parse(text, "run config");
  if (!doc.is_object()) throw Error(ErrorKind::Config, "run config must be a JSON object");
  RunConfig c;
  c.seed = get_u64(doc, "seed", 0);
  if (doc.contains("schema")) c.schema_path = get_string(doc, "schema");
  if (doc.contains("out")) c.out_dir = get_string(doc, "out");

  json gen = json::parse(GeneratorConfig{}.to_json());
  gen["seed"] = c.seed;
  merge(gen, section(doc, "generator"));
  c.generator = GeneratorConfig::from_json(gen.dump());

  const json& model = section(doc, "model");
  c.pipeline.dims.hidden_dim = get_u64(model, "hidden_dim", c.pipeline.dims.hidden_dim);
  c.pipeline.dims.embed_dim = get_u64(model, "embed_dim", c.pipeline.dims.embed_dim);
  c.pipeline.dims.image_dim = c.generator.image_dim;
  if (c.pipeline.dims.hidden_dim == 0 || c.pipeline.dims.embed_dim == 0)
    throw Error(ErrorKind::Config, "model dimensions must be positive");

  const double prevalence = c.generator.polyp_frame_prevalence > 0.0 ? c.generator.polyp_frame_prevalence
                                                                     : TrainingConfig{}.prevalence_estimate;
  c.pipeline.stage1 = stage_config(doc, 1, c.seed, prevalence);
  c.pipeline.stage2 = stage_config(doc, 2, c.seed, prevalence);
  c.pipeline.stage3 = stage_config(doc, 3, c.seed, prevalence);
  const json& pl = section(doc, "pipeline");
  c.pipeline.use_single_polyp = get_bool(pl, "use_single_polyp", true);
  c.pipeline.use_multi_polyp = get_bool(pl, "use_multi_polyp", true);
  c.pipeline.seed = c.seed;

  json ev = json::parse(EvalSetConfig{}.to_json());
  ev["seed"] = derive_seed(c.seed, "eval-sets");
  merge(ev, section(doc, "eval"));
  c.eval = EvalSetConfig::from_json(ev.dump());

  const json& ab = section(doc, "ablation");
  c.ablation.pipeline = c.pipeline;
  c.ablation.eval = c.eval;
  if (ab.contains("eval")) {
    json abe = json::parse(c.eval.to_json());
    merge(abe, section(ab, "eval"));
    c.ablation.eval = EvalSetConfig::from_json(abe.dump());
  }
  c.ablation.seeds = {c.seed, c.seed + 1, c.seed + 2};
  if (ab.contains("seeds")) {
    try {
      c.ablation.seeds = ab.at("seeds").get<std::vector<std::uint64_t>>();
    } catch (const json::exception&) {
      throw Error(ErrorKind::Config, "'ablation.seeds' must be a list of non-negative integers");
    }
  }
  c.ablation.variants = strings(ab, "variants", c.ablation.variants);
  c.ablation.tasks = strings(ab, "tasks", c.ablation.tasks);
  c.ablation.settings = strings(ab, "settings", c.ablation.settings);
  for (const auto& v : c.ablation.variants) parse_variant(v);
  return c;
}

std::string RunConfig::canonical_json() const {
  const auto sub = [](const std::string& text) { return json::parse(text); };
  const json doc = {
      {"seed", seed},
      {"schema", schema_path},
      {"generator", sub(generator.to_json())},
      {"pipeline", sub(pipeline.to_json())},
      {"eval", sub(eval.to_json())},
      {"ablation", {{"eval", sub(ablation.eval.to_json())},
                    {"seeds", ablation.seeds},
                    {"variants", ablation.variants},
                    {"tasks", ablation.tasks},
                    {"settings", ablation.settings}}},
  };
  return json_text::dump(doc);
}

std::string RunConfig::fingerprint() const { return fingerprint_hex(canonical_json()); }

}  // namespace scopealign
