#include "scopealign/evaluation.hpp"

#include "scopealign/error.hpp"
#include "scopealign/log.hpp"
#include "scopealign/pipeline.hpp"
#include "json_text.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace scopealign {

using json_text::json;

std::vector<int> EvalTask::labels() const {
  std::vector<int> out;
  out.reserve(items.size());
  for (const EvalItem& it : items) out.push_back(it.label);
  return out;
}

void EvalTask::validate() const {
  std::size_t pos = 0;
  for (const EvalItem& it : items) {
    if (it.label != 0 && it.label != 1)
      throw Error(ErrorKind::Config, name + ": item " + it.id + " has label " + std::to_string(it.label));
    pos += static_cast<std::size_t>(it.label);
  }
  if (pos == 0 || pos == items.size())
    throw Error(ErrorKind::MetricUndefined, name + ": both classes must be present");
}

std::string EvalSetConfig::to_json() const {
  return json_text::dump(json{{"detection_normal", detection_normal},
                              {"detection_polyp", detection_polyp},
                              {"malignancy_malignant", malignancy_malignant},
                              {"malignancy_benign", malignancy_benign},
                              {"seed", seed}});
}

EvalSetConfig EvalSetConfig::from_json(std::string_view text) {
  using namespace json_text;
  const json doc = parse(text, "eval config");
  EvalSetConfig c;
  c.detection_normal = get_u64(doc, "detection_normal", c.detection_normal);
  c.detection_polyp = get_u64(doc, "detection_polyp", c.detection_polyp);
  c.malignancy_malignant = get_u64(doc, "malignancy_malignant", c.malignancy_malignant);
  c.malignancy_benign = get_u64(doc, "malignancy_benign", c.malignancy_benign);
  c.seed = get_u64(doc, "seed", c.seed);
  return c;
}

EvalTask detection_task(const SyntheticWorld& world, std::size_t n_normal, std::size_t n_polyp,
                        std::uint64_t seed) {
  EvalTask t{"detection", {}, std::string(kPositiveSentence), std::string(kNegativeSentence)};
  for (std::size_t i = 0; i < n_normal; ++i) {
    Rng rng = make_rng(seed, "eval-detection-normal", i);
    t.items.push_back({"normal-" + std::to_string(i), world.normal_frame(rng), 0});
  }
  for (std::size_t i = 0; i < n_polyp; ++i) {
    Rng rng = make_rng(seed, "eval-detection-polyp", i);
    const Assignment a = world.random_assignment(rng);
    t.items.push_back({"polyp-" + std::to_string(i), world.polyp_frame(a, rng), 1});
  }
  return t;
}

EvalTask malignancy_task(const SyntheticWorld& world, std::size_t n_malignant,
                         std::size_t n_benign, std::uint64_t seed) {
  const AttributeSchema& schema = world.schema();
  const std::size_t aspect = schema.malignancy_aspect();
  const std::size_t malignant = schema.malignant_value();
  const std::size_t benign = 1 - malignant;
  EvalTask t{"malignancy", {}, std::string(kMalignantPrompt), std::string(kBenignPrompt)};
  auto add = [&](std::size_t n, std::size_t value, int label, const char* tag) {
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng = make_rng(seed, std::string("eval-malignancy-") + tag, i);
      Assignment a = world.random_assignment(rng);
      a[aspect] = value;
      t.items.push_back({std::string(tag) + "-" + std::to_string(i), world.polyp_frame(a, rng), label});
    }
  };
  add(n_benign, benign, 0, "benign");
  add(n_malignant, malignant, 1, "malignant");
  return t;
}

EvalTask make_task(std::string_view name, const SyntheticWorld& world, const EvalSetConfig& cfg) {
  if (name == "detection")
    return detection_task(world, cfg.detection_normal, cfg.detection_polyp, cfg.seed);
  if (name == "malignancy")
    return malignancy_task(world, cfg.malignancy_malignant, cfg.malignancy_benign, cfg.seed);
  throw Error(ErrorKind::Config, "unknown task '" + std::string(name) + "'");
}

namespace {

Tensor item_embeddings(const Model& frozen, const std::vector<EvalItem>& items) {
  std::vector<const std::vector<double>*> frames;
  frames.reserve(items.size());
  for (const EvalItem& it : items) frames.push_back(&it.image);
  if (frames.empty()) throw Error(ErrorKind::EmptyInput, "no items to embed");
  return encode_images(frozen.vision, frames).matrix;
}

}  // namespace

std::vector<std::vector<double>> embed_items(const StageCheckpoint& ckpt,
                                             const std::vector<EvalItem>& items) {
  const Tensor m = item_embeddings(ckpt.model.clone(false), items);
  std::vector<std::vector<double>> out(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m.at(i, j);
  return out;
}

std::vector<double> zero_shot_scores(const StageCheckpoint& ckpt, const EvalTask& task) {
  const Model frozen = ckpt.model.clone(false);
  const Tensor v = item_embeddings(frozen, task.items);
  const Tensor t = encode_texts(frozen.text, {task.prompt_pos, task.prompt_neg}).matrix;
  const Tensor sims = matmul(v, transpose(t));
  std::vector<double> out(task.items.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = prompt_probability(sims.at(i, 0), sims.at(i, 1), ckpt.temperature);
  return out;
}

Split stratified_split(const std::vector<int>& labels, double train_ratio, std::uint64_t seed) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0))
    throw Error(ErrorKind::Config, "train ratio must lie in (0,1)");
  Split s;
  for (int cls : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) idx.push_back(i);
    Rng rng = make_rng(seed, "split", static_cast<std::uint64_t>(cls));
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n = static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(idx.size())));
    if (idx.size() >= 2) n = std::clamp<std::size_t>(n, 1, idx.size() - 1);
    s.train.insert(s.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n));
    s.test.insert(s.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

namespace {

double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

LinearProbe LinearProbe::fit(const std::vector<std::vector<double>>& features,
                             const std::vector<int>& labels, std::size_t steps, double lr) {
  if (features.empty() || features.size() != labels.size())
    throw Error(ErrorKind::Dimension, "probe needs one label per feature row");
  const std::size_t d = features.front().size();
  const double n = static_cast<double>(features.size());
  LinearProbe p{std::vector<double>(d, 0.0), 0.0};
  std::vector<double> gw(d);
  for (std::size_t step = 0; step < steps; ++step) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < features.size(); ++i) {
      const double r = p.predict(features[i]) - labels[i];
      for (std::size_t j = 0; j < d; ++j) gw[j] += r * features[i][j];
      gb += r;
    }
    for (std::size_t j = 0; j < d; ++j) p.weights[j] -= lr * gw[j] / n;
    p.bias -= lr * gb / n;
  }
  return p;
}

double LinearProbe::predict(const std::vector<double>& x) const {
  if (x.size() != weights.size())
    throw Error(ErrorKind::Dimension, "probe expects " + std::to_string(weights.size()) +
                                          " features, got " + std::to_string(x.size()));
  double z = bias;
  for (std::size_t j = 0; j < x.size(); ++j) z += weights[j] * x[j];
  return sigmoid(z);
}

FewShotResult few_shot_probe(const StageCheckpoint& ckpt, const EvalTask& task, double train_ratio,
                             std::uint64_t seed) {
  const std::vector<int> labels = task.labels();
  FewShotResult r;
  r.split = stratified_split(labels, train_ratio, seed);
  const auto emb = embed_items(ckpt, task.items);

  std::vector<std::vector<double>> xs;
  std::vector<int> ys;
  for (std::size_t i : r.split.train) {
    xs.push_back(emb[i]);
    ys.push_back(labels[i]);
  }
  const auto pos = std::count(ys.begin(), ys.end(), 1);
  r.degenerate = pos == 0 || static_cast<std::size_t>(pos) == ys.size();
  LinearProbe probe;
  if (r.degenerate)
    warn(task.name + ": train split holds a single class, scoring with the majority rate");
  else
    probe = LinearProbe::fit(xs, ys);
  const double majority = ys.empty() ? 0.5 : static_cast<double>(pos) / static_cast<double>(ys.size());
  for (std::size_t i : r.split.test) {
    r.scores.push_back(r.degenerate ? majority : probe.predict(emb[i]));
    r.labels.push_back(labels[i]);
  }
  return r;
}

MetricReport evaluate_task(const StageCheckpoint& ckpt, const EvalTask& task,
                           std::string_view setting, std::uint64_t seed) {
  task.validate();
  if (setting == "zero-shot") {
    const auto scores = zero_shot_scores(ckpt, task);
    const auto labels = task.labels();
    return MetricReport::compute(scores, labels, "zero-shot");
  }
  constexpr std::string_view prefix = "few-shot:";
  if (setting.substr(0, prefix.size()) == prefix) {
    const std::string ratio_text(setting.substr(prefix.size()));
    std::size_t used = 0;
    double ratio = 0.0;
    try {
      ratio = std::stod(ratio_text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != ratio_text.size())
      throw Error(ErrorKind::Config, "bad few-shot ratio '" + ratio_text + "'");
    const FewShotResult fs = few_shot_probe(ckpt, task, ratio, seed);
    return MetricReport::compute(fs.scores, fs.labels, std::string(setting));
  }
  throw Error(ErrorKind::Config, "unknown setting '" + std::string(setting) +
                                     "' (expected zero-shot or few-shot:<ratio>)");
}

std::string metric_report_json(const MetricReport& r, const std::string& task,
                               const std::string& config_fingerprint,
                               const std::string& corpus_fingerprint) {
  return json_text::dump(json{{"task", task},
                              {"setting", r.setting},
                              {"auroc", r.auroc},
                              {"aupr", r.aupr},
                              {"n_pos", r.n_pos},
                              {"n_neg", r.n_neg},
                              {"config_fingerprint", config_fingerprint},
                              {"corpus_fingerprint", corpus_fingerprint}});
}

std::string export_embeddings_csv(const StageCheckpoint& ckpt, const std::vector<EvalItem>& items) {
  const auto emb = embed_items(ckpt, items);
  std::string out = "item_id,label";
  for (std::size_t j = 0; j < ckpt.model.embed_dim(); ++j) out += ",e" + std::to_string(j);
  out += '\n';
  for (std::size_t i = 0; i < items.size(); ++i) {
    out += items[i].id + "," + std::to_string(items[i].label);
    for (double x : emb[i]) out += "," + json_text::format_double(x);
    out += '\n';
  }
  return out;
}

}  // namespace scopealign
