#include "scopealign/pipeline.hpp"

#include "scopealign/adamw.hpp"
#include "scopealign/error.hpp"
#include "scopealign/log.hpp"
#include "json_text.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace scopealign {

using json_text::json;

// --- Corpus ------------------------------------------------------------------

Corpus Corpus::from_cases(std::vector<MedicalCase> cases, AttributeSchema schema,
                          std::string fingerprint) {
  Corpus c{std::move(cases), {}, std::move(schema), std::move(fingerprint)};
  c.reports.reserve(c.cases.size());
  for (const MedicalCase& mc : c.cases) {
    c.reports.push_back(parse_report(mc.sentences, c.schema, mc.case_id));
    if (c.reports.back().polyp_sentences.size() != mc.polyp_count())
      throw Error(ErrorKind::Parse, mc.case_id + ": report has " +
                                        std::to_string(c.reports.back().polyp_sentences.size()) +
                                        " polyp sentences, record lists " +
                                        std::to_string(mc.polyp_count()));
  }
  return c;
}

std::vector<std::string> Corpus::vocabulary_sentences() const {
  std::vector<std::string> out{std::string(kPositiveSentence), std::string(kNegativeSentence)};
  for (const MedicalCase& c : cases) out.insert(out.end(), c.sentences.begin(), c.sentences.end());
  return out;
}

std::size_t Corpus::image_dim() const {
  if (cases.empty()) throw Error(ErrorKind::EmptyInput, "empty corpus");
  return cases.front().images.front().size();
}

std::vector<std::size_t> Corpus::single_polyp_cases() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < reports.size(); ++i)
    if (reports[i].polyp_sentences.size() == 1) out.push_back(i);
  return out;
}

std::vector<std::size_t> Corpus::multi_polyp_cases() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < reports.size(); ++i)
    if (reports[i].polyp_sentences.size() > 1) out.push_back(i);
  return out;
}

// --- TrainingConfig ----------------------------------------------------------------

TrainingConfig TrainingConfig::defaults_for_stage(int stage) {
  TrainingConfig c;
  c.stage = stage;
  c.batch_size = stage == 3 ? 8 : 32;
  return c;
}

void TrainingConfig::validate() const {
  if (stage < 1 || stage > 3) throw Error(ErrorKind::Config, "stage must be 1, 2 or 3");
  if (batch_size < 2) throw Error(ErrorKind::Config, "batch_size must be at least 2");
  if (warmup_epochs > epochs) throw Error(ErrorKind::Config, "warmup_epochs exceeds epochs");
  if (!(learning_rate >= 0.0)) throw Error(ErrorKind::Config, "learning_rate must be non-negative");
  if (!(weight_decay >= 0.0)) throw Error(ErrorKind::Config, "weight_decay must be non-negative");
  if (!(temperature > 0.0)) throw Error(ErrorKind::Config, "temperature must be positive");
  if (!(prevalence_estimate > 0.0 && prevalence_estimate <= 1.0))
    throw Error(ErrorKind::Config, "prevalence_estimate must lie in (0,1]");
  if (!(attention_init_noise >= 0.0))
    throw Error(ErrorKind::Config, "attention_init_noise must be non-negative");
}

std::string TrainingConfig::to_json() const {
  return json_text::dump(json{{"stage", stage},
                              {"batch_size", batch_size},
                              {"epochs", epochs},
                              {"warmup_epochs", warmup_epochs},
                              {"learning_rate", learning_rate},
                              {"weight_decay", weight_decay},
                              {"temperature", temperature},
                              {"prevalence_estimate", prevalence_estimate},
                              {"seed", seed},
                              {"morphology_targets", morphology_targets},
                              {"cross_attention", cross_attention},
                              {"attention_init_noise", attention_init_noise}});
}

TrainingConfig TrainingConfig::from_json(std::string_view text, int stage) {
  using namespace json_text;
  const json doc = parse(text, "training config");
  TrainingConfig c = defaults_for_stage(stage);
  c.batch_size = get_u64(doc, "batch_size", c.batch_size);
  c.epochs = get_u64(doc, "epochs", c.epochs);
  c.warmup_epochs = get_u64(doc, "warmup_epochs", c.warmup_epochs);
  c.learning_rate = get_double(doc, "learning_rate", c.learning_rate);
  c.weight_decay = get_double(doc, "weight_decay", c.weight_decay);
  c.temperature = get_double(doc, "temperature", c.temperature);
  c.prevalence_estimate = get_double(doc, "prevalence_estimate", c.prevalence_estimate);
  c.seed = get_u64(doc, "seed", c.seed);
  c.morphology_targets = get_bool(doc, "morphology_targets", c.morphology_targets);
  c.cross_attention = get_bool(doc, "cross_attention", c.cross_attention);
  c.attention_init_noise = get_double(doc, "attention_init_noise", c.attention_init_noise);
  c.validate();
  return c;
}

std::string TrainingConfig::fingerprint(const std::string& schema_version) const {
  return fingerprint_hex(to_json() + "|" + schema_version);
}

double warmup_learning_rate(const TrainingConfig& cfg, std::size_t epoch) {
  if (cfg.warmup_epochs == 0 || epoch >= cfg.warmup_epochs) return cfg.learning_rate;
  return cfg.learning_rate * static_cast<double>(epoch + 1) / static_cast<double>(cfg.warmup_epochs);
}

// --- FilteredFrameSet ----------------------------------------------------------------

double FilteredFrameSet::purity(const std::vector<MedicalCase>& cases) const {
  std::size_t kept = 0, hits = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (!cases[i].polyp_positive) continue;
    for (std::size_t f : retained.at(i)) {
      ++kept;
      hits += cases[i].frame_labels.at(f) ? 1 : 0;
    }
  }
  return kept ? static_cast<double>(hits) / static_cast<double>(kept) : 0.0;
}

std::size_t FilteredFrameSet::retained_positive_frames(const std::vector<MedicalCase>& cases) const {
  std::size_t kept = 0;
  for (std::size_t i = 0; i < cases.size(); ++i)
    if (cases[i].polyp_positive) kept += retained.at(i).size();
  return kept;
}

std::string FilteredFrameSet::to_json() const {
  json probs = json::array();
  for (const auto& p : probabilities) probs.push_back(json_text::doubles(p));
  return json_text::dump(json{{"retained", retained}, {"probabilities", probs}});
}

FilteredFrameSet FilteredFrameSet::from_json(std::string_view text) {
  const json doc = json_text::parse(text, "filtered frame set");
  FilteredFrameSet f;
  try {
    f.retained = json_text::require(doc, "retained").get<std::vector<std::vector<std::size_t>>>();
    for (const json& p : json_text::require(doc, "probabilities"))
      f.probabilities.push_back(json_text::to_doubles(p, "probabilities"));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("filtered frame set: ") + e.what());
  }
  return f;
}

FilteredFrameSet FilteredFrameSet::all_frames(const std::vector<MedicalCase>& cases) {
  FilteredFrameSet f;
  for (const MedicalCase& c : cases) {
    std::vector<std::size_t> idx(c.frame_count());
    std::iota(idx.begin(), idx.end(), 0);
    f.retained.push_back(std::move(idx));
    f.probabilities.emplace_back();
  }
  return f;
}

// --- training loop -----------------------------------------------------------------------

namespace {

// Returns the mean loss over the epoch's usable batches, or nothing when every
// batch was skipped.
template <class BatchLoss>
TrainResult train_loop(StageCheckpoint ckpt, std::vector<std::size_t> ids, const TrainingConfig& cfg,
                       std::string_view stream, BatchLoss&& batch_loss) {
  cfg.validate();
  TrainResult result{std::move(ckpt), {}, 0, 0};
  const Model& model = result.checkpoint.model;
  AdamWState opt;
  opt.learning_rate = cfg.learning_rate;
  opt.weight_decay = cfg.weight_decay;
  std::vector<Tensor> params = model.parameters();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    opt.learning_rate = warmup_learning_rate(cfg, epoch);
    Rng shuffle_rng = make_rng(cfg.seed, std::string(stream) + "-shuffle", epoch);
    std::shuffle(ids.begin(), ids.end(), shuffle_rng);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < ids.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(ids.size(), start + cfg.batch_size);
      const std::span<const std::size_t> batch(ids.data() + start, end - start);
      if (batch.size() < 2) {
        warn(std::string(stream) + ": skipping batch of " + std::to_string(batch.size()) + " case(s)");
        ++result.skipped_batches;
        continue;
      }
      const Tensor loss = batch_loss(model, batch, epoch);
      backward(loss);
      adamw_step(params, opt);
      total += loss.item();
      ++batches;
    }
    if (batches) result.epoch_losses.push_back(total / static_cast<double>(batches));
  }
  return result;
}

StageCheckpoint derive_checkpoint(const StageCheckpoint& from, std::string stage,
                                  const TrainingConfig& cfg, const std::string& schema_version) {
  StageCheckpoint c = from;
  c.model = from.model.clone();
  c.stage = std::move(stage);
  c.temperature = cfg.temperature;
  c.config_fingerprint = cfg.fingerprint(schema_version);
  return c;
}

std::size_t pick(std::span<const std::size_t> frames, Rng rng) {
  if (frames.empty()) throw Error(ErrorKind::EmptyInput, "case has no retained frames");
  std::uniform_int_distribution<std::size_t> d(0, frames.size() - 1);
  return frames[d(rng)];
}

TrainResult stage1_loop(const Corpus& corpus, const FilteredFrameSet& filtered,
                        const StageCheckpoint& init, const TrainingConfig& cfg, std::string tag) {
  if (filtered.retained.size() != corpus.cases.size())
    throw Error(ErrorKind::Dimension, "filtered frame set does not cover the corpus");
  std::vector<std::size_t> ids(corpus.cases.size());
  std::iota(ids.begin(), ids.end(), 0);
  const double tau = cfg.temperature;
  return train_loop(
      derive_checkpoint(init, std::move(tag), cfg, corpus.schema.version()), std::move(ids), cfg, "stage1",
      [&](const Model& model, std::span<const std::size_t> batch, std::size_t epoch) {
        std::vector<const std::vector<double>*> frames;
        std::vector<std::string> texts;
        for (std::size_t ci : batch) {
          const std::size_t f = pick(filtered.retained[ci], make_rng(cfg.seed, "stage1-frame", epoch, ci));
          frames.push_back(&corpus.cases[ci].images[f]);
          texts.emplace_back(standardized_sentence(corpus.reports[ci]));
        }
        const auto [sv, st] = cosine_similarity_matrices(encode_images(model.vision, frames),
                                                         encode_texts(model.text, texts));
        return detection_loss(sv, st, tau);
      });
}

std::vector<double> score_with(const Model& frozen, double tau, const MedicalCase& c) {
  const EmbeddingBatch prompts = encode_texts(
      frozen.text, {std::string(kPositiveSentence), std::string(kNegativeSentence)});
  const EmbeddingBatch v = encode_images(frozen.vision, std::span<const std::vector<double>>(c.images));
  const Tensor sims = matmul(v.matrix, transpose(prompts.matrix));
  std::vector<double> out(c.frame_count());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = prompt_probability(sims.at(k, 0), sims.at(k, 1), tau);
  return out;
}

}  // namespace

double prompt_probability(double pos, double neg, double tau) {
  const double a = pos / tau, b = neg / tau;
  const double m = std::max(a, b);
  const double ea = std::exp(a - m), eb = std::exp(b - m);
  return ea / (ea + eb);
}

StageCheckpoint initial_checkpoint(const Corpus& corpus, const EncoderDims& dims,
                                   std::uint64_t seed, double temperature) {
  EncoderDims d = dims;
  d.image_dim = corpus.image_dim();
  StageCheckpoint c{kCheckpointFormatVersion, "init",
                    Model::initialize(d, Vocabulary::build(corpus.vocabulary_sentences()), seed),
                    temperature, {}, corpus.fingerprint, corpus.schema.version()};
  return c;
}

TrainResult stage1_round1(const Corpus& corpus, const StageCheckpoint& init, const TrainingConfig& cfg) {
  return stage1_loop(corpus, FilteredFrameSet::all_frames(corpus.cases), init, cfg, "stage1-round1");
}

TrainResult stage1_round2(const Corpus& corpus, const FilteredFrameSet& filtered,
                          const StageCheckpoint& round1, const TrainingConfig& cfg) {
  return stage1_loop(corpus, filtered, round1, cfg, "stage1-round2");
}

std::vector<double> score_frames(const StageCheckpoint& ckpt, const MedicalCase& c) {
  return score_with(ckpt.model.clone(false), ckpt.temperature, c);
}

std::vector<std::vector<double>> score_corpus(const StageCheckpoint& ckpt,
                                              const std::vector<MedicalCase>& cases) {
  const Model frozen = ckpt.model.clone(false);
  std::vector<std::vector<double>> out;
  out.reserve(cases.size());
  for (const MedicalCase& c : cases) out.push_back(score_with(frozen, ckpt.temperature, c));
  return out;
}

std::size_t retained_count(double prevalence_estimate, std::size_t frames) {
  if (!(prevalence_estimate > 0.0 && prevalence_estimate <= 1.0))
    throw Error(ErrorKind::Config, "prevalence_estimate must lie in (0,1]");
  const double x = prevalence_estimate * static_cast<double>(frames);
  const double nearest = std::round(x);
  // 0.3 * 10 is 3.0000000000000004 in binary; treat it as 3.
  const double n = std::abs(x - nearest) < 1e-9 ? nearest : std::ceil(x);
  return std::clamp<std::size_t>(static_cast<std::size_t>(n), 1, frames);
}

FilteredFrameSet prevalence_filter(const std::vector<std::vector<double>>& scores,
                                   double prevalence_estimate,
                                   const std::vector<MedicalCase>& cases, std::uint64_t seed) {
  if (!(prevalence_estimate > 0.0 && prevalence_estimate <= 1.0))
    throw Error(ErrorKind::Config, "prevalence_estimate must lie in (0,1]");
  if (scores.size() != cases.size())
    throw Error(ErrorKind::Dimension, "scores cover " + std::to_string(scores.size()) +
                                          " cases, corpus has " + std::to_string(cases.size()));
  FilteredFrameSet out;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const MedicalCase& c = cases[i];
    if (!c.polyp_positive) {
      Rng rng = make_rng(seed, "negative-frame", i);
      std::uniform_int_distribution<std::size_t> d(0, c.frame_count() - 1);
      out.retained.push_back({d(rng)});
      out.probabilities.push_back(scores[i]);
      continue;
    }
    if (scores[i].size() != c.frame_count())
      throw Error(ErrorKind::Dimension, c.case_id + ": one probability per frame expected");
    std::vector<std::size_t> order(c.frame_count());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[i][a] > scores[i][b]; });
    order.resize(retained_count(prevalence_estimate, c.frame_count()));
    std::sort(order.begin(), order.end());
    out.retained.push_back(std::move(order));
    out.probabilities.push_back(scores[i]);
  }
  return out;
}

// --- stage 2 ----------------------------------------------------------------------------

Tensor stage2_batch_loss(const Model& model, const Corpus& corpus,
                         std::span<const std::size_t> batch, std::span<const std::size_t> frames,
                         const TrainingConfig& cfg) {
  std::vector<const std::vector<double>*> images;
  std::vector<std::string> texts;
  std::vector<AttributeVector> attrs;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const std::size_t ci = batch[b];
    const auto& polyp = corpus.reports[ci].polyp_sentences.at(0);
    images.push_back(&corpus.cases[ci].images.at(frames[b]));
    texts.push_back(polyp.first);
    attrs.push_back(polyp.second);
  }
  const auto [sv, st] = cosine_similarity_matrices(encode_images(model.vision, images),
                                                   encode_texts(model.text, texts));
  if (!cfg.morphology_targets) return detection_loss(sv, st, cfg.temperature);
  // Image- and text-side attribute vectors both come from the one description.
  const auto [mv, mt] = morphology_targets(attrs, attrs);
  return morph_loss(sv, st, mv, mt, cfg.temperature);
}

TrainResult stage2_train(const Corpus& corpus, std::span<const std::size_t> case_indices,
                         const FilteredFrameSet& filtered, const StageCheckpoint& init,
                         const TrainingConfig& cfg) {
  std::vector<std::size_t> ids;
  std::size_t excluded = 0;
  for (std::size_t ci : case_indices) {
    if (corpus.reports.at(ci).polyp_sentences.size() == 1 && !filtered.retained.at(ci).empty())
      ids.push_back(ci);
    else
      ++excluded;
  }
  if (excluded) warn("stage2: excluded " + std::to_string(excluded) + " case(s) without exactly one polyp");
  TrainResult r = train_loop(
      derive_checkpoint(init, "stage2", cfg, corpus.schema.version()), std::move(ids), cfg, "stage2",
      [&](const Model& model, std::span<const std::size_t> batch, std::size_t epoch) {
        std::vector<std::size_t> frames;
        for (std::size_t ci : batch)
          frames.push_back(pick(filtered.retained[ci], make_rng(cfg.seed, "stage2-frame", epoch, ci)));
        return stage2_batch_loss(model, corpus, batch, frames, cfg);
      });
  r.excluded_cases = excluded;
  return r;
}

// --- stage 3 ----------------------------------------------------------------------------

Tensor stage3_batch_loss(const Model& model, const Corpus& corpus,
                         std::span<const std::size_t> batch, const FilteredFrameSet& filtered,
                         const TrainingConfig& cfg) {
  std::vector<const std::vector<double>*> images;
  std::vector<std::string> texts;
  std::vector<std::pair<std::size_t, std::size_t>> frame_span, text_span;
  for (std::size_t ci : batch) {
    frame_span.emplace_back(images.size(), filtered.retained.at(ci).size());
    for (std::size_t f : filtered.retained[ci]) images.push_back(&corpus.cases[ci].images.at(f));
    text_span.emplace_back(texts.size(), corpus.reports[ci].polyp_sentences.size());
    for (const auto& ps : corpus.reports[ci].polyp_sentences) texts.push_back(ps.first);
  }
  const Tensor v_all = encode_images(model.vision, images).matrix;
  const Tensor t_all = encode_texts(model.text, texts).matrix;

  auto rows = [](std::pair<std::size_t, std::size_t> s) {
    std::vector<std::size_t> idx(s.second);
    std::iota(idx.begin(), idx.end(), s.first);
    return idx;
  };
  const bool attend = cfg.cross_attention && model.cross_attention.has_value();
  std::vector<PatientEmbedding> patients;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Tensor v = select_rows(v_all, rows(frame_span[b]));
    const Tensor t = select_rows(t_all, rows(text_span[b]));
    std::vector<AttributeVector> attrs;
    for (const auto& ps : corpus.reports[batch[b]].polyp_sentences) attrs.push_back(ps.second);
    if (attend)
      patients.push_back(aggregate_patient(cross_attend(*model.cross_attention, v, t),
                                           cross_attend(*model.cross_attention, t, v), attrs));
    else
      patients.push_back(aggregate_patient(v, t, attrs));
  }
  return union_loss(patients, cfg.temperature, cfg.morphology_targets);
}

TrainResult stage3_train(const Corpus& corpus, std::span<const std::size_t> case_indices,
                         const FilteredFrameSet& filtered, const StageCheckpoint& init,
                         const TrainingConfig& cfg) {
  std::vector<std::size_t> ids;
  std::size_t excluded = 0;
  for (std::size_t ci : case_indices) {
    if (corpus.reports.at(ci).polyp_sentences.empty()) {
      ++excluded;
    } else if (filtered.retained.at(ci).empty()) {
      warn("stage3: " + corpus.cases[ci].case_id + " has no retained frames");
      ++excluded;
    } else {
      ids.push_back(ci);
    }
  }
  StageCheckpoint start = derive_checkpoint(init, "stage3", cfg, corpus.schema.version());
  Model& model = start.model;
  if (!cfg.cross_attention) {
    model.cross_attention.reset();
  } else if (!model.cross_attention) {
    Rng rng = make_rng(cfg.seed, "init-cross-attention");
    model.cross_attention = CrossAttentionBlock::near_identity(model.embed_dim(), cfg.attention_init_noise, rng);
  }
  TrainResult r = train_loop(
      std::move(start), std::move(ids), cfg, "stage3",
      [&](const Model& m, std::span<const std::size_t> batch, std::size_t) {
        return stage3_batch_loss(m, corpus, batch, filtered, cfg);
      });
  r.excluded_cases = excluded;
  return r;
}

// --- run_all -------------------------------------------------------------------------------

std::string PipelineConfig::to_json() const {
  return json_text::dump(json{{"hidden_dim", dims.hidden_dim},
                              {"embed_dim", dims.embed_dim},
                              {"stage1", json_text::parse(stage1.to_json(), "stage1")},
                              {"stage2", json_text::parse(stage2.to_json(), "stage2")},
                              {"stage3", json_text::parse(stage3.to_json(), "stage3")},
                              {"use_single_polyp", use_single_polyp},
                              {"use_multi_polyp", use_multi_polyp},
                              {"seed", seed}});
}

const StageCheckpoint& RunResult::checkpoint(std::string_view stage) const {
  for (const auto& c : checkpoints)
    if (c.stage == stage) return c;
  throw Error(ErrorKind::Config, "run has no checkpoint for stage '" + std::string(stage) + "'");
}

RunResult run_all(const Corpus& corpus, const PipelineConfig& cfg) {
  RunResult run;
  const StageCheckpoint init = initial_checkpoint(corpus, cfg.dims, cfg.seed, cfg.stage1.temperature);

  json stages = json::array();
  auto record = [&](TrainResult r) {
    stages.push_back({{"stage", r.checkpoint.stage},
                      {"config_fingerprint", r.checkpoint.config_fingerprint},
                      {"epoch_losses", json_text::doubles(r.epoch_losses)},
                      {"skipped_batches", r.skipped_batches},
                      {"excluded_cases", r.excluded_cases}});
    run.checkpoints.push_back(r.checkpoint);
    run.stages.push_back(std::move(r));
  };

  record(stage1_round1(corpus, init, cfg.stage1));
  const auto scores = score_corpus(run.checkpoints.back(), corpus.cases);
  run.filtered = prevalence_filter(scores, cfg.stage1.prevalence_estimate, corpus.cases, cfg.stage1.seed);
  run.filter_purity = run.filtered.purity(corpus.cases);
  record(stage1_round2(corpus, run.filtered, run.checkpoints.back(), cfg.stage1));

  if (cfg.use_single_polyp) {
    const auto single = corpus.single_polyp_cases();
    record(stage2_train(corpus, single, run.filtered, run.checkpoints.back(), cfg.stage2));
  }
  if (cfg.use_multi_polyp) {
    std::vector<std::size_t> ids = cfg.use_single_polyp ? corpus.single_polyp_cases()
                                                        : std::vector<std::size_t>{};
    const auto multi = corpus.multi_polyp_cases();
    ids.insert(ids.end(), multi.begin(), multi.end());
    std::sort(ids.begin(), ids.end());
    record(stage3_train(corpus, ids, run.filtered, run.checkpoints.back(), cfg.stage3));
  }

  const StatsReport stats = corpus_stats(corpus.cases);
  json checkpoints = json::array();
  for (const auto& c : run.checkpoints) checkpoints.push_back(c.stage);
  const json manifest = {
      {"format_version", 1},
      {"config_fingerprint", fingerprint_hex(cfg.to_json() + "|" + corpus.schema.version())},
      {"corpus_fingerprint", corpus.fingerprint},
      {"pipeline", json_text::parse(cfg.to_json(), "pipeline")},
      {"seeds", {{"global", cfg.seed},
                 {"stage1", cfg.stage1.seed},
                 {"stage2", cfg.stage2.seed},
                 {"stage3", cfg.stage3.seed}}},
      {"stages", stages},
      {"filter", {{"prevalence_estimate", cfg.stage1.prevalence_estimate},
                  {"retained_positive_frames", run.filtered.retained_positive_frames(corpus.cases)},
                  {"purity", run.filter_purity},
                  {"corpus_polyp_frame_prevalence", stats.polyp_frame_prevalence}}},
      {"checkpoints", checkpoints},
  };
  run.manifest_json = json_text::dump(manifest);
  return run;
}

}  // namespace scopealign
