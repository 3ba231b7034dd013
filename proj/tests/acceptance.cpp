// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "cli.hpp"
#include "scopealign/ablation.hpp"
#include "scopealign/config.hpp"
#include "scopealign/error.hpp"
#include "scopealign/log.hpp"
#include "scopealign/metrics.hpp"
#include "scopealign/objectives.hpp"
#include "scopealign/pipeline.hpp"
#include "scopealign/report.hpp"
#include "oracles.hpp"
#include "random_graph.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

using namespace scopealign;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s criterion %d: %s (%s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

EmbeddingBatch unit_batch(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  return {oracle::tensor(oracle::normalize_rows(oracle::random_mat(rng, n, d))), true};
}

// Desk-scale run shared by the training criteria.
struct Desk {
  RunConfig cfg;
  Corpus corpus;
  SyntheticWorld world;
};

Desk load_desk() {
  RunConfig cfg = RunConfig::from_json(slurp(fs::path(SCOPEALIGN_CONFIG_DIR) / "desk.json"));
  const AttributeSchema schema = AttributeSchema::default_schema();
  auto cases = generate_corpus(cfg.generator, schema);
  std::ostringstream text;
  write_corpus(text, cases);
  Corpus corpus = Corpus::from_cases(std::move(cases), schema, fingerprint_hex(text.str()));
  SyntheticWorld world(cfg.generator, schema);
  return {std::move(cfg), std::move(corpus), std::move(world)};
}

Outcome autodiff() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    graphs::Built b = graphs::build(seed, nullptr);
    backward(b.loss);
    std::vector<std::vector<double>> vals;
    for (const Tensor& l : b.leaves) vals.emplace_back(l.data().begin(), l.data().end());
    for (std::size_t li = 0; li < vals.size(); ++li) {
      auto f = [&](const std::vector<double>& x) {
        auto v = vals;
        v[li] = x;
        return graphs::build(seed, &v).loss.item();
      };
      worst = std::max(worst, oracle::rel_error(oracle::numeric_grad(f, vals[li]), b.leaves[li].grad()));
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-4 && secs < 60, fmt("worst relative error %.3g, %.2f s", worst, secs)};
}

Outcome loss_identities(const Desk& desk) {
  std::mt19937_64 rng(2024);
  double worst_nce = 0.0;
  bool bitwise = true;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng() % 31, d = 2 + rng() % 15;
    const auto a = unit_batch(rng, n, d), b = unit_batch(rng, n, d);
    const auto [sv, st] = cosine_similarity_matrices(a, b);
    const double tau = 0.02 + 0.2 * double(rng() % 100) / 100;
    const double det = detection_loss(sv, st, tau).item();
    worst_nce = std::max(worst_nce, std::abs(det - oracle::info_nce(oracle::to_mat(sv.scores), tau)));
    const auto y = TargetMatrix::one_hot(n);
    bitwise = bitwise && bit_equal(morph_loss(sv, st, y, y, tau).item(), det);
  }

  // Reduction: identity attention on single-polyp patients with one frame each.
  const Corpus& corpus = desk.corpus;
  StageCheckpoint ckpt = initial_checkpoint(corpus, desk.cfg.pipeline.dims, 1, 0.07);
  Rng id_rng = make_rng(0, "identity");
  ckpt.model.cross_attention = CrossAttentionBlock::near_identity(ckpt.model.embed_dim(), 0.0, id_rng);
  FilteredFrameSet one = FilteredFrameSet::all_frames(corpus.cases);
  const auto single = corpus.single_polyp_cases();
  double worst_reduction = 0.0;
  for (std::size_t start = 0; start + 8 <= single.size(); start += 8) {
    const std::span<const std::size_t> batch(single.data() + start, 8);
    std::vector<std::size_t> frames;
    for (std::size_t ci : batch) {
      const auto& labels = corpus.cases[ci].frame_labels;
      const std::size_t f = std::find(labels.begin(), labels.end(), true) - labels.begin();
      one.retained[ci] = {f};
      frames.push_back(f);
    }
    TrainingConfig cfg = desk.cfg.pipeline.stage3;
    const double s2 = stage2_batch_loss(ckpt.model, corpus, batch, frames, cfg).item();
    const double s3 = stage3_batch_loss(ckpt.model, corpus, batch, one, cfg).item();
    worst_reduction = std::max(worst_reduction, std::abs(s2 - s3));
  }
  return {worst_nce <= 1e-10 && bitwise && worst_reduction <= 1e-9,
          fmt("InfoNCE gap %.3g, reduction gap %.3g, one-hot path bitwise equal: ", worst_nce, worst_reduction) +
              (bitwise ? "yes" : "no")};
}

Outcome metric_oracles() {
  std::mt19937_64 rng(31);
  std::size_t mismatches = 0, ties = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 200)(rng);
    const int levels = std::uniform_int_distribution<int>(1, 60)(rng);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = std::uniform_int_distribution<int>(0, levels)(rng) / double(levels);
      y[i] = int(rng() & 1);
    }
    y[0] = 0;
    y[1] = 1;
    std::vector<double> sorted = s;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) ++ties;
    if (auroc(s, y) != oracle::auroc_pairs(s, y) || aupr(s, y) != oracle::aupr_thresholds(s, y)) ++mismatches;
  }
  return {mismatches == 0, fmt("%.0f mismatches over 1000 instances, %.0f with ties", double(mismatches), double(ties))};
}

Outcome cross_attention() {
  std::mt19937_64 rng(41);
  bool single_exact = true;
  double worst_uniform = 0.0, worst_loop = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 2 + rng() % 10, k = 1 + rng() % 6, l = 1 + rng() % 6;
    Rng brng = make_rng(trial, "acceptance-block");
    const CrossAttentionBlock block = CrossAttentionBlock::near_identity(d, 0.5, brng);
    const auto wq = oracle::to_mat(block.w_query), wk = oracle::to_mat(block.w_key), wv = oracle::to_mat(block.w_value);
    const auto q = oracle::random_mat(rng, k, d);

    const auto kv1 = oracle::random_mat(rng, 1, d);
    const auto proj = oracle::matmul(kv1, oracle::transpose(wv))[0];
    for (const auto& row : oracle::to_mat(cross_attend(block, oracle::tensor(q), oracle::tensor(kv1))))
      single_exact = single_exact && row == proj;

    const oracle::Mat same(l, kv1[0]);
    const Tensor alpha = attention_weights(block, oracle::tensor(q), oracle::tensor(same));
    for (double a : alpha.data()) worst_uniform = std::max(worst_uniform, std::abs(a - 1.0 / double(l)));

    const auto kv = oracle::random_mat(rng, l, d);
    const auto want = oracle::flat(oracle::attention(wq, wk, wv, q, kv));
    const Tensor got = cross_attend(block, oracle::tensor(q), oracle::tensor(kv));
    for (std::size_t i = 0; i < want.size(); ++i) worst_loop = std::max(worst_loop, std::abs(got.data()[i] - want[i]));
  }
  return {single_exact && worst_uniform <= 1e-12 && worst_loop <= 1e-12,
          fmt("uniform-weight gap %.3g, loop-oracle gap %.3g", worst_uniform, worst_loop)};
}

Outcome filtering(const Desk& desk) {
  const auto t0 = Clock::now();
  const PipelineConfig& p = desk.cfg.pipeline;
  const StageCheckpoint init = initial_checkpoint(desk.corpus, p.dims, p.seed, p.stage1.temperature);
  const TrainResult r1 = stage1_round1(desk.corpus, init, p.stage1);
  const FilteredFrameSet f = prevalence_filter(score_corpus(r1.checkpoint, desk.corpus.cases),
                                               p.stage1.prevalence_estimate, desk.corpus.cases, p.stage1.seed);
  stage1_round2(desk.corpus, f, r1.checkpoint, p.stage1);
  const double secs = seconds_since(t0);
  const double purity = f.purity(desk.corpus.cases);
  const double base = corpus_stats(desk.corpus.cases).polyp_frame_prevalence;
  return {purity >= 0.30 && purity >= 2 * base && secs < 300,
          fmt("purity %.3f vs base rate %.3f, stage 1 %.1f s", purity, base, secs)};
}

Outcome end_to_end(const Desk& desk, RunResult& run) {
  run = run_all(desk.corpus, desk.cfg.pipeline);
  const EvalTask task = make_task("detection", desk.world, desk.cfg.eval);
  const MetricReport m = evaluate_task(run.final_checkpoint(), task, "zero-shot", desk.cfg.eval.seed);
  return {m.auroc >= 0.90,
          fmt("detection AUROC %.4f on %.0f:%.0f", m.auroc, double(m.n_neg), double(m.n_pos))};
}

Outcome ablation(const Desk& desk) {
  const auto t0 = Clock::now();
  AblationConfig cfg = desk.cfg.ablation;
  cfg.variants = {"full", "sp+mp+ca", "sp+mp+mc"};
  cfg.tasks = {"malignancy"};
  cfg.settings = {"zero-shot"};
  const AblationReport r = run_ablation(desk.corpus, desk.world, cfg);
  int mc_wins = 0, ca_wins = 0;
  std::string per_seed;
  for (std::uint64_t seed : cfg.seeds) {
    const double full = r.metric(r.row("full", seed), "malignancy", "zero-shot").auroc;
    const double mc_off = r.metric(r.row("sp+mp+ca", seed), "malignancy", "zero-shot").auroc;
    const double ca_off = r.metric(r.row("sp+mp+mc", seed), "malignancy", "zero-shot").auroc;
    mc_wins += full > mc_off;
    ca_wins += full > ca_off;
    per_seed += fmt(" seed %.0f full %.3f", double(seed), full) + fmt(" mc-off %.3f ca-off %.3f;", mc_off, ca_off);
  }
  const double secs = seconds_since(t0);
  const std::size_t n = cfg.seeds.size();
  const bool enough = 3 * std::size_t(mc_wins) >= 2 * n && 3 * std::size_t(ca_wins) >= 2 * n;
  return {n == 3 && enough && secs < 1800,
          fmt("MC wins %.0f/3, CA wins %.0f/3, %.0f s;", mc_wins, ca_wins, secs) + per_seed};
}

Outcome cli_determinism() {
  const std::string config = std::string(SCOPEALIGN_CONFIG_DIR) + "/smoke.json";
  const fs::path root = fs::temp_directory_path() / "scopealign-acceptance";
  std::vector<fs::path> dirs{root / "a", root / "b"};
  for (const fs::path& d : dirs) {
    fs::remove_all(d);
    fs::create_directories(d);
    const std::string corpus = (d / "corpus.jsonl").string(), ckpt = (d / "stage3.json").string();
    const std::vector<std::vector<std::string>> calls{
        {"gen-data", "--config", config, "--out", d.string()},
        {"parse-reports", "--config", config, "--corpus", corpus, "--out", (d / "parsed.jsonl").string()},
        {"train", "--stage", "all", "--config", config, "--corpus", corpus, "--out", d.string()},
        {"evaluate", "--config", config, "--ckpt", ckpt, "--task", "detection", "--corpus", corpus, "--out",
         (d / "eval-detection.json").string()},
        {"evaluate", "--config", config, "--ckpt", ckpt, "--task", "malignancy", "--setting", "few-shot:0.5",
         "--corpus", corpus, "--out", (d / "eval-malignancy.json").string()},
        {"export-embeddings", "--config", config, "--ckpt", ckpt, "--task", "detection", "--corpus", corpus,
         "--out", (d / "embeddings.csv").string()},
        {"ablate", "--config", config, "--corpus", corpus, "--out", (d / "ablation").string()},
    };
    for (const auto& args : calls) {
      std::ostringstream out, err;
      if (cli::dispatch(args, out, err) != 0) return {false, args[0] + " failed: " + err.str()};
    }
  }
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dirs[0])) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), dirs[0]);
    if (slurp(entry.path()) != slurp(dirs[1] / rel)) return {false, rel.string() + " differs"};
    ++files;
  }
  return {files >= 12, fmt("%.0f output files byte-identical across two runs", double(files))};
}

Outcome checkpoint_roundtrip(const RunResult& run) {
  const StageCheckpoint& ckpt = run.final_checkpoint();
  const fs::path p = fs::temp_directory_path() / "scopealign-acceptance-ckpt.json";
  save_checkpoint(p, ckpt);
  const StageCheckpoint back = load_checkpoint(p);
  std::mt19937_64 rng(51);
  std::size_t diffs = 0;
  const std::size_t dim = ckpt.model.vision.image_dim();
  for (int i = 0; i < 100; ++i) {
    const Tensor x = oracle::tensor(oracle::random_mat(rng, 1, dim, -3, 3));
    const Tensor a = ckpt.model.vision.encode(x).matrix, b = back.model.vision.encode(x).matrix;
    if (std::memcmp(a.data().data(), b.data().data(), a.data().size() * sizeof(double)) != 0) ++diffs;
    const Tensor ca = cross_attend(*ckpt.model.cross_attention, a, a);
    const Tensor cb = cross_attend(*back.model.cross_attention, b, b);
    if (std::memcmp(ca.data().data(), cb.data().data(), ca.data().size() * sizeof(double)) != 0) ++diffs;
  }
  const std::vector<std::string> texts{"This is a colon with polyps.", "Polyp 1: size=small."};
  const Tensor ta = ckpt.model.text.encode(texts).matrix, tb = back.model.text.encode(texts).matrix;
  if (std::memcmp(ta.data().data(), tb.data().data(), ta.data().size() * sizeof(double)) != 0) ++diffs;
  return {diffs == 0, fmt("%.0f differing outputs over 100 random inputs", double(diffs))};
}

Outcome parser_roundtrip() {
  const AttributeSchema schema = AttributeSchema::default_schema();
  GeneratorConfig g;
  g.num_cases = 10000;
  g.image_dim = schema.total_bits() + 1;
  g.frames_per_case_min = g.frames_per_case_max = 4;
  g.seed = 61;
  std::size_t mismatches = 0, sentences = 0;
  for (const MedicalCase& c : generate_corpus(g, schema)) {
    const ParsedReport r = parse_report(c.sentences, schema, c.case_id);
    if (r.polyp_sentences.size() != c.sentence_attributes.size()) {
      ++mismatches;
      continue;
    }
    for (std::size_t i = 0; i < r.polyp_sentences.size(); ++i, ++sentences)
      if (!(r.polyp_sentences[i].second == c.sentence_attributes[i])) ++mismatches;
  }
  return {mismatches == 0, fmt("%.0f mismatches over %.0f polyp sentences in 10000 cases", double(mismatches),
                               double(sentences))};
}

}  // namespace

int main() {
  set_warning_sink([](std::string_view) {});
  const Desk desk = load_desk();
  RunResult run;
  report(1, "autodiff gradients match finite differences", autodiff);
  report(2, "loss identities", [&] { return loss_identities(desk); });
  report(3, "AUROC and AUPR match brute-force oracles", metric_oracles);
  report(4, "cross-attention identities", cross_attention);
  report(5, "prevalence filter purity", [&] { return filtering(desk); });
  report(6, "end-to-end zero-shot detection", [&] { return end_to_end(desk, run); });
  report(7, "ablation trends for soft targets and cross-attention", [&] { return ablation(desk); });
  report(8, "CLI determinism", cli_determinism);
  report(9, "checkpoint round-trip", [&] { return checkpoint_roundtrip(run); });
  report(10, "report parser round-trip", parser_roundtrip);
  return failures == 0 ? 0 : 1;
}
