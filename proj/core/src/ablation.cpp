#include "scopealign/ablation.hpp"

#include "scopealign/error.hpp"
#include "json_text.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

namespace scopealign {

using json_text::json;

AblationVariant parse_variant(std::string_view spec) {
  AblationVariant v;
  v.name = std::string(spec);
  if (spec == "base") return v;
  if (spec == "full") return {v.name, true, true, true, true};
  if (spec.empty()) throw Error(ErrorKind::Config, "empty variant");
  std::size_t start = 0;
  while (start <= spec.size()) {
    const std::size_t end = std::min(spec.find('+', start), spec.size());
    const std::string_view flag = spec.substr(start, end - start);
    bool* slot = flag == "sp"   ? &v.single_polyp
                 : flag == "mp" ? &v.multi_polyp
                 : flag == "mc" ? &v.morphology_targets
                 : flag == "ca" ? &v.cross_attention
                                : nullptr;
    if (!slot)
      throw Error(ErrorKind::Config, "unknown variant flag '" + std::string(flag) + "' in '" +
                                         std::string(spec) + "' (expected sp, mp, mc, ca)");
    if (*slot) throw Error(ErrorKind::Config, "repeated variant flag '" + std::string(flag) + "'");
    *slot = true;
    start = end + 1;
  }
  if (!v.single_polyp && !v.multi_polyp)
    throw Error(ErrorKind::Config, "variant '" + v.name + "' trains on no data (add sp or mp)");
  return v;
}

const MetricReport& AblationReport::metric(const AblationRow& r, std::string_view task,
                                           std::string_view setting) const {
  const auto t = std::find(tasks.begin(), tasks.end(), task);
  const auto s = std::find(settings.begin(), settings.end(), setting);
  if (t == tasks.end() || s == settings.end())
    throw Error(ErrorKind::Config, "report has no column " + std::string(task) + "/" + std::string(setting));
  return r.metrics.at(static_cast<std::size_t>(t - tasks.begin()) * settings.size() +
                      static_cast<std::size_t>(s - settings.begin()));
}

const AblationRow& AblationReport::row(std::string_view variant, std::uint64_t seed) const {
  for (const AblationRow& r : rows)
    if (r.variant == variant && r.seed == seed) return r;
  throw Error(ErrorKind::Config, "report has no row " + std::string(variant) + " seed " + std::to_string(seed));
}

std::string AblationReport::to_json() const {
  json out_rows = json::array();
  for (const AblationRow& r : rows) {
    json ms = json::array();
    for (std::size_t t = 0; t < tasks.size(); ++t)
      for (std::size_t s = 0; s < settings.size(); ++s) {
        const MetricReport& m = r.metrics[t * settings.size() + s];
        ms.push_back({{"task", tasks[t]}, {"setting", m.setting}, {"auroc", m.auroc},
                      {"aupr", m.aupr}, {"n_pos", m.n_pos}, {"n_neg", m.n_neg}});
      }
    out_rows.push_back({{"variant", r.variant}, {"seed", r.seed}, {"metrics", ms}});
  }
  return json_text::dump(json{{"tasks", tasks}, {"settings", settings}, {"rows", out_rows}});
}

std::string AblationReport::to_table() const {
  std::string out;
  char buf[64];
  out += "variant            seed";
  for (const auto& t : tasks)
    for (const auto& s : settings) {
      std::snprintf(buf, sizeof buf, "  %s/%s AUROC  AUPR", t.c_str(), s.c_str());
      out += buf;
    }
  out += '\n';
  auto line = [&](const std::string& name, const std::string& seed, const std::vector<double>& vals) {
    std::snprintf(buf, sizeof buf, "%-18s %5s", name.c_str(), seed.c_str());
    out += buf;
    for (std::size_t i = 0; i + 1 < vals.size(); i += 2) {
      std::snprintf(buf, sizeof buf, "  %8.2f %8.2f", 100.0 * vals[i], 100.0 * vals[i + 1]);
      out += buf;
    }
    out += '\n';
  };
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<double>, std::size_t>> sums;
  for (const AblationRow& r : rows) {
    std::vector<double> vals;
    for (const MetricReport& m : r.metrics) {
      vals.push_back(m.auroc);
      vals.push_back(m.aupr);
    }
    line(r.variant, std::to_string(r.seed), vals);
    auto [it, fresh] = sums.try_emplace(r.variant, std::vector<double>(vals.size(), 0.0), 0);
    if (fresh) order.push_back(r.variant);
    for (std::size_t i = 0; i < vals.size(); ++i) it->second.first[i] += vals[i];
    ++it->second.second;
  }
  for (const auto& name : order) {
    auto [vals, n] = sums[name];
    for (double& v : vals) v /= static_cast<double>(n);
    line(name, "mean", vals);
  }
  return out;
}

AblationReport run_ablation(const Corpus& corpus, const SyntheticWorld& world,
                            const AblationConfig& cfg) {
  std::vector<AblationVariant> variants;
  for (const auto& v : cfg.variants) variants.push_back(parse_variant(v));
  if (variants.empty()) throw Error(ErrorKind::Config, "no ablation variants requested");
  if (cfg.seeds.empty()) throw Error(ErrorKind::Config, "no ablation seeds requested");

  AblationReport report{cfg.tasks, cfg.settings, {}};
  std::vector<EvalTask> tasks;
  for (const auto& t : cfg.tasks) tasks.push_back(make_task(t, world, cfg.eval));

  for (std::uint64_t seed : cfg.seeds) {
    PipelineConfig pc = cfg.pipeline;
    pc.seed = seed;
    pc.stage1.seed = pc.stage2.seed = pc.stage3.seed = seed;

    const StageCheckpoint init = initial_checkpoint(corpus, pc.dims, seed, pc.stage1.temperature);
    const TrainResult r1 = stage1_round1(corpus, init, pc.stage1);
    const FilteredFrameSet filtered =
        prevalence_filter(score_corpus(r1.checkpoint, corpus.cases), pc.stage1.prevalence_estimate,
                          corpus.cases, seed);
    const StageCheckpoint cleansed = stage1_round2(corpus, filtered, r1.checkpoint, pc.stage1).checkpoint;

    for (const AblationVariant& v : variants) {
      StageCheckpoint ckpt = cleansed;
      if (v.single_polyp) {
        TrainingConfig s2 = pc.stage2;
        s2.morphology_targets = v.morphology_targets;
        ckpt = stage2_train(corpus, corpus.single_polyp_cases(), filtered, ckpt, s2).checkpoint;
      }
      if (v.multi_polyp) {
        TrainingConfig s3 = pc.stage3;
        s3.morphology_targets = v.morphology_targets;
        s3.cross_attention = v.cross_attention;
        std::vector<std::size_t> ids = v.single_polyp ? corpus.single_polyp_cases()
                                                      : std::vector<std::size_t>{};
        const auto multi = corpus.multi_polyp_cases();
        ids.insert(ids.end(), multi.begin(), multi.end());
        std::sort(ids.begin(), ids.end());
        ckpt = stage3_train(corpus, ids, filtered, ckpt, s3).checkpoint;
      }
      AblationRow row{v.name, seed, {}};
      for (const EvalTask& task : tasks)
        for (const auto& setting : cfg.settings)
          row.metrics.push_back(evaluate_task(ckpt, task, setting, seed));
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

}  // namespace scopealign
