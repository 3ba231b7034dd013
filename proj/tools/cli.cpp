#include "cli.hpp"

#include "scopealign/ablation.hpp"
#include "scopealign/config.hpp"
#include "scopealign/error.hpp"
#include "scopealign/evaluation.hpp"
#include "scopealign/pipeline.hpp"
#include "scopealign/records.hpp"
#include "scopealign/report.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace scopealign::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// --- files -----------------------------------------------------------------------------

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out.flush()) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, what + ": " + e.what());
  }
}

// Raw JSON fragments produced by the library keep their 17-digit floats, so
// documents are assembled from them textually. Keys must be given sorted.
std::string object(std::initializer_list<std::pair<std::string_view, std::string>> fields) {
  std::string out = "{";
  bool first = true;
  for (const auto& [k, v] : fields) {
    if (!first) out += ',';
    first = false;
    out += json(std::string(k)).dump() + ":" + v;
  }
  return out + "}";
}

std::string jstr(std::string_view s) { return json(std::string(s)).dump(); }

std::string number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// --- config ------------------------------------------------------------------------------

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

RunConfig load_config(const Common& c) {
  json doc = c.config_path.empty() ? json::object()
                                   : parse_json(read_file(c.config_path), c.config_path);
  if (!doc.is_object()) throw Error(ErrorKind::Config, c.config_path + ": expected a JSON object");
  if (c.seed) doc["seed"] = *c.seed;
  return RunConfig::from_json(doc.dump());
}

// --- corpus ------------------------------------------------------------------------------

struct LoadedCorpus {
  Corpus corpus;
  GeneratorConfig generator;
};

AttributeSchema load_schema(const fs::path& corpus_path, const RunConfig& cfg) {
  const fs::path sidecar = corpus_path.parent_path() / "schema.json";
  if (fs::exists(sidecar)) return AttributeSchema::from_json(read_file(sidecar));
  if (!cfg.schema_path.empty()) return AttributeSchema::from_json(read_file(cfg.schema_path));
  return AttributeSchema::default_schema();
}

LoadedCorpus load_corpus(const fs::path& path, const RunConfig& cfg) {
  const std::string text = read_file(path);
  const std::string fingerprint = fingerprint_hex(text);
  GeneratorConfig generator = cfg.generator;
  const fs::path meta_path = path.parent_path() / "corpus.meta.json";
  if (fs::exists(meta_path)) {
    const json meta = parse_json(read_file(meta_path), meta_path.string());
    const std::string recorded = meta.value("corpus_fingerprint", "");
    if (recorded != fingerprint)
      throw Error(ErrorKind::Fingerprint, path.string() + " has fingerprint " + fingerprint +
                                              " but " + meta_path.string() + " records " + recorded);
    if (meta.contains("generator")) generator = GeneratorConfig::from_json(meta.at("generator").dump());
  }
  std::istringstream in(text);
  AttributeSchema schema = load_schema(path, cfg);
  return {Corpus::from_cases(read_corpus(in), std::move(schema), fingerprint), generator};
}

void check_corpus(const StageCheckpoint& ckpt, const Corpus& corpus, const std::string& what) {
  if (ckpt.corpus_fingerprint != corpus.fingerprint)
    throw Error(ErrorKind::Fingerprint, what + " was trained on corpus " + ckpt.corpus_fingerprint +
                                            ", given corpus is " + corpus.fingerprint);
  if (ckpt.schema_version != corpus.schema.version())
    throw Error(ErrorKind::Fingerprint, what + " uses schema " + ckpt.schema_version +
                                            ", corpus uses " + corpus.schema.version());
}

std::string filtered_json(const FilteredFrameSet& f, const std::string& run_fp,
                          const Corpus& corpus) {
  return object({{"config_fingerprint", jstr(run_fp)},
                 {"corpus_fingerprint", jstr(corpus.fingerprint)},
                 {"filtered", f.to_json()}});
}

FilteredFrameSet load_filtered(const fs::path& path, const Corpus& corpus) {
  const json doc = parse_json(read_file(path), path.string());
  if (doc.value("corpus_fingerprint", "") != corpus.fingerprint)
    throw Error(ErrorKind::Fingerprint, path.string() + " was built for a different corpus");
  if (!doc.contains("filtered")) throw Error(ErrorKind::Parse, path.string() + ": missing 'filtered'");
  FilteredFrameSet f = FilteredFrameSet::from_json(doc.at("filtered").dump());
  if (f.retained.size() != corpus.cases.size())
    throw Error(ErrorKind::Dimension, path.string() + " covers " + std::to_string(f.retained.size()) +
                                          " cases, corpus has " + std::to_string(corpus.cases.size()));
  return f;
}

std::string losses_json(const TrainResult& r) {
  std::string out = "[";
  for (std::size_t i = 0; i < r.epoch_losses.size(); ++i) {
    out += (i ? "," : "") + number(r.epoch_losses[i]);
  }
  return out + "]";
}

std::string stage_entry(const TrainResult& r) {
  return object({{"config_fingerprint", jstr(r.checkpoint.config_fingerprint)},
                 {"epoch_losses", losses_json(r)},
                 {"excluded_cases", std::to_string(r.excluded_cases)},
                 {"skipped_batches", std::to_string(r.skipped_batches)},
                 {"stage", jstr(r.checkpoint.stage)}});
}

// --- subcommands ---------------------------------------------------------------------------

int gen_data(const Common& common, const std::string& out_dir, std::optional<std::size_t> num_cases,
             std::ostream& out) {
  RunConfig cfg = load_config(common);
  if (num_cases) cfg.generator.num_cases = *num_cases;
  const AttributeSchema schema = cfg.schema_path.empty() ? AttributeSchema::default_schema()
                                                         : AttributeSchema::from_json(read_file(cfg.schema_path));
  const auto cases = generate_corpus(cfg.generator, schema);
  std::ostringstream jsonl;
  write_corpus(jsonl, cases);
  const std::string text = jsonl.str();
  const fs::path dir(out_dir);
  make_dir(dir);
  write_file(dir / "corpus.jsonl", text);
  write_file(dir / "schema.json", schema.to_json());
  const StatsReport stats = corpus_stats(cases);
  write_file(dir / "corpus.meta.json",
             object({{"config_fingerprint", jstr(cfg.fingerprint())},
                     {"corpus_fingerprint", jstr(fingerprint_hex(text))},
                     {"generator", cfg.generator.to_json()},
                     {"schema_version", jstr(schema.version())},
                     {"stats", stats.to_json()}}) + "\n");
  out << stats.to_json() << "\n";
  return kOk;
}

int parse_reports(const Common& common, const std::string& corpus_path, const std::string& out_path,
                  std::ostream& out) {
  const RunConfig cfg = load_config(common);
  const LoadedCorpus lc = load_corpus(corpus_path, cfg);
  std::string text;
  for (const ParsedReport& r : lc.corpus.reports) text += r.to_json() + "\n";
  if (out_path.empty())
    out << text;
  else
    write_file(out_path, text);
  return kOk;
}

struct TrainArgs {
  std::string stage = "all";
  std::string corpus;
  std::string out;
  std::string init;
  std::string filtered;
};

int train(const Common& common, const TrainArgs& a, std::ostream& out) {
  const RunConfig cfg = load_config(common);
  const LoadedCorpus lc = load_corpus(a.corpus, cfg);
  const Corpus& corpus = lc.corpus;
  const std::string run_fp = cfg.fingerprint();
  const fs::path dir(a.out);
  make_dir(dir);

  std::vector<const TrainResult*> results;
  std::string extra;
  auto save = [&](const TrainResult& r) {
    save_checkpoint(dir / (r.checkpoint.stage + ".json"), r.checkpoint);
    results.push_back(&r);
    out << r.checkpoint.stage << ": " << r.epoch_losses.size() << " epochs";
    if (!r.epoch_losses.empty())
      out << ", loss " << r.epoch_losses.front() << " -> " << r.epoch_losses.back();
    out << "\n";
  };

  std::optional<RunResult> run;
  std::optional<TrainResult> r1, r2;
  FilteredFrameSet filtered;
  if (a.stage == "all") {
    run = run_all(corpus, cfg.pipeline);
    for (const TrainResult& r : run->stages) save(r);
    filtered = run->filtered;
    write_file(dir / "filtered.json", filtered_json(filtered, run_fp, corpus) + "\n");
    extra = run->manifest_json;
  } else if (a.stage == "1") {
    const StageCheckpoint init =
        initial_checkpoint(corpus, cfg.pipeline.dims, cfg.pipeline.seed, cfg.pipeline.stage1.temperature);
    r1 = stage1_round1(corpus, init, cfg.pipeline.stage1);
    save(*r1);
    filtered = prevalence_filter(score_corpus(r1->checkpoint, corpus.cases),
                                 cfg.pipeline.stage1.prevalence_estimate, corpus.cases,
                                 cfg.pipeline.stage1.seed);
    write_file(dir / "filtered.json", filtered_json(filtered, run_fp, corpus) + "\n");
    r2 = stage1_round2(corpus, filtered, r1->checkpoint, cfg.pipeline.stage1);
    save(*r2);
    extra = object({{"purity", number(filtered.purity(corpus.cases))}});
  } else if (a.stage == "2" || a.stage == "3") {
    if (a.init.empty() || a.filtered.empty())
      throw Error(ErrorKind::Config, "--stage " + a.stage + " needs --init and --filtered");
    const StageCheckpoint init = load_checkpoint(a.init);
    check_corpus(init, corpus, a.init);
    filtered = load_filtered(a.filtered, corpus);
    if (a.stage == "2") {
      r1 = stage2_train(corpus, corpus.single_polyp_cases(), filtered, init, cfg.pipeline.stage2);
    } else {
      std::vector<std::size_t> ids(corpus.cases.size());
      for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
      r1 = stage3_train(corpus, ids, filtered, init, cfg.pipeline.stage3);
    }
    save(*r1);
    extra = object({{"init", jstr(init.stage)}});
  } else {
    throw Error(ErrorKind::Config, "--stage must be 1, 2, 3 or all");
  }

  std::string stages = "[";
  std::string names = "[";
  for (std::size_t i = 0; i < results.size(); ++i) {
    stages += (i ? "," : "") + stage_entry(*results[i]);
    names += (i ? "," : "") + jstr(results[i]->checkpoint.stage + ".json");
  }
  stages += "]";
  names += "]";
  write_file(dir / "manifest.json",
             object({{"checkpoints", names},
                     {"config", cfg.canonical_json()},
                     {"config_fingerprint", jstr(run_fp)},
                     {"corpus_fingerprint", jstr(corpus.fingerprint)},
                     {"details", extra},
                     {"stage", jstr(a.stage)},
                     {"stages", stages}}) + "\n");
  return kOk;
}

struct EvalArgs {
  std::string ckpt;
  std::string task;
  std::string setting = "zero-shot";
  std::string corpus;
  std::string out;
};

int evaluate(const Common& common, const EvalArgs& a, std::ostream& out) {
  const RunConfig cfg = load_config(common);
  const LoadedCorpus lc = load_corpus(a.corpus, cfg);
  const StageCheckpoint ckpt = load_checkpoint(a.ckpt);
  check_corpus(ckpt, lc.corpus, a.ckpt);
  const SyntheticWorld world(lc.generator, lc.corpus.schema);
  const EvalTask task = make_task(a.task, world, cfg.eval);
  const MetricReport r = evaluate_task(ckpt, task, a.setting, cfg.eval.seed);
  const std::string text =
      metric_report_json(r, a.task, cfg.fingerprint(), lc.corpus.fingerprint) + "\n";
  if (a.out.empty())
    out << text;
  else
    write_file(a.out, text);
  return kOk;
}

int export_embeddings(const Common& common, const EvalArgs& a, std::ostream& out) {
  const RunConfig cfg = load_config(common);
  const LoadedCorpus lc = load_corpus(a.corpus, cfg);
  const StageCheckpoint ckpt = load_checkpoint(a.ckpt);
  check_corpus(ckpt, lc.corpus, a.ckpt);
  const SyntheticWorld world(lc.generator, lc.corpus.schema);
  const EvalTask task = make_task(a.task, world, cfg.eval);
  const std::string csv = "# config_fingerprint=" + cfg.fingerprint() + "\n" +
                          export_embeddings_csv(ckpt, task.items);
  if (a.out.empty())
    out << csv;
  else
    write_file(a.out, csv);
  return kOk;
}

int ablate(const Common& common, const std::string& corpus_path, const std::string& out_dir,
           const std::vector<std::string>& variants, std::ostream& out) {
  RunConfig cfg = load_config(common);
  if (!variants.empty()) {
    for (const auto& v : variants) parse_variant(v);
    cfg.ablation.variants = variants;
  }
  const LoadedCorpus lc = load_corpus(corpus_path, cfg);
  const SyntheticWorld world(lc.generator, lc.corpus.schema);
  const AblationReport report = run_ablation(lc.corpus, world, cfg.ablation);
  const std::string table = report.to_table();
  if (!out_dir.empty()) {
    const fs::path dir(out_dir);
    make_dir(dir);
    write_file(dir / "ablation.json",
               object({{"config_fingerprint", jstr(cfg.fingerprint())},
                       {"corpus_fingerprint", jstr(lc.corpus.fingerprint)},
                       {"report", report.to_json()}}) + "\n");
    write_file(dir / "ablation.txt", "# config_fingerprint=" + cfg.fingerprint() + "\n" + table);
  }
  out << table;
  return kOk;
}

int exit_code(ErrorKind kind) { return kind == ErrorKind::Io ? kIo : kValidation; }

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Progressive image-text pre-training on synthetic colonoscopy records", "scopealign"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "Run configuration JSON");
    sub->add_option("--seed", common.seed, "Override the global seed");
  };

  std::string out_path, corpus_path;
  std::optional<std::size_t> num_cases;
  TrainArgs ta;
  EvalArgs ea;
  std::vector<std::string> variants;

  CLI::App* gen = app.add_subcommand("gen-data", "Generate a synthetic corpus");
  add_common(gen);
  gen->add_option("--out", out_path, "Output directory")->required();
  gen->add_option("--num-cases", num_cases, "Override generator.num_cases");

  CLI::App* parse = app.add_subcommand("parse-reports", "Parse every report of a corpus");
  add_common(parse);
  parse->add_option("--corpus", corpus_path, "corpus.jsonl")->required();
  parse->add_option("--out", out_path, "Output JSONL (stdout when omitted)");

  CLI::App* tr = app.add_subcommand("train", "Run training stages");
  add_common(tr);
  tr->add_option("--stage", ta.stage, "1, 2, 3 or all")->check(CLI::IsMember({"1", "2", "3", "all"}));
  tr->add_option("--corpus", ta.corpus, "corpus.jsonl")->required();
  tr->add_option("--out", ta.out, "Output directory")->required();
  tr->add_option("--init", ta.init, "Checkpoint to start stage 2 or 3 from");
  tr->add_option("--filtered", ta.filtered, "filtered.json from stage 1");

  auto add_eval = [&](CLI::App* sub) {
    add_common(sub);
    sub->add_option("--ckpt", ea.ckpt, "Checkpoint JSON")->required();
    sub->add_option("--task", ea.task, "detection or malignancy")
        ->required()
        ->check(CLI::IsMember({"detection", "malignancy"}));
    sub->add_option("--corpus", ea.corpus, "corpus.jsonl the checkpoint was trained on")->required();
    sub->add_option("--out", ea.out, "Output file (stdout when omitted)");
  };
  CLI::App* ev = app.add_subcommand("evaluate", "Score a checkpoint on a held-out task");
  add_eval(ev);
  ev->add_option("--setting", ea.setting, "zero-shot or few-shot:<ratio>");
  CLI::App* ex = app.add_subcommand("export-embeddings", "Write held-out image embeddings as CSV");
  add_eval(ex);

  CLI::App* ab = app.add_subcommand("ablate", "Train and score the variant grid");
  add_common(ab);
  ab->add_option("--corpus", corpus_path, "corpus.jsonl")->required();
  ab->add_option("--out", out_path, "Output directory");
  ab->add_option("--variant", variants, "Variant (repeatable): base, full, or sp/mp/mc/ca joined by +");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  } catch (const CLI::ParseError& e) {
    if (args.empty()) {
      err << app.help();
    } else {
      err << "error: usage: " << one_line(e.what()) << "\n";
    }
    return kUsage;
  }

  try {
    if (gen->parsed()) return gen_data(common, out_path, num_cases, out);
    if (parse->parsed()) return parse_reports(common, corpus_path, out_path, out);
    if (tr->parsed()) return train(common, ta, out);
    if (ev->parsed()) return evaluate(common, ea, out);
    if (ex->parsed()) return export_embeddings(common, ea, out);
    if (ab->parsed()) return ablate(common, corpus_path, out_path, variants, out);
  } catch (const Error& e) {
    err << "error: " << one_line(e.what()) << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: internal: " << one_line(e.what()) << "\n";
    return kValidation;
  }
  err << app.help();
  return kUsage;
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace scopealign::cli
