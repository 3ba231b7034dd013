#pragma once

// One JSON document configures a whole run. Sections: "generator", "model",
// "stage1".."stage3", "pipeline", "eval", "ablation", plus top-level "seed",
// "schema" (path to a schema sidecar) and "out".

#include "scopealign/ablation.hpp"
#include "scopealign/evaluation.hpp"
#include "scopealign/pipeline.hpp"
#include "scopealign/records.hpp"

#include <cstdint>
#include <string>

namespace scopealign {

struct RunConfig {
  std::uint64_t seed = 0;
  std::string schema_path;  // empty: built-in schema
  std::string out_dir;
  GeneratorConfig generator;
  PipelineConfig pipeline;
  EvalSetConfig eval;
  AblationConfig ablation;

  /// Missing fields take defaults. Sub-seeds default to the global seed, and
  /// the stage-1 prevalence estimate to the generator's planted prevalence.
  static RunConfig from_json(std::string_view text);
  static RunConfig defaults(std::uint64_t seed = 0);

  /// Canonical form: every resolved field, keys sorted.
  std::string canonical_json() const;
  /// Hash of canonical_json(); unaffected by key order or omitted defaults.
  std::string fingerprint() const;
};

}  // namespace scopealign
