#include <doctest.h>

#include "scopealign/config.hpp"
#include "scopealign/error.hpp"

using namespace scopealign;

TEST_CASE("fingerprint ignores key order and spelled-out defaults") {
  const RunConfig a = RunConfig::from_json(R"({"seed": 3, "generator": {"num_cases": 40, "image_dim": 96}})");
  const RunConfig b = RunConfig::from_json(R"({"generator": {"image_dim": 96, "num_cases": 40}, "seed": 3})");
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK(a.canonical_json() == b.canonical_json());
  const RunConfig c = RunConfig::from_json(R"({"seed": 3, "generator": {"num_cases": 40, "image_dim": 96, "noise_std": 0.2}})");
  CHECK(c.fingerprint() == a.fingerprint());
  const RunConfig d = RunConfig::from_json(R"({"seed": 4, "generator": {"num_cases": 40, "image_dim": 96}})");
  CHECK(d.fingerprint() != a.fingerprint());
  // The output location is not part of the run's identity.
  const RunConfig e = RunConfig::from_json(R"({"seed": 3, "out": "elsewhere", "generator": {"num_cases": 40, "image_dim": 96}})");
  CHECK(e.fingerprint() == a.fingerprint());
  CHECK(RunConfig::from_json(a.canonical_json()).canonical_json() == a.canonical_json());
}

TEST_CASE("defaults propagate") {
  const RunConfig r = RunConfig::from_json(R"({"seed": 9, "generator": {"polyp_frame_prevalence": 0.2}, "stage2": {"seed": 1}})");
  CHECK(r.generator.seed == 9);
  CHECK(r.pipeline.seed == 9);
  CHECK(r.pipeline.stage1.seed == 9);
  CHECK(r.pipeline.stage2.seed == 1);
  CHECK(r.pipeline.stage3.seed == 9);
  CHECK(r.pipeline.stage1.prevalence_estimate == 0.2);
  CHECK(r.pipeline.stage3.batch_size == 8);
  CHECK(r.pipeline.stage1.epochs == 100);
  CHECK(r.eval.detection_normal == 2308);
  CHECK(r.eval.seed != r.seed);
  CHECK(r.ablation.seeds.size() == 3);
  CHECK(RunConfig::defaults(9).fingerprint() == RunConfig::from_json(R"({"seed": 9})").fingerprint());
}

TEST_CASE("invalid configurations") {
  auto kind = [](const char* text) {
    try {
      RunConfig::from_json(text);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  CHECK(kind(R"({"generator": {"num_cases": "many"}})") == ErrorKind::Config);
  CHECK(kind(R"({"stage1": {"warmup_epochs": 500}})") == ErrorKind::Config);
  CHECK(kind(R"({"stage2": {"batch_size": 1}})") == ErrorKind::Config);
  CHECK(kind(R"({"ablation": {"variants": ["sp+zz"]}})") == ErrorKind::Config);
  CHECK(kind("[1, 2") == ErrorKind::Parse);
}
