#include <doctest.h>

#include "scopealign/checkpoint.hpp"
#include "scopealign/error.hpp"
#include "oracles.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

using namespace scopealign;
namespace fs = std::filesystem;

namespace {

StageCheckpoint sample(bool with_ca) {
  Model m = Model::initialize(EncoderDims{12, 8, 5},
                              Vocabulary::build({"a polyp with a pit pattern", "normal colon"}), 21);
  if (with_ca) {
    Rng rng = make_rng(3, "ca");
    m.cross_attention = CrossAttentionBlock::near_identity(5, 0.1, rng);
  }
  return {kCheckpointFormatVersion, "stage3", std::move(m), 0.07, "cfg", "corpus", "1"};
}

fs::path scratch(const char* name) {
  const fs::path dir = fs::temp_directory_path() / "scopealign-test-checkpoint";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("saved checkpoints reproduce the forward pass bit for bit") {
  const StageCheckpoint a = sample(true);
  const fs::path p = scratch("ck.json");
  save_checkpoint(p, a);
  const StageCheckpoint b = load_checkpoint(p);
  CHECK(b.stage == "stage3");
  CHECK(b.temperature == 0.07);
  CHECK(b.corpus_fingerprint == "corpus");
  REQUIRE(b.model.cross_attention.has_value());

  std::mt19937_64 rng(5);
  const auto x = oracle::tensor(oracle::random_mat(rng, 100, 12));
  const Tensor va = a.model.vision.encode(x).matrix, vb = b.model.vision.encode(x).matrix;
  const auto ea = va.data(), eb = vb.data();
  CHECK(std::memcmp(ea.data(), eb.data(), ea.size() * sizeof(double)) == 0);
  const Tensor xa = a.model.text.encode({"a polyp", "normal colon"}).matrix;
  const Tensor xb = b.model.text.encode({"a polyp", "normal colon"}).matrix;
  const auto ta = xa.data(), tb = xb.data();
  CHECK(std::memcmp(ta.data(), tb.data(), ta.size() * sizeof(double)) == 0);
  CHECK(b.to_json() == a.to_json());
}

TEST_CASE("checkpoints without cross-attention round-trip") {
  const StageCheckpoint a = sample(false);
  CHECK_FALSE(StageCheckpoint::from_json(a.to_json()).model.cross_attention.has_value());
}

TEST_CASE("load errors") {
  try {
    load_checkpoint(scratch("missing.json"));
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
  std::string text = sample(false).to_json();
  const auto at = text.find("\"format_version\":1");
  REQUIRE(at != std::string::npos);
  text.replace(at, 18, "\"format_version\":9");
  CHECK_THROWS_AS(StageCheckpoint::from_json(text), Error);
  CHECK_THROWS_AS(StageCheckpoint::from_json("{"), Error);
}

TEST_CASE("fingerprint_hex") {
  // FNV-1a 64 of the empty string is the offset basis.
  CHECK(fingerprint_hex("") == "cbf29ce484222325");
  CHECK(fingerprint_hex("a") == "af63dc4c8601ec8c");
  CHECK(fingerprint_hex("ab") != fingerprint_hex("ba"));
}
