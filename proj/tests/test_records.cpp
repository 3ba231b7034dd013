#include <doctest.h>

#include "scopealign/error.hpp"
#include "scopealign/records.hpp"
#include "scopealign/report.hpp"

#include <cmath>
#include <sstream>

using namespace scopealign;

namespace {

GeneratorConfig small(std::size_t n, std::uint64_t seed = 1) {
  GeneratorConfig c;
  c.num_cases = n;
  c.seed = seed;
  return c;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

}  // namespace

TEST_CASE("default schema layout") {
  const AttributeSchema s = AttributeSchema::default_schema();
  CHECK(s.aspects().size() == 9);
  CHECK(s.total_bits() == 26);
  CHECK(s.aspects()[s.malignancy_aspect()].name == "pit-pattern-class");
  CHECK(s.aspects()[s.malignancy_aspect()].values[s.malignant_value()] == "malignant");
  CHECK(AttributeSchema::from_json(s.to_json()) == s);
}

TEST_CASE("zero positive rate gives only negative cases") {
  GeneratorConfig c = small(10);
  c.polyp_positive_rate = 0.0;
  for (const MedicalCase& mc : generate_corpus(c, AttributeSchema::default_schema())) {
    CHECK(mc.polyp_count() == 0);
    CHECK_FALSE(mc.polyp_positive);
    for (bool b : mc.frame_labels) CHECK_FALSE(b);
  }
}

TEST_CASE("generation is byte-identical for a fixed seed") {
  const auto schema = AttributeSchema::default_schema();
  std::ostringstream a, b, c;
  write_corpus(a, generate_corpus(small(15, 9), schema));
  write_corpus(b, generate_corpus(small(15, 9), schema));
  write_corpus(c, generate_corpus(small(15, 10), schema));
  CHECK(a.str() == b.str());
  CHECK(a.str() != c.str());
}

TEST_CASE("positive fraction concentrates around the configured rate") {
  GeneratorConfig c = small(10000, 4);
  c.image_dim = 27;
  c.frames_per_case_min = c.frames_per_case_max = 4;
  const StatsReport s = corpus_stats(generate_corpus(c, AttributeSchema::default_schema()));
  CHECK(std::abs(s.positive_rate - 0.45) <= 0.02);
  CHECK(std::abs(s.multi_polyp_fraction - 0.43) <= 0.03);
}

TEST_CASE("case invariants") {
  const auto schema = AttributeSchema::default_schema();
  const auto count = *schema.find_aspect("count-context");
  for (const MedicalCase& mc : generate_corpus(small(200, 2), schema)) {
    CHECK(mc.polyp_positive == (mc.polyp_count() >= 1));
    CHECK(mc.frame_count() >= 1);
    std::size_t hits = 0;
    for (bool b : mc.frame_labels) hits += b;
    if (mc.polyp_positive) CHECK(hits >= mc.polyp_count());
    for (const auto& img : mc.images) CHECK(img.size() == 192);
    for (const AttributeVector& v : mc.sentence_attributes) {
      validate_attribute_vector(v, schema);
      const std::size_t multiple = schema.bit(count, 1);
      CHECK(v.bits[multiple] == (mc.polyp_count() > 1 ? 1 : 0));
    }
  }
}

TEST_CASE("image_dim must leave room for the planted directions") {
  GeneratorConfig c = small(3);
  c.image_dim = 20;
  try {
    generate_corpus(c, AttributeSchema::default_schema());
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
}

TEST_CASE("corpus_stats") {
  MedicalCase neg{"n", std::vector<std::vector<double>>(5, std::vector<double>{0.0}),
                  std::vector<bool>(5, false), {}, {}, false};
  StatsReport s = corpus_stats({neg});
  CHECK(s.positive_rate == 0.0);
  CHECK(s.polyp_frame_prevalence == 0.0);

  const auto schema = AttributeSchema::default_schema();
  const AttributeVector a = encode_assignment(schema, Assignment(9, 0));
  MedicalCase pos{"p", std::vector<std::vector<double>>(4, std::vector<double>{0.0}),
                  {true, false, true, false}, {"Polyp 1: size-class=diminutive."}, {a, a}, true};
  s = corpus_stats({neg, pos});
  // Hand count: 1 of 2 positive, 1 of 1 positive is multi-polyp, 9 frames,
  // 2 polyp frames out of 4 frames in positive cases.
  CHECK(s.num_cases == 2);
  CHECK(s.positive_rate == 0.5);
  CHECK(s.multi_polyp_fraction == 1.0);
  CHECK(s.mean_frames_per_case == 4.5);
  CHECK(s.polyp_frames == 2);
  CHECK(s.polyp_frame_prevalence == 0.5);

  try {
    corpus_stats({});
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyInput);
  }
}

TEST_CASE("generated stats follow the config") {
  const StatsReport s = corpus_stats(generate_corpus(small(2000, 6), AttributeSchema::default_schema()));
  CHECK(std::abs(s.positive_rate - 0.45) <= 0.04);
  CHECK(std::abs(s.mean_frames_per_case - 20.0) <= 0.5);
  // At least one frame per polyp lifts prevalence a little above 0.15.
  CHECK(s.polyp_frame_prevalence >= 0.15);
  CHECK(s.polyp_frame_prevalence <= 0.20);
}

TEST_CASE("planted separability holds up to noise 0.5") {
  const auto schema = AttributeSchema::default_schema();
  for (double noise : {0.2, 0.5}) {
    GeneratorConfig c = small(1);
    c.noise_std = noise;
    const SyntheticWorld world(c, schema);
    Rng rng = make_rng(3, "pairs");
    double same = 0, mixed = 0;
    for (int i = 0; i < 1000; ++i) {
      const Assignment a = world.random_assignment(rng);
      const auto f1 = world.polyp_frame(a, rng), f2 = world.polyp_frame(a, rng);
      same += cosine(f1, f2);
      mixed += cosine(world.polyp_frame(a, rng), world.normal_frame(rng));
    }
    CAPTURE(noise);
    CHECK(same / 1000 > mixed / 1000);
  }
}

TEST_CASE("JSONL round trip is exact") {
  const auto cases = generate_corpus(small(8, 12), AttributeSchema::default_schema());
  std::stringstream ss;
  write_corpus(ss, cases);
  CHECK(read_corpus(ss) == cases);
}

TEST_CASE("malformed corpus lines are rejected") {
  auto kind = [](const std::string& line) {
    try {
      case_from_json(line);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  CHECK(kind("{not json") == ErrorKind::Parse);
  CHECK(kind(R"({"case_id":"x","images":[],"frame_labels":[],"sentences":[],"sentence_attributes":[],"polyp_positive":false})") ==
        ErrorKind::Parse);
  CHECK(kind(R"({"case_id":"x","images":[[1.0]],"frame_labels":[false],"sentences":[],"sentence_attributes":[],"polyp_positive":true})") ==
        ErrorKind::Parse);
}

TEST_CASE("reports place fillers around the polyp sentences") {
  const auto schema = AttributeSchema::default_schema();
  for (const MedicalCase& mc : generate_corpus(small(50, 8), schema)) {
    const ParsedReport r = parse_report(mc.sentences, schema, mc.case_id);
    REQUIRE(r.polyp_sentences.size() == mc.polyp_count());
    for (std::size_t j = 0; j < r.polyp_sentences.size(); ++j)
      CHECK(r.polyp_sentences[j].second == mc.sentence_attributes[j]);
    CHECK(r.discarded.size() + r.polyp_sentences.size() == mc.sentences.size());
  }
}
