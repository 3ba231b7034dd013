#include "scopealign/records.hpp"

#include "scopealign/error.hpp"
#include "json_text.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

namespace scopealign {

using json_text::json;

namespace {

void check_rate(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0))
    throw Error(ErrorKind::Config, std::string(name) + " must lie in [0,1]");
}

void orthogonalize(std::vector<double>& v, const std::vector<std::vector<double>>& basis) {
  for (const auto& b : basis) {
    const double dot = std::inner_product(v.begin(), v.end(), b.begin(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= dot * b[i];
  }
}

void normalize(std::vector<double>& v) {
  const double n = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
  for (double& x : v) x /= n;
}

std::vector<double> gaussian_vector(Rng& rng, std::size_t n, double stddev) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = stddev * dist(rng);
  return v;
}

}  // namespace

// --- GeneratorConfig ---------------------------------------------------------

void GeneratorConfig::validate(const AttributeSchema& schema) const {
  check_rate(polyp_positive_rate, "polyp_positive_rate");
  check_rate(multi_polyp_fraction, "multi_polyp_fraction");
  check_rate(polyp_frame_prevalence, "polyp_frame_prevalence");
  if (!(noise_std >= 0.0)) throw Error(ErrorKind::Config, "noise_std must be non-negative");
  if (frames_per_case_min < 1 || frames_per_case_max < frames_per_case_min)
    throw Error(ErrorKind::Config, "frames_per_case range must satisfy 1 <= min <= max");
  if (max_polyps_per_case < 2 && multi_polyp_fraction > 0.0)
    throw Error(ErrorKind::Config, "multi-polyp cases need max_polyps_per_case >= 2");
  if (max_polyps_per_case > frames_per_case_min)
    throw Error(ErrorKind::Config, "max_polyps_per_case exceeds frames_per_case_min");
  if (image_dim < schema.total_bits())
    throw Error(ErrorKind::Config, "image_dim " + std::to_string(image_dim) +
                                       " is smaller than the schema's " +
                                       std::to_string(schema.total_bits()) + " attribute bits");
}

std::string GeneratorConfig::to_json() const {
  return json_text::dump(json{{"num_cases", num_cases},
                              {"frames_per_case_min", frames_per_case_min},
                              {"frames_per_case_max", frames_per_case_max},
                              {"polyp_positive_rate", polyp_positive_rate},
                              {"multi_polyp_fraction", multi_polyp_fraction},
                              {"max_polyps_per_case", max_polyps_per_case},
                              {"polyp_frame_prevalence", polyp_frame_prevalence},
                              {"image_dim", image_dim},
                              {"noise_std", noise_std},
                              {"max_filler_sentences", max_filler_sentences},
                              {"seed", seed}});
}

GeneratorConfig GeneratorConfig::from_json(std::string_view text) {
  using namespace json_text;
  const json doc = parse(text, "generator config");
  GeneratorConfig c;
  c.num_cases = get_u64(doc, "num_cases", c.num_cases);
  c.frames_per_case_min = get_u64(doc, "frames_per_case_min", c.frames_per_case_min);
  c.frames_per_case_max = get_u64(doc, "frames_per_case_max", c.frames_per_case_max);
  c.polyp_positive_rate = get_double(doc, "polyp_positive_rate", c.polyp_positive_rate);
  c.multi_polyp_fraction = get_double(doc, "multi_polyp_fraction", c.multi_polyp_fraction);
  c.max_polyps_per_case = get_u64(doc, "max_polyps_per_case", c.max_polyps_per_case);
  c.polyp_frame_prevalence = get_double(doc, "polyp_frame_prevalence", c.polyp_frame_prevalence);
  c.image_dim = get_u64(doc, "image_dim", c.image_dim);
  c.noise_std = get_double(doc, "noise_std", c.noise_std);
  c.max_filler_sentences = get_u64(doc, "max_filler_sentences", c.max_filler_sentences);
  c.seed = get_u64(doc, "seed", c.seed);
  return c;
}

// --- SyntheticWorld ----------------------------------------------------------

SyntheticWorld::SyntheticWorld(const GeneratorConfig& cfg, const AttributeSchema& schema)
    : schema_(schema), noise_std_(cfg.noise_std) {
  cfg.validate(schema);
  Rng rng = make_rng(cfg.seed, "world");
  const std::size_t p = cfg.image_dim;
  for (std::size_t b = 0; b < schema.total_bits(); ++b) {
    std::vector<double> v = gaussian_vector(rng, p, 1.0);
    orthogonalize(v, directions_);
    normalize(v);
    directions_.push_back(std::move(v));
  }
  background_ = gaussian_vector(rng, p, 1.0);
  if (p > schema.total_bits()) orthogonalize(background_, directions_);
  normalize(background_);
  for (double& x : background_) x *= kBackgroundNorm;
}

std::vector<double> SyntheticWorld::normal_frame(Rng& rng) const {
  std::vector<double> f = gaussian_vector(rng, background_.size(), noise_std_);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] += background_[i];
  return f;
}

std::vector<double> SyntheticWorld::polyp_frame(const Assignment& polyp, Rng& rng) const {
  std::vector<double> f = normal_frame(rng);
  for (std::size_t a = 0; a < polyp.size(); ++a) {
    const double amp = schema_.aspects()[a].signal_scale;
    const auto& dir = directions_[schema_.bit(a, polyp[a])];
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += amp * dir[i];
  }
  return f;
}

Assignment SyntheticWorld::random_assignment(Rng& rng) const {
  Assignment out;
  for (const Aspect& a : schema_.aspects()) {
    std::uniform_int_distribution<std::size_t> pick(0, a.values.size() - 1);
    out.push_back(pick(rng));
  }
  return out;
}

// --- rendering -----------------------------------------------------------------

std::string render_polyp_sentence(const AttributeSchema& schema, std::size_t polyp_number,
                                  const Assignment& assignment) {
  std::string s = "Polyp " + std::to_string(polyp_number) + ":";
  for (std::size_t a = 0; a < assignment.size(); ++a) {
    const Aspect& asp = schema.aspects().at(a);
    s += (a ? "; " : " ") + asp.name + "=" + asp.values.at(assignment[a]);
  }
  return s + ".";
}

const std::vector<std::string>& filler_sentences() {
  static const std::vector<std::string> fillers = {
      "Scope inserted smoothly to the cecum.",
      "Bowel preparation was adequate.",
      "The terminal ileum appeared unremarkable.",
      "Withdrawal time exceeded six minutes.",
      "No active bleeding was observed.",
      "Patient tolerated the procedure well.",
  };
  return fillers;
}

// --- generation ----------------------------------------------------------------

namespace {

MedicalCase generate_case(const GeneratorConfig& cfg, const SyntheticWorld& world,
                          std::size_t index) {
  const AttributeSchema& schema = world.schema();
  Rng rng = make_rng(cfg.seed, "case", index);
  std::bernoulli_distribution positive(cfg.polyp_positive_rate);
  std::bernoulli_distribution multi(cfg.multi_polyp_fraction);
  std::uniform_int_distribution<std::size_t> frames(cfg.frames_per_case_min, cfg.frames_per_case_max);

  MedicalCase c;
  c.case_id = "case-" + std::to_string(index);
  c.polyp_positive = positive(rng);
  const std::size_t k = frames(rng);

  std::size_t n_polyps = 0;
  if (c.polyp_positive) {
    n_polyps = 1;
    if (multi(rng)) {
      std::uniform_int_distribution<std::size_t> extra(2, cfg.max_polyps_per_case);
      n_polyps = extra(rng);
    }
  }

  std::vector<Assignment> polyps;
  const auto count_aspect = schema.find_aspect("count-context");
  for (std::size_t j = 0; j < n_polyps; ++j) {
    Assignment a = world.random_assignment(rng);
    if (count_aspect && schema.aspects()[*count_aspect].values.size() == 2)
      a[*count_aspect] = n_polyps > 1 ? 1 : 0;
    polyps.push_back(std::move(a));
  }

  // Which frames show a polyp, and which polyp each one shows. Every polyp
  // appears in at least one frame.
  std::vector<int> shown(k, -1);
  if (n_polyps > 0) {
    std::binomial_distribution<std::size_t> hits(k, cfg.polyp_frame_prevalence);
    const std::size_t n_hit = std::min(k, std::max(n_polyps, hits(rng)));
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::uniform_int_distribution<std::size_t> which(0, n_polyps - 1);
    for (std::size_t h = 0; h < n_hit; ++h)
      shown[order[h]] = static_cast<int>(h < n_polyps ? h : which(rng));
  }
  for (std::size_t f = 0; f < k; ++f) {
    if (shown[f] >= 0) {
      c.images.push_back(world.polyp_frame(polyps[static_cast<std::size_t>(shown[f])], rng));
      c.frame_labels.push_back(true);
    } else {
      c.images.push_back(world.normal_frame(rng));
      c.frame_labels.push_back(false);
    }
  }

  // Report: fillers before and after the polyp sentences.
  const auto& fillers = filler_sentences();
  std::uniform_int_distribution<std::size_t> n_fill(0, cfg.max_filler_sentences);
  std::uniform_int_distribution<std::size_t> pick(0, fillers.size() - 1);
  const std::size_t before = n_fill(rng);
  const std::size_t after = n_fill(rng);
  for (std::size_t i = 0; i < before; ++i) c.sentences.push_back(fillers[pick(rng)]);
  for (std::size_t j = 0; j < n_polyps; ++j) {
    c.sentences.push_back(render_polyp_sentence(schema, j + 1, polyps[j]));
    c.sentence_attributes.push_back(encode_assignment(schema, polyps[j]));
  }
  for (std::size_t i = 0; i < after; ++i) c.sentences.push_back(fillers[pick(rng)]);
  return c;
}

}  // namespace

std::vector<MedicalCase> generate_corpus(const GeneratorConfig& cfg, const AttributeSchema& schema) {
  const SyntheticWorld world(cfg, schema);
  std::vector<MedicalCase> cases;
  cases.reserve(cfg.num_cases);
  for (std::size_t i = 0; i < cfg.num_cases; ++i) cases.push_back(generate_case(cfg, world, i));
  return cases;
}

// --- stats -----------------------------------------------------------------------

StatsReport corpus_stats(const std::vector<MedicalCase>& cases) {
  if (cases.empty()) throw Error(ErrorKind::EmptyInput, "corpus_stats of an empty corpus");
  StatsReport r;
  std::size_t positive_frames = 0;
  r.num_cases = cases.size();
  for (const MedicalCase& c : cases) {
    r.total_frames += c.frame_count();
    if (c.polyp_positive) {
      ++r.num_positive;
      positive_frames += c.frame_count();
      if (c.polyp_count() > 1) ++r.num_multi_polyp;
    }
    r.polyp_frames += static_cast<std::size_t>(std::count(c.frame_labels.begin(), c.frame_labels.end(), true));
  }
  r.positive_rate = static_cast<double>(r.num_positive) / static_cast<double>(r.num_cases);
  r.multi_polyp_fraction =
      r.num_positive ? static_cast<double>(r.num_multi_polyp) / static_cast<double>(r.num_positive) : 0.0;
  r.mean_frames_per_case = static_cast<double>(r.total_frames) / static_cast<double>(r.num_cases);
  r.polyp_frame_prevalence =
      positive_frames ? static_cast<double>(r.polyp_frames) / static_cast<double>(positive_frames) : 0.0;
  return r;
}

std::string StatsReport::to_json() const {
  return json_text::dump(json{{"num_cases", num_cases},
                              {"num_positive", num_positive},
                              {"num_multi_polyp", num_multi_polyp},
                              {"total_frames", total_frames},
                              {"polyp_frames", polyp_frames},
                              {"positive_rate", positive_rate},
                              {"multi_polyp_fraction", multi_polyp_fraction},
                              {"mean_frames_per_case", mean_frames_per_case},
                              {"polyp_frame_prevalence", polyp_frame_prevalence}});
}

// --- JSONL -------------------------------------------------------------------------

std::string case_to_json(const MedicalCase& c) {
  json images = json::array();
  for (const auto& img : c.images) images.push_back(json_text::doubles(img));
  json labels = json::array();
  for (bool b : c.frame_labels) labels.push_back(b);
  json attrs = json::array();
  for (const AttributeVector& v : c.sentence_attributes)
    attrs.push_back({{"bits", v.bits}, {"schema_version", v.schema_version}});
  return json_text::dump(json{{"case_id", c.case_id},
                              {"images", images},
                              {"frame_labels", labels},
                              {"sentences", c.sentences},
                              {"sentence_attributes", attrs},
                              {"polyp_positive", c.polyp_positive}});
}

MedicalCase case_from_json(std::string_view line) {
  using namespace json_text;
  const json doc = parse(line, "corpus line");
  MedicalCase c;
  try {
    c.case_id = get_string(doc, "case_id");
    for (const json& img : require(doc, "images")) c.images.push_back(to_doubles(img, "images"));
    for (const json& b : require(doc, "frame_labels")) c.frame_labels.push_back(b.get<bool>());
    for (const json& s : require(doc, "sentences")) c.sentences.push_back(s.get<std::string>());
    for (const json& a : require(doc, "sentence_attributes")) {
      AttributeVector v;
      v.bits = require(a, "bits").get<std::vector<std::uint8_t>>();
      v.schema_version = get_string(a, "schema_version");
      c.sentence_attributes.push_back(std::move(v));
    }
    c.polyp_positive = require(doc, "polyp_positive").get<bool>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, "corpus line: " + std::string(e.what()));
  }
  if (c.images.empty()) throw Error(ErrorKind::Parse, c.case_id + ": case has no frames");
  if (c.frame_labels.size() != c.images.size())
    throw Error(ErrorKind::Parse, c.case_id + ": frame_labels length differs from images");
  for (const auto& img : c.images)
    if (img.size() != c.images.front().size())
      throw Error(ErrorKind::Parse, c.case_id + ": frames differ in dimension");
  if (c.polyp_positive != (c.polyp_count() >= 1))
    throw Error(ErrorKind::Parse, c.case_id + ": polyp_positive disagrees with the attribute list");
  return c;
}

void write_corpus(std::ostream& out, const std::vector<MedicalCase>& cases) {
  for (const MedicalCase& c : cases) out << case_to_json(c) << '\n';
}

std::vector<MedicalCase> read_corpus(std::istream& in) {
  std::vector<MedicalCase> cases;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    cases.push_back(case_from_json(line));
  }
  return cases;
}

}  // namespace scopealign
