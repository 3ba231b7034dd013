#include "scopealign/schema.hpp"

#include "scopealign/error.hpp"
#include "json_text.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace scopealign {

AttributeSchema::AttributeSchema(std::string version, std::vector<Aspect> aspects,
                                 std::string malignancy_aspect, std::string malignant_value)
    : version_(std::move(version)), aspects_(std::move(aspects)) {
  if (version_.empty()) throw Error(ErrorKind::Schema, "schema version is empty");
  if (aspects_.size() != kAspectCount)
    throw Error(ErrorKind::Schema, "schema needs exactly 9 aspects, got " + std::to_string(aspects_.size()));
  std::set<std::string> names;
  for (const Aspect& a : aspects_) {
    if (!names.insert(a.name).second) throw Error(ErrorKind::Schema, "duplicate aspect '" + a.name + "'");
    if (a.values.size() < 2 || a.values.size() > 4)
      throw Error(ErrorKind::Schema, "aspect '" + a.name + "' needs 2-4 values");
    std::set<std::string> vals(a.values.begin(), a.values.end());
    if (vals.size() != a.values.size())
      throw Error(ErrorKind::Schema, "aspect '" + a.name + "' repeats a value");
    for (const std::string& v : a.values)
      if (v.empty() || v.find_first_of(" ;=:") != std::string::npos)
        throw Error(ErrorKind::Schema, "value '" + v + "' of aspect '" + a.name + "' is not a bare word");
    if (!(a.signal_scale >= 0.0))
      throw Error(ErrorKind::Schema, "aspect '" + a.name + "' has a negative signal scale");
    offsets_.push_back(total_bits_);
    total_bits_ += a.values.size();
  }
  auto ai = find_aspect(malignancy_aspect);
  if (!ai) throw Error(ErrorKind::Schema, "unknown malignancy aspect '" + malignancy_aspect + "'");
  auto vi = find_value(*ai, malignant_value);
  if (!vi) throw Error(ErrorKind::Schema, "unknown malignant value '" + malignant_value + "'");
  if (aspects_[*ai].values.size() != 2)
    throw Error(ErrorKind::Schema, "malignancy aspect must be binary");
  malignancy_aspect_ = *ai;
  malignant_value_ = *vi;
}

AttributeSchema AttributeSchema::default_schema() {
  return AttributeSchema(
      "endo-attr-v1",
      {
          {"size-class", {"diminutive", "small", "large"}, 1.0},
          {"Paris-shape", {"pedunculated", "sessile", "flat", "depressed"}, 1.0},
          {"surface-pattern", {"smooth", "lobulated", "granular"}, 1.0},
          {"color", {"pale", "reddish", "isochromatic"}, 1.0},
          {"boundary", {"clear", "blurred"}, 1.0},
          {"location-segment", {"rectum", "sigmoid", "descending", "ascending"}, 1.0},
          {"pit-pattern-class", {"benign", "malignant"}, 0.35},
          {"vascularity", {"regular", "dilated", "absent"}, 1.0},
          // Not visible in a single frame.
          {"count-context", {"solitary", "multiple"}, 0.0},
      },
      "pit-pattern-class", "malignant");
}

std::size_t AttributeSchema::bit(std::size_t aspect, std::size_t value) const {
  if (aspect >= aspects_.size() || value >= aspects_[aspect].values.size())
    throw Error(ErrorKind::Schema, "category (" + std::to_string(aspect) + "," +
                                       std::to_string(value) + ") outside schema");
  return offsets_[aspect] + value;
}

std::optional<std::size_t> AttributeSchema::find_aspect(std::string_view name) const {
  for (std::size_t i = 0; i < aspects_.size(); ++i)
    if (aspects_[i].name == name) return i;
  return std::nullopt;
}

std::optional<std::size_t> AttributeSchema::find_value(std::size_t aspect,
                                                       std::string_view value) const {
  const auto& vals = aspects_.at(aspect).values;
  for (std::size_t i = 0; i < vals.size(); ++i)
    if (vals[i] == value) return i;
  return std::nullopt;
}

std::string AttributeSchema::to_json() const {
  using json_text::json;
  json aspects = json::array();
  for (const Aspect& a : aspects_)
    aspects.push_back({{"name", a.name}, {"values", a.values}, {"signal_scale", a.signal_scale}});
  json doc = {{"version", version_},
              {"aspects", aspects},
              {"total_bits", total_bits_},
              {"malignancy_aspect", aspects_[malignancy_aspect_].name},
              {"malignant_value", aspects_[malignancy_aspect_].values[malignant_value_]}};
  return json_text::dump(doc);
}

AttributeSchema AttributeSchema::from_json(std::string_view text) {
  using namespace json_text;
  const json doc = parse(text, "schema");
  std::vector<Aspect> aspects;
  const json& arr = require(doc, "aspects");
  if (!arr.is_array()) throw Error(ErrorKind::Schema, "'aspects' must be an array");
  for (const json& a : arr) {
    Aspect asp;
    asp.name = get_string(a, "name");
    for (const json& v : require(a, "values")) asp.values.push_back(v.get<std::string>());
    asp.signal_scale = get_double(a, "signal_scale", 1.0);
    aspects.push_back(std::move(asp));
  }
  AttributeSchema schema(get_string(doc, "version"), std::move(aspects),
                         get_string(doc, "malignancy_aspect"), get_string(doc, "malignant_value"));
  if (doc.contains("total_bits") && get_u64(doc, "total_bits") != schema.total_bits())
    throw Error(ErrorKind::Schema, "total_bits does not match the aspect list");
  return schema;
}

bool AttributeSchema::operator==(const AttributeSchema& other) const {
  if (version_ != other.version_ || aspects_.size() != other.aspects_.size()) return false;
  for (std::size_t i = 0; i < aspects_.size(); ++i) {
    const Aspect& a = aspects_[i];
    const Aspect& b = other.aspects_[i];
    if (a.name != b.name || a.values != b.values || a.signal_scale != b.signal_scale) return false;
  }
  return malignancy_aspect_ == other.malignancy_aspect_ &&
         malignant_value_ == other.malignant_value_;
}

std::size_t AttributeVector::popcount() const noexcept {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

AttributeVector encode_assignment(const AttributeSchema& schema, const Assignment& assignment) {
  if (assignment.size() != schema.aspects().size())
    throw Error(ErrorKind::Schema, "assignment covers " + std::to_string(assignment.size()) +
                                       " aspects, schema has " +
                                       std::to_string(schema.aspects().size()));
  AttributeVector v{std::vector<std::uint8_t>(schema.total_bits(), 0), schema.version(), false};
  for (std::size_t a = 0; a < assignment.size(); ++a) v.bits[schema.bit(a, assignment[a])] = 1;
  return v;
}

void validate_attribute_vector(const AttributeVector& v, const AttributeSchema& schema) {
  if (v.schema_version != schema.version())
    throw Error(ErrorKind::Schema, "vector schema '" + v.schema_version + "' != '" +
                                       schema.version() + "'");
  if (v.bits.size() != schema.total_bits())
    throw Error(ErrorKind::InvalidAttribute, "vector has " + std::to_string(v.bits.size()) +
                                                 " bits, schema has " +
                                                 std::to_string(schema.total_bits()));
  for (std::uint8_t b : v.bits)
    if (b > 1) throw Error(ErrorKind::InvalidAttribute, "bit value outside {0,1}");
  if (v.popcount() == 0) throw Error(ErrorKind::InvalidAttribute, "all-zero attribute vector");
  if (v.is_union) return;
  for (std::size_t a = 0; a < schema.aspects().size(); ++a) {
    std::size_t set = 0;
    for (std::size_t k = 0; k < schema.aspects()[a].values.size(); ++k) set += v.bits[schema.bit(a, k)];
    if (set > 1)
      throw Error(ErrorKind::InvalidAttribute,
                  "aspect '" + schema.aspects()[a].name + "' has more than one bit set");
  }
}

double multi_hot_cosine(const AttributeVector& a, const AttributeVector& b) {
  if (a.bits.size() != b.bits.size())
    throw Error(ErrorKind::Dimension, "attribute vectors differ in length");
  std::size_t both = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    both += a.bits[i] & b.bits[i];
    na += a.bits[i];
    nb += b.bits[i];
  }
  if (na == 0 || nb == 0) throw Error(ErrorKind::InvalidAttribute, "all-zero attribute vector");
  return static_cast<double>(both) / std::sqrt(static_cast<double>(na) * static_cast<double>(nb));
}

}  // namespace scopealign
