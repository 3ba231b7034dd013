#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scopealign {

struct Aspect {
  std::string name;
  std::vector<std::string> values;
  // Amplitude of this aspect's planted direction in synthetic frames.
  double signal_scale = 1.0;
};

/// Nine categorical aspects, 2-4 values each, concatenated into one bit layout.
class AttributeSchema {
 public:
  static constexpr std::size_t kAspectCount = 9;

  AttributeSchema(std::string version, std::vector<Aspect> aspects,
                  std::string malignancy_aspect, std::string malignant_value);

  static AttributeSchema default_schema();

  const std::string& version() const noexcept { return version_; }
  const std::vector<Aspect>& aspects() const noexcept { return aspects_; }
  std::size_t total_bits() const noexcept { return total_bits_; }
  std::size_t offset(std::size_t aspect) const { return offsets_.at(aspect); }
  std::size_t bit(std::size_t aspect, std::size_t value) const;

  std::optional<std::size_t> find_aspect(std::string_view name) const;
  std::optional<std::size_t> find_value(std::size_t aspect, std::string_view value) const;

  // The planted aspect standing in for histology (benign vs malignant).
  std::size_t malignancy_aspect() const noexcept { return malignancy_aspect_; }
  std::size_t malignant_value() const noexcept { return malignant_value_; }

  std::string to_json() const;
  static AttributeSchema from_json(std::string_view text);

  bool operator==(const AttributeSchema& other) const;

 private:
  std::string version_;
  std::vector<Aspect> aspects_;
  std::vector<std::size_t> offsets_;
  std::size_t total_bits_ = 0;
  std::size_t malignancy_aspect_ = 0;
  std::size_t malignant_value_ = 0;
};

/// Multi-hot vector over a schema's bit layout. Parsed polyp vectors carry one
/// bit per aspect block at most; union vectors relax that and set `is_union`.
struct AttributeVector {
  std::vector<std::uint8_t> bits;
  std::string schema_version;
  bool is_union = false;

  std::size_t popcount() const noexcept;
  bool operator==(const AttributeVector&) const = default;
};

/// One category index per aspect.
using Assignment = std::vector<std::size_t>;

AttributeVector encode_assignment(const AttributeSchema& schema, const Assignment& assignment);
/// Throws InvalidAttribute when `v` breaks the per-aspect single-bit rule.
void validate_attribute_vector(const AttributeVector& v, const AttributeSchema& schema);
/// Cosine of two 0/1 vectors: |a & b| / sqrt(|a| |b|).
double multi_hot_cosine(const AttributeVector& a, const AttributeVector& b);

}  // namespace scopealign
