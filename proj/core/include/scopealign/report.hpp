#pragma once

#include "scopealign/schema.hpp"

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace scopealign {

struct ParsedReport {
  std::string case_id;
  std::vector<std::pair<std::string, AttributeVector>> polyp_sentences;
  std::vector<std::string> discarded;

  std::string to_json() const;
};

inline constexpr std::string_view kPositiveSentence = "This is a colon with polyps.";
inline constexpr std::string_view kNegativeSentence = "This is a normal background.";

/// Sentences opening with "Polyp <int>:" are parsed as "aspect=value" pairs
/// separated by ';' with an optional trailing '.'. Everything else is
/// discarded. A polyp sentence with an unknown aspect or value, a repeated
/// aspect, or no pairs at all raises Error(Parse) naming the sentence index
/// and the offending token.
ParsedReport parse_report(const std::vector<std::string>& raw_sentences,
                          const AttributeSchema& schema, std::string case_id = {});

std::string_view standardized_sentence(const ParsedReport& report) noexcept;

/// Bitwise OR. Throws Schema on mixed versions, EmptyInput on an empty list.
AttributeVector union_attributes(const std::vector<AttributeVector>& vectors);

}  // namespace scopealign
