#include "scopealign/report.hpp"

#include "scopealign/error.hpp"
#include "json_text.hpp"

#include <cctype>

namespace scopealign {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Returns the body after "Polyp <int>:" or npos when the prefix does not match.
std::size_t polyp_body_start(std::string_view s) {
  constexpr std::string_view prefix = "Polyp ";
  if (s.substr(0, prefix.size()) != prefix) return std::string_view::npos;
  std::size_t i = prefix.size();
  const std::size_t digits = i;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  if (i == digits || i >= s.size() || s[i] != ':') return std::string_view::npos;
  return i + 1;
}

[[noreturn]] void fail(std::size_t index, std::string_view token, std::string_view why) {
  throw Error(ErrorKind::Parse, "sentence " + std::to_string(index) + ": " + std::string(why) +
                                    " '" + std::string(token) + "'");
}

AttributeVector parse_polyp_body(std::string_view body, std::size_t index,
                                 const AttributeSchema& schema) {
  body = trim(body);
  if (!body.empty() && body.back() == '.') body.remove_suffix(1);
  AttributeVector v{std::vector<std::uint8_t>(schema.total_bits(), 0), schema.version(), false};
  std::vector<bool> seen(schema.aspects().size(), false);
  std::size_t pairs = 0;
  while (!body.empty()) {
    const std::size_t semi = body.find(';');
    const std::string_view item = trim(body.substr(0, semi));
    body = semi == std::string_view::npos ? std::string_view{} : body.substr(semi + 1);
    if (item.empty()) fail(index, item, "empty attribute");
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos) fail(index, item, "expected aspect=value, got");
    const std::string_view aspect = trim(item.substr(0, eq));
    const std::string_view value = trim(item.substr(eq + 1));
    const auto a = schema.find_aspect(aspect);
    if (!a) fail(index, aspect, "unknown aspect");
    const auto k = schema.find_value(*a, value);
    if (!k) fail(index, value, "unknown value");
    if (seen[*a]) fail(index, aspect, "repeated aspect");
    seen[*a] = true;
    v.bits[schema.bit(*a, *k)] = 1;
    ++pairs;
  }
  if (pairs == 0) fail(index, "", "polyp sentence without attributes");
  return v;
}

}  // namespace

ParsedReport parse_report(const std::vector<std::string>& raw_sentences,
                          const AttributeSchema& schema, std::string case_id) {
  ParsedReport out;
  out.case_id = std::move(case_id);
  for (std::size_t i = 0; i < raw_sentences.size(); ++i) {
    const std::string& s = raw_sentences[i];
    const std::size_t body = polyp_body_start(s);
    if (body == std::string_view::npos) {
      out.discarded.push_back(s);
      continue;
    }
    out.polyp_sentences.emplace_back(s, parse_polyp_body(std::string_view(s).substr(body), i, schema));
  }
  return out;
}

std::string_view standardized_sentence(const ParsedReport& report) noexcept {
  return report.polyp_sentences.empty() ? kNegativeSentence : kPositiveSentence;
}

AttributeVector union_attributes(const std::vector<AttributeVector>& vectors) {
  if (vectors.empty()) throw Error(ErrorKind::EmptyInput, "union of no attribute vectors");
  AttributeVector out = vectors.front();
  out.is_union = true;
  for (const AttributeVector& v : vectors) {
    if (v.schema_version != out.schema_version)
      throw Error(ErrorKind::Schema, "mixed schema versions '" + out.schema_version + "' and '" +
                                         v.schema_version + "'");
    if (v.bits.size() != out.bits.size())
      throw Error(ErrorKind::Dimension, "attribute vectors differ in length");
    for (std::size_t i = 0; i < v.bits.size(); ++i) out.bits[i] |= v.bits[i];
  }
  return out;
}

std::string ParsedReport::to_json() const {
  using json_text::json;
  json polyps = json::array();
  for (const auto& [text, v] : polyp_sentences)
    polyps.push_back({{"sentence", text},
                      {"attributes", {{"bits", v.bits}, {"schema_version", v.schema_version}}}});
  return json_text::dump(
      json{{"case_id", case_id}, {"polyp_sentences", polyps}, {"discarded", discarded}});
}

}  // namespace scopealign
