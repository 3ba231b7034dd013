#pragma once

// Internal JSON helpers. nlohmann/json is kept out of the public headers.

#include <json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace scopealign::json_text {

using nlohmann::json;

/// Compact dump with object keys in sorted order and every floating-point
/// number printed with 17 significant digits ('.' decimal separator).
std::string dump(const json& value);
void dump_to(std::string& out, const json& value);

/// Parses text, mapping syntax errors onto Error(Parse).
json parse(std::string_view text, std::string_view what);

std::string format_double(double value);

json doubles(const std::vector<double>& values);
std::vector<double> to_doubles(const json& array, std::string_view what);

/// Typed accessors raising Error(Config) with the field name on mismatch.
const json& require(const json& obj, std::string_view key);
double get_double(const json& obj, std::string_view key);
double get_double(const json& obj, std::string_view key, double fallback);
std::uint64_t get_u64(const json& obj, std::string_view key);
std::uint64_t get_u64(const json& obj, std::string_view key, std::uint64_t fallback);
std::string get_string(const json& obj, std::string_view key);
bool get_bool(const json& obj, std::string_view key, bool fallback);

}  // namespace scopealign::json_text
