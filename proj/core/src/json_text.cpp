#include "json_text.hpp"

#include "scopealign/error.hpp"

#include <cmath>
#include <cstdio>

namespace scopealign::json_text {

std::string format_double(double value) {
  if (!std::isfinite(value)) return "null";
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", value);
  std::string s(buf, static_cast<std::size_t>(n));
  // Keep the value a JSON float on re-read when %g drops the fraction.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

void dump_to(std::string& out, const json& value) {
  switch (value.type()) {
    case json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = value.begin(); it != value.end(); ++it) {
        if (!first) out += ',';
        first = false;
        out += json(it.key()).dump();
        out += ':';
        dump_to(out, it.value());
      }
      out += '}';
      break;
    }
    case json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (i) out += ',';
        dump_to(out, value[i]);
      }
      out += ']';
      break;
    }
    case json::value_t::number_float:
      out += format_double(value.get<double>());
      break;
    default:
      out += value.dump();
  }
}

std::string dump(const json& value) {
  std::string out;
  dump_to(out, value);
  return out;
}

json parse(std::string_view text, std::string_view what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string(what) + ": " + e.what());
  }
}

json doubles(const std::vector<double>& values) {
  json arr = json::array();
  for (double v : values) arr.push_back(v);
  return arr;
}

std::vector<double> to_doubles(const json& array, std::string_view what) {
  if (!array.is_array()) throw Error(ErrorKind::Config, std::string(what) + " must be an array");
  std::vector<double> out;
  out.reserve(array.size());
  for (const auto& v : array) {
    if (!v.is_number()) throw Error(ErrorKind::Config, std::string(what) + " holds a non-number");
    out.push_back(v.get<double>());
  }
  return out;
}

const json& require(const json& obj, std::string_view key) {
  if (!obj.is_object()) throw Error(ErrorKind::Config, "expected an object holding '" + std::string(key) + "'");
  auto it = obj.find(std::string(key));
  if (it == obj.end()) throw Error(ErrorKind::Config, "missing field '" + std::string(key) + "'");
  return *it;
}

double get_double(const json& obj, std::string_view key) {
  const json& v = require(obj, key);
  if (!v.is_number()) throw Error(ErrorKind::Config, "field '" + std::string(key) + "' must be a number");
  return v.get<double>();
}

double get_double(const json& obj, std::string_view key, double fallback) {
  return obj.contains(std::string(key)) ? get_double(obj, key) : fallback;
}

std::uint64_t get_u64(const json& obj, std::string_view key) {
  const json& v = require(obj, key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw Error(ErrorKind::Config, "field '" + std::string(key) + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

std::uint64_t get_u64(const json& obj, std::string_view key, std::uint64_t fallback) {
  return obj.contains(std::string(key)) ? get_u64(obj, key) : fallback;
}

std::string get_string(const json& obj, std::string_view key) {
  const json& v = require(obj, key);
  if (!v.is_string()) throw Error(ErrorKind::Config, "field '" + std::string(key) + "' must be a string");
  return v.get<std::string>();
}

bool get_bool(const json& obj, std::string_view key, bool fallback) {
  if (!obj.contains(std::string(key))) return fallback;
  const json& v = obj.at(std::string(key));
  if (!v.is_boolean()) throw Error(ErrorKind::Config, "field '" + std::string(key) + "' must be a boolean");
  return v.get<bool>();
}

}  // namespace scopealign::json_text
