#pragma once

// Map-spec files: JSON documents describing a map plus analysis defaults.
//
//   {
//     "version": 1,                       // required
//     "vars": ["x", "y"],                 // with "components"
//     "components": ["x + y*x^2", "0"],   // XOR "builtin"
//     "builtin": "builtin:hw_simple?k=2",
//     "dim": 2,                           // optional consistency check
//     "window": [[-3, 3], [-3, 3]],       // optional, per-axis [lo, hi]
//     "tol": 1e-9, "samples": 4096, "seed": 0
//   }
//
// Loading yields the MapSpec, the analysis defaults, and a content digest
// (FNV-1a over the raw bytes) echoed by every report. Unknown fields are
// rejected so typos fail loudly.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "babbage/builtins.hpp"
#include "babbage/map_spec.hpp"
#include "babbage/sampling.hpp"

namespace babbage {

class SpecFileError : public ExprError {
 public:
  using ExprError::ExprError;
};

struct LoadedMap {
  MapSpec map;
  AnalysisParams params;
  std::string digest;  // "fnv1a:<16 hex digits>"
  std::string source;  // path or synthetic name the text came from
};

namespace detail {

inline std::string fnv1a_digest(std::string_view bytes) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "fnv1a:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// line/column (1-based) of a byte offset inside `text`
inline std::pair<int, int> line_col(std::string_view text, size_t offset) {
  int line = 1, col = 1;
  for (size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

inline LoadedMap parse_mapspec_text(const std::string& text, const std::string& source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SpecFileError(source + ": not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw SpecFileError(source + ": map spec must be a JSON object");

  static const std::vector<std::string> known = {"version", "dim",     "vars", "components",
                                                 "builtin", "window",  "tol",  "samples",
                                                 "seed"};
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    bool ok = false;
    for (const std::string& k : known) ok = ok || (k == key);
    if (!ok) throw SpecFileError(source + ": unknown field '" + key + "'");
  }

  if (!doc.contains("version") || !doc["version"].is_number_integer())
    throw SpecFileError(source + ": missing integer field 'version'");
  if (doc["version"].get<int>() != 1)
    throw SpecFileError(source + ": unsupported map-spec version " +
                        doc["version"].dump() + " (expected 1)");

  const bool has_components = doc.contains("components");
  const bool has_builtin = doc.contains("builtin");
  if (has_components == has_builtin)
    throw SpecFileError(source + ": exactly one of 'components' and 'builtin' is required");

  std::optional<MapSpec> map;
  if (has_builtin) {
    if (doc.contains("vars"))
      throw SpecFileError(source + ": 'vars' cannot be combined with 'builtin'");
    if (!doc["builtin"].is_string())
      throw SpecFileError(source + ": 'builtin' must be a string");
    std::string uri = doc["builtin"].get<std::string>();
    if (uri.rfind("builtin:", 0) != 0) uri = "builtin:" + uri;
    try {
      map = make_builtin(uri);
    } catch (const std::exception& e) {
      throw SpecFileError(source + ": " + e.what());
    }
  } else {
    if (!doc.contains("vars") || !doc["vars"].is_array() || doc["vars"].empty())
      throw SpecFileError(source + ": 'components' needs a non-empty 'vars' array");
    std::vector<std::string> names;
    for (const auto& v : doc["vars"]) {
      if (!v.is_string()) throw SpecFileError(source + ": variable names must be strings");
      names.push_back(v.get<std::string>());
    }
    if (!doc["components"].is_array())
      throw SpecFileError(source + ": 'components' must be an array of expression strings");
    if (doc["components"].size() != names.size())
      throw SpecFileError(source + ": component count " +
                          std::to_string(doc["components"].size()) +
                          " does not match " + std::to_string(names.size()) + " variables");
    VarList vars = make_vars(names);
    std::vector<Expression> comps;
    for (size_t i = 0; i < doc["components"].size(); ++i) {
      if (!doc["components"][i].is_string())
        throw SpecFileError(source + ": component " + std::to_string(i) +
                            " must be an expression string");
      const std::string body = doc["components"][i].get<std::string>();
      try {
        comps.push_back(parse_expression(body, vars));
      } catch (const ExprError& e) {
        std::string msg = source + ": component " + std::to_string(i) + ": " + e.what();
        if (e.position != std::string::npos) {
          auto [line, col] = detail::line_col(body, e.position);
          msg += " (line " + std::to_string(line) + ", column " + std::to_string(col) + ")";
        }
        throw SpecFileError(msg);
      }
    }
    try {
      map = MapSpec(vars, std::move(comps), std::nullopt);
    } catch (const ExprError& e) {
      throw SpecFileError(source + ": " + e.what());
    }
  }

  if (doc.contains("dim")) {
    if (!doc["dim"].is_number_integer())
      throw SpecFileError(source + ": 'dim' must be an integer");
    if (doc["dim"].get<int>() != map->dim())
      throw SpecFileError(source + ": declared dim " + doc["dim"].dump() +
                          " does not match " + std::to_string(map->dim()) + " components");
  }

  if (doc.contains("window")) {
    const auto& jw = doc["window"];
    if (!jw.is_array() || jw.size() != static_cast<size_t>(map->dim()))
      throw SpecFileError(source + ": 'window' needs one [lo, hi] pair per dimension");
    Window w;
    for (const auto& axis : jw) {
      if (!axis.is_array() || axis.size() != 2 || !axis[0].is_number() || !axis[1].is_number())
        throw SpecFileError(source + ": each window axis must be [lo, hi]");
      double lo = axis[0].get<double>(), hi = axis[1].get<double>();
      if (!(lo < hi)) throw SpecFileError(source + ": window axis is empty or reversed");
      w.axes.push_back({lo, hi});
    }
    map = map->with_window(std::move(w));
  }

  AnalysisParams params;
  if (doc.contains("tol")) {
    if (!doc["tol"].is_number() || !(doc["tol"].get<double>() > 0.0))
      throw SpecFileError(source + ": 'tol' must be a positive number");
    params.tol = doc["tol"].get<double>();
  }
  if (doc.contains("samples")) {
    if (!doc["samples"].is_number_integer() || doc["samples"].get<int>() < 1)
      throw SpecFileError(source + ": 'samples' must be a positive integer");
    params.samples = doc["samples"].get<int>();
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer())
      throw SpecFileError(source + ": 'seed' must be a non-negative integer");
    if (doc["seed"].is_number_integer() && doc["seed"].get<long long>() < 0)
      throw SpecFileError(source + ": 'seed' must be a non-negative integer");
    params.seed = doc["seed"].get<uint64_t>();
  }

  return LoadedMap{std::move(*map), params, detail::fnv1a_digest(text), source};
}

inline LoadedMap parse_mapspec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecFileError(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_mapspec_text(buf.str(), path);
}

}  // namespace babbage
