#pragma once

#include "caflow/errors.hpp"
#include "caflow/flow.hpp"
#include "caflow/invariants.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace caflow {

inline constexpr const char* kSnapshotSchema = "caflow.snapshot";
inline constexpr int kSnapshotVersion = 1;
inline constexpr const char* kSeriesSchema = "caflow.series";
inline constexpr int kSeriesVersion = 1;

using json = nlohmann::json;

inline json state_to_json(const FlowState& st) {
  json j;
  j["schema"] = kSnapshotSchema;
  j["version"] = kSnapshotVersion;
  j["grid"] = st.body.grid()->descriptor();
  j["t"] = st.t;
  j["p"] = st.params.p;
  j["direction"] = to_string(st.params.direction);
  j["steps"] = st.stats.steps;
  j["s"] = st.body.support();
  return j;
}

namespace detail {

inline std::string line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

template <class T>
T field(const json& j, const char* name) {
  if (!j.contains(name)) throw ParseError(std::string("field '") + name + "'", "missing");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("field '") + name + "'", e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("write failed for " + path);
}

}  // namespace detail

/// Nodal values are taken as stored: no symmetrization or band-limit projection,
/// so a saved body reloads bit-identically.
inline FlowState state_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("document", "expected an object");
  if (detail::field<std::string>(j, "schema") != kSnapshotSchema) throw ParseError("field 'schema'", "not a snapshot");
  const int v = detail::field<int>(j, "version");
  if (v != kSnapshotVersion) throw ParseError("field 'version'", "unsupported version " + std::to_string(v));
  GridPtr grid;
  try {
    grid = grid_from_descriptor(detail::field<std::string>(j, "grid"));
  } catch (const GridError& e) {
    throw ParseError("field 'grid'", e.what());
  }
  if (!j.contains("s") || !j["s"].is_array()) throw ParseError("field 's'", "missing or not an array");
  const json& a = j["s"];
  if (a.size() != grid->size())
    throw ParseError("field 's'", "expected " + std::to_string(grid->size()) + " values, got " + std::to_string(a.size()));
  ScalarField s(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!a[k].is_number()) throw ParseError("field 's[" + std::to_string(k) + "]'", "not a number");
    s[k] = a[k].get<double>();
  }
  const double p = j.contains("p") ? detail::field<double>(j, "p") : 3.0;
  const std::string dir = j.contains("direction") ? detail::field<std::string>(j, "direction") : "contracting";
  if (dir != "contracting" && dir != "dual") throw ParseError("field 'direction'", "unknown direction " + dir);
  FlowState st{Body(grid, std::move(s), SampleMode::exact), j.contains("t") ? detail::field<double>(j, "t") : 0.0,
               FlowParams::make(p, grid->dim(), dir == "dual" ? Direction::dual : Direction::contracting), {}};
  if (j.contains("steps")) st.stats.steps = detail::field<long>(j, "steps");
  return st;
}

inline FlowState parse_state(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(detail::line_of(text, e.byte > 0 ? e.byte - 1 : 0), e.what());
  }
  return state_from_json(j);
}

inline void save_state(const std::string& path, const FlowState& st) {
  detail::write_file(path, state_to_json(st).dump(1) + "\n");
}

inline FlowState load_state(const std::string& path) { return parse_state(detail::read_file(path)); }

inline void save_body(const std::string& path, const Body& b, double p = 3.0) {
  save_state(path, FlowState{b, 0.0, FlowParams::make(p, b.dim()), {}});
}

inline Body load_body(const std::string& path) { return load_state(path).body; }

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// First line "# caflow.series v1", then the header row, then one row per record.
inline std::string series_to_csv(const std::vector<InvariantRecord>& series) {
  std::string out = std::string("# ") + kSeriesSchema + " v" + std::to_string(kSeriesVersion) + "\n";
  for (std::size_t i = 0; i < kRecordColumns.size(); ++i) out += (i ? "," : "") + std::string(kRecordColumns[i]);
  out += "\n";
  for (const auto& r : series) {
    for (std::size_t i = 0; i < kRecordMembers.size(); ++i) out += (i ? "," : "") + format_double(r.*kRecordMembers[i]);
    out += "\n";
  }
  return out;
}

inline std::vector<InvariantRecord> series_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::vector<InvariantRecord> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string tag = std::string("# ") + kSeriesSchema + " v";
      if (line.rfind(tag, 0) == 0 && std::stoi(line.substr(tag.size())) != kSeriesVersion)
        throw ParseError("line " + std::to_string(lineno), "unsupported series version");
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cells.push_back(c);
    if (cells.size() != kRecordColumns.size())
      throw ParseError("line " + std::to_string(lineno),
                       "expected " + std::to_string(kRecordColumns.size()) + " columns, got " + std::to_string(cells.size()));
    if (!header) {
      for (std::size_t i = 0; i < cells.size(); ++i)
        if (cells[i] != kRecordColumns[i])
          throw ParseError("line " + std::to_string(lineno) + ", column " + std::to_string(i + 1),
                           "expected header '" + std::string(kRecordColumns[i]) + "'");
      header = true;
      continue;
    }
    InvariantRecord r;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(cells[i], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != cells[i].size())
        throw ParseError("line " + std::to_string(lineno) + ", field '" + kRecordColumns[i] + "'", "not a number");
      r.*kRecordMembers[i] = v;
    }
    out.push_back(r);
  }
  if (!header) throw ParseError("line " + std::to_string(lineno), "missing header row");
  return out;
}

inline void save_series(const std::string& path, const std::vector<InvariantRecord>& s) {
  detail::write_file(path, series_to_csv(s));
}

inline std::vector<InvariantRecord> load_series(const std::string& path) {
  return series_from_csv(detail::read_file(path));
}

}  // namespace caflow
