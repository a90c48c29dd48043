#pragma once

// Verification reports: one JSON object per check plus a CSV summary.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "carnot_lw/error.hpp"

namespace carnot_lw {

struct Report {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double deficit = 0.0;  // rhs - lhs
  double tolerance = 0.0;
  bool pass = true;
  bool informational = false;  // recorded but never counted as a failure
  nlohmann::json metadata = nlohmann::json::object();
};

/// pass iff rhs - lhs >= -tol.
inline Report make_report(std::string name, double lhs, double rhs, double tol,
                          nlohmann::json metadata = nlohmann::json::object()) {
  Report r{std::move(name), lhs, rhs, rhs - lhs, tol, false, false, std::move(metadata)};
  // an infinite right side holds trivially; NaN anywhere fails
  r.pass = std::isnan(r.deficit) ? (rhs == std::numeric_limits<double>::infinity() && !std::isnan(lhs))
                                 : r.deficit >= -tol;
  return r;
}

inline bool all_pass(const std::vector<Report>& rs) {
  for (const auto& r : rs)
    if (!r.informational && !r.pass) return false;
  return true;
}

inline nlohmann::json to_json(const Report& r) {
  nlohmann::json j = {{"name", r.name},         {"lhs", r.lhs},   {"rhs", r.rhs},
                      {"deficit", r.deficit},   {"tolerance", r.tolerance},
                      {"pass", r.pass},         {"metadata", r.metadata}};
  if (r.informational) j["informational"] = true;
  return j;
}

inline void write_jsonl(std::ostream& os, const std::vector<Report>& rs) {
  for (const auto& r : rs) os << to_json(r).dump() << '\n';
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

inline void write_csv(std::ostream& os, const std::vector<Report>& rs) {
  os << "name,lhs,rhs,deficit,tolerance,pass,informational\n";
  for (const auto& r : rs)
    os << r.name << ',' << format_double(r.lhs) << ',' << format_double(r.rhs) << ','
       << format_double(r.deficit) << ',' << format_double(r.tolerance) << ',' << (r.pass ? 1 : 0) << ','
       << (r.informational ? 1 : 0) << '\n';
}

/// Fixed-width table: name, lhs, rhs, deficit, pass.
inline void write_table(std::ostream& os, const std::vector<Report>& rs) {
  std::size_t w = 4;
  for (const auto& r : rs) w = std::max(w, r.name.size());
  auto cell = [&os](const std::string& s) { os << std::setw(17) << s << ' '; };
  os << std::left << std::setw(static_cast<int>(w)) << "name" << "  ";
  for (const char* h : {"lhs", "rhs", "deficit"}) cell(h);
  os << "pass\n";
  for (const auto& r : rs) {
    os << std::setw(static_cast<int>(w)) << r.name << "  ";
    for (double v : {r.lhs, r.rhs, r.deficit}) cell(format_double(v));
    os << (r.informational ? "info" : (r.pass ? "yes" : "NO")) << '\n';
  }
}

/// Writes `text` to `path` via a temporary file in the same directory and a rename.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw InvalidArgument("cannot open " + tmp.string() + " for writing");
    os << text;
    if (!os.flush()) throw InvalidArgument("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// Writes <prefix>.jsonl and <prefix>.csv.
inline void persist_reports(const std::filesystem::path& prefix, const std::vector<Report>& rs) {
  std::ostringstream js, cs;
  write_jsonl(js, rs);
  write_csv(cs, rs);
  auto jp = prefix, cp = prefix;
  jp += ".jsonl";
  cp += ".csv";
  write_file_atomic(jp, js.str());
  write_file_atomic(cp, cs.str());
}

}  // namespace carnot_lw
