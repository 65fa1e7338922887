#pragma once

// File formats: field CSV dumps (optionally with per-node diagnostics) and
// JSON serialization of solver and audit reports.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mss/diagnostics.hpp"
#include "mss/grid.hpp"
#include "mss/solvers.hpp"

namespace mss {

inline constexpr const char* kSchemaVersion = "1";

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Writes `content` next to `path` and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw Error(ErrorCode::io, "failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// One row per node in lexicographic order: x1..xn, f1..fm, then the
/// diagnostic columns when given. Numbers use 17 significant digits.
inline std::string field_to_csv(const VectorField& field, const NodeDiagnostics* diag = nullptr) {
  const GridDomain& dom = field.domain();
  std::string out;
  for (int k = 0; k < dom.n(); ++k) out += (k ? ",x" : "x") + std::to_string(k + 1);
  for (int a = 0; a < field.m(); ++a) out += ",f" + std::to_string(a + 1);
  if (diag) out += ",wedge2,star_omega,lhs31,rhs31,omega1,omega2";
  out += '\n';
  for (NodeIndex p = 0; p < dom.node_count(); ++p) {
    const auto x = dom.position(p);
    for (int k = 0; k < dom.n(); ++k) {
      if (k) out += ',';
      out += format_number(x[k]);
    }
    for (int a = 0; a < field.m(); ++a) out += ',' + format_number(field(p, a));
    if (diag) {
      for (const auto* col : {&diag->wedge2, &diag->star_omega, &diag->lhs31, &diag->rhs31,
                              &diag->omega1, &diag->omega2}) {
        out += ',' + format_number((*col)[p]);
      }
    }
    out += '\n';
  }
  return out;
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!line.empty() && line.back() == sep) parts.emplace_back();
  return parts;
}

inline double parse_double(const std::string& text, std::size_t line_no) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw Error(ErrorCode::parse,
                "line " + std::to_string(line_no) + ": '" + text + "' is not a number");
  }
  return v;
}

}  // namespace detail

/// Reads a field dump. The grid is recovered from the coordinate columns and
/// must be a full lexicographically ordered box grid.
inline VectorField field_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::parse, "empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = detail::split(line, ',');
  std::vector<int> x_cols;
  std::vector<int> f_cols;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const std::string& h = header[c];
    if (h.size() >= 2 && (h[0] == 'x' || h[0] == 'f') &&
        std::all_of(h.begin() + 1, h.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
      const int idx = std::stoi(h.substr(1));
      auto& cols = h[0] == 'x' ? x_cols : f_cols;
      if (idx != static_cast<int>(cols.size()) + 1) {
        throw Error(ErrorCode::parse, "CSV header columns out of order at '" + h + "'");
      }
      cols.push_back(c);
    }
  }
  const int n = static_cast<int>(x_cols.size());
  const int m = static_cast<int>(f_cols.size());
  if (n < 2 || n > kMaxGridDim || m < 1 || m > kMaxDim) {
    throw Error(ErrorCode::parse, "CSV header must name x1..xn (n = 2, 3) and f1..fm (m <= 4)");
  }

  std::vector<std::array<double, kMaxGridDim>> coords;
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = detail::split(line, ',');
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(header.size()) + " columns");
    }
    std::array<double, kMaxGridDim> x{0.0, 0.0, 0.0};
    for (int k = 0; k < n; ++k) x[k] = detail::parse_double(cells[x_cols[k]], line_no);
    coords.push_back(x);
    for (int a = 0; a < m; ++a) values.push_back(detail::parse_double(cells[f_cols[a]], line_no));
  }
  if (coords.empty()) throw Error(ErrorCode::parse, "CSV has no data rows");

  std::array<double, kMaxGridDim> lower{}, upper{};
  std::array<int, kMaxGridDim> resolution{1, 1, 1};
  for (int k = 0; k < n; ++k) {
    std::vector<double> axis;
    for (const auto& x : coords) axis.push_back(x[k]);
    std::sort(axis.begin(), axis.end());
    axis.erase(std::unique(axis.begin(), axis.end()), axis.end());
    lower[k] = axis.front();
    upper[k] = axis.back();
    resolution[k] = static_cast<int>(axis.size());
  }
  GridDomain dom(n, lower, upper, resolution);
  if (dom.node_count() != coords.size()) {
    throw Error(ErrorCode::parse, "CSV rows do not form a full box grid");
  }
  for (NodeIndex p = 0; p < dom.node_count(); ++p) {
    const auto expect = dom.position(p);
    for (int k = 0; k < n; ++k) {
      const double tol = 1e-9 * std::max(1.0, std::abs(expect[k]));
      if (std::abs(coords[p][k] - expect[k]) > tol) {
        throw Error(ErrorCode::parse, "CSV row " + std::to_string(p + 2) +
                                          " is not at the expected uniform grid position");
      }
    }
  }
  return VectorField(dom, m, std::move(values));
}

inline VectorField load_field_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return field_from_csv(buf.str());
}

inline nlohmann::json to_json(const SolveReport& report) {
  nlohmann::json history = nlohmann::json::array();
  for (const auto& h : report.history) {
    history.push_back({{"residual", h.residual},
                       {"sup_wedge2", h.sup_wedge2},
                       {"min_star_omega", h.min_star_omega},
                       {"volume", h.volume}});
  }
  return {{"method", to_string(report.method)},
          {"converged", report.converged},
          {"iterations", report.iterations},
          {"residual_sup", report.residual_sup},
          {"residual_l2", report.residual_l2},
          {"message", report.message},
          {"history", std::move(history)}};
}

inline nlohmann::json to_json(const AuditCheck& c) {
  nlohmann::json j{{"name", c.name},
                   {"informational", c.informational},
                   {"passed", c.passed},
                   {"worst_value", std::isfinite(c.worst_value) ? c.worst_value : 0.0},
                   {"tolerance", c.tolerance},
                   {"note", c.note}};
  j["worst_node"] = c.worst_node == kNoNode ? nlohmann::json(nullptr) : nlohmann::json(c.worst_node);
  return j;
}

inline nlohmann::json to_json(const AuditReport& report) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks) checks.push_back(to_json(c));
  return {{"solution", report.solution},
          {"residual_sup", report.residual_sup},
          {"h", report.h},
          {"tau", report.tau},
          {"all_passed", report.all_passed()},
          {"checks", std::move(checks)}};
}

}  // namespace mss
