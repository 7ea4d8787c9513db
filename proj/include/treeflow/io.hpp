#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "treeflow/experiments.hpp"
#include "treeflow/net.hpp"

namespace treeflow::io {

// ---------------------------------------------------------------------------
// Number formatting

//! 17 significant digits: parses back to the identical double.
inline std::string format_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

//! Shortest text that parses back to the identical double.
inline std::string format_short(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error("format_short: cannot format value");
  return std::string(buf, end);
}

inline double parse_double(std::string_view s, std::string_view what) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size())
    throw Error(std::string(what) + ": invalid number '" + std::string(s) + "'");
  return v;
}

inline long long parse_integer(std::string_view s, std::string_view what) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  long long v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size())
    throw Error(std::string(what) + ": invalid integer '" + std::string(s) + "'");
  return v;
}

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

//! Writes through a temporary sibling and renames it into place, so readers
//! never observe a partial file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error("write failed for " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot rename into " + path.string());
  }
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

inline std::vector<std::string_view> lines(std::string_view text) {
  std::vector<std::string_view> out;
  for (auto line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
  }
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

// ---------------------------------------------------------------------------
// Tree JSON: {"parent":[-1,0,0,...]}

inline std::string tree_to_json(const RootedTree& tree) {
  nlohmann::json j;
  j["parent"] = std::vector<std::int64_t>(tree.parents().begin(), tree.parents().end());
  return j.dump() + "\n";
}

inline RootedTree tree_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("tree json: ") + e.what());
  }
  if (!j.is_object() || !j.contains("parent") || !j["parent"].is_array())
    throw Error("tree json: expected an object with a \"parent\" array");
  std::vector<std::int64_t> parent;
  for (const auto& v : j["parent"]) {
    if (!v.is_number_integer()) throw Error("tree json: parent entries must be integers");
    parent.push_back(v.get<std::int64_t>());
  }
  return RootedTree::from_parents(parent);
}

inline RootedTree read_tree(const std::filesystem::path& path) { return tree_from_json(read_file(path)); }

// ---------------------------------------------------------------------------
// Flow CSV: header "node,value", one row per node in index order.

inline std::string flow_to_csv(std::span<const double> flow) {
  std::string out = "node,value\n";
  for (std::size_t i = 0; i < flow.size(); ++i) out += std::to_string(i) + "," + format_full(flow[i]) + "\n";
  return out;
}

inline Vector flow_from_csv(std::string_view text) {
  const auto rows = lines(text);
  if (rows.empty() || rows[0] != "node,value") throw Error("flow csv: expected header 'node,value'");
  Vector flow;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto cells = split(rows[r], ',');
    if (cells.size() != 2) throw Error("flow csv: row " + std::to_string(r) + " must have two fields");
    if (parse_integer(cells[0], "flow csv node") != static_cast<long long>(r - 1))
      throw Error("flow csv: nodes must be listed in index order starting at 0");
    flow.push_back(parse_double(cells[1], "flow csv value"));
  }
  return flow;
}

inline Vector read_flow(const std::filesystem::path& path) { return flow_from_csv(read_file(path)); }

// ---------------------------------------------------------------------------
// Other CSV products

inline std::string diagnostics_csv(const ProjectionReport& r) {
  return "sweeps,max_violation,converged\n" + std::to_string(r.sweeps_used) + "," +
         format_full(r.max_violation) + "," + (r.converged ? "true" : "false") + "\n";
}

inline std::string net_to_csv(const MaureyNet& net) {
  std::string out = "element_index,node,value\n";
  for (Index k = 0; k < net.size(); ++k) {
    const auto e = net.element(k);
    for (Index i = 0; i < e.size(); ++i)
      out += std::to_string(k) + "," + std::to_string(i) + "," + format_full(e[i]) + "\n";
  }
  return out;
}

inline std::string statdim_csv(const MeanEstimate& e) {
  return "mean,stderr,trials\n" + format_full(e.mean) + "," + format_full(e.std_error) + "," +
         std::to_string(e.trials) + "\n";
}

struct ResultRow {
  Index n = 0;
  double alpha = 0.0;
  std::string estimator;
  double sigma = 0.0;
  Index trials = 0;
  double mean_sse = 0.0;
  double stderr_sse = 0.0;
};

inline std::string results_csv(std::span<const ResultRow> rows) {
  std::string out = "n,alpha,estimator,sigma,trials,mean_sse,stderr_sse\n";
  for (const auto& r : rows)
    out += std::to_string(r.n) + "," + format_short(r.alpha) + "," + r.estimator + "," + format_short(r.sigma) +
           "," + std::to_string(r.trials) + "," + format_full(r.mean_sse) + "," + format_full(r.stderr_sse) + "\n";
  return out;
}

inline std::vector<ResultRow> results_from_csv(std::string_view text) {
  const auto rows = lines(text);
  if (rows.empty() || rows[0] != "n,alpha,estimator,sigma,trials,mean_sse,stderr_sse")
    throw Error("results csv: unexpected header");
  std::vector<ResultRow> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto c = split(rows[r], ',');
    if (c.size() != 7) throw Error("results csv: row " + std::to_string(r) + " must have 7 fields");
    out.push_back({static_cast<Index>(parse_integer(c[0], "n")), parse_double(c[1], "alpha"), std::string(c[2]),
                   parse_double(c[3], "sigma"), static_cast<Index>(parse_integer(c[4], "trials")),
                   parse_double(c[5], "mean_sse"), parse_double(c[6], "stderr_sse")});
  }
  return out;
}

inline std::string exponents_csv(std::span<const RiskCurve> curves) {
  std::string out = "alpha,estimator,slope,slope_stderr,intercept\n";
  for (const auto& c : curves)
    out += format_short(c.alpha) + "," + c.estimator + "," + format_full(c.fit.slope) + "," +
           format_full(c.fit.slope_stderr) + "," + format_full(c.fit.intercept) + "\n";
  return out;
}

}  // namespace treeflow::io
