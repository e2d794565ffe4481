#pragma once

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "srecon/core_recon.hpp"
#include "srecon/experiments.hpp"
#include "srecon/matrix_analysis.hpp"
#include "srecon/model_selection.hpp"

namespace srecon::io {

using nlohmann::json;

/// Reads a numeric CSV (no header, '.' decimal). All rows must have the same width.
inline Matrix read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw InputError("csv: cannot parse '" + cell + "'");
      }
      if (cell.find_first_not_of(" \t", used) != std::string::npos)
        throw InputError("csv: trailing characters in '" + cell + "'");
      if (!std::isfinite(v)) throw InputError("csv: non-finite value");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw InputError("csv: ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("csv: no data");
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < out.rows(); ++i)
    for (Index j = 0; j < out.cols(); ++j) out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return out;
}

inline Matrix read_matrix_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open " + path);
  return read_matrix_csv(f);
}

/// A vector may be stored as a single column or a single row.
inline Vector read_vector_csv(const std::string& path) {
  const Matrix m = read_matrix_csv(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw InputError(path + ": expected a single row or column");
}

inline void write_matrix_csv(std::ostream& out, const Matrix& m) {
  out << std::setprecision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
}

/// One value per line.
inline void write_vector_csv(std::ostream& out, const Vector& v) { write_matrix_csv(out, Matrix(v)); }

inline FrequencyMask read_mask_csv(const std::string& path) {
  const Matrix m = read_matrix_csv(path);
  if (m.rows() != m.cols()) throw InputError("mask: must be square");
  FrequencyMask mask(m.rows());
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      if (m(i, j) != 0.0 && m(i, j) != 1.0) throw InputError("mask: entries must be 0 or 1");
      mask.set(i, j, m(i, j) == 1.0);
    }
  return mask;
}

inline void write_mask_csv(std::ostream& out, const FrequencyMask& mask) {
  for (Index i = 0; i < mask.side; ++i) {
    for (Index j = 0; j < mask.side; ++j) out << (j ? "," : "") << (mask(i, j) ? 1 : 0);
    out << '\n';
  }
}

// JSON has no infinities; they are written as the strings "inf" / "-inf".
inline json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

inline const char* to_string(Branch b) { return b == Branch::ecme ? "ecme" : "overrelaxed"; }

inline json to_json(const ReconstructionResult& r, bool with_branches = false) {
  json trace = json::array();
  for (double e : r.trace) trace.push_back(number(e));
  json j{{"iterations", r.iterations},
         {"converged", r.converged},
         {"final_sigma2", number(r.estimate.sigma2)},
         {"r", r.estimate.r},
         {"trace", std::move(trace)},
         {"elapsed_seconds", r.elapsed_seconds}};
  if (with_branches) {
    json br = json::array();
    for (Branch b : r.branches) br.push_back(to_string(b));
    j["branches"] = std::move(br);
  }
  return j;
}

inline json to_json(const UssValue& v) { return v.is_finite() ? json(v.value) : json(number(v.as_double())); }

inline json to_json(const AdoreResult& a) {
  json probed = json::array();
  for (const auto& e : a.evaluations)
    probed.push_back({{"r", e.r}, {"sigma2", number(e.sigma2_est)}, {"uss", to_json(e.uss)}});
  return {{"r_selected", a.r_selected}, {"probed", std::move(probed)}, {"dore_runs", a.dore_runs},
          {"final", to_json(a.final, true)}};
}

inline json support_json(const Support& s) {
  json j = json::array();
  for (Index i : s) j.push_back(i + 1);  // 1-based, as in matrix notation
  return j;
}

inline json to_json(const MatrixCertificate& c) {
  json per_r = json::array();
  for (const auto& lv : c.per_r)
    per_r.push_back({{"r", lv.r},
                     {"rho_min", lv.rho_min},
                     {"worst_support", support_json(lv.worst_support)},
                     {"gamma_r", lv.gamma_r},
                     {"ric_support", support_json(lv.ric_support)}});
  json flags = json::array();
  for (const auto& f : c.flags)
    flags.push_back({{"r", f.r}, {"unique_p0", f.unique_p0}, {"guaranteed_recovery", f.guaranteed_recovery}});
  json j{{"exact", true},
         {"spark", c.spark.value},
         {"spark_exact", c.spark.exact},
         {"coherence", c.coherence},
         {"per_r", std::move(per_r)},
         {"flags", std::move(flags)}};
  j["urp"] = c.urp ? json(*c.urp) : json(nullptr);
  return j;
}

inline json to_json(const SampledBounds& b, Index r) {
  return {{"exact", false},
          {"r", r},
          {"samples", b.samples},
          {"rho_min_upper_bound", b.ssq_upper_bound.value},
          {"rho_support", support_json(b.ssq_upper_bound.support)},
          {"gamma_r_lower_bound", b.ric_lower_bound.value},
          {"ric_support", support_json(b.ric_lower_bound.support)}};
}

inline void write_reports_csv(std::ostream& out, const std::vector<ExperimentReport>& rows) {
  out << "method,lines,n_over_m,psnr_db,iterations,elapsed_seconds,r_used,converged\n";
  out << std::setprecision(10);
  for (const auto& r : rows)
    out << r.method << ',' << r.n_lines << ',' << r.n_over_m << ',' << r.psnr_db << ',' << r.iterations << ','
        << r.elapsed_seconds << ',' << r.r_used << ',' << (r.converged ? 1 : 0) << '\n';
}

inline json to_json(const std::vector<ExperimentReport>& rows) {
  json arr = json::array();
  for (const auto& r : rows)
    arr.push_back({{"method", r.method},
                   {"lines", r.n_lines},
                   {"n_over_m", r.n_over_m},
                   {"psnr_db", number(r.psnr_db)},
                   {"iterations", r.iterations},
                   {"elapsed_seconds", r.elapsed_seconds},
                   {"r_used", r.r_used},
                   {"converged", r.converged}});
  return arr;
}

/// Plain-text key=value configuration; '#' starts a comment. Lists are comma separated.
/// Keys: side, lines, methods, tol, max_iter, adore_L.
inline BenchConfig parse_bench_config(std::istream& in) {
  BenchConfig cfg;
  std::string line;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string{};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  auto split = [&](const std::string& v) {
    std::vector<std::string> parts;
    std::stringstream ss(v);
    std::string p;
    while (std::getline(ss, p, ',')) parts.push_back(trim(p));
    return parts;
  };
  auto to_long = [](const std::string& key, const std::string& v) {
    std::size_t used = 0;
    long out = 0;
    try {
      out = std::stol(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v.size() || v.empty()) throw InputError("config: bad integer for " + key + ": '" + v + "'");
    return out;
  };
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError("config: expected key=value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    if (key == "side") {
      cfg.side = to_long(key, val);
    } else if (key == "lines") {
      cfg.lines.clear();
      for (const auto& p : split(val)) cfg.lines.push_back(to_long(key, p));
    } else if (key == "methods") {
      cfg.methods = split(val);
    } else if (key == "tol") {
      try {
        cfg.tol = std::stod(val);
      } catch (const std::exception&) {
        throw InputError("config: bad tol '" + val + "'");
      }
    } else if (key == "max_iter") {
      cfg.max_iter = to_long(key, val);
    } else if (key == "adore_L") {
      cfg.adore_L = to_long(key, val);
    } else {
      throw InputError("config: unknown key '" + key + "'");
    }
  }
  return cfg;
}

}  // namespace srecon::io
