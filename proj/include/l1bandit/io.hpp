#pragma once

// CSV emission and parsing for run artifacts.  Numbers are written with
// enough digits ("%.17g") that parse(emit(x)) reproduces x exactly.

#include "l1bandit/core.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace l1bandit {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {
inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_num(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw ValidationError(where + ": bad number '" + s + "'");
  return v;
}
}  // namespace detail

// ---------------------------------------------------------------------------
// regret traces
// ---------------------------------------------------------------------------

constexpr const char* kTraceHeader =
    "t,rep,policy,chosen_arm,optimal_arm,instant_regret,cum_regret";

inline std::string trace_to_csv(const RegretTrace& trace) {
  std::ostringstream out;
  out << kTraceHeader << "\n";
  for (const RegretRow& r : trace.rows) {
    out << r.t << ',' << trace.rep << ',' << trace.policy_id << ','
        << r.chosen_arm << ',' << r.optimal_arm << ','
        << format_double(r.instant_regret) << ','
        << format_double(r.cum_regret) << "\n";
  }
  return out.str();
}

inline RegretTrace trace_from_csv(std::istream& in, const std::string& origin) {
  RegretTrace trace;
  std::string line;
  if (!std::getline(in, line) ||
      detail::split_fields(line) != detail::split_fields(kTraceHeader))
    throw ValidationError(origin + ": missing or wrong trace header");
  int line_no = 1;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = detail::split_fields(line);
    const std::string where = origin + " line " + std::to_string(line_no);
    if (f.size() != 7) throw ValidationError(where + ": expected 7 fields");
    RegretRow row;
    row.t = static_cast<int>(detail::parse_num(f[0], where));
    const int rep = static_cast<int>(detail::parse_num(f[1], where));
    if (first) {
      trace.rep = rep;
      trace.policy_id = f[2];
      first = false;
    } else if (rep != trace.rep || f[2] != trace.policy_id) {
      throw ValidationError(where + ": mixed rep/policy in one trace file");
    }
    row.chosen_arm = static_cast<int>(detail::parse_num(f[3], where));
    row.optimal_arm = static_cast<int>(detail::parse_num(f[4], where));
    row.instant_regret = detail::parse_num(f[5], where);
    row.cum_regret = detail::parse_num(f[6], where);
    trace.rows.push_back(row);
  }
  return trace;
}

inline RegretTrace trace_from_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace file " + path);
  return trace_from_csv(in, path);
}

// ---------------------------------------------------------------------------
// summaries
// ---------------------------------------------------------------------------

/// One aggregated checkpoint of one policy.
struct SummaryRow {
  long t = 0;
  std::string policy;
  double mean = 0.0;  ///< mean cumulative regret (or miss rate) across reps
  double sd = 0.0;    ///< sample standard deviation across reps
};

inline std::string summary_to_csv(const std::vector<SummaryRow>& rows,
                                  const std::string& value_name) {
  std::ostringstream out;
  out << "t,policy,mean_" << value_name << ",sd_" << value_name << "\n";
  for (const SummaryRow& r : rows)
    out << r.t << ',' << r.policy << ',' << format_double(r.mean) << ','
        << format_double(r.sd) << "\n";
  return out.str();
}

inline std::vector<SummaryRow> summary_from_csv(std::istream& in,
                                                const std::string& origin) {
  std::vector<SummaryRow> rows;
  std::string line;
  if (!std::getline(in, line))
    throw ValidationError(origin + ": empty summary file");
  const auto head = detail::split_fields(line);
  if (head.size() != 4 || head[0] != "t" || head[1] != "policy")
    throw ValidationError(origin + ": wrong summary header");
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = detail::split_fields(line);
    const std::string where = origin + " line " + std::to_string(line_no);
    if (f.size() != 4) throw ValidationError(where + ": expected 4 fields");
    SummaryRow r;
    r.t = static_cast<long>(detail::parse_num(f[0], where));
    r.policy = f[1];
    r.mean = detail::parse_num(f[2], where);
    r.sd = detail::parse_num(f[3], where);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::vector<SummaryRow> summary_from_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open summary file " + path);
  return summary_from_csv(in, path);
}

// ---------------------------------------------------------------------------
// diagnostics
// ---------------------------------------------------------------------------

struct DiagnosticsRow {
  int t = 0;
  double phi_hat = 0.0;
  double rho_min = 0.0;
  double rho_max = 0.0;
  double coverage = 0.0;       ///< 1/0, or nan for policies without a ball
  double optimal_fraction = 0.0;  ///< over the trailing half-window [t/2, t]
};

constexpr const char* kDiagnosticsHeader =
    "t,phi_hat,rho_min,rho_max,coverage,optimal_fraction";

inline std::string diagnostics_to_csv(const std::vector<DiagnosticsRow>& rows) {
  std::ostringstream out;
  out << kDiagnosticsHeader << "\n";
  for (const DiagnosticsRow& r : rows)
    out << r.t << ',' << format_double(r.phi_hat) << ','
        << format_double(r.rho_min) << ',' << format_double(r.rho_max) << ','
        << format_double(r.coverage) << ','
        << format_double(r.optimal_fraction) << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// filesystem helpers
// ---------------------------------------------------------------------------

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw IoError("cannot create directory " + path + ": " + ec.message());
}

}  // namespace l1bandit
