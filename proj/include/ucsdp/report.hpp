#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ucsdp/benders.hpp"
#include "ucsdp/case_model.hpp"
#include "ucsdp/errors.hpp"
#include "ucsdp/rank_reduction.hpp"

namespace ucsdp {

// Shortest round-trip decimal form, independent of stream state.
inline std::string fmt_num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline double parse_num(const std::string& s) {
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw SchemaError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw SchemaError("not a number: '" + s + "'");
  return v;
}

// RFC 4180: CRLF records, fields quoted only when they need it.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) os_ << ',';
      os_ << quote(fields[i]);
    }
    os_ << "\r\n";
  }

  static std::string quote(const std::string& f) {
    if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
    std::string out = "\"";
    for (char ch : f) {
      if (ch == '"') out += '"';
      out += ch;
    }
    return out + "\"";
  }

 private:
  std::ostream& os_;
};

inline std::vector<std::vector<std::string>> read_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  char ch;
  while (in.get(ch)) {
    any = true;
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (ch == '\r') {
      if (in.peek() == '\n') in.get(ch);
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (ch == '\n') {
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else {
      field += ch;
    }
  }
  if (quoted) throw SchemaError("unterminated quoted CSV field");
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace detail {

inline void expect_header(const std::vector<std::vector<std::string>>& rows,
                          const std::vector<std::string>& header, const char* what) {
  if (rows.empty() || rows[0] != header) throw SchemaError(std::string(what) + ": unexpected header");
  for (std::size_t r = 1; r < rows.size(); ++r)
    if (rows[r].size() != header.size())
      throw SchemaError(std::string(what) + ": row " + std::to_string(r) + " has " +
                        std::to_string(rows[r].size()) + " fields");
}

}  // namespace detail

// ---- iterations.csv ----

inline const std::vector<std::string>& iterations_header() {
  static const std::vector<std::string> h{"k",        "LB",          "UB",           "cut_kind",
                                          "s",        "master_ms",   "sdp_ms",       "master_objective",
                                          "ub_candidate", "cuts_added", "schedule"};
  return h;
}

inline std::string schedule_bits(const std::vector<double>& x) {
  std::string s;
  for (double v : x) s += v > 0.5 ? '1' : '0';
  return s;
}

// Timing fields are left empty when `timings` is false so that reruns are byte-identical.
inline void write_iterations_csv(std::ostream& os, const std::vector<IterationRecord>& its,
                                 bool timings = true) {
  CsvWriter w(os);
  w.row(iterations_header());
  for (const auto& it : its)
    w.row({std::to_string(it.k), fmt_num(it.lb), fmt_num(it.ub), it.has_cut ? to_string(it.cut_kind) : "none",
           fmt_num(it.s), timings ? fmt_num(it.master_ms) : "", timings ? fmt_num(it.sdp_ms) : "",
           fmt_num(it.master_objective), fmt_num(it.ub_candidate), std::to_string(it.cuts_added),
           schedule_bits(it.schedule.x)});
}

inline std::vector<IterationRecord> read_iterations_csv(std::istream& in) {
  const auto rows = read_csv(in);
  detail::expect_header(rows, iterations_header(), "iterations.csv");
  auto opt_num = [](const std::string& f) { return f.empty() ? 0.0 : parse_num(f); };
  std::vector<IterationRecord> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r];
    IterationRecord it;
    it.k = std::stoi(f[0]);
    it.lb = parse_num(f[1]);
    it.ub = parse_num(f[2]);
    it.has_cut = f[3] != "none";
    if (f[3] == "feasibility")
      it.cut_kind = CutKind::Feasibility;
    else if (f[3] == "optimality" || f[3] == "none")
      it.cut_kind = CutKind::Optimality;
    else
      throw SchemaError("iterations.csv: unknown cut kind '" + f[3] + "'");
    it.s = parse_num(f[4]);
    it.master_ms = opt_num(f[5]);
    it.sdp_ms = opt_num(f[6]);
    it.master_objective = parse_num(f[7]);
    it.ub_candidate = parse_num(f[8]);
    it.cuts_added = std::stoi(f[9]);
    for (char ch : f[10]) it.schedule.x.push_back(ch == '1' ? 1.0 : 0.0);
    out.push_back(std::move(it));
  }
  return out;
}

// ---- schedule.csv ----

inline void write_schedule_csv(std::ostream& os, const CaseData& c, const Schedule& s) {
  CsvWriter w(os);
  w.row({"t", "generator", "x", "y", "z"});
  const std::size_t G = c.n_gens();
  for (std::size_t k = 0; k < s.x.size(); ++k)
    w.row({std::to_string(k / G + 1), c.generators[k % G].id, fmt_num(s.x[k]), fmt_num(s.y[k]),
           fmt_num(s.z[k])});
}

inline Schedule read_schedule_csv(std::istream& in, const CaseData& c) {
  const auto rows = read_csv(in);
  detail::expect_header(rows, {"t", "generator", "x", "y", "z"}, "schedule.csv");
  const std::size_t G = c.n_gens();
  if (rows.size() - 1 != c.n_steps() * G) throw SchemaError("schedule.csv: wrong number of rows");
  Schedule s;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const std::size_t k = r - 1;
    if (std::stoul(rows[r][0]) != k / G + 1 || rows[r][1] != c.generators[k % G].id)
      throw SchemaError("schedule.csv: row " + std::to_string(r) + " out of order");
    s.x.push_back(parse_num(rows[r][2]));
    s.y.push_back(parse_num(rows[r][3]));
    s.z.push_back(parse_num(rows[r][4]));
  }
  return s;
}

// ---- dispatch.csv ----

struct DispatchRow {
  int t = 0;
  std::string generator;
  double p = 0, q = 0;                  // MW, MVAr
  double demand_p = 0, demand_q = 0;    // system totals at t
  bool operator==(const DispatchRow&) const = default;
};

inline std::vector<DispatchRow> dispatch_rows(const CaseData& c, const UcResult& r) {
  std::vector<DispatchRow> out;
  const std::size_t G = c.n_gens();
  for (std::size_t k = 0; k < r.p.size(); ++k) {
    const std::size_t t = k / G;
    double dq = 0;
    for (double v : c.dq[t]) dq += v;
    out.push_back({static_cast<int>(t + 1), c.generators[k % G].id, r.p[k], r.q[k], total_demand(c, t), dq});
  }
  return out;
}

inline void write_dispatch_csv(std::ostream& os, const std::vector<DispatchRow>& rows) {
  CsvWriter w(os);
  w.row({"t", "generator", "p_mw", "q_mvar", "demand_p_mw", "demand_q_mvar"});
  for (const auto& d : rows)
    w.row({std::to_string(d.t), d.generator, fmt_num(d.p), fmt_num(d.q), fmt_num(d.demand_p),
           fmt_num(d.demand_q)});
}

inline std::vector<DispatchRow> read_dispatch_csv(std::istream& in) {
  const auto rows = read_csv(in);
  detail::expect_header(rows, {"t", "generator", "p_mw", "q_mvar", "demand_p_mw", "demand_q_mvar"},
                        "dispatch.csv");
  std::vector<DispatchRow> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r];
    out.push_back({std::stoi(f[0]), f[1], parse_num(f[2]), parse_num(f[3]), parse_num(f[4]), parse_num(f[5])});
  }
  return out;
}

// ---- JSON reports ----

inline nlohmann::ordered_json voltages_json(const CaseData& c, const UcResult& r) {
  nlohmann::ordered_json j;
  j["rank_bound"] = rank_bound(static_cast<int>(c.n_buses()), static_cast<int>(c.n_lines()));
  j["rrp_applied"] = !r.v_reduced.empty();
  j["steps"] = nlohmann::ordered_json::array();
  const int slack = c.n_buses() ? slack_index(c) : 0;
  const int n = static_cast<int>(c.n_buses());
  for (std::size_t t = 0; t < r.v_blocks.size(); ++t) {
    nlohmann::ordered_json s;
    s["t"] = t + 1;
    s["rank_before"] = r.ranks_before[t];
    if (!r.v_reduced.empty()) {
      s["rank_after"] = r.ranks_after[t];
      s["rrp_passes"] = r.rrp[t].iterations;
    }
    const Matrix& v = r.v_reduced.empty() ? r.v_blocks[t] : r.v_reduced[t];
    const Vector u = extract_voltage(v, slack);
    std::vector<double> e(n), f(n), mag(n);
    for (int i = 0; i < n; ++i) {
      e[i] = u[i];
      f[i] = u[n + i];
      mag[i] = std::sqrt(std::max(0.0, v(i, i) + v(n + i, n + i)));
    }
    s["e"] = e;
    s["f"] = f;
    s["magnitude"] = mag;
    j["steps"].push_back(std::move(s));
  }
  return j;
}

inline nlohmann::ordered_json summary_json(const UcResult& r, MasterVariant variant, bool timings) {
  nlohmann::ordered_json j;
  j["status"] = to_string(r.status);
  j["variant"] = to_string(variant);
  auto num = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  j["total_cost"] = num(r.has_incumbent ? r.total_cost : kInf);
  j["lower_bound"] = num(r.lower_bound);
  j["gap"] = num(r.gap());
  j["iterations"] = r.iterations.size();
  int fc = 0, oc = 0;
  for (const auto& cut : r.cuts) (cut.kind == CutKind::Feasibility ? fc : oc)++;
  j["feasibility_cuts"] = fc;
  j["optimality_cuts"] = oc;
  j["sigma"] = r.sigma;
  if (timings) {
    double m = 0, s = 0;
    for (const auto& it : r.iterations) {
      m += it.master_ms;
      s += it.sdp_ms;
    }
    j["timings_ms"] = {{"master", m}, {"subproblem", s}};
  }
  return j;
}

}  // namespace ucsdp
