#pragma once

#include <cstdint>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "ucsdp/case_model.hpp"
#include "ucsdp/errors.hpp"
#include "ucsdp/master.hpp"
#include "ucsdp/subproblem.hpp"

namespace ucsdp {

struct OracleRow {
  std::uint64_t index = 0;
  Schedule schedule;
  bool feasible = false;
  double slack_value = 0;  // σ·s of the pure-slack phase
  double subproblem_cost = 0;
  double cost = kInf;      // commitment + dispatch, feasible rows only
};

struct OracleResult {
  bool has_feasible = false;
  double best_cost = kInf;
  Schedule best;
  std::vector<OracleRow> rows;  // logic-valid schedules, ascending index
  std::uint64_t enumerated = 0;
};

// y, z implied by x with the x0 boundary.
inline Schedule derive_schedule(const CaseData& c, const std::vector<double>& x) {
  const int G = static_cast<int>(c.n_gens());
  Schedule s;
  s.x = x;
  s.y.assign(x.size(), 0);
  s.z.assign(x.size(), 0);
  for (std::size_t k = 0; k < x.size(); ++k) {
    const int g = static_cast<int>(k % G);
    const double prev = k < static_cast<std::size_t>(G) ? c.generators[g].x0 : x[k - G];
    s.y[k] = std::max(0.0, x[k] - prev);
    s.z[k] = std::max(0.0, prev - x[k]);
  }
  return s;
}

// Minimum up/down logic evaluated directly on the binary schedule.
inline bool logic_feasible(const CaseData& c, const std::vector<double>& x) {
  const int T = c.horizon, G = static_cast<int>(c.n_gens());
  auto at = [&](int t, int g) { return x[static_cast<std::size_t>(t) * G + g]; };
  for (int g = 0; g < G; ++g) {
    const auto& gen = c.generators[g];
    for (int t = 1; t <= T; ++t) {
      const double cur = at(t - 1, g);
      const double prev = t > 1 ? at(t - 2, g) : 0.0;
      const int wu = omega(t, gen.t_on, gen.t0, T);
      double on = 0;
      for (int j = 1; j <= wu; ++j) on += at(t + j - 2, g);
      if (wu * (cur - prev) - on > 1e-9) return false;
      const int wd = omega(t, gen.t_off, gen.t0, T);
      double off = 0;
      for (int j = 1; j <= wd; ++j) off += 1 - at(t + j - 2, g);
      if (wd * (prev - cur) - off > 1e-9) return false;
    }
  }
  return true;
}

inline OracleResult enumerate_uc(const CaseData& c, int max_bits = 20,
                                 const SubproblemOptions& opt = {}) {
  const int n = c.horizon * static_cast<int>(c.n_gens());
  if (n > max_bits)
    throw TooLarge("oracle enumeration needs 2^" + std::to_string(n) + " schedules (limit 2^" +
                   std::to_string(max_bits) + ")");
  const SubproblemContext ctx = make_context(c);
  OracleResult out;
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t m = 0; m < total; ++m) {
    std::vector<double> x(n);
    for (int k = 0; k < n; ++k) x[k] = static_cast<double>((m >> k) & 1u);
    ++out.enumerated;
    if (!logic_feasible(c, x)) continue;
    OracleRow row;
    row.index = m;
    row.schedule = derive_schedule(c, x);
    double penalty = 1;
    const SubproblemResult sp = solve_subproblem(ctx, x, penalty, opt);
    row.slack_value = sp.slack_value;
    row.feasible = sp.status == SubproblemStatus::FeasibleOptimal;
    if (row.feasible) {
      row.subproblem_cost = sp.cost;
      row.cost = commitment_cost(c, row.schedule) + sp.cost;
      if (row.cost < out.best_cost) {
        out.best_cost = row.cost;
        out.best = row.schedule;
        out.has_feasible = true;
      }
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

inline void write_oracle_csv(std::ostream& os, const OracleResult& r) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "index,x,feasible,slack_value,subproblem_cost,cost\r\n";
  for (const auto& row : r.rows) {
    os << row.index << ',';
    for (double v : row.schedule.x) os << (v > 0.5 ? '1' : '0');
    os << ',' << (row.feasible ? 1 : 0) << ',' << row.slack_value << ',';
    if (row.feasible)
      os << row.subproblem_cost << ',' << row.cost;
    else
      os << ',';
    os << "\r\n";
  }
}

}  // namespace ucsdp
