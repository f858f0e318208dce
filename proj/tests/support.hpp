#pragma once

// Reference oracles and generators shared by the unit tests and the acceptance runner.

#include <complex>
#include <random>
#include <string>
#include <vector>

#include "ucsdp/ucsdp.hpp"

namespace testsupport {

using namespace ucsdp;
using cd = std::complex<double>;

inline bool row_ok(const MilpRow& r, double act, double tol = 1e-9) {
  switch (r.sense) {
    case RowSense::Le: return act <= r.rhs + tol;
    case RowSense::Ge: return act >= r.rhs - tol;
    case RowSense::Eq: return std::abs(act - r.rhs) <= tol;
  }
  return false;
}

// Exhaustive optimum over the binaries; continuous columns (if any) are settled by an
// LP at each leaf with the binaries fixed.
inline double enumerate_milp(const MilpModel& m, bool& feasible) {
  std::vector<int> bins;
  for (std::size_t j = 0; j < m.vars.size(); ++j)
    if (m.vars[j].binary) bins.push_back(static_cast<int>(j));
  const bool pure = bins.size() == m.vars.size();
  double best = kInf;
  feasible = false;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << bins.size()); ++mask) {
    if (pure) {
      std::vector<double> x(m.vars.size());
      for (std::size_t k = 0; k < bins.size(); ++k) x[bins[k]] = static_cast<double>((mask >> k) & 1u);
      bool ok = true;
      for (std::size_t r = 0; r < m.rows.size() && ok; ++r) ok = row_ok(m.rows[r], m.row_activity(r, x));
      if (ok && m.objective(x) < best) {
        best = m.objective(x);
        feasible = true;
      }
      continue;
    }
    MilpModel leaf = m;
    for (std::size_t k = 0; k < bins.size(); ++k) {
      const double v = static_cast<double>((mask >> k) & 1u);
      leaf.vars[bins[k]] = {leaf.vars[bins[k]].name, v, v, leaf.vars[bins[k]].cost, false};
    }
    const LpSolution lp = solve_lp(leaf);
    if (lp.status == LpStatus::Optimal && lp.objective < best) {
      best = lp.objective;
      feasible = true;
    }
  }
  return best;
}

inline MilpModel random_binary_model(std::mt19937_64& rng, bool with_continuous) {
  std::uniform_int_distribution<int> nb(2, 12), coef(-5, 9), cost(-10, 10);
  MilpModel m;
  const int n = nb(rng);
  for (int j = 0; j < n; ++j) m.add_binary("b" + std::to_string(j), cost(rng));
  if (with_continuous)
    for (int j = 0; j < 2; ++j) m.add_var("c" + std::to_string(j), 0, 5, 0.5 * cost(rng));
  const int rows = 1 + static_cast<int>(rng() % 5);
  for (int r = 0; r < rows; ++r) {
    std::vector<std::pair<int, double>> co;
    double sum = 0;
    for (int j = 0; j < static_cast<int>(m.vars.size()); ++j)
      if (rng() % 2) {
        co.push_back({j, static_cast<double>(coef(rng))});
        sum += std::abs(co.back().second);
      }
    if (co.empty()) co.push_back({0, 1.0});
    const int s = static_cast<int>(rng() % 6);
    const RowSense sense = s < 3 ? RowSense::Le : s < 5 ? RowSense::Ge : RowSense::Eq;
    const double rhs = std::round((sense == RowSense::Ge ? 0.2 : 0.5) * sum) - (sense == RowSense::Eq ? 0 : 1);
    m.add_row("r" + std::to_string(r), sense, rhs, co);
  }
  return m;
}

// ---- SDP regression set ----

struct SdpCase {
  std::string name;
  ConicProgram prog;
  double optimum = 0;
};

inline SparseSym random_sym(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> nd(0, 1);
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = nd(rng);
  return SparseSym::from_dense(a + a.transpose());
}

// Builds a program with a known optimum from a complementary primal/dual pair
// (X*, S*) with X* S* = 0, and a known y* with the sign each row sense requires.
inline SdpCase planted(std::mt19937_64& rng, std::vector<int> sizes, int lp, int n_rows, bool inequalities) {
  std::normal_distribution<double> nd(0, 1);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  SdpCase sc;
  sc.name = "planted";
  ConicProgram& p = sc.prog;
  p.block_sizes = sizes;
  p.lp_size = lp;
  p.init_objective();
  std::vector<Matrix> X, S;
  for (int n : sizes) {
    Matrix q = Eigen::HouseholderQR<Matrix>(Matrix::NullaryExpr(n, n, [&] { return nd(rng); })).householderQ();
    const int r = 1 + static_cast<int>(rng() % n);
    Vector lx = Vector::Zero(n), ls = Vector::Zero(n);
    for (int k = 0; k < n; ++k) (k < r ? lx[k] : ls[k]) = u(rng);
    X.push_back(q * lx.asDiagonal() * q.transpose());
    S.push_back(q * ls.asDiagonal() * q.transpose());
  }
  Vector xl(lp), sl(lp);
  for (int k = 0; k < lp; ++k) {
    const bool basic = k % 2 == 0;
    xl[k] = basic ? u(rng) : 0.0;
    sl[k] = basic ? 0.0 : u(rng);
  }
  Vector y(n_rows);
  std::vector<Matrix> C = S;
  Vector cl = sl;
  for (int r = 0; r < n_rows; ++r) {
    ConicRow row;
    double act = 0;
    for (std::size_t b = 0; b < sizes.size(); ++b) {
      SparseSym a = random_sym(rng, sizes[b]);
      act += a.dot(X[b]);
      row.blocks.push_back({static_cast<int>(b), a});
    }
    for (int k = 0; k < lp; ++k) {
      const double v = nd(rng);
      row.lp.push_back({k, v});
      act += v * xl[k];
    }
    const int kind = inequalities ? r % 3 : 0;
    row.sense = kind == 0 ? RowSense::Eq : kind == 1 ? RowSense::Le : RowSense::Ge;
    const bool active = kind == 0 || r % 2 == 0;
    if (kind == 0)
      y[r] = nd(rng);
    else if (!active)
      y[r] = 0;
    else
      y[r] = kind == 1 ? -u(rng) : u(rng);
    row.rhs = active ? act : act + (kind == 1 ? 1.0 : -1.0);
    for (const auto& t : row.blocks) C[t.block] += y[r] * t.mat.dense();
    for (const auto& t : row.lp) cl[t.index] += y[r] * t.v;
    p.add_row(row);
  }
  double obj = 0;
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    p.c_blocks[b] = SparseSym::from_dense(C[b]);
    obj += (C[b].array() * X[b].array()).sum();
  }
  for (int k = 0; k < lp; ++k) {
    p.c_lp[k] = cl[k];
    obj += cl[k] * xl[k];
  }
  sc.optimum = obj;
  return sc;
}

inline std::vector<SdpCase> regression_set() {
  std::vector<SdpCase> out;
  {
    SdpCase sc{"scalar", {}, 1.0};
    sc.prog.block_sizes = {1};
    sc.prog.init_objective();
    sc.prog.c_blocks[0] = SparseSym::unit(1, 0, 0);
    sc.prog.add_row({RowSense::Eq, 1.0, {{0, SparseSym::unit(1, 0, 0)}}, {}});
    out.push_back(sc);
  }
  {
    SdpCase sc{"trace_2x2", {}, 2.0};
    sc.prog.block_sizes = {2};
    sc.prog.init_objective();
    sc.prog.c_blocks[0] = SparseSym::from_dense(Matrix::Identity(2, 2));
    sc.prog.add_row({RowSense::Eq, 1.0, {{0, SparseSym::unit(2, 0, 1, 0.5)}}, {}});
    out.push_back(sc);
  }
  {
    // min t with Z = tI − A ⪰ 0, A = diag(1, 3); t ≥ 0 is not binding.
    SdpCase sc{"lambda_max", {}, 3.0};
    ConicProgram& p = sc.prog;
    p.block_sizes = {2};
    p.lp_size = 1;
    p.init_objective();
    p.c_lp = {1.0};
    const double a[2][2] = {{1, 0}, {0, 3}};
    for (int i = 0; i < 2; ++i)
      for (int j = i; j < 2; ++j) {
        ConicRow r;
        r.rhs = -a[i][j];
        r.blocks.push_back({0, SparseSym::unit(2, i, j, i == j ? 1.0 : 0.5)});
        if (i == j) r.lp = {{0, -1.0}};
        p.add_row(r);
      }
    out.push_back(sc);
  }
  std::mt19937_64 rng(99);
  const std::vector<std::vector<int>> shapes{{2}, {3}, {4}, {2, 2}, {3, 2}, {5}, {2, 3, 4}, {6}, {4, 4}, {3}};
  for (std::size_t k = 0; out.size() < 20; ++k) {
    const auto& sh = shapes[k % shapes.size()];
    int dim = 0;
    for (int n : sh) dim += n * (n + 1) / 2;
    const int lp = static_cast<int>(k % 3);
    const int rows = std::max(1, std::min(dim - 1, 2 + static_cast<int>(k % 5)));
    SdpCase sc = planted(rng, sh, lp, rows, k >= 8);
    sc.name = "planted_" + std::to_string(k);
    out.push_back(std::move(sc));
  }
  return out;
}

// ---- networks and voltages ----

inline double dot(const Matrix& m, const Vector& v) { return v.dot(m * v); }

// Power leaving bus i towards j over series admittance y: V_i · conj(y (V_i − V_j)).
inline cd flow(const Vector& v, int n, int i, int j, cd y) {
  const cd vi(v[i], v[n + i]), vj(v[j], v[n + j]);
  return vi * std::conj(y * (vi - vj));
}

inline CaseData random_network(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0, 1);
  CaseData c;
  c.buses = detail::flat_buses(n);
  for (int i = 2; i <= n; ++i) {
    const int j = 1 + static_cast<int>(rng() % (i - 1));
    c.lines.push_back({j, i, u(rng) < 0.2 ? 0.0 : 0.05 * u(rng), 0.02 + 0.3 * u(rng), 100});
  }
  for (int extra = 0; extra < n / 2; ++extra) {
    int a = 1 + static_cast<int>(rng() % n), b = 1 + static_cast<int>(rng() % n);
    if (a == b) continue;
    bool dup = false;
    for (const Line& l : c.lines) dup |= (l.from == a && l.to == b) || (l.from == b && l.to == a);
    if (!dup) c.lines.push_back({a, b, 0.05 * u(rng), 0.02 + 0.3 * u(rng), 100});
  }
  return c;
}

inline Vector random_voltage(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> nd(0, 1);
  Vector v(2 * n);
  for (int k = 0; k < 2 * n; ++k) v[k] = nd(rng);
  return v;
}

inline CaseData small_network(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0, 1);
  CaseData c;
  c.buses = detail::flat_buses(n);
  for (int i = 2; i <= n; ++i)
    c.lines.push_back({1 + static_cast<int>(rng() % (i - 1)), i, 0.05 * u(rng), 0.05 + 0.2 * u(rng), 100});
  if (n >= 4) c.lines.push_back({2, n, 0.01, 0.1, 100});
  return c;
}

// Rectangular voltages with magnitudes in [0.95, 1.05] and the slack (bus 1) on the real axis.
inline Vector feasible_voltage(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> mag(0.95, 1.05), ang(-0.3, 0.3);
  Vector v(2 * n);
  for (int i = 0; i < n; ++i) {
    const double m = mag(rng), a = i == 0 ? 0.0 : ang(rng);
    v[i] = m * std::cos(a);
    v[n + i] = m * std::sin(a);
  }
  return v;
}

}  // namespace testsupport
