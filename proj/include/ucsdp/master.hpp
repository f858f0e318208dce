#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ucsdp/case_model.hpp"
#include "ucsdp/errors.hpp"
#include "ucsdp/milp.hpp"
#include "ucsdp/sdp_assembly.hpp"

namespace ucsdp {

enum class MasterVariant { M, MM };
enum class CutKind { Feasibility, Optimality };

inline const char* to_string(MasterVariant v) { return v == MasterVariant::M ? "M" : "MM"; }
inline const char* to_string(CutKind k) {
  return k == CutKind::Feasibility ? "feasibility" : "optimality";
}

// Affine cut in x. Feasibility: constant + coefsᵀx ≥ 0. Optimality: constant + coefsᵀx ≤ w.
struct Cut {
  CutKind kind = CutKind::Optimality;
  int iteration = 0;
  double constant = 0;
  std::vector<double> coefs;                // length T·N_G, index t·N_G + g
  std::vector<std::vector<double>> duals;   // constraint-group duals (μ or λ), groups 1..9 and extras
  std::vector<double> x_hat;                // schedule that generated the cut

  double value(const std::vector<double>& x) const {
    double v = constant;
    for (std::size_t k = 0; k < coefs.size(); ++k) v += coefs[k] * x[k];
    return v;
  }
};

using CutPool = std::vector<Cut>;

inline CutPool& add_cut(CutPool& pool, Cut cut) {
  if (!std::isfinite(cut.constant) ||
      !std::all_of(cut.coefs.begin(), cut.coefs.end(), [](double v) { return std::isfinite(v); }))
    throw ModelError("cut has non-finite coefficients");
  pool.push_back(std::move(cut));
  return pool;
}

struct LossEstimate {
  std::vector<double> l;  // per step, same power unit as the case it was built for
};

// Minimum up/down window length; t is 1-based.
inline int omega(int t, int tau, int t0, int horizon) {
  int w = t == 1 ? std::min(tau - t0, tau) : std::min(tau, horizon - t + 1);
  w = std::min(w, horizon - t + 1);
  return std::max(0, w);
}

struct LinearCost {
  double m = 0, n = 0;
};

// Tangent of the quadratic cost at the midpoint of [p_min, p_max].
inline LinearCost linear_cost_bound(const Generator& g) {
  const double ph = 0.5 * (g.p_max + g.p_min);
  return {2 * g.alpha * ph + g.beta, -g.alpha * ph * ph + g.gamma};
}

// Losses from the previous subproblem (Σ generation − Σ load per step), or the
// initial fraction of demand when there is none.
inline LossEstimate update_losses(const std::optional<std::vector<double>>& gen_minus_load,
                                  const CaseData& c, double init_fraction = 0.05) {
  LossEstimate le;
  le.l.resize(c.n_steps());
  for (std::size_t t = 0; t < c.n_steps(); ++t)
    le.l[t] = gen_minus_load ? std::max(0.0, (*gen_minus_load)[t])
                             : init_fraction * total_demand(c, t);
  return le;
}

// wᵀp_t ≥ b over the generator outputs (MW) of one step.
struct InjectionPlane {
  int t = 0;
  std::vector<double> w;
  double b = 0;
};

struct MasterOptions {
  bool reactive_loss_term = true;
  double feasibility_relax = 0;  // subtracted from every feasibility-cut right-hand side
  // MM only. Extra valid rows for a bounding master: injection planes, and outer
  // tangents of each quadratic cost at the listed outputs (index t·N_G + g).
  std::vector<InjectionPlane> planes;
  std::vector<std::vector<double>> tangents;
};

struct MasterIndex {
  int n_steps = 0, n_gens = 0;
  int x0 = 0, y0 = 0, z0 = 0, w = 0, p0 = -1, q0 = -1;

  int k(int t, int g) const { return t * n_gens + g; }
  int x(int t, int g) const { return x0 + k(t, g); }
  int y(int t, int g) const { return y0 + k(t, g); }
  int z(int t, int g) const { return z0 + k(t, g); }
  int p(int t, int g) const { return p0 + k(t, g); }
  int q(int t, int g) const { return q0 + k(t, g); }
  bool has_dispatch() const { return p0 >= 0; }
};

struct MasterModel {
  MilpModel milp;
  MasterIndex idx;
  int n_logic_rows = 0;
  std::vector<double> x_init;  // x0 per generator
};

// Startup/shutdown and minimum up/down rows over (x, y, z). Shared by the master
// and by the LP-free feasibility check used in tests.
inline void add_logic_rows(MilpModel& mp, const MasterIndex& ix, const CaseData& c) {
  const int T = c.horizon, G = static_cast<int>(c.n_gens());
  for (int t = 0; t < T; ++t)
    for (int g = 0; g < G; ++g) {
      const auto& gen = c.generators[g];
      const std::string tag = "_" + std::to_string(t + 1) + "_" + gen.id;
      // x_t − x_{t−1} − y_t ≤ a1 (x0 moves to the right-hand side at t = 1)
      std::vector<std::pair<int, double>> su{{ix.x(t, g), 1.0}, {ix.y(t, g), -1.0}};
      std::vector<std::pair<int, double>> sd{{ix.x(t, g), -1.0}, {ix.z(t, g), -1.0}};
      double a1 = 0;
      if (t > 0) {
        su.push_back({ix.x(t - 1, g), -1.0});
        sd.push_back({ix.x(t - 1, g), 1.0});
      } else {
        a1 = gen.x0;
      }
      mp.add_row("startup" + tag, RowSense::Le, a1, su);
      mp.add_row("shutdown" + tag, RowSense::Le, -a1, sd);
    }
  for (int t = 0; t < T; ++t)
    for (int g = 0; g < G; ++g) {
      const auto& gen = c.generators[g];
      const std::string tag = "_" + std::to_string(t + 1) + "_" + gen.id;
      const int wu = omega(t + 1, gen.t_on, gen.t0, T);
      std::vector<std::pair<int, double>> up;
      if (wu > 0) {
        up.push_back({ix.x(t, g), static_cast<double>(wu)});
        if (t > 0) up.push_back({ix.x(t - 1, g), -static_cast<double>(wu)});
        for (int j = 0; j < wu; ++j) up.push_back({ix.x(t + j, g), -1.0});
      }
      mp.add_row("minup" + tag, RowSense::Le, 0, up);
      const int wd = omega(t + 1, gen.t_off, gen.t0, T);
      std::vector<std::pair<int, double>> dn;
      if (wd > 0) {
        if (t > 0) dn.push_back({ix.x(t - 1, g), static_cast<double>(wd)});
        dn.push_back({ix.x(t, g), -static_cast<double>(wd)});
        for (int j = 0; j < wd; ++j) dn.push_back({ix.x(t + j, g), 1.0});
      }
      mp.add_row("mindown" + tag, RowSense::Le, static_cast<double>(wd), dn);
    }
}

inline MasterModel build_master(const CaseData& c, const CutPool& cuts, const LossEstimate& losses,
                                MasterVariant variant, const MasterOptions& opt = {}) {
  const int T = c.horizon, G = static_cast<int>(c.n_gens());
  const std::size_t nx = static_cast<std::size_t>(T) * G;
  MasterModel mm;
  for (const auto& gen : c.generators) mm.x_init.push_back(gen.x0);
  MilpModel& mp = mm.milp;
  MasterIndex& ix = mm.idx;
  ix.n_steps = T;
  ix.n_gens = G;

  ix.x0 = 0;
  for (int t = 0; t < T; ++t)
    for (int g = 0; g < G; ++g)
      mp.add_binary("x_" + std::to_string(t + 1) + "_" + c.generators[g].id,
                    cost_matrix(c.generators[g]).c);
  // y and z stay continuous: with x integral the startup/shutdown rows force them
  // to 0/1 at any optimum with nonnegative costs.
  ix.y0 = static_cast<int>(mp.vars.size());
  for (int t = 0; t < T; ++t)
    for (int g = 0; g < G; ++g)
      mp.add_var("y_" + std::to_string(t + 1) + "_" + c.generators[g].id, 0, 1,
                 c.generators[g].startup_cost);
  ix.z0 = static_cast<int>(mp.vars.size());
  for (int t = 0; t < T; ++t)
    for (int g = 0; g < G; ++g)
      mp.add_var("z_" + std::to_string(t + 1) + "_" + c.generators[g].id, 0, 1,
                 c.generators[g].shutdown_cost);
  ix.w = mp.add_var("w", 0, kInf, 1.0);

  add_logic_rows(mp, ix, c);
  mm.n_logic_rows = static_cast<int>(mp.rows.size());

  if (variant == MasterVariant::MM) {
    if (losses.l.size() != static_cast<std::size_t>(T))
      throw ModelError("loss estimate has the wrong length");
    ix.p0 = static_cast<int>(mp.vars.size());
    for (int t = 0; t < T; ++t)
      for (int g = 0; g < G; ++g)
        mp.add_var("p_" + std::to_string(t + 1) + "_" + c.generators[g].id, 0, kInf, 0);
    ix.q0 = static_cast<int>(mp.vars.size());
    for (int t = 0; t < T; ++t)
      for (int g = 0; g < G; ++g)
        mp.add_var("q_" + std::to_string(t + 1) + "_" + c.generators[g].id, -kInf, kInf, 0);

    for (int t = 0; t < T; ++t) {
      const std::string ts = "_" + std::to_string(t + 1);
      double dp = 0, dq = 0;
      for (double v : c.dp[t]) dp += v;
      for (double v : c.dq[t]) dq += v;
      const double l = losses.l[t];
      std::vector<std::pair<int, double>> sp, sq, cp, cq;
      for (int g = 0; g < G; ++g) {
        sp.push_back({ix.p(t, g), 1.0});
        sq.push_back({ix.q(t, g), 1.0});
        cp.push_back({ix.x(t, g), c.generators[g].p_max});
        cq.push_back({ix.x(t, g), c.generators[g].q_max});
      }
      mp.add_row("balance_p" + ts, RowSense::Ge, dp + l, sp);
      mp.add_row("balance_q" + ts, RowSense::Ge, dq, sq);
      mp.add_row("capacity_p" + ts, RowSense::Ge, dp + l + c.sr[t], cp);
      mp.add_row("capacity_q" + ts, RowSense::Ge, dq + (opt.reactive_loss_term ? l : 0.0), cq);
    }
    for (int t = 0; t < T; ++t)
      for (int g = 0; g < G; ++g) {
        const auto& gen = c.generators[g];
        const std::string tag = "_" + std::to_string(t + 1) + "_" + gen.id;
        mp.add_row("pmin" + tag, RowSense::Ge, 0, {{ix.p(t, g), 1.0}, {ix.x(t, g), -gen.p_min}});
        mp.add_row("pmax" + tag, RowSense::Le, 0, {{ix.p(t, g), 1.0}, {ix.x(t, g), -gen.p_max}});
        mp.add_row("qmin" + tag, RowSense::Ge, 0, {{ix.q(t, g), 1.0}, {ix.x(t, g), -gen.q_min}});
        mp.add_row("qmax" + tag, RowSense::Le, 0, {{ix.q(t, g), 1.0}, {ix.x(t, g), -gen.q_max}});
        if (t > 0) {
          mp.add_row("rampup" + tag, RowSense::Le, gen.ramp_up,
                     {{ix.p(t, g), 1.0}, {ix.p(t - 1, g), -1.0}});
          mp.add_row("rampdown" + tag, RowSense::Le, gen.ramp_down,
                     {{ix.p(t - 1, g), 1.0}, {ix.p(t, g), -1.0}});
        } else {
          const double base = gen.p0 * gen.x0;
          mp.add_row("rampup" + tag, RowSense::Le, gen.ramp_up + base, {{ix.p(t, g), 1.0}});
          mp.add_row("rampdown" + tag, RowSense::Le, gen.ramp_down - base, {{ix.p(t, g), -1.0}});
        }
      }
    if (!opt.tangents.empty() && opt.tangents.size() != static_cast<std::size_t>(T * G))
      throw ModelError("tangent list has the wrong length");
    for (std::size_t k = 0; k < opt.planes.size(); ++k) {
      const InjectionPlane& pl = opt.planes[k];
      std::vector<std::pair<int, double>> row;
      for (int g = 0; g < G; ++g)
        if (pl.w[g] != 0) row.push_back({ix.p(pl.t, g), pl.w[g]});
      mp.add_row("plane_" + std::to_string(k + 1), RowSense::Ge, pl.b, row);
    }
    // mᵀp + nᵀx − cᵀx − w ≤ 0
    std::vector<std::pair<int, double>> link;
    for (int t = 0; t < T; ++t)
      for (int g = 0; g < G; ++g) {
        const auto& gen = c.generators[g];
        const auto lc = linear_cost_bound(gen);
        const double base = cost_matrix(gen).c;
        if (opt.tangents.empty()) {
          link.push_back({ix.p(t, g), lc.m});
          link.push_back({ix.x(t, g), lc.n - base});
          continue;
        }
        // u ≥ (β + 2αp_k)p + (γ − αp_k² − c)x for every tangent point, midpoint included.
        const int u = mp.add_var("u_" + std::to_string(t + 1) + "_" + gen.id, -kInf, kInf, 0);
        std::vector<double> pts = opt.tangents[ix.k(t, g)];
        pts.push_back(0.5 * (gen.p_min + gen.p_max));
        for (std::size_t j = 0; j < pts.size(); ++j) {
          const double pk = pts[j];
          mp.add_row("tangent_" + std::to_string(t + 1) + "_" + gen.id + "_" + std::to_string(j + 1),
                     RowSense::Le, 0,
                     {{ix.p(t, g), gen.beta + 2 * gen.alpha * pk},
                      {ix.x(t, g), gen.gamma - gen.alpha * pk * pk - base},
                      {u, -1.0}});
        }
        link.push_back({u, 1.0});
      }
    link.push_back({ix.w, -1.0});
    mp.add_row("cost_link", RowSense::Le, 0, link);
  }

  for (std::size_t k = 0; k < cuts.size(); ++k) {
    const Cut& cut = cuts[k];
    if (cut.coefs.size() != nx)
      throw ModelError("cut " + std::to_string(k) + " has " + std::to_string(cut.coefs.size()) +
                       " coefficients, expected " + std::to_string(nx));
    std::vector<std::pair<int, double>> row;
    for (std::size_t j = 0; j < nx; ++j)
      if (cut.coefs[j] != 0) row.push_back({ix.x0 + static_cast<int>(j), cut.coefs[j]});
    const std::string name = std::string(cut.kind == CutKind::Feasibility ? "fcut_" : "ocut_") +
                             std::to_string(k + 1);
    if (cut.kind == CutKind::Feasibility) {
      mp.add_row(name, RowSense::Ge, -cut.constant - opt.feasibility_relax, row);
    } else {
      row.push_back({ix.w, -1.0});
      mp.add_row(name, RowSense::Le, -cut.constant, row);
    }
  }
  return mm;
}

struct Schedule {
  std::vector<double> x, y, z;  // each length T·N_G, index t·N_G + g
};

inline Schedule extract_schedule(const MasterModel& mm, const std::vector<double>& values) {
  const int n = mm.idx.n_steps * mm.idx.n_gens;
  Schedule s;
  for (int k = 0; k < n; ++k) {
    s.x.push_back(values[mm.idx.x0 + k] > 0.5 ? 1.0 : 0.0);
  }
  // y, z are recomputed from x; zero-cost transitions leave them undetermined in the LP.
  const int G = mm.idx.n_gens;
  s.y.assign(n, 0);
  s.z.assign(n, 0);
  for (int k = 0; k < n; ++k) {
    const double prev = k < G ? mm.x_init[k] : s.x[k - G];
    s.y[k] = std::max(0.0, s.x[k] - prev);
    s.z[k] = std::max(0.0, prev - s.x[k]);
  }
  return s;
}

// Commitment cost cᵀx + uᵀy + hᵀz.
inline double commitment_cost(const CaseData& c, const Schedule& s) {
  const int G = static_cast<int>(c.n_gens());
  double v = 0;
  for (std::size_t k = 0; k < s.x.size(); ++k) {
    const auto& g = c.generators[k % G];
    v += cost_matrix(g).c * s.x[k] + g.startup_cost * s.y[k] + g.shutdown_cost * s.z[k];
  }
  return v;
}

}  // namespace ucsdp
