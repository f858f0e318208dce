#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ucsdp/case_model.hpp"
#include "ucsdp/errors.hpp"
#include "ucsdp/master.hpp"
#include "ucsdp/sdp_assembly.hpp"
#include "ucsdp/sdp_solver.hpp"

namespace ucsdp {

inline double sigma(const CaseData& c) {
  double s = 0;
  for (const auto& g : c.generators) s += g.alpha * g.p_max * g.p_max + g.beta * g.p_max + g.gamma;
  return s;
}

// Row groups of the subproblem. The first nine follow the constraint list of S^k;
// Aux collects the lift, box and reference rows that carry no slack.
enum class RowGroup : int {
  BalanceP = 0, BalanceQ, PMax, QMax, Reserve, RampUp, RampDown, Flow, Voltage, Aux
};
inline constexpr int kRowGroups = 10;

inline const char* to_string(RowGroup g) {
  static const char* names[] = {"balance_p", "balance_q", "pmax",  "qmax",    "reserve",
                                "ramp_up",   "ramp_down", "flow",  "voltage", "aux"};
  return names[static_cast<int>(g)];
}

// rhs(x) = constant + Σ coef·x_k
struct AffineRhs {
  double constant = 0;
  std::vector<std::pair<int, double>> terms;

  double at(const std::vector<double>& x) const {
    double v = constant;
    for (const auto& [k, a] : terms) v += a * x[k];
    return v;
  }
};

struct RowInfo {
  RowGroup group = RowGroup::Aux;
  AffineRhs rhs;
};

struct SubproblemProgram {
  ConicProgram prog;
  std::vector<RowInfo> rows;  // parallel to prog.rows
};

// Everything that does not depend on x̃, built once per case. Works in per-unit.
struct SubproblemContext {
  CaseData pu;
  AssemblyBundle bundle;
  BlockLayout layout;
  double sigma = 0;
  std::vector<std::vector<int>> gens_at_bus;
  int slack = 0;
};

inline SubproblemContext make_context(const CaseData& c) {
  SubproblemContext ctx;
  ctx.pu = to_per_unit(c);
  ctx.bundle = assemble(ctx.pu);
  ctx.layout = build_layout(ctx.pu);
  ctx.sigma = sigma(c);
  ctx.gens_at_bus = generators_by_bus(c);
  ctx.slack = slack_index(c);
  return ctx;
}

enum class SubproblemPhase { Slack, Cost };

// Assembles S at x̃. Phase Slack minimizes σ·s only; phase Cost minimizes C•P + penalty·s.
inline SubproblemProgram build_subproblem(const SubproblemContext& ctx, const std::vector<double>& x,
                                          SubproblemPhase phase, double penalty) {
  const CaseData& c = ctx.pu;
  const BlockLayout& L = ctx.layout;
  const AssemblyBundle& B = ctx.bundle;
  const int T = L.n_steps, G = L.n_gens, N = L.n_buses;
  if (x.size() != static_cast<std::size_t>(T) * G)
    throw DimensionError("commitment vector has length " + std::to_string(x.size()) +
                         ", expected " + std::to_string(T * G));

  SubproblemProgram sp;
  ConicProgram& P = sp.prog;
  P.block_sizes = L.block_sizes;
  P.lp_size = L.lp_size();
  P.init_objective();
  const int s_idx = L.s_index();
  const int vdim = 2 * N;

  if (phase == SubproblemPhase::Cost) {
    for (int t = 0; t < T; ++t)
      for (int g = 0; g < G; ++g)
        P.c_blocks[L.p_block(t, g)] = SparseSym::from_dense(B.cost_c[g]);
  }
  P.c_lp[s_idx] = phase == SubproblemPhase::Cost ? penalty : ctx.sigma;

  const SparseSym lift = SparseSym::from_dense(lift_matrix());
  SparseSym neg_lift = lift;
  for (auto& e : neg_lift.entries) e.v = -e.v;
  std::vector<SparseSym> y_bus, yt_bus, e_bus, y_line;
  for (int i = 0; i < N; ++i) {
    y_bus.push_back(SparseSym::from_dense(B.y_bus[i]));
    yt_bus.push_back(SparseSym::from_dense(B.yt_bus[i]));
    e_bus.push_back(SparseSym::from_dense(B.e_bus[i]));
  }
  for (std::size_t l = 0; l < c.n_lines(); ++l) y_line.push_back(SparseSym::from_dense(B.y_line[l]));
  auto negate = [](SparseSym m) {
    for (auto& e : m.entries) e.v = -e.v;
    return m;
  };

  auto add = [&](RowGroup grp, RowSense sense, ConicRow row, AffineRhs rhs, bool with_s) {
    row.sense = sense;
    row.rhs = rhs.constant;
    if (with_s) row.lp.push_back({s_idx, -1.0});
    for (auto& [k, a] : rhs.terms) row.rhs += a * x[k];
    P.add_row(std::move(row));
    sp.rows.push_back({grp, std::move(rhs)});
  };
  auto kx = [&](int t, int g) { return t * G + g; };

  // Balance rows, each equality split into |core − rhs| ≤ s.
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < N; ++i)
      for (int reactive = 0; reactive < 2; ++reactive) {
        ConicRow core;
        AffineRhs rhs;
        rhs.constant = reactive ? c.dq[t][i] : c.dp[t][i];
        for (int g : ctx.gens_at_bus[i]) {
          if (reactive)
            core.lp.push_back({L.q_index(t, g), 1.0});
          else
            core.blocks.push_back({L.p_block(t, g), lift});
          const double lo = reactive ? c.generators[g].q_min : c.generators[g].p_min;
          if (lo != 0) rhs.terms.push_back({kx(t, g), -lo});
        }
        core.blocks.push_back({L.v_block(t), reactive ? yt_bus[i] : y_bus[i]});
        const RowGroup grp = reactive ? RowGroup::BalanceQ : RowGroup::BalanceP;
        ConicRow neg = core;
        for (auto& b : neg.blocks) b.mat = negate(b.mat);
        for (auto& l : neg.lp) l.v = -l.v;
        AffineRhs nrhs = rhs;
        nrhs.constant = -nrhs.constant;
        for (auto& [k, a] : nrhs.terms) a = -a;
        add(grp, RowSense::Le, std::move(core), std::move(rhs), true);
        add(grp, RowSense::Le, std::move(neg), std::move(nrhs), true);
      }

  for (int t = 0; t < T; ++t)
    for (int g = 0; g < G; ++g) {
      const auto& gen = c.generators[g];
      ConicRow r;
      r.blocks.push_back({L.p_block(t, g), lift});
      add(RowGroup::PMax, RowSense::Le, std::move(r), {0, {{kx(t, g), gen.p_max - gen.p_min}}}, true);
      ConicRow rq;
      rq.lp.push_back({L.q_index(t, g), 1.0});
      add(RowGroup::QMax, RowSense::Le, std::move(rq), {0, {{kx(t, g), gen.q_max - gen.q_min}}}, true);
    }

  for (int t = 0; t < T; ++t) {
    ConicRow r;
    AffineRhs rhs{-c.sr[t], {}};
    for (int g = 0; g < G; ++g) {
      r.blocks.push_back({L.p_block(t, g), lift});
      rhs.terms.push_back({kx(t, g), c.generators[g].p_max - c.generators[g].p_min});
    }
    add(RowGroup::Reserve, RowSense::Le, std::move(r), std::move(rhs), true);
  }

  for (int t = 0; t < T; ++t)
    for (int g = 0; g < G; ++g) {
      const auto& gen = c.generators[g];
      const double pl = gen.p_min;
      ConicRow up, dn;
      up.blocks.push_back({L.p_block(t, g), lift});
      dn.blocks.push_back({L.p_block(t, g), neg_lift});
      AffineRhs rup{gen.ramp_up, {{kx(t, g), -pl}}};
      AffineRhs rdn{gen.ramp_down, {{kx(t, g), pl}}};
      if (t > 0) {
        up.blocks.push_back({L.p_block(t - 1, g), neg_lift});
        dn.blocks.push_back({L.p_block(t - 1, g), lift});
        rup.terms.push_back({kx(t - 1, g), pl});
        rdn.terms.push_back({kx(t - 1, g), -pl});
      } else {
        rup.constant += gen.p0 * gen.x0;
        rdn.constant -= gen.p0 * gen.x0;
      }
      add(RowGroup::RampUp, RowSense::Le, std::move(up), std::move(rup), true);
      add(RowGroup::RampDown, RowSense::Le, std::move(dn), std::move(rdn), true);
    }

  for (int t = 0; t < T; ++t)
    for (std::size_t l = 0; l < c.n_lines(); ++l)
      for (int sgn = 0; sgn < 2; ++sgn) {
        ConicRow r;
        r.blocks.push_back({L.v_block(t), sgn ? negate(y_line[l]) : y_line[l]});
        add(RowGroup::Flow, RowSense::Le, std::move(r), {c.lines[l].f_max, {}}, true);
      }

  for (int t = 0; t < T; ++t)
    for (int i = 0; i < N; ++i) {
      ConicRow hi, lo;
      hi.blocks.push_back({L.v_block(t), e_bus[i]});
      lo.blocks.push_back({L.v_block(t), negate(e_bus[i])});
      const auto& bus = c.buses[i];
      add(RowGroup::Voltage, RowSense::Le, std::move(hi), {bus.v_max * bus.v_max, {}}, true);
      add(RowGroup::Voltage, RowSense::Le, std::move(lo), {-bus.v_min * bus.v_min, {}}, true);
    }

  for (int t = 0; t < T; ++t) {
    for (int g = 0; g < G; ++g) {
      const auto& gen = c.generators[g];
      const int b = L.p_block(t, g);
      ConicRow one;
      one.blocks.push_back({b, SparseSym::unit(2, 1, 1)});
      add(RowGroup::Aux, RowSense::Eq, std::move(one), {1, {}}, false);
      ConicRow nonneg;
      nonneg.blocks.push_back({b, neg_lift});
      add(RowGroup::Aux, RowSense::Le, std::move(nonneg), {0, {}}, false);
      ConicRow box;
      box.blocks.push_back({b, SparseSym::unit(2, 0, 0)});
      const double span = gen.p_max - gen.p_min;
      add(RowGroup::Aux, RowSense::Le, std::move(box), {span * span + 1, {}}, false);
    }
    ConicRow ref;
    ref.blocks.push_back({L.v_block(t), SparseSym::unit(vdim, N + ctx.slack, N + ctx.slack)});
    add(RowGroup::Aux, RowSense::Eq, std::move(ref), {0, {}}, false);
  }
  return sp;
}

// Row counts by group for a case, from the structure of S alone.
inline std::vector<int> subproblem_row_tally(const CaseData& c) {
  const int T = c.horizon, G = static_cast<int>(c.n_gens()), N = static_cast<int>(c.n_buses()),
            Lc = static_cast<int>(c.n_lines());
  return {2 * T * N, 2 * T * N, T * G, T * G, T, T * G, T * G, 2 * T * Lc, 2 * T * N, 3 * T * G + T};
}

enum class SubproblemStatus { FeasibleOptimal, Infeasible };

inline const char* to_string(SubproblemStatus s) {
  return s == SubproblemStatus::FeasibleOptimal ? "feasible" : "infeasible";
}

struct SubproblemResult {
  SubproblemStatus status = SubproblemStatus::Infeasible;
  ConicSolution slack_phase;
  std::optional<ConicSolution> cost_phase;
  double s = 0;             // slack of the reported phase
  double slack_value = 0;   // σ·s of the pure-slack phase
  double cost = 0;          // C•P in $, cost phase only
  double penalty = 0;       // penalty used by the cost phase
  Cut cut;
  std::vector<double> p, q;             // MW / MVAr, index t·N_G + g
  std::vector<double> gen_minus_load;   // per step, MW
  std::vector<double> losses;           // −Σ_i Y_i•V_t, MW
  std::vector<Matrix> v_blocks;         // per step
  std::vector<Matrix> p_blocks;         // per (t, g)
};

struct SubproblemOptions {
  // Tighter than the engine defaults: the objective is normalised by the slack
  // penalty, so 1e-7 there is far coarser than 1e-6 of the cost.
  SdpOptions sdp{1e-9, 1e-9, 1e-10};
  double s_tol_rel = 1e-6;    // classification threshold on σ·s relative to (1+σ)
  int max_penalty_raises = 8;
  double penalty_growth = 10;
  double stale_factor = 10;   // residuals beyond this multiple of the solver tolerance throw
};

inline bool infeasible_by_slack(double sigma_s, double sig, double s_tol_rel) {
  return sigma_s > s_tol_rel * (1 + sig);
}

inline bool is_fresh(const ConicSolution& sol, const SubproblemOptions& opt) {
  if (sol.status == SdpStatus::Optimal) return true;
  // Near-misses of the tightened targets are accepted; the floor is the engine default.
  const double f = opt.stale_factor, floor = SdpOptions{}.eps_p;
  return sol.primal_residual <= f * std::max(opt.sdp.eps_p, floor) &&
         sol.dual_residual <= f * std::max(opt.sdp.eps_d, floor) && sol.gap <= f * std::max(opt.sdp.eps_g, floor);
}

inline void check_fresh(const ConicSolution& sol, const SubproblemOptions& opt) {
  if (is_fresh(sol, opt)) return;
  char buf[160];
  std::snprintf(buf, sizeof buf, "subproblem solve ended with residuals (%.3e, %.3e, %.3e) after %d iterations",
                sol.primal_residual, sol.dual_residual, sol.gap, sol.iterations);
  throw StaleDuals(buf);
}

// constant + coefsᵀx = Σ_r rhs_r(x)·w_r
inline void cut_from_duals(Cut& cut, const SubproblemProgram& sp, const Vector& w, std::size_t nx) {
  cut.constant = 0;
  cut.coefs.assign(nx, 0.0);
  cut.duals.assign(kRowGroups, {});
  for (std::size_t r = 0; r < sp.rows.size(); ++r) {
    const double d = w[static_cast<Eigen::Index>(r)];
    cut.constant += sp.rows[r].rhs.constant * d;
    for (const auto& [k, a] : sp.rows[r].rhs.terms) cut.coefs[k] += a * d;
    cut.duals[static_cast<int>(sp.rows[r].group)].push_back(d);
  }
}

inline void fill_dispatch(SubproblemResult& res, const SubproblemContext& ctx, const ConicSolution& sol,
                          const std::vector<double>& x) {
  const CaseData& c = ctx.pu;
  const BlockLayout& L = ctx.layout;
  const int T = L.n_steps, G = L.n_gens, N = L.n_buses;
  const double sb = c.s_base;
  res.p.assign(T * G, 0);
  res.q.assign(T * G, 0);
  res.p_blocks.clear();
  res.v_blocks.clear();
  for (int t = 0; t < T; ++t)
    for (int g = 0; g < G; ++g) {
      const auto& gen = c.generators[g];
      Matrix pb = sol.X[L.p_block(t, g)];
      const double dp = pb(0, 1);
      // With no quadratic term the [0,0] entry is cost-free; report the rank-1 lift.
      if (gen.alpha == 0) pb << dp * dp, dp, dp, 1;
      res.p_blocks.push_back(pb);
      res.p[t * G + g] = (dp + gen.p_min * x[t * G + g]) * sb;
      res.q[t * G + g] = (sol.x[L.q_index(t, g)] + gen.q_min * x[t * G + g]) * sb;
    }
  res.gen_minus_load.assign(T, 0);
  res.losses.assign(T, 0);
  for (int t = 0; t < T; ++t) {
    const Matrix& V = sol.X[L.v_block(t)];
    res.v_blocks.push_back(V);
    double gen = 0, load = 0, loss = 0;
    for (int g = 0; g < G; ++g) gen += res.p[t * G + g];
    for (int i = 0; i < N; ++i) {
      load += c.dp[t][i] * sb;
      loss -= (ctx.bundle.y_bus[i].cwiseProduct(V)).sum() * sb;
    }
    res.gen_minus_load[t] = gen - load;
    res.losses[t] = loss;
  }
}

// Solves S at x̃: the pure-slack phase decides feasibility; the cost phase then
// yields the dispatch, its cost and an optimality cut. `penalty` is the running
// penalty multiplier on σ and is raised in place when the cost phase keeps s > 0.
inline SubproblemResult solve_subproblem(const SubproblemContext& ctx, const std::vector<double>& x,
                                         double& penalty, const SubproblemOptions& opt = {}) {
  const std::size_t nx = x.size();
  SubproblemResult res;
  const double sig = ctx.sigma;
  const double s_scale = std::max(sig, 1e-300);

  SubproblemProgram p1 = build_subproblem(ctx, x, SubproblemPhase::Slack, sig);
  res.slack_phase = solve_sdp(p1.prog, opt.sdp);
  check_fresh(res.slack_phase, opt);
  res.slack_value = sig * res.slack_phase.x[ctx.layout.s_index()];
  res.cut.x_hat = x;

  if (infeasible_by_slack(res.slack_value, sig, opt.s_tol_rel)) {
    res.status = SubproblemStatus::Infeasible;
    res.s = res.slack_phase.x[ctx.layout.s_index()];
    res.cut.kind = CutKind::Feasibility;
    Vector mu = -res.slack_phase.y;
    cut_from_duals(res.cut, p1, mu, nx);
    fill_dispatch(res, ctx, res.slack_phase, x);
    return res;
  }

  const double s_tol = opt.s_tol_rel * (1 + sig) / s_scale;
  for (int raise = 0;; ++raise) {
    SubproblemProgram p2 = build_subproblem(ctx, x, SubproblemPhase::Cost, penalty * sig);
    ConicSolution sol = solve_sdp(p2.prog, opt.sdp);
    const double s = sol.x[ctx.layout.s_index()];
    // A stalled cost phase is usually a penalty too weak to pin s at zero.
    if ((s > s_tol || !is_fresh(sol, opt)) && raise < opt.max_penalty_raises) {
      penalty *= opt.penalty_growth;
      continue;
    }
    check_fresh(sol, opt);
    res.status = SubproblemStatus::FeasibleOptimal;
    res.s = s;
    res.penalty = penalty;
    res.cut.kind = CutKind::Optimality;
    cut_from_duals(res.cut, p2, sol.y, nx);
    double cp = 0;
    for (int b = 0; b < ctx.layout.n_steps * ctx.layout.n_gens; ++b)
      cp += p2.prog.c_blocks[b].dot(sol.X[b]);
    res.cost = cp;
    fill_dispatch(res, ctx, sol, x);
    res.cost_phase = std::move(sol);
    return res;
  }
}

inline LossEstimate update_losses(const SubproblemResult* last, const CaseData& c,
                                  double init_fraction = 0.05) {
  if (!last || last->status != SubproblemStatus::FeasibleOptimal)
    return update_losses(std::optional<std::vector<double>>{}, c, init_fraction);
  return update_losses(std::optional<std::vector<double>>{last->gen_minus_load}, c, init_fraction);
}

// min Σ_g w_g p_g (MW) over the relaxed one-step SDP: all units available,
// minimum outputs, ramps and reserve dropped. Every dispatch of every schedule
// at step t lies in that set, so wᵀp ≥ the returned value holds for all of them.
inline std::optional<double> injection_bound(const CaseData& c, std::size_t t, const std::vector<double>& w,
                                             const SubproblemOptions& opt = {}) {
  CaseData one = c;
  one.horizon = 1;
  one.dp = {c.dp[t]};
  one.dq = {c.dq[t]};
  one.sr = {0.0};
  for (std::size_t g = 0; g < one.n_gens(); ++g) {
    Generator& gen = one.generators[g];
    gen.p_min = 0;
    gen.q_min = std::min(gen.q_min, 0.0);
    gen.q_max = std::max(gen.q_max, 0.0);
    gen.ramp_up = gen.ramp_down = gen.p_max + gen.p0 + 1;
    gen.alpha = gen.gamma = 0;
    gen.beta = w[g];
    gen.startup_cost = gen.shutdown_cost = 0;
  }
  if (sigma(one) <= 0) return std::nullopt;
  try {
    const SubproblemContext ctx = make_context(one);
    double penalty = 1;
    const SubproblemResult r = solve_subproblem(ctx, std::vector<double>(one.n_gens(), 1.0), penalty, opt);
    if (r.status != SubproblemStatus::FeasibleOptimal) return std::nullopt;
    return r.cost - 1e-6 * (1 + std::abs(r.cost));
  } catch (const Error&) {
    return std::nullopt;
  }
}

// Per-step lower bound on network losses valid for every schedule.
inline std::vector<double> loss_floor(const CaseData& c, const SubproblemOptions& opt = {}) {
  std::vector<double> out(c.n_steps(), 0.0);
  const std::vector<double> ones(c.n_gens(), 1.0);
  for (std::size_t t = 0; t < c.n_steps(); ++t)
    if (auto b = injection_bound(c, t, ones, opt)) out[t] = std::max(0.0, *b - total_demand(c, t));
  return out;
}

// Marginal cost of active demand at each generator's bus, per step, from the
// cost-phase balance duals.
inline std::vector<std::vector<double>> generator_lmps(const CaseData& c, const SubproblemResult& r) {
  const std::size_t N = c.n_buses(), G = c.n_gens();
  const auto& bal = r.cut.duals[static_cast<int>(RowGroup::BalanceP)];
  std::vector<std::vector<double>> out(c.n_steps(), std::vector<double>(G, 0.0));
  for (std::size_t t = 0; t < c.n_steps(); ++t)
    for (std::size_t g = 0; g < G; ++g) {
      const std::size_t i = static_cast<std::size_t>(c.generators[g].bus_id - 1);
      const std::size_t k = 2 * (t * N + i);
      out[t][g] = bal[k] - bal[k + 1];
    }
  return out;
}

}  // namespace ucsdp
