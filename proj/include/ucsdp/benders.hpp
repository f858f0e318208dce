#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "ucsdp/case_model.hpp"
#include "ucsdp/errors.hpp"
#include "ucsdp/master.hpp"
#include "ucsdp/milp.hpp"
#include "ucsdp/rank_reduction.hpp"
#include "ucsdp/subproblem.hpp"

namespace ucsdp {

enum class UcStatus { Converged, InfeasibleUC, IterLimit };

inline const char* to_string(UcStatus s) {
  switch (s) {
    case UcStatus::Converged: return "Converged";
    case UcStatus::InfeasibleUC: return "InfeasibleUC";
    case UcStatus::IterLimit: return "IterLimit";
  }
  return "?";
}

struct IterationRecord {
  int k = 0;
  double lb = 0;                 // best valid lower bound after this master
  double master_objective = 0;   // objective of the master that produced x̃
  double ub = kInf;              // best upper bound after this iteration
  double ub_candidate = kInf;
  double subproblem_cost = 0;
  Schedule schedule;
  CutKind cut_kind = CutKind::Optimality;
  bool has_cut = false;
  double s = 0;
  int cuts_added = 0;
  double master_ms = 0, sdp_ms = 0;
};

struct BendersOptions {
  MasterVariant variant = MasterVariant::MM;
  double tol = 1e-6;
  int max_iters = 50;
  bool rrp = true;
  RrpOptions rrp_options;
  double loss_init = 0.05;
  double feasibility_relax = 1e-7;  // times (1 + σ)
  bool tight_bound = true;  // MM: loss floor, injection planes and cost tangents in the bounding master
  SubproblemOptions subproblem;
  MilpOptions milp;
  std::vector<Cut> injected_cuts;  // test hook: added to the master before the first iteration
  std::function<void(const IterationRecord&)> on_iteration;
};

struct UcResult {
  UcStatus status = UcStatus::IterLimit;
  std::vector<IterationRecord> iterations;
  CutPool cuts;
  bool has_incumbent = false;
  Schedule schedule;
  std::vector<double> p, q;  // MW / MVAr, index t·N_G + g
  std::vector<Matrix> v_blocks;          // as solved
  std::vector<Matrix> v_reduced;         // after rank reduction (empty when off)
  std::vector<int> ranks_before, ranks_after;
  std::vector<RrpResult> rrp;
  double total_cost = kInf;
  double lower_bound = -kInf;
  double sigma = 0;
  double gap() const {
    if (!has_incumbent) return kInf;
    return (total_cost - lower_bound) / (1 + std::abs(total_cost));
  }
};

namespace detail {

inline double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

namespace detail {

// Refines the bounding master around a new incumbent: one injection plane per
// step with the incumbent's generator LMPs as weights, and cost tangents at its
// dispatch. Both stay valid for every schedule.
inline void refine_bound(const CaseData& c, const SubproblemResult& inc, const SubproblemOptions& sopt,
                         MasterOptions& bound) {
  const std::size_t G = c.n_gens();
  const auto lmp = generator_lmps(c, inc);
  for (std::size_t t = 0; t < c.n_steps(); ++t) {
    double scale = 0;
    for (double v : lmp[t]) scale = std::max(scale, std::abs(v));
    if (!(scale > 0)) continue;
    std::vector<double> w(G);
    for (std::size_t g = 0; g < G; ++g) w[g] = lmp[t][g] / scale;
    if (auto b = injection_bound(c, t, w, sopt)) bound.planes.push_back({static_cast<int>(t), w, *b});
  }
  for (std::size_t k = 0; k < inc.p.size(); ++k) {
    const Generator& gen = c.generators[k % G];
    if (inc.p[k] > gen.p_min && inc.p[k] < gen.p_max) bound.tangents[k].push_back(inc.p[k]);
  }
}

}  // namespace detail

inline UcResult solve_uc(const CaseData& c, const BendersOptions& opt = {}) {
  UcResult res;
  const double sig = sigma(c);
  res.sigma = sig;
  double demand = 0;
  for (std::size_t t = 0; t < c.n_steps(); ++t) demand += std::abs(total_demand(c, t));
  if (sig == 0 && demand > 0)
    throw PenaltyDegenerate("slack penalty is zero (all generator costs vanish) but demand is nonzero");

  const SubproblemContext ctx = make_context(c);
  MasterOptions mopt;
  mopt.feasibility_relax = opt.feasibility_relax * (1 + sig);
  const bool use_losses = opt.variant == MasterVariant::MM;
  // The bounding master only carries losses every schedule must incur.
  const LossEstimate floor{use_losses && opt.tight_bound ? loss_floor(c, opt.subproblem)
                                                         : std::vector<double>(c.n_steps(), 0.0)};
  auto raise_to_floor = [&](LossEstimate e) {
    for (std::size_t t = 0; t < e.l.size(); ++t) e.l[t] = std::max(e.l[t], floor.l[t]);
    return e;
  };
  LossEstimate losses = raise_to_floor(update_losses(std::nullopt, c, opt.loss_init));
  MasterOptions bound_opt = mopt;
  bound_opt.reactive_loss_term = false;
  if (use_losses && opt.tight_bound) {
    bound_opt.tangents.assign(c.n_steps() * c.n_gens(), {});
    for (std::size_t k = 0; k < bound_opt.tangents.size(); ++k) {
      const Generator& gen = c.generators[k % c.n_gens()];
      bound_opt.tangents[k] = {gen.p_min, gen.p_max};
    }
  }

  CutPool master_cuts = opt.injected_cuts;
  std::set<std::vector<double>> evaluated;
  double penalty = 1;
  double ub = kInf, lb = -kInf;
  std::optional<SubproblemResult> incumbent;
  auto converged = [&] { return ub < kInf && ub - lb <= opt.tol * (1 + std::abs(ub)); };

  res.status = UcStatus::IterLimit;
  for (int k = 1; k <= opt.max_iters; ++k) {
    IterationRecord rec;
    rec.k = k;
    auto t0 = std::chrono::steady_clock::now();
    // The bounding master (valid loss and cost model) supplies LB; in MM the
    // loss-estimate master proposes x̃ unless it repeats a schedule or is infeasible.
    MasterModel valid = build_master(c, master_cuts, floor, opt.variant, bound_opt);
    MilpOptions milp_opt = opt.milp;
    if (incumbent) milp_opt.warm_start = res.schedule.x;
    MilpSolution vs = solve_milp(valid.milp, milp_opt);
    if (vs.status == MilpStatus::Infeasible) {
      rec.master_ms = detail::elapsed_ms(t0);
      rec.lb = lb;
      rec.ub = ub;
      res.iterations.push_back(rec);
      if (opt.on_iteration) opt.on_iteration(rec);
      res.status = UcStatus::InfeasibleUC;
      break;
    }
    if (vs.status != MilpStatus::Optimal)
      throw NumericalError(std::string("master MILP ended with status ") + to_string(vs.status));
    lb = std::max(lb, vs.objective);
    Schedule sched = extract_schedule(valid, vs.values);
    rec.master_objective = vs.objective;
    if (use_losses && losses.l != floor.l) {
      MasterModel est = build_master(c, master_cuts, losses, opt.variant, mopt);
      MilpSolution es = solve_milp(est.milp, milp_opt);
      if (es.status == MilpStatus::Optimal) {
        Schedule cand = extract_schedule(est, es.values);
        if (!evaluated.count(cand.x)) {
          sched = std::move(cand);
          rec.master_objective = es.objective;
        }
      }
    }
    rec.master_ms = detail::elapsed_ms(t0);
    rec.lb = lb;
    rec.schedule = sched;
    if (converged()) {
      rec.ub = ub;
      res.iterations.push_back(rec);
      if (opt.on_iteration) opt.on_iteration(rec);
      res.status = UcStatus::Converged;
      break;
    }

    t0 = std::chrono::steady_clock::now();
    SubproblemResult sp = solve_subproblem(ctx, sched.x, penalty, opt.subproblem);
    evaluated.insert(sched.x);
    rec.s = sp.s;
    rec.cut_kind = sp.cut.kind;
    rec.has_cut = true;
    rec.cuts_added = 1;
    sp.cut.iteration = k;
    add_cut(res.cuts, sp.cut);
    add_cut(master_cuts, sp.cut);
    if (sp.status == SubproblemStatus::FeasibleOptimal) {
      rec.subproblem_cost = sp.cost;
      rec.ub_candidate = commitment_cost(c, sched) + sp.cost;
      if (rec.ub_candidate < ub) {
        ub = rec.ub_candidate;
        incumbent = std::move(sp);
        res.schedule = sched;
        if (use_losses && opt.tight_bound) detail::refine_bound(c, *incumbent, opt.subproblem, bound_opt);
      }
      if (use_losses) losses = raise_to_floor(update_losses(&*incumbent, c, opt.loss_init));
    }
    rec.sdp_ms = detail::elapsed_ms(t0);
    rec.ub = ub;
    res.iterations.push_back(rec);
    if (opt.on_iteration) opt.on_iteration(rec);
    if (converged()) {
      res.status = UcStatus::Converged;
      break;
    }
  }

  res.lower_bound = lb;
  if (incumbent) {
    res.has_incumbent = true;
    res.total_cost = ub;
    res.p = incumbent->p;
    res.q = incumbent->q;
    res.v_blocks = incumbent->v_blocks;
    for (const auto& v : res.v_blocks) res.ranks_before.push_back(numerical_rank(v, opt.rrp_options.rank_tol));
    if (opt.rrp && res.status == UcStatus::Converged) {
      const auto cons = voltage_constraints(ctx.bundle, ctx.slack);
      for (const auto& v : res.v_blocks) {
        res.rrp.push_back(reduce_rank(v, cons, opt.rrp_options));
        res.v_reduced.push_back(res.rrp.back().v);
        res.ranks_after.push_back(res.rrp.back().terminal_rank);
      }
    }
  }
  return res;
}

struct VariantComparison {
  UcResult m, mm;
  int iters_m() const { return m.status == UcStatus::Converged ? static_cast<int>(m.iterations.size()) : -1; }
  int iters_mm() const {
    return mm.status == UcStatus::Converged ? static_cast<int>(mm.iterations.size()) : -1;
  }
};

inline VariantComparison compare_variants(const CaseData& c, BendersOptions opt = {}) {
  VariantComparison out;
  opt.variant = MasterVariant::M;
  out.m = solve_uc(c, opt);
  opt.variant = MasterVariant::MM;
  out.mm = solve_uc(c, opt);
  return out;
}

// Feasibility cut excluding exactly the commitment x*.
inline Cut no_good_cut(const std::vector<double>& x_star) {
  Cut cut;
  cut.kind = CutKind::Feasibility;
  double ones = 0;
  for (double v : x_star) {
    const bool on = v > 0.5;
    cut.coefs.push_back(on ? -1.0 : 1.0);
    ones += on;
  }
  cut.constant = ones - 1;
  cut.x_hat = x_star;
  return cut;
}

}  // namespace ucsdp
