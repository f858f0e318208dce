#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "ucsdp/benders.hpp"
#include "ucsdp/fixtures.hpp"
#include "ucsdp/oracle.hpp"

using namespace ucsdp;

namespace {

struct Rational {
  long long num = 0, den = 1;
  Rational(long long n = 0, long long d = 1) : num(n), den(d) {
    if (den < 0) num = -num, den = -den;
    const long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) num /= g, den /= g;
  }
  friend Rational operator+(Rational a, Rational b) { return {a.num * b.den + b.num * a.den, a.den * b.den}; }
  friend Rational operator-(Rational a, Rational b) { return {a.num * b.den - b.num * a.den, a.den * b.den}; }
  friend Rational operator*(Rational a, Rational b) { return {a.num * b.num, a.den * b.den}; }
  friend Rational operator/(Rational a, Rational b) { return {a.num * b.den, a.den * b.num}; }
  friend bool operator==(Rational a, Rational b) { return a.num == b.num && a.den == b.den; }
};

Generator fig_generator() {
  Generator g;
  g.id = "G";
  g.alpha = 1;
  g.beta = 17.7;
  g.gamma = 137;
  g.p_min = 10;
  g.p_max = 70;
  return g;
}

CaseData two_unit_case(double demand) {
  CaseData c = single_generator_case(demand);
  Generator g2 = c.generators[0];
  g2.id = "G2";
  c.generators.push_back(g2);
  return c;
}

BendersOptions quiet(MasterVariant v) {
  BendersOptions o;
  o.variant = v;
  o.rrp = false;
  return o;
}

}  // namespace

TEST(Master, OmegaWindow) {
  for (int t = 1; t <= 5; ++t) EXPECT_EQ(omega(t, 0, 3, 5), 0);
  EXPECT_EQ(omega(1, 3, 2, 24), 1);
  EXPECT_EQ(omega(23, 4, 0, 24), 2);
}

TEST(Master, LinearizationIsExactInRationals) {
  const Rational alpha(1), beta(177, 10), gamma(137), lo(10), hi(70);
  const Rational mid = (lo + hi) / Rational(2);
  const Rational m = beta + Rational(2) * alpha * mid;
  const Rational n = gamma - alpha * mid * mid;
  EXPECT_EQ(m, Rational(977, 10));
  EXPECT_EQ(n, Rational(-1463));

  const LinearCost lc = linear_cost_bound(fig_generator());
  EXPECT_NEAR(lc.m, 97.7, 1e-12);
  EXPECT_NEAR(lc.n, -1463.0, 1e-12);
}

TEST(Master, LinearizationAffineCost) {
  Generator g = fig_generator();
  g.alpha = 0;
  const LinearCost lc = linear_cost_bound(g);
  EXPECT_DOUBLE_EQ(lc.m, g.beta);
  EXPECT_DOUBLE_EQ(lc.n, g.gamma);
}

TEST(Master, LinearizationLowerBoundsCost) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 1000; ++k) {
    Generator g;
    g.alpha = u(rng);
    g.beta = 50 * u(rng);
    g.gamma = 300 * u(rng);
    g.p_min = 100 * u(rng);
    g.p_max = g.p_min + 200 * u(rng);
    const double p = g.p_min + (g.p_max - g.p_min) * u(rng);
    const LinearCost lc = linear_cost_bound(g);
    const double q = g.alpha * p * p + g.beta * p + g.gamma;
    EXPECT_LE(lc.m * p + lc.n, q + 1e-9 * (1 + q));
  }
}

TEST(Master, SingleStepModelShape) {
  const MasterModel mm = build_master(single_generator_case(), {}, {}, MasterVariant::M);
  EXPECT_EQ(mm.milp.n_binaries(), 1u);   // x; y and z are continuous
  EXPECT_EQ(mm.milp.vars.size(), 4u);    // x, y, z, w
  EXPECT_EQ(mm.n_logic_rows, 4);
}

TEST(Master, MinimumUpTimeForcesLaterStep) {
  CaseData c = single_generator_case();
  c.horizon = 3;
  c.generators[0].t_on = 2;
  c.generators[0].gamma = 1000;  // every on-step is expensive
  c.dp = {{0}, {0}, {0}};
  c.dq = {{0}, {0}, {0}};
  c.sr = {0, 0, 0};
  MasterModel mm = build_master(c, {}, {}, MasterVariant::M);
  mm.milp.add_row("force", RowSense::Ge, 1, {{mm.idx.x(1, 0), 1.0}});
  const MilpSolution s = solve_milp(mm.milp);
  ASSERT_EQ(s.status, MilpStatus::Optimal);
  const Schedule sch = extract_schedule(mm, s.values);
  EXPECT_EQ(sch.x, (std::vector<double>{0, 1, 1}));
  EXPECT_EQ(sch.y, (std::vector<double>{0, 1, 0}));
}

TEST(Master, KnownInitialStatusInStartupRow) {
  CaseData c = single_generator_case();
  c.generators[0].x0 = 1;
  c.generators[0].t0 = 2;
  c.generators[0].p0 = 50;
  c.generators[0].startup_cost = 500;
  MasterModel mm = build_master(c, {}, {}, MasterVariant::M);
  mm.milp.add_row("force", RowSense::Ge, 1, {{mm.idx.x(0, 0), 1.0}});
  const MilpSolution s = solve_milp(mm.milp);
  ASSERT_EQ(s.status, MilpStatus::Optimal);
  EXPECT_EQ(extract_schedule(mm, s.values).y[0], 0.0);
  EXPECT_NEAR(s.objective, cost_matrix(c.generators[0]).c, 1e-9);
}

TEST(Master, LossEstimates) {
  CaseData c = six_bus_case();
  c.horizon = 1;
  c.dp = {{0, 0, 50, 100, 50, 0}};
  c.dq = {c.dq[0]};
  c.sr = {0};
  EXPECT_NEAR(update_losses(std::nullopt, c).l[0], 10.0, 1e-12);
  EXPECT_EQ(update_losses(std::vector<double>{0.0}, c).l[0], 0.0);
}

TEST(Master, CutPoolIsMultiset) {
  CutPool pool;
  Cut cut;
  cut.coefs = {1.0};
  add_cut(pool, cut);
  add_cut(pool, cut);
  EXPECT_EQ(pool.size(), 2u);
  cut.constant = std::nan("");
  EXPECT_THROW(add_cut(pool, cut), ModelError);
}

TEST(Subproblem, Sigma) {
  CaseData c = single_generator_case();
  c.generators = {fig_generator()};
  EXPECT_DOUBLE_EQ(sigma(c), 6276.0);
  c.generators.push_back(fig_generator());
  EXPECT_DOUBLE_EQ(sigma(c), 2 * 6276.0);
  for (auto& g : c.generators) g.alpha = g.beta = g.gamma = 0;
  EXPECT_EQ(sigma(c), 0.0);
}

TEST(Subproblem, NothingCommittedNeedsSlack) {
  const SubproblemContext ctx = make_context(single_generator_case());
  double pen = 1;
  const SubproblemResult r = solve_subproblem(ctx, {0.0}, pen);
  EXPECT_EQ(r.status, SubproblemStatus::Infeasible);
  EXPECT_GT(r.s, 0.0);
  EXPECT_EQ(r.cut.kind, CutKind::Feasibility);
  EXPECT_LT(r.cut.value({0.0}), 0.0);
}

TEST(Subproblem, SingleBusDispatch) {
  const CaseData c = single_generator_case(50);
  const SubproblemContext ctx = make_context(c);
  double pen = 1;
  const SubproblemResult r = solve_subproblem(ctx, {1.0}, pen);
  ASSERT_EQ(r.status, SubproblemStatus::FeasibleOptimal);
  EXPECT_LE(r.s, 1e-7);
  EXPECT_NEAR(r.p[0], 50.0, 1e-4);
  const Generator& g = c.generators[0];
  const double dispatch = g.alpha * 2500 + g.beta * 50 + g.gamma - cost_matrix(g).c;
  EXPECT_NEAR(r.cost, dispatch, 1e-5 * (1 + dispatch));
  EXPECT_EQ(r.cut.kind, CutKind::Optimality);
  EXPECT_NEAR(r.cut.value({1.0}), r.cost, 1e-6 * (1 + r.cost));
}

TEST(Subproblem, CapacityShortfallThenFlipped) {
  const SubproblemContext ctx = make_context(two_unit_case(150));
  double pen = 1;
  const SubproblemResult shortfall = solve_subproblem(ctx, {1.0, 0.0}, pen);
  EXPECT_EQ(shortfall.status, SubproblemStatus::Infeasible);
  EXPECT_GT(shortfall.s, 0.0);
  EXPECT_LT(shortfall.cut.value({1.0, 0.0}), 0.0);
  const SubproblemResult both = solve_subproblem(ctx, {1.0, 1.0}, pen);
  EXPECT_EQ(both.status, SubproblemStatus::FeasibleOptimal);
  EXPECT_GE(shortfall.cut.value({1.0, 1.0}), -1e-6 * sigma(two_unit_case(150)));
}

TEST(Subproblem, LossesMatchVoltageBlock) {
  CaseData c = single_generator_case(0);
  c.buses = detail::flat_buses(2);
  c.lines = {{1, 2, 0.05, 0.2, 250}};
  c.dp = {{0, 60}};
  c.dq = {{0, 10}};
  const SubproblemContext ctx = make_context(c);
  double pen = 1;
  const SubproblemResult r = solve_subproblem(ctx, {1.0}, pen);
  ASSERT_EQ(r.status, SubproblemStatus::FeasibleOptimal);
  const Matrix& v = r.v_blocks[0];
  const double g = series_admittance(c.lines[0]).g;
  const double d2 = v(0, 0) + v(1, 1) - 2 * v(0, 1) + v(2, 2) + v(3, 3) - 2 * v(2, 3);
  const double loss = g * d2 * c.s_base;
  EXPECT_GT(loss, 0.0);
  EXPECT_NEAR(r.losses[0], loss, 1e-6);
  EXPECT_NEAR(update_losses(r.gen_minus_load, c).l[0], loss, 1e-4);
}

TEST(Subproblem, WrongLengthSchedule) {
  const SubproblemContext ctx = make_context(single_generator_case());
  double pen = 1;
  EXPECT_THROW(solve_subproblem(ctx, {1.0, 1.0}, pen), DimensionError);
}

TEST(Benders, SingleGeneratorClosedForm) {
  const CaseData c = single_generator_case(50);
  const Generator& g = c.generators[0];
  const double expect = g.alpha * 2500 + g.beta * 50 + g.gamma;
  for (MasterVariant v : {MasterVariant::M, MasterVariant::MM}) {
    const UcResult r = solve_uc(c, quiet(v));
    ASSERT_EQ(r.status, UcStatus::Converged);
    EXPECT_LE(r.iterations.size(), 3u);
    EXPECT_NEAR(r.total_cost, expect, 1e-5 * expect);
    EXPECT_NEAR(r.lower_bound, expect, 1e-5 * expect);
  }
}

TEST(Benders, ZeroDemandStaysOff) {
  const UcResult r = solve_uc(single_generator_case(0), quiet(MasterVariant::MM));
  ASSERT_EQ(r.status, UcStatus::Converged);
  EXPECT_NEAR(r.total_cost, 0.0, 1e-6);
  EXPECT_EQ(r.schedule.x, std::vector<double>{0.0});
}

TEST(Benders, DegeneratePenalty) {
  CaseData c = single_generator_case(50);
  c.generators[0].alpha = c.generators[0].beta = c.generators[0].gamma = 0;
  EXPECT_THROW(solve_uc(c), PenaltyDegenerate);
}

TEST(Benders, OneCutPerIteration) {
  const UcResult r = solve_uc(tiny_case(5), quiet(MasterVariant::M));
  int evaluated = 0;
  for (const auto& it : r.iterations) evaluated += it.cuts_added;
  EXPECT_EQ(static_cast<std::size_t>(evaluated), r.cuts.size());
  for (std::size_t k = 0; k < r.cuts.size(); ++k) EXPECT_EQ(r.cuts[k].iteration, static_cast<int>(k) + 1);
}

TEST(Benders, IterationCallback) {
  BendersOptions o = quiet(MasterVariant::MM);
  int seen = 0;
  o.on_iteration = [&](const IterationRecord& rec) { EXPECT_EQ(rec.k, ++seen); };
  const UcResult r = solve_uc(tiny_case(2), o);
  EXPECT_EQ(static_cast<std::size_t>(seen), r.iterations.size());
}

TEST(Benders, MatchesOracleWithSoundCuts) {
  for (int seed = 1; seed <= 12; ++seed) {
    const CaseData c = tiny_case(seed);
    const OracleResult oracle = enumerate_uc(c);
    const double sig = sigma(c);
    int iters[2] = {0, 0};
    for (MasterVariant v : {MasterVariant::M, MasterVariant::MM}) {
      const UcResult r = solve_uc(c, quiet(v));
      const std::string tag = "seed " + std::to_string(seed) + " " + to_string(v);
      if (!oracle.has_feasible) {
        EXPECT_EQ(r.status, UcStatus::InfeasibleUC) << tag;
        continue;
      }
      ASSERT_EQ(r.status, UcStatus::Converged) << tag;
      iters[v == MasterVariant::MM] = static_cast<int>(r.iterations.size());
      EXPECT_NEAR(r.total_cost, oracle.best_cost, 1e-5 * std::max(1.0, oracle.best_cost)) << tag;

      double lb = -kInf, ub = kInf;
      for (const auto& it : r.iterations) {
        EXPECT_GE(it.lb, lb) << tag;
        EXPECT_LE(it.ub, ub) << tag;
        lb = it.lb;
        ub = it.ub;
      }
      EXPECT_LE(r.gap(), 1e-6) << tag;

      for (const Cut& cut : r.cuts) {
        if (cut.kind == CutKind::Feasibility) {
          EXPECT_LT(cut.value(cut.x_hat), 0.0) << tag;
        }
        for (const auto& row : oracle.rows) {
          if (!row.feasible) continue;
          if (cut.kind == CutKind::Feasibility)
            EXPECT_GE(cut.value(row.schedule.x), -1e-6 * sig) << tag;
          else
            EXPECT_LE(cut.value(row.schedule.x), row.subproblem_cost + 1e-6 * sig) << tag;
        }
      }
    }
    if (oracle.has_feasible) {
      EXPECT_LE(iters[1], iters[0]) << "seed " << seed;
    }
  }
}

TEST(Benders, NoGoodCutForcesMismatch) {
  const CaseData c = tiny_case(3);
  const OracleResult oracle = enumerate_uc(c);
  ASSERT_TRUE(oracle.has_feasible);
  BendersOptions o = quiet(MasterVariant::MM);
  o.injected_cuts.push_back(no_good_cut(oracle.best.x));
  const UcResult r = solve_uc(c, o);
  EXPECT_TRUE(r.status != UcStatus::Converged || r.schedule.x != oracle.best.x);
}

TEST(Oracle, LogicFilter) {
  CaseData c = single_generator_case();
  c.horizon = 2;
  c.generators[0].t_on = 2;
  c.dp = {{50}, {50}};
  c.dq = {{0}, {0}};
  c.sr = {0, 0};
  EXPECT_FALSE(logic_feasible(c, {1, 0}));
  EXPECT_TRUE(logic_feasible(c, {0, 1}));
  EXPECT_TRUE(logic_feasible(c, {1, 1}));
  const OracleResult r = enumerate_uc(c);
  EXPECT_EQ(r.enumerated, 4u);
  EXPECT_EQ(r.rows.size(), 3u);
}

TEST(Oracle, SingleStepChoosesCommitment) {
  const OracleResult r = enumerate_uc(single_generator_case(50));
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_FALSE(r.rows[0].feasible);
  EXPECT_TRUE(r.rows[1].feasible);
  EXPECT_EQ(r.best.x, std::vector<double>{1.0});
}

TEST(Oracle, TooLarge) {
  EXPECT_THROW(enumerate_uc(six_bus_case()), TooLarge);
}
