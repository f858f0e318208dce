#include <gtest/gtest.h>

#include <random>

#include "ucsdp/benders.hpp"
#include "ucsdp/fixtures.hpp"
#include "ucsdp/milp.hpp"
#include "ucsdp/oracle.hpp"
#include "ucsdp/sdp_solver.hpp"
#include "support.hpp"

using namespace ucsdp;
using namespace testsupport;

namespace {

void expect_matches_enumeration(const MilpModel& m, const std::string& label) {
  bool feasible = false;
  const double ref = enumerate_milp(m, feasible);
  const MilpSolution sol = solve_milp(m);
  if (!feasible) {
    EXPECT_EQ(sol.status, MilpStatus::Infeasible) << label;
    return;
  }
  ASSERT_EQ(sol.status, MilpStatus::Optimal) << label;
  EXPECT_NEAR(sol.objective, ref, 1e-7 * (1 + std::abs(ref))) << label;
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    double scale = 1 + std::abs(m.rows[r].rhs);
    for (auto [j, a] : m.rows[r].coefs) scale += std::abs(a * sol.values[j]);
    EXPECT_TRUE(row_ok(m.rows[r], m.row_activity(r, sol.values), 1e-9 * scale))
        << label << " row " << m.rows[r].name << " activity " << m.row_activity(r, sol.values) << " rhs "
        << m.rows[r].rhs;
  }
}

}  // namespace

TEST(Milp, PureLp) {
  MilpModel m;
  const int x = m.add_var("x", -kInf, kInf, 1.0);
  m.add_row("lo", RowSense::Ge, 3, {{x, 1.0}});
  const MilpSolution s = solve_milp(m);
  ASSERT_EQ(s.status, MilpStatus::Optimal);
  EXPECT_NEAR(s.objective, 3.0, 1e-9);
}

TEST(Milp, Knapsack) {
  MilpModel m;
  const int a = m.add_binary("a", -3), b = m.add_binary("b", -2);
  m.add_row("cap", RowSense::Le, 1, {{a, 1.0}, {b, 1.0}});
  const MilpSolution s = solve_milp(m);
  ASSERT_EQ(s.status, MilpStatus::Optimal);
  EXPECT_NEAR(-s.objective, 3.0, 1e-9);
  EXPECT_NEAR(s.values[a], 1.0, 1e-9);
  EXPECT_NEAR(s.values[b], 0.0, 1e-9);
}

TEST(Milp, InfeasibleAndBadBinary) {
  MilpModel m;
  const int a = m.add_binary("a", 1);
  m.add_row("r", RowSense::Ge, 2, {{a, 1.0}});
  EXPECT_EQ(solve_milp(m).status, MilpStatus::Infeasible);
  MilpModel bad;
  bad.add_var("b", 0, 2, 1, true);
  EXPECT_THROW(solve_milp(bad), ModelError);
}

TEST(Milp, LpDualsSatisfyOptimality) {
  MilpModel m;
  const int x = m.add_var("x", 0, kInf, 2), y = m.add_var("y", 0, kInf, 3);
  m.add_row("a", RowSense::Ge, 4, {{x, 1.0}, {y, 1.0}});
  m.add_row("b", RowSense::Le, 3, {{x, 1.0}});
  const LpSolution s = solve_lp(m);
  ASSERT_EQ(s.status, LpStatus::Optimal);
  EXPECT_NEAR(s.objective, 9.0, 1e-9);
  EXPECT_NEAR(s.dual_objective, 9.0, 1e-9);
  EXPECT_NEAR(s.row_duals[0], 3.0, 1e-9);
  EXPECT_NEAR(s.row_duals[1], -1.0, 1e-9);
}

TEST(Milp, RandomModelsMatchEnumeration) {
  std::mt19937_64 rng(314);
  for (int k = 0; k < 120; ++k) expect_matches_enumeration(random_binary_model(rng, k % 3 == 0), "model " + std::to_string(k));
}

TEST(Milp, MasterModelsMatchEnumeration) {
  int checked = 0;
  for (int seed = 1; seed <= 12; ++seed) {
    const CaseData c = tiny_case(seed);
    for (MasterVariant v : {MasterVariant::M, MasterVariant::MM}) {
      BendersOptions opt;
      opt.variant = v;
      opt.rrp = false;
      const UcResult r = solve_uc(c, opt);
      const LossEstimate losses = update_losses(std::nullopt, c);
      for (std::size_t k = 0; k <= r.cuts.size(); ++k) {
        const CutPool pool(r.cuts.begin(), r.cuts.begin() + static_cast<long>(k));
        const MasterModel mm = build_master(c, pool, losses, v);
        ASSERT_LE(mm.milp.n_binaries(), 20u);
        expect_matches_enumeration(mm.milp, "seed " + std::to_string(seed) + " cuts " + std::to_string(k));
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 40);
}

// M masters have a closed form once x is fixed, so no LP is involved in the reference.
TEST(Milp, MasterMClosedForm) {
  for (int seed = 1; seed <= 12; ++seed) {
    const CaseData c = tiny_case(seed);
    BendersOptions opt;
    opt.variant = MasterVariant::M;
    opt.rrp = false;
    const UcResult r = solve_uc(c, opt);
    const MasterModel mm = build_master(c, r.cuts, {}, MasterVariant::M);
    const int n = c.horizon * static_cast<int>(c.n_gens());
    double best = kInf;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
      std::vector<double> x(n);
      for (int k = 0; k < n; ++k) x[k] = static_cast<double>((mask >> k) & 1u);
      if (!logic_feasible(c, x)) continue;
      double w = 0;
      bool ok = true;
      for (const Cut& cut : r.cuts) {
        if (cut.kind == CutKind::Feasibility)
          ok = ok && cut.value(x) >= -1e-9;
        else
          w = std::max(w, cut.value(x));
      }
      if (!ok) continue;
      best = std::min(best, commitment_cost(c, derive_schedule(c, x)) + w);
    }
    const MilpSolution s = solve_milp(mm.milp);
    if (!std::isfinite(best)) {
      EXPECT_EQ(s.status, MilpStatus::Infeasible) << seed;
      continue;
    }
    ASSERT_EQ(s.status, MilpStatus::Optimal) << seed;
    EXPECT_NEAR(s.objective, best, 1e-7 * (1 + best)) << seed;
  }
}

TEST(Sdp, RegressionSet) {
  const auto set = regression_set();
  ASSERT_EQ(set.size(), 20u);
  for (const auto& sc : set) {
    const ConicSolution sol = solve_sdp(sc.prog);
    ASSERT_EQ(sol.status, SdpStatus::Optimal) << sc.name;
    EXPECT_LE(sol.primal_residual, 1e-7) << sc.name;
    EXPECT_LE(sol.dual_residual, 1e-7) << sc.name;
    EXPECT_LE(sol.gap, 1e-7) << sc.name;
    EXPECT_NEAR(sol.primal_objective, sc.optimum, 1e-6 * (1 + std::abs(sc.optimum))) << sc.name;
  }
}

TEST(Sdp, HandSolvedPrimalsAndDuals) {
  const auto set = regression_set();
  const ConicSolution one = solve_sdp(set[0].prog);
  EXPECT_NEAR(one.y[0], 1.0, 1e-6);

  const ConicSolution two = solve_sdp(set[1].prog);
  Matrix expect(2, 2);
  expect << 1, 1, 1, 1;
  EXPECT_LE((two.X[0] - expect).cwiseAbs().maxCoeff(), 1e-5);

  const ConicSolution lam = solve_sdp(set[2].prog);
  EXPECT_NEAR(lam.x[0], 3.0, 1e-6);
}

TEST(Sdp, DimensionChecks) {
  ConicProgram p;
  p.block_sizes = {2};
  p.init_objective();
  p.add_row({RowSense::Eq, 1.0, {{0, SparseSym::unit(3, 0, 2)}}, {}});
  EXPECT_THROW(solve_sdp(p), DimensionError);
}
