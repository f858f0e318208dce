#include <gtest/gtest.h>

#include <sstream>

#include "ucsdp/fixtures.hpp"
#include "ucsdp/report.hpp"

using namespace ucsdp;

namespace {

const UcResult& solved() {
  static const UcResult r = [] {
    BendersOptions o;
    return solve_uc(tiny_case(7), o);
  }();
  return r;
}

}  // namespace

TEST(Report, NumbersRoundTrip) {
  for (double v : {0.0, -0.0, 1.0, 0.1, 1.0 / 3.0, 6276.0, -1463.0, 1e-300, 97.7, kInf, -kInf}) {
    const std::string s = fmt_num(v);
    EXPECT_EQ(parse_num(s), v) << s;
  }
  EXPECT_EQ(fmt_num(0.1), "0.1");
  EXPECT_THROW(parse_num("1.5x"), SchemaError);
  EXPECT_THROW(parse_num(""), SchemaError);
}

TEST(Report, CsvQuoting) {
  std::ostringstream os;
  CsvWriter w(os);
  w.row({"plain", "with,comma", "with \"quote\"", "line\nbreak", ""});
  EXPECT_EQ(os.str(), "plain,\"with,comma\",\"with \"\"quote\"\"\",\"line\nbreak\",\r\n");
  std::istringstream is(os.str());
  const auto rows = read_csv(is);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"plain", "with,comma", "with \"quote\"", "line\nbreak", ""}));
  std::istringstream bad("\"open");
  EXPECT_THROW(read_csv(bad), SchemaError);
}

TEST(Report, IterationsRoundTrip) {
  const UcResult& r = solved();
  ASSERT_FALSE(r.iterations.empty());
  std::ostringstream os;
  write_iterations_csv(os, r.iterations);
  EXPECT_EQ(os.str().substr(0, os.str().find("\r\n")),
            "k,LB,UB,cut_kind,s,master_ms,sdp_ms,master_objective,ub_candidate,cuts_added,schedule");
  std::istringstream is(os.str());
  const auto back = read_iterations_csv(is);
  ASSERT_EQ(back.size(), r.iterations.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    const auto &a = back[k], &b = r.iterations[k];
    EXPECT_EQ(a.k, b.k);
    EXPECT_EQ(a.lb, b.lb);
    EXPECT_EQ(a.ub, b.ub);
    EXPECT_EQ(a.s, b.s);
    EXPECT_EQ(a.has_cut, b.has_cut);
    if (b.has_cut) {
      EXPECT_EQ(a.cut_kind, b.cut_kind);
    }
    EXPECT_EQ(a.master_ms, b.master_ms);
    EXPECT_EQ(a.master_objective, b.master_objective);
    EXPECT_EQ(a.ub_candidate, b.ub_candidate);
    EXPECT_EQ(a.cuts_added, b.cuts_added);
    EXPECT_EQ(a.schedule.x, b.schedule.x);
  }
}

TEST(Report, ScheduleAndDispatchRoundTrip) {
  const CaseData c = tiny_case(7);
  const UcResult& r = solved();
  std::ostringstream s1;
  write_schedule_csv(s1, c, r.schedule);
  std::istringstream i1(s1.str());
  const Schedule back = read_schedule_csv(i1, c);
  EXPECT_EQ(back.x, r.schedule.x);
  EXPECT_EQ(back.y, r.schedule.y);
  EXPECT_EQ(back.z, r.schedule.z);

  const auto rows = dispatch_rows(c, r);
  std::ostringstream s2;
  write_dispatch_csv(s2, rows);
  std::istringstream i2(s2.str());
  EXPECT_EQ(read_dispatch_csv(i2), rows);

  std::istringstream wrong("t,generator\r\n1,G1\r\n");
  EXPECT_THROW(read_dispatch_csv(wrong), SchemaError);
}

TEST(Report, ReproducibleWithoutTimings) {
  const CaseData c = tiny_case(7);
  auto render = [&] {
    const UcResult r = solve_uc(c);
    std::ostringstream os;
    write_iterations_csv(os, r.iterations, false);
    write_dispatch_csv(os, dispatch_rows(c, r));
    os << voltages_json(c, r).dump() << summary_json(r, MasterVariant::MM, false).dump();
    return os.str();
  };
  EXPECT_EQ(render(), render());
}

TEST(Report, JsonShapes) {
  const CaseData c = tiny_case(7);
  const UcResult& r = solved();
  const auto v = voltages_json(c, r);
  EXPECT_EQ(v["steps"].size(), c.n_steps());
  EXPECT_EQ(v["steps"][0]["e"].size(), c.n_buses());
  EXPECT_TRUE(v["rrp_applied"].get<bool>());
  const auto s = summary_json(r, MasterVariant::MM, true);
  EXPECT_EQ(s["status"], "Converged");
  EXPECT_TRUE(s.contains("timings_ms"));
  EXPECT_FALSE(summary_json(r, MasterVariant::MM, false).contains("timings_ms"));
}
