#include <gtest/gtest.h>

#include <random>

#include <json.hpp>

#include "ucsdp/case_model.hpp"
#include "ucsdp/fixtures.hpp"

using namespace ucsdp;

namespace {

bool mentions(const std::vector<Violation>& v, const std::string& needle) {
  for (const auto& x : v)
    if (x.str().find(needle) != std::string::npos) return true;
  return false;
}

CaseData four_bus() {
  CaseData c = single_generator_case();
  c.buses = detail::flat_buses(4);
  c.lines = {{1, 2, 0.01, 0.1, 100}, {3, 4, 0.01, 0.1, 100}};
  c.dp = {{50, 0, 0, 0}};
  c.dq = {{0, 0, 0, 0}};
  return c;
}

}  // namespace

TEST(CaseModel, MinimalDocumentParses) {
  const CaseData c = parse_case(serialize_case(single_generator_case()));
  EXPECT_EQ(c.n_buses(), 1u);
  EXPECT_EQ(c.n_gens(), 1u);
  EXPECT_EQ(c.n_lines(), 0u);
  EXPECT_TRUE(validate(c).empty());
}

TEST(CaseModel, RoundTripIsExact) {
  for (const CaseData& c : {six_bus_case(), tiny_case(3), tiny_case(8), ieee118_shaped_case()}) {
    const CaseData back = parse_case(serialize_case(c));
    EXPECT_EQ(back, c);
    EXPECT_EQ(serialize_case(back), serialize_case(c));
  }
}

TEST(CaseModel, ShippedFixturesMatchGenerators) {
  EXPECT_EQ(load_case(UCSDP_DATA_DIR "/six_bus.json"), six_bus_case());
  EXPECT_EQ(load_case(UCSDP_DATA_DIR "/single.json"), single_generator_case());
  for (int s = 1; s <= 12; ++s)
    EXPECT_EQ(load_case(UCSDP_DATA_DIR "/tiny_" + std::to_string(s) + ".json"), tiny_case(s)) << s;
}

TEST(CaseModel, VoltageBoundsInvertedNamesBus) {
  CaseData c = six_bus_case();
  c.buses[1].v_min = 1.1;
  c.buses[1].v_max = 1.0;
  try {
    parse_case(serialize_case(c));
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("bus 2"), std::string::npos) << e.what();
  }
}

TEST(CaseModel, SchemaErrors) {
  EXPECT_THROW(parse_case("{"), SchemaError);
  EXPECT_THROW(parse_case("[]"), SchemaError);
  auto j = nlohmann::json::parse(serialize_case(single_generator_case()));
  j["unexpected"] = 1;
  EXPECT_THROW(parse_case(j.dump()), SchemaError);
  j.erase("unexpected");
  j["generators"][0].erase("alpha");
  EXPECT_THROW(parse_case(j.dump()), SchemaError);
  j = nlohmann::json::parse(serialize_case(single_generator_case()));
  j["horizon"] = "one";
  EXPECT_THROW(parse_case(j.dump()), SchemaError);
  EXPECT_THROW(load_case("/nonexistent/case.json"), Error);
}

TEST(CaseModel, ValidateMutations) {
  EXPECT_TRUE(validate(six_bus_case()).empty());

  CaseData c = six_bus_case();
  c.lines.push_back({2, 1, 0.01, 0.1, 100});
  auto v = validate(c);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_TRUE(mentions(v, "(1,2)"));

  v = validate(four_bus());
  ASSERT_EQ(v.size(), 1u);
  EXPECT_TRUE(mentions(v, "disconnected"));

  struct Mutation {
    const char* expect;
    void (*apply)(CaseData&);
  };
  const Mutation muts[] = {
      {"slack", [](CaseData& c) { c.buses[0].slack = false; }},
      {"slack", [](CaseData& c) { c.buses[3].slack = true; }},
      {"missing bus", [](CaseData& c) { c.lines[0].to = 9; }},
      {"self loop", [](CaseData& c) { c.lines[0].to = c.lines[0].from; }},
      {"x must be nonzero", [](CaseData& c) { c.lines[2].x = 0; }},
      {"r must be", [](CaseData& c) { c.lines[2].r = -0.1; }},
      {"f_max", [](CaseData& c) { c.lines[2].f_max = 0; }},
      {"p_min > p_max", [](CaseData& c) { c.generators[1].p_min = 500; }},
      {"q_min > q_max", [](CaseData& c) { c.generators[1].q_min = 500; }},
      {"alpha", [](CaseData& c) { c.generators[0].alpha = -1; }},
      {"duplicate generator id", [](CaseData& c) { c.generators[2].id = "G1"; }},
      {"bus_id", [](CaseData& c) { c.generators[2].bus_id = 0; }},
      {"t0 must be nonzero", [](CaseData& c) { c.generators[0].t0 = 0; }},
      {"x0 inconsistent", [](CaseData& c) { c.generators[0].x0 = 0; }},
      {"p0 outside", [](CaseData& c) { c.generators[0].p0 = 500; }},
      {"loads.dp", [](CaseData& c) { c.dp.pop_back(); }},
      {"loads.dq[3]", [](CaseData& c) { c.dq[3].push_back(1); }},
      {"reserve", [](CaseData& c) { c.sr[4] = -1; }},
      {"horizon", [](CaseData& c) { c.horizon = 0; }},
      {"s_base", [](CaseData& c) { c.s_base = 0; }},
  };
  for (const auto& m : muts) {
    CaseData bad = six_bus_case();
    m.apply(bad);
    const auto vv = validate(bad);
    EXPECT_FALSE(vv.empty()) << m.expect;
    EXPECT_TRUE(mentions(vv, m.expect)) << m.expect << ": " << (vv.empty() ? "" : vv.front().str());
  }
}

TEST(CaseModel, PerUnitScaling) {
  CaseData c = six_bus_case();
  c.generators[2].p_max = 70;
  const CaseData pu = to_per_unit(c);
  EXPECT_DOUBLE_EQ(pu.generators[2].p_max, 0.7);
  EXPECT_DOUBLE_EQ(pu.lines[0].f_max, 2.0);

  c.s_base = 1;
  EXPECT_EQ(to_per_unit(c), c);
}

TEST(CaseModel, PerUnitPreservesCost) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 100; ++k) {
    CaseData c = single_generator_case();
    c.s_base = 10 + 290 * u(rng);
    Generator& g = c.generators[0];
    g.alpha = 0.1 * u(rng);
    g.beta = 50 * u(rng);
    g.gamma = 500 * u(rng);
    const double p = 300 * u(rng);
    const Generator& h = to_per_unit(c).generators[0];
    const double mw = g.alpha * p * p + g.beta * p + g.gamma;
    const double q = p / c.s_base;
    const double pu = h.alpha * q * q + h.beta * q + h.gamma;
    EXPECT_NEAR(pu, mw, 1e-12 * std::abs(mw));
  }
}
