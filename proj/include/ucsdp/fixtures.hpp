#pragma once

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ucsdp/case_model.hpp"

namespace ucsdp {

namespace detail {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  // Built from raw bits so the stream is identical across standard libraries.
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline std::vector<Bus> flat_buses(int n) {
  std::vector<Bus> out;
  for (int i = 1; i <= n; ++i) out.push_back({i, 0.95, 1.05, i == 1});
  return out;
}

}  // namespace detail

// 1 bus, 1 generator, one step; demand inside the generator limits.
inline CaseData single_generator_case(double demand = 50) {
  CaseData c;
  c.horizon = 1;
  c.buses = detail::flat_buses(1);
  Generator g;
  g.id = "G1";
  g.p_min = 10;
  g.p_max = 100;
  g.q_min = -50;
  g.q_max = 50;
  g.alpha = 0.01;
  g.beta = 20;
  g.gamma = 100;
  g.ramp_up = g.ramp_down = 100;
  g.t_on = g.t_off = 1;
  g.t0 = -1;
  g.x0 = 0;
  c.generators = {g};
  c.dp = {{demand}};
  c.dq = {{0}};
  c.sr = {0};
  return c;
}

// Seeded tiny case: 2–3 buses, 1–2 generators, T in {1,2,3}; odd seeds get lossy lines.
inline CaseData tiny_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + 17);
  using detail::uniform;
  using detail::uniform_int;
  CaseData c;
  const int nb = uniform_int(rng, 2, 3);
  const int ng = uniform_int(rng, 1, 2);
  c.horizon = uniform_int(rng, 1, 3);
  const bool lossy = seed % 2 == 1;
  c.buses = detail::flat_buses(nb);
  for (int i = 2; i <= nb; ++i) {
    Line l;
    l.from = uniform_int(rng, 1, i - 1);
    l.to = i;
    l.x = uniform(rng, 0.05, 0.2);
    l.r = lossy ? l.x * uniform(rng, 0.1, 0.3) : 0.0;
    l.f_max = 250;
    c.lines.push_back(l);
  }
  if (nb == 3 && uniform(rng, 0, 1) < 0.5 && c.lines[1].from != 2) {
    Line l{2, 3, lossy ? 0.02 : 0.0, uniform(rng, 0.05, 0.2), 250};
    c.lines.push_back(l);
  }
  double cap = 0;
  for (int g = 0; g < ng; ++g) {
    Generator gen;
    gen.id = "G" + std::to_string(g + 1);
    gen.bus_id = g == 0 ? 1 : uniform_int(rng, 1, nb);
    gen.p_min = uniform(rng, 5, 20);
    gen.p_max = uniform(rng, 60, 120);
    gen.q_min = -uniform(rng, 30, 60);
    gen.q_max = uniform(rng, 40, 80);
    gen.alpha = uniform(rng, 0.002, 0.02);
    gen.beta = uniform(rng, 10, 40);
    gen.gamma = uniform(rng, 50, 200);
    gen.startup_cost = uniform(rng, 0, 200);
    gen.shutdown_cost = uniform(rng, 0, 50);
    gen.ramp_up = uniform(rng, 40, 100);
    gen.ramp_down = uniform(rng, 40, 100);
    gen.t_on = uniform_int(rng, 1, 3);
    gen.t_off = uniform_int(rng, 1, 3);
    const int mag = uniform_int(rng, 1, 3);
    gen.x0 = uniform(rng, 0, 1) < 0.5 ? 1 : 0;
    gen.t0 = gen.x0 ? mag : -mag;
    gen.p0 = gen.x0 ? std::min(gen.p_max, gen.p_min + uniform(rng, 0, 0.5) * gen.ramp_down) : 0.0;
    cap += gen.p_max;
    c.generators.push_back(gen);
  }
  const double largest = std::max_element(c.generators.begin(), c.generators.end(),
                                          [](const Generator& a, const Generator& b) {
                                            return a.p_max < b.p_max;
                                          })->p_max;
  for (int t = 0; t < c.horizon; ++t) {
    const double total = uniform(rng, 0.25, 0.55) * std::min(cap, 1.3 * largest);
    std::vector<double> w(nb, 0.0);
    double ws = 0;
    for (int i = 0; i < nb; ++i) {
      w[i] = i == 0 ? 0.2 : uniform(rng, 0.5, 1.5);
      ws += w[i];
    }
    std::vector<double> dp(nb), dq(nb);
    for (int i = 0; i < nb; ++i) {
      dp[i] = total * w[i] / ws;
      dq[i] = 0.2 * dp[i];
    }
    c.dp.push_back(dp);
    c.dq.push_back(dq);
    c.sr.push_back(0.05 * total);
  }
  return c;
}

// Six-bus, three-generator, 24-step system with the usual textbook topology.
inline CaseData six_bus_case() {
  CaseData c;
  c.horizon = 24;
  c.buses = detail::flat_buses(6);
  const double r = 0.005;
  c.lines = {{1, 2, r, 0.170, 200}, {1, 4, r, 0.258, 100}, {2, 4, r, 0.197, 100},
             {5, 6, r, 0.140, 100}, {3, 6, r, 0.018, 100}, {2, 3, r, 0.037, 100},
             {4, 5, r, 0.037, 100}};
  Generator g1;
  g1.id = "G1";
  g1.bus_id = 1;
  g1.p_min = 100;
  g1.p_max = 220;
  g1.q_min = -80;
  g1.q_max = 200;
  g1.alpha = 0.00045;
  g1.beta = 13.51;
  g1.gamma = 177;
  g1.startup_cost = 100;
  g1.ramp_up = g1.ramp_down = 55;
  g1.t_on = g1.t_off = 4;
  g1.t0 = 4;
  g1.x0 = 1;
  g1.p0 = 150;
  Generator g2;
  g2.id = "G2";
  g2.bus_id = 2;
  g2.p_min = 10;
  g2.p_max = 100;
  g2.q_min = -40;
  g2.q_max = 70;
  g2.alpha = 0.001;
  g2.beta = 32.63;
  g2.gamma = 130;
  g2.startup_cost = 200;
  g2.ramp_up = g2.ramp_down = 50;
  g2.t_on = 3;
  g2.t_off = 2;
  g2.t0 = -3;
  g2.x0 = 0;
  Generator g3;
  g3.id = "G3";
  g3.bus_id = 6;
  g3.p_min = 10;
  g3.p_max = 20;
  g3.q_min = -40;
  g3.q_max = 50;
  g3.alpha = 0.005;
  g3.beta = 17.7;
  g3.gamma = 137;
  g3.ramp_up = g3.ramp_down = 20;
  g3.t_on = g3.t_off = 1;
  g3.t0 = -1;
  g3.x0 = 0;
  c.generators = {g1, g2, g3};
  const double load[24] = {175.19, 165.15, 158.67, 154.73, 155.06, 160.48, 173.39, 177.60,
                           186.81, 206.96, 228.61, 236.10, 242.18, 243.60, 248.86, 255.79,
                           256.00, 246.74, 245.97, 237.35, 237.31, 232.67, 195.93, 195.60};
  for (int t = 0; t < 24; ++t) {
    std::vector<double> dp(6, 0.0), dq(6, 0.0);
    dp[2] = 0.2 * load[t];
    dp[3] = 0.4 * load[t];
    dp[4] = 0.4 * load[t];
    for (int i = 0; i < 6; ++i) dq[i] = 0.2 * dp[i];
    c.dp.push_back(dp);
    c.dq.push_back(dq);
    c.sr.push_back(0.1 * load[t]);
  }
  return c;
}

// Synthetic network with the dimensions of the IEEE 118-bus system.
inline CaseData ieee118_shaped_case(std::uint64_t seed = 118) {
  std::mt19937_64 rng(seed);
  using detail::uniform;
  using detail::uniform_int;
  constexpr int nb = 118, nl = 186, ng = 54;
  CaseData c;
  c.horizon = 24;
  c.buses = detail::flat_buses(nb);
  std::set<std::pair<int, int>> used;
  for (int i = 2; i <= nb; ++i) {
    const int j = uniform_int(rng, std::max(1, i - 6), i - 1);
    c.lines.push_back({j, i, uniform(rng, 0.002, 0.02), uniform(rng, 0.02, 0.2), 300});
    used.insert({j, i});
  }
  while (static_cast<int>(c.lines.size()) < nl) {
    int a = uniform_int(rng, 1, nb), b = uniform_int(rng, 1, nb);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (!used.insert({a, b}).second) continue;
    c.lines.push_back({a, b, uniform(rng, 0.002, 0.02), uniform(rng, 0.02, 0.2), 300});
  }
  double cap = 0;
  for (int g = 0; g < ng; ++g) {
    Generator gen;
    gen.id = "G" + std::to_string(g + 1);
    gen.bus_id = 1 + (g * 37) % nb;
    gen.p_min = uniform(rng, 5, 50);
    gen.p_max = gen.p_min + uniform(rng, 50, 300);
    gen.q_min = -uniform(rng, 50, 150);
    gen.q_max = uniform(rng, 50, 200);
    gen.alpha = uniform(rng, 0.001, 0.02);
    gen.beta = uniform(rng, 10, 40);
    gen.gamma = uniform(rng, 50, 300);
    gen.startup_cost = uniform(rng, 50, 500);
    gen.ramp_up = gen.ramp_down = uniform(rng, 50, 200);
    gen.t_on = uniform_int(rng, 1, 5);
    gen.t_off = uniform_int(rng, 1, 5);
    gen.x0 = 1;
    gen.t0 = 5;
    gen.p0 = gen.p_min;
    cap += gen.p_max;
    c.generators.push_back(gen);
  }
  for (int t = 0; t < 24; ++t) {
    const double total = 0.5 * cap * (0.8 + 0.2 * std::sin(3.14159265358979 * t / 12.0));
    std::vector<double> dp(nb), dq(nb);
    for (int i = 0; i < nb; ++i) {
      dp[i] = total / nb;
      dq[i] = 0.2 * dp[i];
    }
    c.dp.push_back(dp);
    c.dq.push_back(dq);
    c.sr.push_back(0.05 * total);
  }
  return c;
}

}  // namespace ucsdp
