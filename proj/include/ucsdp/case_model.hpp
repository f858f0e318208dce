#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ucsdp/errors.hpp"

namespace ucsdp {

struct Generator {
  std::string id;
  int bus_id = 1;
  double p_min = 0, p_max = 0;  // MW
  double q_min = 0, q_max = 0;  // MVAr
  double alpha = 0, beta = 0, gamma = 0;
  double startup_cost = 0, shutdown_cost = 0;
  double ramp_up = 0, ramp_down = 0;  // MW per step
  int t_on = 0, t_off = 0;
  int t0 = 1;  // signed: > 0 means up for t0 steps before the horizon
  int x0 = 1;
  double p0 = 0;

  bool operator==(const Generator&) const = default;
};

struct Line {
  int from = 1, to = 2;
  double r = 0, x = 0;  // p.u.
  double f_max = 0;     // MW

  bool operator==(const Line&) const = default;
};

struct Bus {
  int id = 1;
  double v_min = 0.95, v_max = 1.05;
  bool slack = false;

  bool operator==(const Bus&) const = default;
};

struct CaseData {
  int horizon = 1;
  double s_base = 100.0;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Generator> generators;
  std::vector<std::vector<double>> dp;  // [t][bus]
  std::vector<std::vector<double>> dq;
  std::vector<double> sr;  // [t]

  std::size_t n_buses() const { return buses.size(); }
  std::size_t n_lines() const { return lines.size(); }
  std::size_t n_gens() const { return generators.size(); }
  std::size_t n_steps() const { return static_cast<std::size_t>(horizon); }

  bool operator==(const CaseData&) const = default;
};

struct Violation {
  std::string where;  // e.g. "buses[1]"
  std::string message;

  std::string str() const { return where + ": " + message; }
};

namespace detail {

inline int find_root(std::vector<int>& parent, int a) {
  while (parent[a] != a) {
    parent[a] = parent[parent[a]];
    a = parent[a];
  }
  return a;
}

}  // namespace detail

inline std::vector<Violation> validate(const CaseData& c) {
  std::vector<Violation> out;
  auto bad = [&](std::string where, std::string msg) {
    out.push_back({std::move(where), std::move(msg)});
  };
  auto finite = [](double v) { return std::isfinite(v); };

  if (c.horizon < 1) bad("horizon", "must be >= 1");
  if (!(c.s_base > 0) || !finite(c.s_base)) bad("s_base", "must be positive");
  if (c.buses.empty()) bad("buses", "at least one bus required");

  const int nb = static_cast<int>(c.buses.size());
  int n_slack = 0;
  for (int i = 0; i < nb; ++i) {
    const Bus& b = c.buses[i];
    const std::string w = "buses[" + std::to_string(i) + "] (bus " + std::to_string(b.id) + ")";
    if (b.id != i + 1) bad(w, "bus ids must be 1..N_B in order");
    if (!finite(b.v_min) || !finite(b.v_max)) bad(w, "non-finite voltage bound");
    if (!(b.v_min > 0)) bad(w, "v_min must be positive");
    if (b.v_min > b.v_max) bad(w, "v_min > v_max");
    n_slack += b.slack ? 1 : 0;
  }
  if (nb > 0 && n_slack != 1)
    bad("buses", "exactly one slack bus required, found " + std::to_string(n_slack));

  std::set<std::pair<int, int>> pairs;
  for (std::size_t l = 0; l < c.lines.size(); ++l) {
    const Line& ln = c.lines[l];
    const std::string w = "lines[" + std::to_string(l) + "] (" + std::to_string(ln.from) + "," +
                          std::to_string(ln.to) + ")";
    bool ends_ok = true;
    if (ln.from < 1 || ln.from > nb || ln.to < 1 || ln.to > nb) {
      bad(w, "endpoint references a missing bus");
      ends_ok = false;
    }
    if (ln.from == ln.to) {
      bad(w, "self loop");
      ends_ok = false;
    }
    if (!finite(ln.r) || !finite(ln.x) || !finite(ln.f_max)) bad(w, "non-finite parameter");
    if (ln.r < 0) bad(w, "r must be >= 0");
    if (ln.x == 0) bad(w, "x must be nonzero");
    if (!(ln.f_max > 0)) bad(w, "f_max must be positive");
    if (ends_ok) {
      auto key = std::minmax(ln.from, ln.to);
      if (!pairs.insert({key.first, key.second}).second)
        bad(w, "duplicate line for bus pair (" + std::to_string(key.first) + "," +
                   std::to_string(key.second) + ")");
    }
  }

  std::set<std::string> gen_ids;
  for (std::size_t g = 0; g < c.generators.size(); ++g) {
    const Generator& gen = c.generators[g];
    const std::string w = "generators[" + std::to_string(g) + "] (" + gen.id + ")";
    if (!gen_ids.insert(gen.id).second) bad(w, "duplicate generator id");
    if (gen.bus_id < 1 || gen.bus_id > nb) bad(w, "bus_id references a missing bus");
    for (double v : {gen.p_min, gen.p_max, gen.q_min, gen.q_max, gen.alpha, gen.beta, gen.gamma,
                     gen.startup_cost, gen.shutdown_cost, gen.ramp_up, gen.ramp_down, gen.p0})
      if (!finite(v)) {
        bad(w, "non-finite parameter");
        break;
      }
    if (gen.p_min < 0) bad(w, "p_min must be >= 0");
    if (gen.p_min > gen.p_max) bad(w, "p_min > p_max");
    if (gen.q_min > gen.q_max) bad(w, "q_min > q_max");
    if (gen.alpha < 0) bad(w, "alpha must be >= 0");
    if (gen.startup_cost < 0) bad(w, "startup_cost must be >= 0");
    if (gen.shutdown_cost < 0) bad(w, "shutdown_cost must be >= 0");
    if (gen.ramp_up < 0) bad(w, "ramp_up must be >= 0");
    if (gen.ramp_down < 0) bad(w, "ramp_down must be >= 0");
    if (gen.t_on < 0) bad(w, "t_on must be >= 0");
    if (gen.t_off < 0) bad(w, "t_off must be >= 0");
    if (gen.x0 != 0 && gen.x0 != 1) bad(w, "x0 must be 0 or 1");
    if (gen.t0 == 0) bad(w, "t0 must be nonzero");
    if ((gen.t0 > 0 && gen.x0 != 1) || (gen.t0 < 0 && gen.x0 != 0))
      bad(w, "x0 inconsistent with sign of t0");
    if (gen.p0 < 0) bad(w, "p0 must be >= 0");
    if (gen.x0 == 1 && (gen.p0 < gen.p_min || gen.p0 > gen.p_max))
      bad(w, "p0 outside [p_min, p_max] for a unit that is on");
  }

  const std::size_t T = c.horizon > 0 ? static_cast<std::size_t>(c.horizon) : 0;
  auto check_series = [&](const std::vector<std::vector<double>>& s, const char* name) {
    if (s.size() != T) {
      bad(name, "expected " + std::to_string(T) + " rows, found " + std::to_string(s.size()));
      return;
    }
    for (std::size_t t = 0; t < s.size(); ++t) {
      if (s[t].size() != static_cast<std::size_t>(nb))
        bad(std::string(name) + "[" + std::to_string(t) + "]",
            "expected " + std::to_string(nb) + " entries");
      for (double v : s[t])
        if (!finite(v)) {
          bad(std::string(name) + "[" + std::to_string(t) + "]", "non-finite value");
          break;
        }
    }
  };
  check_series(c.dp, "loads.dp");
  check_series(c.dq, "loads.dq");
  if (c.sr.size() != T) bad("reserve", "expected " + std::to_string(T) + " entries");
  for (std::size_t t = 0; t < c.sr.size(); ++t)
    if (!finite(c.sr[t]) || c.sr[t] < 0)
      bad("reserve[" + std::to_string(t) + "]", "must be finite and >= 0");

  if (nb > 1) {
    std::vector<int> parent(nb);
    std::iota(parent.begin(), parent.end(), 0);
    for (const Line& ln : c.lines) {
      if (ln.from < 1 || ln.from > nb || ln.to < 1 || ln.to > nb) continue;
      parent[detail::find_root(parent, ln.from - 1)] = detail::find_root(parent, ln.to - 1);
    }
    int components = 0;
    for (int i = 0; i < nb; ++i) components += detail::find_root(parent, i) == i ? 1 : 0;
    if (components > 1)
      bad("lines", "network is disconnected (" + std::to_string(components) + " components)");
  }
  return out;
}

namespace detail {

using json = nlohmann::ordered_json;

inline void expect_keys(const json& j, const std::string& where,
                        std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
  std::set<std::string> allowed;
  for (const char* k : keys) {
    allowed.insert(k);
    if (!j.contains(k)) throw SchemaError(where + ": missing field '" + k + "'");
  }
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw SchemaError(where + ": unknown field '" + it.key() + "'");
}

inline double get_number(const json& j, const char* key, const std::string& where) {
  const json& v = j.at(key);
  if (!v.is_number()) throw SchemaError(where + "." + key + ": expected a number");
  return v.get<double>();
}

inline int get_int(const json& j, const char* key, const std::string& where) {
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw SchemaError(where + "." + key + ": expected an integer");
  return v.get<int>();
}

inline std::vector<double> get_vector(const json& v, const std::string& where) {
  if (!v.is_array()) throw SchemaError(where + ": expected an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number()) throw SchemaError(where + ": expected numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

inline std::vector<std::vector<double>> get_matrix(const json& v, const std::string& where) {
  if (!v.is_array()) throw SchemaError(where + ": expected an array of arrays");
  std::vector<std::vector<double>> out;
  for (std::size_t t = 0; t < v.size(); ++t)
    out.push_back(get_vector(v[t], where + "[" + std::to_string(t) + "]"));
  return out;
}

}  // namespace detail

// Parses and validates a case document. Throws SchemaError or ValidationError.
inline CaseData parse_case(std::string_view text) {
  using detail::json;
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("malformed JSON: ") + e.what());
  }
  detail::expect_keys(j, "case",
                      {"horizon", "s_base", "buses", "lines", "generators", "loads", "reserve"});
  CaseData c;
  c.horizon = detail::get_int(j, "horizon", "case");
  c.s_base = detail::get_number(j, "s_base", "case");

  for (const char* arr : {"buses", "lines", "generators"})
    if (!j.at(arr).is_array()) throw SchemaError(std::string("case.") + arr + ": expected an array");

  for (std::size_t i = 0; i < j["buses"].size(); ++i) {
    const json& b = j["buses"][i];
    const std::string w = "buses[" + std::to_string(i) + "]";
    detail::expect_keys(b, w, {"id", "v_min", "v_max", "slack"});
    Bus bus;
    bus.id = detail::get_int(b, "id", w);
    bus.v_min = detail::get_number(b, "v_min", w);
    bus.v_max = detail::get_number(b, "v_max", w);
    if (!b["slack"].is_boolean()) throw SchemaError(w + ".slack: expected a boolean");
    bus.slack = b["slack"].get<bool>();
    c.buses.push_back(bus);
  }
  for (std::size_t l = 0; l < j["lines"].size(); ++l) {
    const json& e = j["lines"][l];
    const std::string w = "lines[" + std::to_string(l) + "]";
    detail::expect_keys(e, w, {"from", "to", "r", "x", "f_max"});
    Line ln;
    ln.from = detail::get_int(e, "from", w);
    ln.to = detail::get_int(e, "to", w);
    ln.r = detail::get_number(e, "r", w);
    ln.x = detail::get_number(e, "x", w);
    ln.f_max = detail::get_number(e, "f_max", w);
    c.lines.push_back(ln);
  }
  for (std::size_t g = 0; g < j["generators"].size(); ++g) {
    const json& e = j["generators"][g];
    const std::string w = "generators[" + std::to_string(g) + "]";
    detail::expect_keys(e, w,
                        {"id", "bus_id", "p_min", "p_max", "q_min", "q_max", "alpha", "beta",
                         "gamma", "startup_cost", "shutdown_cost", "ramp_up", "ramp_down", "t_on",
                         "t_off", "t0", "x0", "p0"});
    Generator gen;
    if (!e["id"].is_string()) throw SchemaError(w + ".id: expected a string");
    gen.id = e["id"].get<std::string>();
    gen.bus_id = detail::get_int(e, "bus_id", w);
    gen.p_min = detail::get_number(e, "p_min", w);
    gen.p_max = detail::get_number(e, "p_max", w);
    gen.q_min = detail::get_number(e, "q_min", w);
    gen.q_max = detail::get_number(e, "q_max", w);
    gen.alpha = detail::get_number(e, "alpha", w);
    gen.beta = detail::get_number(e, "beta", w);
    gen.gamma = detail::get_number(e, "gamma", w);
    gen.startup_cost = detail::get_number(e, "startup_cost", w);
    gen.shutdown_cost = detail::get_number(e, "shutdown_cost", w);
    gen.ramp_up = detail::get_number(e, "ramp_up", w);
    gen.ramp_down = detail::get_number(e, "ramp_down", w);
    gen.t_on = detail::get_int(e, "t_on", w);
    gen.t_off = detail::get_int(e, "t_off", w);
    gen.t0 = detail::get_int(e, "t0", w);
    gen.x0 = detail::get_int(e, "x0", w);
    gen.p0 = detail::get_number(e, "p0", w);
    c.generators.push_back(gen);
  }
  detail::expect_keys(j["loads"], "loads", {"dp", "dq"});
  c.dp = detail::get_matrix(j["loads"]["dp"], "loads.dp");
  c.dq = detail::get_matrix(j["loads"]["dq"], "loads.dq");
  c.sr = detail::get_vector(j["reserve"], "reserve");

  const auto violations = validate(c);
  if (!violations.empty()) {
    std::string msg = violations.front().str();
    if (violations.size() > 1)
      msg += " (and " + std::to_string(violations.size() - 1) + " more)";
    throw ValidationError(msg);
  }
  return c;
}

inline std::string serialize_case(const CaseData& c) {
  using detail::json;
  json j;
  j["horizon"] = c.horizon;
  j["s_base"] = c.s_base;
  j["buses"] = json::array();
  for (const Bus& b : c.buses)
    j["buses"].push_back({{"id", b.id}, {"v_min", b.v_min}, {"v_max", b.v_max}, {"slack", b.slack}});
  j["lines"] = json::array();
  for (const Line& l : c.lines)
    j["lines"].push_back({{"from", l.from}, {"to", l.to}, {"r", l.r}, {"x", l.x}, {"f_max", l.f_max}});
  j["generators"] = json::array();
  for (const Generator& g : c.generators)
    j["generators"].push_back({{"id", g.id},
                               {"bus_id", g.bus_id},
                               {"p_min", g.p_min},
                               {"p_max", g.p_max},
                               {"q_min", g.q_min},
                               {"q_max", g.q_max},
                               {"alpha", g.alpha},
                               {"beta", g.beta},
                               {"gamma", g.gamma},
                               {"startup_cost", g.startup_cost},
                               {"shutdown_cost", g.shutdown_cost},
                               {"ramp_up", g.ramp_up},
                               {"ramp_down", g.ramp_down},
                               {"t_on", g.t_on},
                               {"t_off", g.t_off},
                               {"t0", g.t0},
                               {"x0", g.x0},
                               {"p0", g.p0}});
  j["loads"] = {{"dp", c.dp}, {"dq", c.dq}};
  j["reserve"] = c.sr;
  return j.dump(2) + "\n";
}

inline CaseData load_case(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open case file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_case(ss.str());
}

// Divides every MW/MVAr quantity by s_base and rescales cost coefficients so
// that cost in $ is unchanged. s_base itself is kept so results can be mapped back.
inline CaseData to_per_unit(const CaseData& c) {
  const double s = c.s_base;
  CaseData out = c;
  for (Line& l : out.lines) l.f_max /= s;
  for (Generator& g : out.generators) {
    g.p_min /= s;
    g.p_max /= s;
    g.q_min /= s;
    g.q_max /= s;
    g.ramp_up /= s;
    g.ramp_down /= s;
    g.p0 /= s;
    g.alpha *= s * s;
    g.beta *= s;
  }
  for (auto& row : out.dp)
    for (double& v : row) v /= s;
  for (auto& row : out.dq)
    for (double& v : row) v /= s;
  for (double& v : out.sr) v /= s;
  return out;
}

// Generators attached to each bus (0-based bus and generator indices).
inline std::vector<std::vector<int>> generators_by_bus(const CaseData& c) {
  std::vector<std::vector<int>> out(c.n_buses());
  for (std::size_t g = 0; g < c.n_gens(); ++g)
    out[c.generators[g].bus_id - 1].push_back(static_cast<int>(g));
  return out;
}

inline int slack_index(const CaseData& c) {
  for (std::size_t i = 0; i < c.n_buses(); ++i)
    if (c.buses[i].slack) return static_cast<int>(i);
  throw ValidationError("case has no slack bus");
}

inline double total_demand(const CaseData& c, std::size_t t) {
  double s = 0;
  for (double v : c.dp[t]) s += v;
  return s;
}

}  // namespace ucsdp
