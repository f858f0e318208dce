#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ucsdp/ucsdp.hpp"

namespace fs = std::filesystem;
using namespace ucsdp;

namespace {

struct RunConfig {
  std::string case_path;
  std::string variant = "MM";
  double tol = 1e-6;
  int max_iters = 50;
  bool rrp = true;
  int sigma_extra = 5;
  double loss_init = 0.05;
  std::string out = "out";
  bool verify = false;
  bool timings = true;
  bool inject_bad_cut = false;
  int max_bits = 20;
};

constexpr int kExitMismatch = 1;
constexpr int kExitTooLarge = 4;
constexpr int kExitError = 5;

BendersOptions benders_options(const RunConfig& cfg) {
  BendersOptions o;
  o.variant = cfg.variant == "M" ? MasterVariant::M : MasterVariant::MM;
  o.tol = cfg.tol;
  o.max_iters = cfg.max_iters;
  o.rrp = cfg.rrp;
  o.rrp_options.extra_passes = cfg.sigma_extra;
  o.loss_init = cfg.loss_init;
  return o;
}

CaseData load_checked(const std::string& path) {
  CaseData c = load_case(path);
  const auto v = validate(c);
  if (!v.empty()) throw ValidationError(v.front().str());
  return c;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error("cannot write '" + p.string() + "'");
  os << text;
}

template <class F>
std::string to_text(F&& f) {
  std::ostringstream os;
  f(os);
  return os.str();
}

int exit_code(UcStatus s) {
  switch (s) {
    case UcStatus::Converged: return 0;
    case UcStatus::InfeasibleUC: return 2;
    case UcStatus::IterLimit: return 3;
  }
  return kExitError;
}

// Benders against the enumeration oracle. Returns 0 on agreement, 1 on mismatch.
int verify_case(const CaseData& c, const RunConfig& cfg) {
  const OracleResult oracle = enumerate_uc(c, cfg.max_bits);
  BendersOptions opt = benders_options(cfg);
  opt.rrp = false;
  if (cfg.inject_bad_cut && oracle.has_feasible) opt.injected_cuts.push_back(no_good_cut(oracle.best.x));
  const UcResult r = solve_uc(c, opt);

  const bool both_infeasible = !oracle.has_feasible && r.status == UcStatus::InfeasibleUC;
  bool ok = both_infeasible;
  if (oracle.has_feasible && r.status == UcStatus::Converged) {
    const double rel = std::abs(r.total_cost - oracle.best_cost) / std::max(1.0, std::abs(oracle.best_cost));
    // The schedule Benders returns must itself be priced at its reported cost by the oracle.
    bool priced = false;
    for (const auto& row : oracle.rows)
      if (row.feasible && row.schedule.x == r.schedule.x)
        priced = std::abs(row.cost - r.total_cost) <= 1e-5 * std::max(1.0, std::abs(row.cost));
    ok = rel <= 1e-5 && priced;
  }
  std::cout << (ok ? "verify ok" : "verify MISMATCH") << " benders=" << fmt_num(r.total_cost)
            << " oracle=" << fmt_num(oracle.best_cost) << " status=" << to_string(r.status)
            << " schedules=" << oracle.rows.size() << "\n";
  return ok ? 0 : kExitMismatch;
}

int cmd_solve(const RunConfig& cfg) {
  const CaseData c = load_checked(cfg.case_path);
  BendersOptions opt = benders_options(cfg);
  const UcResult r = solve_uc(c, opt);

  const fs::path out(cfg.out);
  fs::create_directories(out);
  write_file(out / "iterations.csv", to_text([&](std::ostream& os) { write_iterations_csv(os, r.iterations, cfg.timings); }));
  if (r.has_incumbent) {
    write_file(out / "schedule.csv", to_text([&](std::ostream& os) { write_schedule_csv(os, c, r.schedule); }));
    write_file(out / "dispatch.csv",
               to_text([&](std::ostream& os) { write_dispatch_csv(os, dispatch_rows(c, r)); }));
    write_file(out / "voltages.json", voltages_json(c, r).dump(2) + "\n");
  }
  write_file(out / "summary.json", summary_json(r, opt.variant, cfg.timings).dump(2) + "\n");

  std::cout << "status=" << to_string(r.status) << " cost=" << fmt_num(r.total_cost)
            << " gap=" << fmt_num(r.gap()) << " iterations=" << r.iterations.size() << "\n";
  const int code = exit_code(r.status);
  if (cfg.verify && code == 0) return verify_case(c, cfg);
  return code;
}

int cmd_generate(const std::string& kind, std::uint64_t seed, const std::string& out) {
  CaseData c;
  if (kind == "single")
    c = single_generator_case();
  else if (kind == "tiny")
    c = tiny_case(seed);
  else if (kind == "six")
    c = six_bus_case();
  else if (kind == "ieee118")
    c = ieee118_shaped_case(seed);
  else
    throw Error("unknown fixture kind '" + kind + "'");
  if (out.empty())
    std::cout << serialize_case(c);
  else
    write_file(out, serialize_case(c));
  return 0;
}

void add_run_flags(CLI::App* app, RunConfig& cfg) {
  app->add_option("--case", cfg.case_path, "case JSON file")->required()->check(CLI::ExistingFile);
  app->add_option("--variant", cfg.variant, "master variant")->check(CLI::IsMember({"M", "MM"}));
  app->add_option("--tol", cfg.tol, "relative gap tolerance")->check(CLI::PositiveNumber);
  app->add_option("--max-iters", cfg.max_iters, "Benders iteration limit")->check(CLI::PositiveNumber);
  app->add_option("--rrp", cfg.rrp, "rank reduction on/off");
  app->add_option("--sigma-extra", cfg.sigma_extra, "extra rank-reduction passes")->check(CLI::NonNegativeNumber);
  app->add_option("--loss-init", cfg.loss_init, "initial loss estimate, fraction of load")
      ->check(CLI::Range(0.0, 0.10));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unit commitment with an SDP-relaxed AC network, solved by Benders decomposition"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto* solve = app.add_subcommand("solve", "run Benders and write reports");
  add_run_flags(solve, cfg);
  solve->add_option("--out", cfg.out, "output directory");
  solve->add_flag("--verify", cfg.verify, "also check the result against the enumeration oracle");
  solve->add_flag("!--no-timings", cfg.timings, "omit wall-clock figures so outputs are reproducible");

  auto* verify = app.add_subcommand("verify", "compare Benders with exhaustive enumeration");
  add_run_flags(verify, cfg);
  verify->add_option("--max-bits", cfg.max_bits, "largest T*N_G the oracle accepts");
  verify->add_flag("--inject-bad-cut", cfg.inject_bad_cut, "test hook: cut off the true optimum");

  std::string kind = "tiny", gen_out;
  std::uint64_t seed = 1;
  auto* generate = app.add_subcommand("generate", "write a built-in case as JSON");
  generate->add_option("--kind", kind, "single | tiny | six | ieee118");
  generate->add_option("--seed", seed, "fixture seed");
  generate->add_option("--out", gen_out, "output file (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cout << "error kind=UsageError message=\"" << e.what() << "\"\n";
    return kExitError;
  }

  try {
    if (*solve) return cmd_solve(cfg);
    if (*verify) return verify_case(load_checked(cfg.case_path), cfg);
    return cmd_generate(kind, seed, gen_out);
  } catch (const TooLarge& e) {
    std::cout << "error kind=TooLarge message=\"" << e.what() << "\"\n";
    return kExitTooLarge;
  } catch (const std::exception& e) {
    std::cout << "error kind=" << error_kind(e) << " message=\"" << e.what() << "\"\n";
    return kExitError;
  }
}
