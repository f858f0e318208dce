#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <ostream>
#include <map>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ucsdp/errors.hpp"

namespace ucsdp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense { Le, Eq, Ge };

struct MilpVariable {
  std::string name;
  double lower = 0, upper = kInf;
  double cost = 0;
  bool binary = false;
};

struct MilpRow {
  std::string name;
  RowSense sense = RowSense::Le;
  double rhs = 0;
  std::vector<std::pair<int, double>> coefs;
};

struct MilpModel {
  std::vector<MilpVariable> vars;
  std::vector<MilpRow> rows;

  int add_var(std::string name, double lower, double upper, double cost, bool binary = false) {
    vars.push_back({std::move(name), lower, upper, cost, binary});
    return static_cast<int>(vars.size()) - 1;
  }
  int add_binary(std::string name, double cost) { return add_var(std::move(name), 0, 1, cost, true); }
  int add_row(std::string name, RowSense sense, double rhs,
              std::vector<std::pair<int, double>> coefs) {
    rows.push_back({std::move(name), sense, rhs, std::move(coefs)});
    return static_cast<int>(rows.size()) - 1;
  }
  std::size_t n_binaries() const {
    std::size_t k = 0;
    for (const auto& v : vars) k += v.binary ? 1 : 0;
    return k;
  }
  double row_activity(std::size_t r, const std::vector<double>& x) const {
    double s = 0;
    for (auto [j, a] : rows[r].coefs) s += a * x[j];
    return s;
  }
  double objective(const std::vector<double>& x) const {
    double s = 0;
    for (std::size_t j = 0; j < vars.size(); ++j) s += vars[j].cost * x[j];
    return s;
  }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, Cutoff, IterationLimit };
enum class MilpStatus { Optimal, Infeasible, Unbounded, NodeLimit };

inline const char* to_string(MilpStatus s) {
  switch (s) {
    case MilpStatus::Optimal: return "Optimal";
    case MilpStatus::Infeasible: return "Infeasible";
    case MilpStatus::Unbounded: return "Unbounded";
    case MilpStatus::NodeLimit: return "NodeLimitExceeded";
  }
  return "?";
}

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0;
  double dual_objective = 0;
  std::vector<double> x;
  std::vector<double> row_duals;      // d = c − Aᵀy; ≤ rows have y ≤ 0 at optimum
  std::vector<double> reduced_costs;  // structural columns
  int iterations = 0;
};

struct MilpOptions {
  double gap_rel = 1e-9;  // prune when bound ≥ incumbent − gap_rel·(1+|incumbent|)
  int node_limit = 200000;
  double int_tol = 1e-6;
  double primal_tol = 1e-9;
  double dual_tol = 1e-9;
  int max_lp_iterations = 200000;
  bool record_tree = false;
  // Binary values (in order of the binary variables) tried as a starting incumbent.
  std::vector<double> warm_start;
};

struct NodeRecord {
  int id = 0, parent = -1;
  double parent_bound = -kInf;
  double lp_bound = 0;
  bool lp_feasible = false;
};

struct MilpSolution {
  MilpStatus status = MilpStatus::Infeasible;
  bool has_incumbent = false;
  double objective = kInf;
  double best_bound = -kInf;
  std::vector<double> values;
  std::vector<double> row_duals;
  int nodes = 0;
  long lp_iterations = 0;
  std::vector<NodeRecord> tree;
};

namespace detail {

// Bounded dual simplex on  A x − r = 0,  lo ≤ (x, r) ≤ up,  min cᵀx.
// Rows are equilibrated by powers of two; the explicit basis inverse is kept
// dense and updated by eta pivots.
class DualSimplex {
 public:
  DualSimplex(const MilpModel& model, double primal_tol, double dual_tol)
      : n_(static_cast<int>(model.vars.size())),
        m_(static_cast<int>(model.rows.size())),
        tol_p_(primal_tol),
        tol_d_(dual_tol) {
    const int N = n_ + m_;
    lo_.resize(N);
    up_.resize(N);
    cost_.assign(N, 0.0);
    row_scale_.assign(m_, 1.0);
    col_start_.assign(n_ + 1, 0);

    // Rows may list a variable more than once; merge those terms.
    std::vector<std::vector<std::pair<int, double>>> merged(m_);
    for (int i = 0; i < m_; ++i) {
      std::map<int, double> acc;
      for (auto [j, a] : model.rows[i].coefs) {
        if (j < 0 || j >= n_) throw ModelError("row references an undeclared variable");
        acc[j] += a;
      }
      double amax = 0;
      for (auto [j, a] : acc)
        if (a != 0) {
          merged[i].push_back({j, a});
          amax = std::max(amax, std::abs(a));
        }
      if (amax > 0) row_scale_[i] = std::ldexp(1.0, -std::ilogb(amax));
    }
    std::vector<int> count(n_, 0);
    for (const auto& row : merged)
      for (auto [j, a] : row) ++count[j];
    for (int j = 0; j < n_; ++j) col_start_[j + 1] = col_start_[j] + count[j];
    col_row_.resize(col_start_[n_]);
    col_val_.resize(col_start_[n_]);
    std::vector<int> fill(col_start_.begin(), col_start_.end() - 1);
    for (int i = 0; i < m_; ++i)
      for (auto [j, a] : merged[i]) {
        col_row_[fill[j]] = i;
        col_val_[fill[j]] = a * row_scale_[i];
        ++fill[j];
      }
    for (int j = 0; j < n_; ++j) {
      lo_[j] = model.vars[j].lower;
      up_[j] = model.vars[j].upper;
      cost_[j] = model.vars[j].cost;
    }
    for (int i = 0; i < m_; ++i) {
      const auto& row = model.rows[i];
      const double b = row.rhs * row_scale_[i];
      lo_[n_ + i] = row.sense == RowSense::Le ? -kInf : b;
      up_[n_ + i] = row.sense == RowSense::Ge ? kInf : b;
    }
    root_lo_ = lo_;
    root_up_ = up_;
    art_.assign(N, 0);
    x_.assign(N, 0.0);
    d_.assign(N, 0.0);
    status_.assign(N, kLower);
    pos_.assign(N, -1);
    head_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      head_[i] = n_ + i;
      pos_[n_ + i] = i;
      status_[n_ + i] = kBasic;
    }
    binv_ = RowMatrix::Identity(m_, m_) * -1.0;
    compute_duals();
    for (int j = 0; j < n_; ++j) place_nonbasic(j);
    compute_primal();
  }

  int n() const { return n_; }
  int m() const { return m_; }

  void set_bounds(int j, double lo, double up) {
    lo_[j] = lo;
    up_[j] = up;
    if (status_[j] != kBasic) place_nonbasic(j);
    dirty_primal_ = true;
  }
  double lower(int j) const { return lo_[j]; }
  double upper(int j) const { return up_[j]; }

  LpStatus solve(double cutoff, int max_iter) {
    if (dirty_primal_) compute_primal();
    int degenerate_run = 0, cleanup_rounds = 0;
    double last_obj = -kInf;
    iterations_ = 0;
    std::vector<double> alpha_row(n_ + m_);
    for (;;) {
      if (iterations_ >= max_iter) return LpStatus::IterationLimit;
      if (since_refresh_ >= 50) refresh();
      const double obj = objective_scaled();
      if (obj >= cutoff && !has_artificial_active()) return LpStatus::Cutoff;
      if (obj > last_obj + 1e-12 * (1 + std::abs(obj))) {
        degenerate_run = 0;
        last_obj = obj;
      } else {
        ++degenerate_run;
      }
      const bool bland = degenerate_run > 1000;

      const int r = choose_leaving(bland);
      if (r < 0) {
        // Primal feasible. Clean up accumulated drift before declaring optimality.
        if (since_refresh_ > 0) {
          refresh();
          continue;
        }
        if (cleanup_rounds++ < 50 && fix_dual_infeasibilities()) continue;
        if (has_artificial_active()) return LpStatus::Unbounded;
        return LpStatus::Optimal;
      }
      const int leave = head_[r];
      const bool to_lower = x_[leave] < lo_[leave];
      const double target = to_lower ? lo_[leave] : up_[leave];

      const Eigen::VectorXd rho = binv_.row(r).transpose();
      for (int j = 0; j < n_ + m_; ++j)
        alpha_row[j] = status_[j] == kBasic ? 0.0 : row_entry(rho, j);
      const int q = choose_entering(alpha_row, to_lower, bland);
      if (q < 0) {
        // An infeasibility verdict is only trusted on a freshly factored basis.
        if (since_refactor_ > 0) {
          refactor();
          continue;
        }
        return LpStatus::Infeasible;
      }
      const Eigen::VectorXd alpha_q = ftran(q);
      const double arq = alpha_q[r];
      if (std::abs(arq - alpha_row[q]) > 1e-7 * (1 + std::abs(arq)) && since_refactor_ > 0) {
        refactor();
        continue;
      }
      // Dual update.
      const double theta = d_[q] / arq;
      for (int j = 0; j < n_ + m_; ++j)
        if (alpha_row[j] != 0) d_[j] -= theta * alpha_row[j];
      d_[q] = 0;
      d_[leave] = -theta;
      // Primal update.
      const double delta = (x_[leave] - target) / arq;
      x_[q] += delta;
      for (int i = 0; i < m_; ++i) x_[head_[i]] -= alpha_q[i] * delta;
      x_[leave] = target;
      // Basis change.
      pivot(r, alpha_q);
      status_[leave] = to_lower ? kLower : kUpper;
      if (lo_[leave] == up_[leave]) status_[leave] = kLower;
      pos_[leave] = -1;
      art_[leave] = 0;
      art_[q] = 0;
      head_[r] = q;
      pos_[q] = r;
      status_[q] = kBasic;
      ++iterations_;
      ++total_iterations_;
      ++since_refresh_;
      ++since_refactor_;
    }
  }

  struct Diagnostics {
    double basis_error = 0;     // max |B·B⁻¹ − I|
    double dual_infeasibility = 0;
    double primal_drift = 0;    // max |A x − r| over rows
  };
  Diagnostics diagnostics() const {
    Diagnostics out;
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) {
      const int j = head_[i];
      if (j >= n_) B(j - n_, i) = -1;
      else
        for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) B(col_row_[k], i) = col_val_[k];
    }
    out.basis_error = (B * binv_ - Eigen::MatrixXd::Identity(m_, m_)).cwiseAbs().maxCoeff();
    for (int j = 0; j < n_ + m_; ++j) {
      if (status_[j] == kBasic || lo_[j] == up_[j]) continue;
      double bad = 0;
      if (status_[j] == kLower) bad = -d_[j];
      else if (status_[j] == kUpper) bad = d_[j];
      else bad = std::abs(d_[j]);
      out.dual_infeasibility = std::max(out.dual_infeasibility, bad);
    }
    Eigen::VectorXd act = Eigen::VectorXd::Zero(m_);
    for (int j = 0; j < n_; ++j)
      for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) act[col_row_[k]] += col_val_[k] * x_[j];
    for (int i = 0; i < m_; ++i) out.primal_drift = std::max(out.primal_drift, std::abs(act[i] - x_[n_ + i]));
    return out;
  }

  double objective() const { return objective_scaled(); }
  int iterations() const { return iterations_; }
  long total_iterations() const { return total_iterations_; }

  std::vector<double> primal() const { return {x_.begin(), x_.begin() + n_}; }

  // Row duals in the original row scaling.
  std::vector<double> row_duals() const {
    std::vector<double> y(m_);
    for (int i = 0; i < m_; ++i) y[i] = d_[n_ + i] * row_scale_[i];
    // d of logical i equals y_i (column −e_i, zero cost).
    return y;
  }
  std::vector<double> reduced_costs() const { return {d_.begin(), d_.begin() + n_}; }

  double dual_objective() const {
    // Σ over nonbasic columns of d_j·x_j with x_j at a bound.
    double s = 0;
    for (int j = 0; j < n_ + m_; ++j)
      if (status_[j] != kBasic) s += d_[j] * x_[j];
    return s;
  }

 private:
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  enum Status : unsigned char { kBasic, kLower, kUpper, kFree };
  static constexpr double kArtificialBound = 1e9;

  double row_entry(const Eigen::VectorXd& rho, int j) const {
    if (j >= n_) return -rho[j - n_];
    double s = 0;
    for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) s += rho[col_row_[k]] * col_val_[k];
    return s;
  }

  Eigen::VectorXd ftran(int j) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(m_);
    if (j >= n_) {
      out = -binv_.col(j - n_);
      return out;
    }
    for (int k = col_start_[j]; k < col_start_[j + 1]; ++k)
      out.noalias() += col_val_[k] * binv_.col(col_row_[k]);
    return out;
  }

  void pivot(int r, const Eigen::VectorXd& alpha_q) {
    const double p = alpha_q[r];
    binv_.row(r) /= p;
    const Eigen::RowVectorXd pr = binv_.row(r);
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = alpha_q[i];
      if (f != 0) binv_.row(i).noalias() -= f * pr;
    }
  }

  void place_nonbasic(int j) {
    // Choose the bound that keeps d_j dual feasible, falling back to an
    // artificial box when the required bound is infinite.
    art_[j] = 0;
    const double lo = lo_[j], up = up_[j];
    if (lo == up) {
      status_[j] = kLower;
      x_[j] = lo;
      return;
    }
    if (status_[j] == kUpper && std::isfinite(up) && d_[j] <= tol_d_) {
      x_[j] = up;
      return;
    }
    if (status_[j] == kLower && std::isfinite(lo) && d_[j] >= -tol_d_) {
      x_[j] = lo;
      return;
    }
    if (d_[j] > tol_d_ || (std::abs(d_[j]) <= tol_d_ && std::isfinite(lo))) {
      status_[j] = kLower;
      if (std::isfinite(lo)) {
        x_[j] = lo;
      } else {
        x_[j] = -kArtificialBound;
        art_[j] = 1;
      }
    } else if (d_[j] < -tol_d_ || std::isfinite(up)) {
      status_[j] = kUpper;
      if (std::isfinite(up)) {
        x_[j] = up;
      } else {
        x_[j] = kArtificialBound;
        art_[j] = 1;
      }
    } else {
      status_[j] = kFree;
      x_[j] = 0;
    }
  }

  bool has_artificial_active() const {
    for (int j = 0; j < n_ + m_; ++j)
      if (status_[j] != kBasic && art_[j]) return true;
    return false;
  }

  bool fix_dual_infeasibilities() {
    bool changed = false;
    for (int j = 0; j < n_ + m_; ++j) {
      if (status_[j] == kBasic || lo_[j] == up_[j]) continue;
      const bool bad = (status_[j] == kLower && d_[j] < -tol_d_) ||
                       (status_[j] == kUpper && d_[j] > tol_d_) ||
                       (status_[j] == kFree && std::abs(d_[j]) > tol_d_);
      const bool art_idle = art_[j] && std::abs(d_[j]) <= tol_d_;
      if (bad || art_idle) {
        const auto before = status_[j];
        const double xb = x_[j];
        status_[j] = kFree;
        place_nonbasic(j);
        if (status_[j] != before || x_[j] != xb) changed = true;
      }
    }
    if (changed) compute_primal();
    return changed;
  }

  int choose_leaving(bool bland) const {
    int best = -1;
    double best_v = 0;
    for (int i = 0; i < m_; ++i) {
      const int j = head_[i];
      const double v = x_[j];
      double infeas = 0;
      if (v < lo_[j] - tol_p_ * (1 + std::abs(lo_[j]))) infeas = lo_[j] - v;
      else if (v > up_[j] + tol_p_ * (1 + std::abs(up_[j]))) infeas = v - up_[j];
      if (infeas <= 0) continue;
      if (bland) {
        if (best < 0 || j < head_[best]) best = i;
      } else if (infeas > best_v) {
        best_v = infeas;
        best = i;
      }
    }
    return best;
  }

  int choose_entering(const std::vector<double>& alpha_row, bool to_lower, bool bland) const {
    // Harris two-pass ratio test on |d_j| / |α_rj|.
    const double piv_tol = 1e-9;
    double theta_max = kInf;
    auto eligible = [&](int j) {
      if (status_[j] == kBasic || lo_[j] == up_[j]) return false;
      const double a = alpha_row[j];
      if (std::abs(a) <= piv_tol) return false;
      if (status_[j] == kFree) return true;
      if (status_[j] == kLower) return to_lower ? a < 0 : a > 0;
      return to_lower ? a > 0 : a < 0;
    };
    for (int j = 0; j < n_ + m_; ++j)
      if (eligible(j))
        theta_max = std::min(theta_max, (std::abs(d_[j]) + tol_d_) / std::abs(alpha_row[j]));
    int q = -1;
    double best_a = 0;
    for (int j = 0; j < n_ + m_; ++j) {
      if (!eligible(j)) continue;
      const double a = std::abs(alpha_row[j]);
      if (std::abs(d_[j]) / a > theta_max) continue;
      if (bland) {
        if (q < 0) q = j;
      } else if (a > best_a) {
        best_a = a;
        q = j;
      }
    }
    return q;
  }

  void compute_duals() {
    Eigen::VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = cost_[head_[i]];
    const Eigen::VectorXd y = binv_.transpose() * cb;
    for (int j = 0; j < n_ + m_; ++j) {
      if (status_[j] == kBasic) {
        d_[j] = 0;
        continue;
      }
      d_[j] = cost_[j] - row_entry(y, j);
    }
  }

  void compute_primal() {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
    for (int j = 0; j < n_; ++j) {
      if (status_[j] == kBasic || x_[j] == 0) continue;
      for (int k = col_start_[j]; k < col_start_[j + 1]; ++k)
        rhs[col_row_[k]] -= col_val_[k] * x_[j];
    }
    for (int i = 0; i < m_; ++i) {
      const int j = n_ + i;
      if (status_[j] != kBasic) rhs[i] += x_[j];
    }
    const Eigen::VectorXd xb = binv_ * rhs;
    for (int i = 0; i < m_; ++i) x_[head_[i]] = xb[i];
    dirty_primal_ = false;
  }

  void refactor() {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) {
      const int j = head_[i];
      if (j >= n_) {
        B(j - n_, i) = -1;
      } else {
        for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) B(col_row_[k], i) = col_val_[k];
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    binv_ = lu.inverse();
    const double err = (B * binv_ - Eigen::MatrixXd::Identity(m_, m_)).cwiseAbs().maxCoeff();
    if (!std::isfinite(err) || err > 1e-6) throw NumericalError("simplex basis is singular");
    since_refactor_ = 0;
    compute_duals();
    compute_primal();
    since_refresh_ = 0;
  }

  void refresh() {
    if (since_refactor_ >= std::max(200, m_)) {
      refactor();
      return;
    }
    compute_duals();
    compute_primal();
    since_refresh_ = 0;
  }

  double objective_scaled() const {
    double s = 0;
    for (int j = 0; j < n_; ++j) s += cost_[j] * x_[j];
    return s;
  }

  int n_, m_;
  double tol_p_, tol_d_;
  std::vector<double> lo_, up_, cost_, root_lo_, root_up_, row_scale_;
  std::vector<int> col_start_, col_row_;
  std::vector<double> col_val_;
  std::vector<unsigned char> art_;
  std::vector<double> x_, d_;
  std::vector<Status> status_;
  std::vector<int> pos_, head_;
  RowMatrix binv_;
  bool dirty_primal_ = false;
  int iterations_ = 0, since_refresh_ = 0, since_refactor_ = 0;
  long total_iterations_ = 0;
};

inline LpSolution extract_lp(const DualSimplex& s, LpStatus st) {
  LpSolution out;
  out.status = st;
  out.objective = s.objective();
  out.dual_objective = s.dual_objective();
  out.x = s.primal();
  out.row_duals = s.row_duals();
  out.reduced_costs = s.reduced_costs();
  out.iterations = s.iterations();
  return out;
}

}  // namespace detail

namespace detail {

// Activity-based bound propagation. Tightens `m`'s variable bounds in place and
// returns false when some row cannot be satisfied within them.
inline bool propagate_bounds(MilpModel& m, int max_passes = 50) {
  std::vector<std::vector<std::pair<int, double>>> rows(m.rows.size());
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    std::map<int, double> acc;
    for (auto [j, a] : m.rows[i].coefs) acc[j] += a;
    for (auto [j, a] : acc)
      if (a != 0) rows[i].push_back({j, a});
  }
  auto tighten = [&](int j, bool upper, double v) {
    MilpVariable& var = m.vars[j];
    if (var.binary) v = upper ? std::floor(v + 1e-6) : std::ceil(v - 1e-6);
    else v += (upper ? 1 : -1) * 1e-9 * (1 + std::abs(v));
    double& b = upper ? var.upper : var.lower;
    const bool better = upper ? v < b - 1e-7 * (1 + std::abs(b)) : v > b + 1e-7 * (1 + std::abs(b));
    if (!better) return false;
    b = v;
    return true;
  };
  for (int pass = 0; pass < max_passes; ++pass) {
    bool changed = false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& row = m.rows[i];
      for (int side = 0; side < 2; ++side) {
        // side 0: Σ a x ≤ rhs, side 1: Σ a x ≥ rhs
        if (side == 0 && row.sense == RowSense::Ge) continue;
        if (side == 1 && row.sense == RowSense::Le) continue;
        const double sgn = side == 0 ? 1.0 : -1.0;  // work with Σ (sgn·a) x ≤ sgn·rhs
        double fin = 0;
        int n_inf = 0, inf_j = -1;
        for (auto [j, a0] : rows[i]) {
          const double a = sgn * a0;
          const double b = a > 0 ? m.vars[j].lower : m.vars[j].upper;
          if (!std::isfinite(b)) {
            ++n_inf;
            inf_j = j;
          } else {
            fin += a * b;
          }
        }
        const double rhs = sgn * row.rhs;
        if (n_inf == 0 && fin > rhs + 1e-7 * (1 + std::abs(rhs))) return false;
        if (n_inf > 1) continue;
        for (auto [j, a0] : rows[i]) {
          if (n_inf == 1 && j != inf_j) continue;
          const double a = sgn * a0;
          const double b = a > 0 ? m.vars[j].lower : m.vars[j].upper;
          const double others = n_inf == 1 ? fin : fin - a * b;
          const double v = (rhs - others) / a;
          if (!std::isfinite(v) || std::abs(v) > 1e12) continue;
          changed |= tighten(j, a > 0, v);
          if (m.vars[j].lower > m.vars[j].upper + 1e-9 * (1 + std::abs(m.vars[j].upper))) return false;
        }
      }
    }
    if (!changed) break;
  }
  for (auto& v : m.vars)
    if (v.lower > v.upper) v.lower = v.upper;
  return true;
}

}  // namespace detail

// LP relaxation (binaries relaxed to [0, 1]).
inline LpSolution solve_lp(const MilpModel& model, const MilpOptions& opt = {}) {
  detail::DualSimplex s(model, opt.primal_tol, opt.dual_tol);
  const LpStatus st = s.solve(kInf, opt.max_lp_iterations);
  return detail::extract_lp(s, st);
}

namespace detail {
inline MilpSolution branch_and_bound(const MilpModel& model, const MilpOptions& opt);
}

inline MilpSolution solve_milp(const MilpModel& model, const MilpOptions& opt = {}) {
  for (const auto& v : model.vars)
    if (v.binary && (v.lower < 0 || v.upper > 1))
      throw ModelError("binary variable '" + v.name + "' has bounds outside [0,1]");

  MilpModel tightened = model;
  MilpSolution sol;
  if (!detail::propagate_bounds(tightened)) {
    sol.status = MilpStatus::Infeasible;
    return sol;
  }
  return detail::branch_and_bound(tightened, opt);
}

namespace detail {

inline MilpSolution branch_and_bound(const MilpModel& model, const MilpOptions& opt) {
  detail::DualSimplex lp(model, opt.primal_tol, opt.dual_tol);
  MilpSolution sol;
  const int n = static_cast<int>(model.vars.size());
  std::vector<int> binaries;
  for (int j = 0; j < n; ++j)
    if (model.vars[j].binary) binaries.push_back(j);

  struct Node {
    int parent;
    int var;
    double value;  // var fixed to value (0 or 1); var < 0 for the root
    double bound;
    int depth;
  };
  std::vector<Node> nodes;
  nodes.push_back({-1, -1, 0, -kInf, 0});
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> open;
  open.push({-kInf, 0});

  std::vector<int> touched;  // binaries whose bounds differ from the model
  auto apply_node = [&](int id) {
    for (int j : touched) lp.set_bounds(j, model.vars[j].lower, model.vars[j].upper);
    touched.clear();
    for (int k = id; nodes[k].var >= 0; k = nodes[k].parent) {
      const int j = nodes[k].var;
      if (std::find(touched.begin(), touched.end(), j) != touched.end()) continue;
      lp.set_bounds(j, nodes[k].value, nodes[k].value);
      touched.push_back(j);
    }
  };
  auto gap_of = [&](double inc) { return opt.gap_rel * (1 + std::abs(inc)); };

  if (opt.warm_start.size() == binaries.size() && !binaries.empty()) {
    for (std::size_t k = 0; k < binaries.size(); ++k) {
      const int j = binaries[k];
      const double v = std::round(opt.warm_start[k]);
      if (v < model.vars[j].lower || v > model.vars[j].upper) continue;
      lp.set_bounds(j, v, v);
      touched.push_back(j);
    }
    if (touched.size() == binaries.size() && lp.solve(kInf, opt.max_lp_iterations) == LpStatus::Optimal) {
      sol.has_incumbent = true;
      sol.objective = lp.objective();
      sol.values = lp.primal();
      for (int j : binaries) sol.values[j] = std::round(sol.values[j]);
      sol.row_duals = lp.row_duals();
    }
  }

  while (!open.empty()) {
    const auto [bound, id] = open.top();
    open.pop();
    if (sol.has_incumbent && bound >= sol.objective - gap_of(sol.objective)) continue;
    if (sol.nodes >= opt.node_limit) {
      sol.status = MilpStatus::NodeLimit;
      sol.best_bound = bound;
      sol.lp_iterations = lp.total_iterations();
      return sol;
    }
    ++sol.nodes;
    apply_node(id);
    const double cutoff = sol.has_incumbent ? sol.objective - gap_of(sol.objective) : kInf;
    const LpStatus st = lp.solve(cutoff, opt.max_lp_iterations);
    NodeRecord rec{id, nodes[id].parent, nodes[id].bound, lp.objective(), st == LpStatus::Optimal};
    if (opt.record_tree) sol.tree.push_back(rec);
    if (st == LpStatus::IterationLimit) throw NumericalError("LP iteration limit reached");
    if (st == LpStatus::Unbounded) {
      if (id == 0) {
        sol.status = MilpStatus::Unbounded;
        sol.lp_iterations = lp.total_iterations();
        return sol;
      }
      throw NumericalError("node LP unbounded below a bounded root");
    }
    if (st != LpStatus::Optimal) continue;
    const double obj = lp.objective();
    const std::vector<double> x = lp.primal();

    int branch = -1;
    double best_frac = 0;
    for (int j : binaries) {
      const double f = x[j] - std::floor(x[j]);
      const double dist = std::min(f, 1 - f);
      if (dist > opt.int_tol && dist > best_frac + 1e-12) {
        best_frac = dist;
        branch = j;
      }
    }
    if (branch < 0) {
      // Polish: fix binaries to their rounded values and re-optimise the continuous part.
      for (int j : binaries) {
        const double v = std::round(x[j]);
        if (lp.lower(j) != v || lp.upper(j) != v) {
          lp.set_bounds(j, v, v);
          if (std::find(touched.begin(), touched.end(), j) == touched.end()) touched.push_back(j);
        }
      }
      const LpStatus ps = lp.solve(kInf, opt.max_lp_iterations);
      if (ps == LpStatus::Optimal) {
        const double pobj = lp.objective();
        if (!sol.has_incumbent || pobj < sol.objective) {
          sol.has_incumbent = true;
          sol.objective = pobj;
          sol.values = lp.primal();
          for (int j : binaries) sol.values[j] = std::round(sol.values[j]);
          sol.row_duals = lp.row_duals();
        }
        continue;
      }
      // Rounding broke feasibility: branch on the least integral binary instead.
      double worst = -1;
      for (int j : binaries) {
        const double dist = std::abs(x[j] - std::round(x[j]));
        if (dist > worst) {
          worst = dist;
          branch = j;
        }
      }
      if (worst <= 0) continue;
    }
    for (double v : {0.0, 1.0}) {
      nodes.push_back({id, branch, v, obj, nodes[id].depth + 1});
      open.push({obj, static_cast<int>(nodes.size()) - 1});
    }
  }
  sol.lp_iterations = lp.total_iterations();
  if (sol.has_incumbent) {
    sol.status = MilpStatus::Optimal;
    sol.best_bound = sol.objective;
  } else {
    sol.status = MilpStatus::Infeasible;
  }
  return sol;
}

}  // namespace detail

// Deterministic LP-format text dump.
inline void write_lp(const MilpModel& model, std::ostream& os) {
  os << std::setprecision(17);
  auto name = [&](int j) {
    return model.vars[j].name.empty() ? "v" + std::to_string(j) : model.vars[j].name;
  };
  auto terms = [&](const std::vector<std::pair<int, double>>& c) {
    bool first = true;
    for (auto [j, a] : c) {
      if (a == 0) continue;
      os << (a < 0 ? (first ? "-" : " - ") : (first ? "" : " + ")) << std::abs(a) << ' ' << name(j);
      first = false;
    }
    if (first) os << "0 " << (model.vars.empty() ? std::string("x") : name(0));
  };
  os << "Minimize\n obj: ";
  std::vector<std::pair<int, double>> obj;
  for (int j = 0; j < static_cast<int>(model.vars.size()); ++j)
    if (model.vars[j].cost != 0) obj.push_back({j, model.vars[j].cost});
  terms(obj);
  os << "\nSubject To\n";
  for (std::size_t r = 0; r < model.rows.size(); ++r) {
    const auto& row = model.rows[r];
    os << ' ' << (row.name.empty() ? "r" + std::to_string(r) : row.name) << ": ";
    terms(row.coefs);
    os << (row.sense == RowSense::Le ? " <= " : row.sense == RowSense::Ge ? " >= " : " = ")
       << row.rhs << '\n';
  }
  os << "Bounds\n";
  for (int j = 0; j < static_cast<int>(model.vars.size()); ++j) {
    const auto& v = model.vars[j];
    if (v.binary) continue;
    os << ' ';
    if (std::isfinite(v.lower)) os << v.lower;
    else os << "-inf";
    os << " <= " << name(j) << " <= ";
    if (std::isfinite(v.upper)) os << v.upper;
    else os << "+inf";
    os << '\n';
  }
  os << "Binaries\n";
  for (int j = 0; j < static_cast<int>(model.vars.size()); ++j)
    if (model.vars[j].binary) os << ' ' << name(j) << '\n';
  os << "End\n";
}

}  // namespace ucsdp
