#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "ucsdp/errors.hpp"
#include "ucsdp/sdp_assembly.hpp"
#include "ucsdp/sdp_solver.hpp"

namespace ucsdp {

inline int numerical_rank(const Matrix& m, double rel_tol = 1e-6) {
  if (m.size() == 0) return 0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();
  const double top = ev.maxCoeff();
  if (!(top > 0)) return 0;
  return static_cast<int>((ev.array() > rel_tol * top).count());
}

inline int rank_bound(int n_buses, int n_lines) {
  const double m = 8.0 * (3.0 * n_buses + 2.0 * n_lines) + 1.0;
  return static_cast<int>(std::floor((std::sqrt(m) - 1.0) / 2.0));
}

struct RrpOptions {
  int extra_passes = 5;      // ς
  double rank_tol = 1e-6;
  double zero_tol = 1e-9;    // relative to max(S)
  double psd_tol = 1e-9;
};

struct RrpResult {
  Matrix v;
  int iterations = 0;  // perturbation steps applied
  int initial_rank = 0;
  int terminal_rank = 0;
  std::vector<int> ranks;  // rank after every pass, starting with the input
};

namespace detail {

// Rᵀ M R for a sparse symmetric M.
inline Matrix congruence(const SparseSym& m, const Matrix& r) {
  const int k = static_cast<int>(r.cols());
  Matrix out = Matrix::Zero(k, k);
  for (const auto& e : m.entries) {
    if (e.i == e.j) {
      out.noalias() += e.v * r.row(e.i).transpose() * r.row(e.i);
    } else {
      const Matrix t = e.v * r.row(e.i).transpose() * r.row(e.j);
      out += t + t.transpose();
    }
  }
  return out;
}

}  // namespace detail

inline RrpResult reduce_rank(const Matrix& v_in, const std::vector<SparseSym>& constraints,
                             const RrpOptions& opt = {}) {
  RrpResult res;
  Matrix v = 0.5 * (v_in + v_in.transpose());
  {
    Eigen::SelfAdjointEigenSolver<Matrix> es(v, Eigen::EigenvaluesOnly);
    const double lmax = std::max(0.0, es.eigenvalues().maxCoeff());
    if (es.eigenvalues().minCoeff() < -opt.psd_tol * std::max(lmax, 1e-300))
      throw FactorizationError("rank reduction input is not positive semidefinite (lambda_min = " +
                               std::to_string(es.eigenvalues().minCoeff()) + ")");
  }
  res.initial_rank = numerical_rank(v, opt.rank_tol);
  res.ranks.push_back(res.initial_rank);
  const int passes = res.initial_rank + opt.extra_passes - 1;
  int rank = res.initial_rank;
  for (int pass = 0; pass < passes && rank > 1; ++pass) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(v);
    const Vector& lam = es.eigenvalues();
    const double top = lam.maxCoeff();
    std::vector<int> keep;
    for (int i = 0; i < lam.size(); ++i)
      if (lam[i] > opt.rank_tol * top) keep.push_back(i);
    const int k = static_cast<int>(keep.size());
    Matrix r(v.rows(), k);
    for (int c = 0; c < k; ++c) r.col(c) = es.eigenvectors().col(keep[c]) * std::sqrt(lam[keep[c]]);

    Matrix s = Matrix::Zero(k, k);
    for (const auto& m : constraints) s += detail::congruence(m, r).cwiseAbs();
    const double smax = s.maxCoeff();
    Matrix z = (s.array() <= opt.zero_tol * smax).cast<double>().matrix();
    if (z.isZero()) break;

    Eigen::SelfAdjointEigenSolver<Matrix> zs(z, Eigen::EigenvaluesOnly);
    const Vector& zl = zs.eigenvalues();
    double phi;
    if (zl.minCoeff() >= 0)
      phi = 1;
    else if (zl.maxCoeff() <= 0)
      phi = -1;
    else
      phi = zl.maxCoeff() >= -zl.minCoeff() ? 1 : -1;
    double lead = 0;
    for (int i = 0; i < zl.size(); ++i) lead = std::max(lead, phi * zl[i]);
    if (!(lead > 0)) break;
    const double omega = 1.0 / lead;
    v += omega * (-phi * r * z * r.transpose());
    v = 0.5 * (v + v.transpose()).eval();
    ++res.iterations;
    const int next = numerical_rank(v, opt.rank_tol);
    res.ranks.push_back(next);
    rank = next;
  }
  res.v = v;
  res.terminal_rank = rank;
  return res;
}

inline RrpResult reduce_rank(const Matrix& v, const std::vector<Matrix>& constraints,
                             const RrpOptions& opt = {}) {
  std::vector<SparseSym> sp;
  sp.reserve(constraints.size());
  for (const auto& m : constraints) sp.push_back(SparseSym::from_dense(m));
  return reduce_rank(v, sp, opt);
}

// Constraint matrices acting on one voltage block: Y_i, Ỹ_i, Y_ij, Ỹ_ij, E_i and
// the slack reference entry.
inline std::vector<SparseSym> voltage_constraints(const AssemblyBundle& b, int slack) {
  std::vector<SparseSym> out;
  for (const auto& m : b.y_bus) out.push_back(SparseSym::from_dense(m));
  for (const auto& m : b.yt_bus) out.push_back(SparseSym::from_dense(m));
  for (const auto& m : b.y_line) out.push_back(SparseSym::from_dense(m));
  for (const auto& m : b.yt_line) out.push_back(SparseSym::from_dense(m));
  for (const auto& m : b.e_bus) out.push_back(SparseSym::from_dense(m));
  const int n = b.n_buses;
  out.push_back(SparseSym::unit(2 * n, n + slack, n + slack));
  return out;
}

// Leading eigenvector scaled to √λ₁ and rotated so that bus `slack` has f = 0, e ≥ 0.
inline Vector extract_voltage(const Matrix& v, int slack) {
  const int n = static_cast<int>(v.rows()) / 2;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (v + v.transpose()));
  const int top = static_cast<int>(v.rows()) - 1;
  Vector u = es.eigenvectors().col(top) * std::sqrt(std::max(0.0, es.eigenvalues()[top]));
  const std::complex<double> ref(u[slack], u[n + slack]);
  const std::complex<double> rot = std::abs(ref) > 0 ? std::conj(ref) / std::abs(ref) : 1.0;
  Vector out(2 * n);
  for (int i = 0; i < n; ++i) {
    const std::complex<double> vi = std::complex<double>(u[i], u[n + i]) * rot;
    out[i] = vi.real();
    out[n + i] = vi.imag();
  }
  out[n + slack] = 0;
  return out;
}

}  // namespace ucsdp
