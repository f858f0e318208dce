#pragma once

#include <cstddef>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ucsdp/case_model.hpp"
#include "ucsdp/errors.hpp"

namespace ucsdp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct SeriesAdmittance {
  double g = 0, b = 0;
};

inline SeriesAdmittance series_admittance(const Line& l) {
  const double d = l.r * l.r + l.x * l.x;
  return {l.r / d, -l.x / d};
}

inline void symmetrize(Matrix& m) { m = 0.5 * (m + m.transpose()).eval(); }

// Lifts of the active and reactive flow leaving bus i (0-based) towards bus j
// over a series admittance g + jb, in the coordinates v = (e_1..e_N, f_1..f_N):
// Y • vvᵀ = P_ij and Ỹ • vvᵀ = Q_ij.
inline std::pair<Matrix, Matrix> branch_admittance_indexed(int i, int j, double g, double b,
                                                           int n) {
  if (i < 0 || i >= n || j < 0 || j >= n || i == j)
    throw IndexError("branch endpoints (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                     ") out of range for " + std::to_string(n) + " buses");
  Matrix G = Matrix::Zero(n, n), B = Matrix::Zero(n, n);
  G(i, i) = g;
  G(i, j) = -g;
  B(i, i) = b;
  B(i, j) = -b;

  Matrix Y(2 * n, 2 * n), Yt(2 * n, 2 * n);
  const Matrix Gs = G + G.transpose(), Ga = G - G.transpose();
  const Matrix Bs = B + B.transpose(), Ba = B.transpose() - B;
  Y << Gs, Ba, -Ba, Gs;
  Y *= 0.5;
  // Sign chosen so the contraction gives the physical reactive flow.
  Yt << Bs, Ga, -Ga, Bs;
  Yt *= -0.5;
  symmetrize(Y);
  symmetrize(Yt);
  return {Y, Yt};
}

// Line endpoints are 1-based bus indices.
inline std::pair<Matrix, Matrix> branch_admittance(const Line& line, int n_buses) {
  if (line.from < 1 || line.from > n_buses || line.to < 1 || line.to > n_buses)
    throw IndexError("line (" + std::to_string(line.from) + "," + std::to_string(line.to) +
                     ") references a bus outside 1.." + std::to_string(n_buses));
  const auto [g, b] = series_admittance(line);
  return branch_admittance_indexed(line.from - 1, line.to - 1, g, b, n_buses);
}

inline Matrix voltage_selector(int i, int n_buses) {
  if (i < 1 || i > n_buses)
    throw IndexError("bus index " + std::to_string(i) + " outside 1.." + std::to_string(n_buses));
  Matrix E = Matrix::Zero(2 * n_buses, 2 * n_buses);
  E(i - 1, i - 1) = 1;
  E(n_buses + i - 1, n_buses + i - 1) = 1;
  return E;
}

inline Eigen::Matrix2d lift_matrix() {
  Eigen::Matrix2d A;
  A << 0, 0.5, 0.5, 0;
  return A;
}

struct CostLift {
  Eigen::Matrix2d C;
  double c = 0;
};

// C • [[Δp², Δp], [Δp, 1]] + c equals the generator cost at p_min + Δp.
inline CostLift cost_matrix(const Generator& g) {
  CostLift out;
  const double off = g.alpha * g.p_min + 0.5 * g.beta;
  out.C << g.alpha, off, off, 0;
  out.c = g.alpha * g.p_min * g.p_min + g.beta * g.p_min + g.gamma;
  return out;
}

struct BusMatrices {
  std::vector<Matrix> y;   // Y_i
  std::vector<Matrix> yt;  // Ỹ_i
};

inline BusMatrices bus_matrices(const CaseData& c) {
  const int n = static_cast<int>(c.n_buses());
  BusMatrices out;
  out.y.assign(n, Matrix::Zero(2 * n, 2 * n));
  out.yt.assign(n, Matrix::Zero(2 * n, 2 * n));
  for (const Line& l : c.lines) {
    const auto [g, b] = series_admittance(l);
    const int i = l.from - 1, j = l.to - 1;
    auto [yij, ytij] = branch_admittance_indexed(i, j, g, b, n);
    out.y[i] -= yij;
    out.yt[i] -= ytij;
    auto [yji, ytji] = branch_admittance_indexed(j, i, g, b, n);
    out.y[j] -= yji;
    out.yt[j] -= ytji;
  }
  return out;
}

struct AssemblyBundle {
  int n_buses = 0;
  std::vector<Matrix> y_line, yt_line;  // flow from `from` to `to` of each line
  std::vector<Matrix> y_bus, yt_bus;
  std::vector<Matrix> e_bus;
  Eigen::Matrix2d a = lift_matrix();
  std::vector<Eigen::Matrix2d> cost_c;
  std::vector<double> cost_const;
};

inline AssemblyBundle assemble(const CaseData& c) {
  AssemblyBundle out;
  const int n = static_cast<int>(c.n_buses());
  out.n_buses = n;
  out.y_line.reserve(c.n_lines());
  out.yt_line.reserve(c.n_lines());
  for (const Line& l : c.lines) {
    auto [y, yt] = branch_admittance(l, n);
    out.y_line.push_back(std::move(y));
    out.yt_line.push_back(std::move(yt));
  }
  auto bm = bus_matrices(c);
  out.y_bus = std::move(bm.y);
  out.yt_bus = std::move(bm.yt);
  for (int i = 1; i <= n; ++i) out.e_bus.push_back(voltage_selector(i, n));
  for (const Generator& g : c.generators) {
    const auto cl = cost_matrix(g);
    out.cost_c.push_back(cl.C);
    out.cost_const.push_back(cl.c);
  }
  return out;
}

// Block order: P_{t,g} (t-major), then V_t, then the q segment, then s.
struct BlockLayout {
  int n_steps = 0, n_gens = 0, n_buses = 0;
  std::vector<int> block_sizes;  // PSD blocks only
  std::vector<int> offsets;      // diagonal offsets of every group, PSD blocks then q then s
  int total_dim = 0;

  int p_block(int t, int g) const { return t * n_gens + g; }
  int v_block(int t) const { return n_steps * n_gens + t; }
  int n_psd_blocks() const { return static_cast<int>(block_sizes.size()); }
  int q_index(int t, int g) const { return t * n_gens + g; }
  int s_index() const { return n_steps * n_gens; }
  int lp_size() const { return n_steps * n_gens + 1; }
  int group_count() const { return n_psd_blocks() + 2; }
};

inline BlockLayout build_layout(const CaseData& c) {
  BlockLayout L;
  L.n_steps = c.horizon;
  L.n_gens = static_cast<int>(c.n_gens());
  L.n_buses = static_cast<int>(c.n_buses());
  int off = 0;
  for (int k = 0; k < L.n_steps * L.n_gens; ++k) {
    L.block_sizes.push_back(2);
    L.offsets.push_back(off);
    off += 2;
  }
  for (int t = 0; t < L.n_steps; ++t) {
    L.block_sizes.push_back(2 * L.n_buses);
    L.offsets.push_back(off);
    off += 2 * L.n_buses;
  }
  L.offsets.push_back(off);  // q
  off += L.n_steps * L.n_gens;
  L.offsets.push_back(off);  // s
  off += 1;
  L.total_dim = off;
  return L;
}

inline void write_matrix_csv(std::ostream& os, const Matrix& m) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << m(i, j);
    }
    os << "\r\n";
  }
}

}  // namespace ucsdp
