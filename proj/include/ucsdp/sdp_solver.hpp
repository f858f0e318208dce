#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <iostream>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "ucsdp/errors.hpp"
#include "ucsdp/milp.hpp"

namespace ucsdp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Symmetric matrix stored as its upper-triangle nonzeros (i <= j).
struct SymEntry {
  int i = 0, j = 0;
  double v = 0;
};

struct SparseSym {
  int dim = 0;
  std::vector<SymEntry> entries;

  static SparseSym from_dense(const Matrix& m, double drop_tol = 0.0) {
    SparseSym s;
    s.dim = static_cast<int>(m.rows());
    for (int j = 0; j < m.cols(); ++j)
      for (int i = 0; i <= j; ++i) {
        const double v = 0.5 * (m(i, j) + m(j, i));
        if (std::abs(v) > drop_tol) s.entries.push_back({i, j, v});
      }
    return s;
  }
  static SparseSym unit(int dim, int i, int j, double v = 1.0) {
    SparseSym s;
    s.dim = dim;
    s.entries.push_back({std::min(i, j), std::max(i, j), v});
    return s;
  }
  Matrix dense() const {
    Matrix m = Matrix::Zero(dim, dim);
    for (const auto& e : entries) {
      m(e.i, e.j) += e.v;
      if (e.i != e.j) m(e.j, e.i) += e.v;
    }
    return m;
  }
  double dot(const Matrix& X) const {
    double s = 0;
    for (const auto& e : entries) s += e.i == e.j ? e.v * X(e.i, e.i) : 2 * e.v * X(e.i, e.j);
    return s;
  }
  double frob2() const {
    double s = 0;
    for (const auto& e : entries) s += (e.i == e.j ? 1 : 2) * e.v * e.v;
    return s;
  }
};

struct BlockTerm {
  int block = 0;
  SparseSym mat;
};

struct LpTerm {
  int index = 0;
  double v = 0;
};

struct ConicRow {
  RowSense sense = RowSense::Eq;
  double rhs = 0;
  std::vector<BlockTerm> blocks;
  std::vector<LpTerm> lp;
};

// min Σ_b C_b • X_b + cᵀx  s.t. rows,  X_b ⪰ 0,  x ≥ 0.
struct ConicProgram {
  std::vector<int> block_sizes;
  int lp_size = 0;
  std::vector<SparseSym> c_blocks;
  std::vector<double> c_lp;
  std::vector<ConicRow> rows;

  void init_objective() {
    c_blocks.resize(block_sizes.size());
    for (std::size_t b = 0; b < block_sizes.size(); ++b) c_blocks[b].dim = block_sizes[b];
    c_lp.assign(lp_size, 0.0);
  }
  int add_row(ConicRow r) {
    rows.push_back(std::move(r));
    return static_cast<int>(rows.size()) - 1;
  }
  std::size_t n_rows() const { return rows.size(); }

  void check() const {
    if (c_blocks.size() != block_sizes.size() || static_cast<int>(c_lp.size()) != lp_size)
      throw DimensionError("objective does not match the block structure");
    auto check_sym = [&](const SparseSym& s, int b) {
      if (s.dim != block_sizes[b]) throw DimensionError("coefficient matrix has the wrong size");
      for (const auto& e : s.entries)
        if (e.i < 0 || e.j < e.i || e.j >= s.dim || !std::isfinite(e.v))
          throw DimensionError("bad symmetric entry");
    };
    for (std::size_t b = 0; b < block_sizes.size(); ++b) check_sym(c_blocks[b], static_cast<int>(b));
    for (const auto& r : rows) {
      if (!std::isfinite(r.rhs)) throw DimensionError("non-finite right-hand side");
      for (const auto& t : r.blocks) {
        if (t.block < 0 || t.block >= static_cast<int>(block_sizes.size()))
          throw DimensionError("row references a missing block");
        check_sym(t.mat, t.block);
      }
      for (const auto& t : r.lp)
        if (t.index < 0 || t.index >= lp_size || !std::isfinite(t.v))
          throw DimensionError("row references a missing LP coordinate");
    }
  }
};

enum class SdpStatus { Optimal, NumericalFailure };

struct ConicSolution {
  SdpStatus status = SdpStatus::NumericalFailure;
  std::vector<Matrix> X;  // primal PSD blocks
  Vector x;               // nonnegative LP part
  Vector y;               // one dual per row
  std::vector<Matrix> S;  // dual slack blocks
  Vector s;
  double primal_objective = 0, dual_objective = 0;
  double primal_residual = 0, dual_residual = 0, gap = 0;
  int iterations = 0;
};

struct SdpOptions {
  double eps_p = 1e-7, eps_d = 1e-7, eps_g = 1e-7;
  int max_iters = 100;
  int dense_schur_limit = 600;
  bool verbose = false;
};

namespace detail {

class InteriorPoint {
 public:
  InteriorPoint(const ConicProgram& prog, const SdpOptions& opt) : prog_(prog), opt_(opt) {
    prog.check();
    presolve();
    normalise();
    setup_schur();
  }

  ConicSolution run() {
    initial_point();
    ConicSolution best;
    double best_merit = kInf;
    int stall = 0;
    int it = 0;
    for (;; ++it) {
      residuals();
      const double merit = std::max({relp_, reld_, relgap_});
      if (opt_.verbose)
        std::cerr << std::scientific << std::setprecision(3) << "it " << it << " p " << relp_
                  << " d " << reld_ << " g " << relgap_ << " mu " << mu_ << " pobj " << pobj_
                  << " dobj " << dobj_ << '\n';
      const bool done = relp_ <= opt_.eps_p && reld_ <= opt_.eps_d && relgap_ <= opt_.eps_g;
      if (done || merit < best_merit) {
        best = postsolve(done ? SdpStatus::Optimal : SdpStatus::NumericalFailure, it);
        best_merit = merit;
      }
      if (done) return best;
      if (it >= opt_.max_iters || stall >= 5) return best;
      double ap = 0, ad = 0;
      if (!step(ap, ad)) return best;
      stall = (std::min(ap, ad) < 1e-8) ? stall + 1 : 0;
    }
  }

 private:
  struct Block {
    int orig = 0;
    int n = 0;
    std::vector<int> keep;  // reduced coordinate -> original coordinate
    std::vector<int> rows;  // rows touching the block, ascending
    std::vector<std::vector<SymEntry>> mats;
    std::vector<SymEntry> c;
    std::vector<int> pair_index;
    // iterate and scaling
    Matrix X, S, W, G, Ginv, Lx, Ls;
    Vector lambda;
  };

  // ---- presolve: eliminate rows fixing a diagonal entry to zero ----
  void presolve() {
    const int nb = static_cast<int>(prog_.block_sizes.size());
    std::vector<std::vector<char>> dead(nb);
    for (int b = 0; b < nb; ++b) dead[b].assign(prog_.block_sizes[b], 0);
    row_kind_.assign(prog_.rows.size(), kKeep);
    for (std::size_t r = 0; r < prog_.rows.size(); ++r) {
      const auto& row = prog_.rows[r];
      if (row.sense != RowSense::Eq || row.rhs != 0 || !row.lp.empty() || row.blocks.size() != 1)
        continue;
      const auto& m = row.blocks[0].mat;
      if (m.entries.size() != 1 || m.entries[0].i != m.entries[0].j || m.entries[0].v == 0) continue;
      const int b = row.blocks[0].block, k = m.entries[0].i;
      row_kind_[r] = dead[b][k] ? kDuplicateRef : kReference;
      dead[b][k] = 1;
    }
    coord_map_.resize(nb);
    for (int b = 0; b < nb; ++b) {
      Block blk;
      blk.orig = b;
      coord_map_[b].assign(prog_.block_sizes[b], -1);
      for (int k = 0; k < prog_.block_sizes[b]; ++k)
        if (!dead[b][k]) {
          coord_map_[b][k] = static_cast<int>(blk.keep.size());
          blk.keep.push_back(k);
        }
      blk.n = static_cast<int>(blk.keep.size());
      block_of_orig_.push_back(blk.n > 0 ? static_cast<int>(blocks_.size()) : -1);
      if (blk.n > 0) blocks_.push_back(std::move(blk));
    }
    auto reduce = [&](int b, const std::vector<SymEntry>& in) {
      std::vector<SymEntry> out;
      for (const auto& e : in) {
        const int i = coord_map_[b][e.i], j = coord_map_[b][e.j];
        if (i < 0 || j < 0) continue;
        out.push_back({std::min(i, j), std::max(i, j), e.v});
      }
      return out;
    };
    for (int b = 0; b < nb; ++b)
      if (block_of_orig_[b] >= 0) blocks_[block_of_orig_[b]].c = reduce(b, prog_.c_blocks[b].entries);

    // LP columns: original LP coordinates then one slack per inequality row.
    lp_cols_.assign(prog_.lp_size, {});
    c_lp_.assign(prog_.c_lp.begin(), prog_.c_lp.end());
    row_map_.assign(prog_.rows.size(), -1);
    for (std::size_t r = 0; r < prog_.rows.size(); ++r) {
      if (row_kind_[r] != kKeep) continue;
      const auto& row = prog_.rows[r];
      std::vector<std::pair<int, std::vector<SymEntry>>> terms;
      bool any = !row.lp.empty();
      for (const auto& t : row.blocks) {
        if (block_of_orig_[t.block] < 0) continue;
        auto red = reduce(t.block, t.mat.entries);
        if (red.empty()) continue;
        any = true;
        terms.push_back({block_of_orig_[t.block], std::move(red)});
      }
      if (!any && row.sense != RowSense::Eq) {
        if ((row.sense == RowSense::Le && row.rhs >= 0) || (row.sense == RowSense::Ge && row.rhs <= 0))
          continue;  // satisfied by its slack alone with zero dual
      }
      if (!any && row.sense == RowSense::Eq && row.rhs == 0) continue;
      const int i = static_cast<int>(b_.size());
      row_map_[r] = i;
      b_.push_back(row.rhs);
      for (auto& [blk, ents] : terms) {
        // merge duplicate block terms of the same row
        auto& B = blocks_[blk];
        if (!B.rows.empty() && B.rows.back() == i) {
          auto& dst = B.mats.back();
          dst.insert(dst.end(), ents.begin(), ents.end());
        } else {
          B.rows.push_back(i);
          B.mats.push_back(std::move(ents));
        }
      }
      for (const auto& t : row.lp)
        if (t.v != 0) lp_cols_[t.index].push_back({i, t.v});
      if (row.sense != RowSense::Eq) {
        lp_cols_.push_back({{i, row.sense == RowSense::Le ? 1.0 : -1.0}});
        c_lp_.push_back(0.0);
      }
    }
    m_ = static_cast<int>(b_.size());
    nl_ = static_cast<int>(lp_cols_.size());
    // Merge duplicate coordinates inside one LP column (same row listed twice).
    for (auto& col : lp_cols_) {
      std::sort(col.begin(), col.end());
      std::vector<std::pair<int, double>> merged;
      for (auto& e : col) {
        if (!merged.empty() && merged.back().first == e.first) merged.back().second += e.second;
        else merged.push_back(e);
      }
      col.swap(merged);
    }
  }

  // ---- row / objective normalisation ----
  void normalise() {
    row_scale_.assign(m_, 0.0);
    for (auto& B : blocks_)
      for (std::size_t a = 0; a < B.rows.size(); ++a) {
        double f = 0;
        for (const auto& e : B.mats[a]) f += (e.i == e.j ? 1 : 2) * e.v * e.v;
        row_scale_[B.rows[a]] += f;
      }
    for (const auto& col : lp_cols_)
      for (auto [i, v] : col) row_scale_[i] += v * v;
    for (int i = 0; i < m_; ++i) row_scale_[i] = row_scale_[i] > 0 ? 1.0 / std::sqrt(row_scale_[i]) : 1.0;
    for (auto& B : blocks_)
      for (std::size_t a = 0; a < B.rows.size(); ++a)
        for (auto& e : B.mats[a]) e.v *= row_scale_[B.rows[a]];
    for (auto& col : lp_cols_)
      for (auto& [i, v] : col) v *= row_scale_[i];
    for (int i = 0; i < m_; ++i) b_[i] *= row_scale_[i];

    double cn = 0;
    for (const auto& B : blocks_)
      for (const auto& e : B.c) cn = std::max(cn, std::abs(e.v));
    for (double v : c_lp_) cn = std::max(cn, std::abs(v));
    obj_scale_ = std::max(1.0, cn);
    for (auto& B : blocks_)
      for (auto& e : B.c) e.v /= obj_scale_;
    for (double& v : c_lp_) v /= obj_scale_;
    double bn = 0;
    for (double v : b_) bn = std::max(bn, std::abs(v));
    b_scale_ = std::max(1.0, bn);
    for (double& v : b_) v /= b_scale_;

    bnorm_ = 0;
    for (double v : b_) bnorm_ += v * v;
    bnorm_ = std::sqrt(bnorm_);
    cnorm_ = 0;
    for (const auto& B : blocks_)
      for (const auto& e : B.c) cnorm_ += (e.i == e.j ? 1 : 2) * e.v * e.v;
    for (double v : c_lp_) cnorm_ += v * v;
    cnorm_ = std::sqrt(cnorm_);
    for (auto& B : blocks_) {
      Matrix Cd = Matrix::Zero(B.n, B.n);
      add_sym(Cd, B.c, 1.0);
      cdense_.push_back(std::move(Cd));
    }
  }

  static void add_sym(Matrix& M, const std::vector<SymEntry>& ents, double f) {
    for (const auto& e : ents) {
      M(e.i, e.j) += f * e.v;
      if (e.i != e.j) M(e.j, e.i) += f * e.v;
    }
  }
  static double dot_sym(const std::vector<SymEntry>& ents, const Matrix& X) {
    double s = 0;
    for (const auto& e : ents) s += e.i == e.j ? e.v * X(e.i, e.i) : 2 * e.v * X(e.i, e.j);
    return s;
  }

  // ---- Schur complement pattern ----
  void setup_schur() {
    dense_ = m_ <= opt_.dense_schur_limit;
    const int dense_col = std::max(40, m_ / 10);
    lp_dense_.assign(nl_, 0);
    for (int k = 0; k < nl_; ++k)
      lp_dense_[k] = !dense_ && static_cast<int>(lp_cols_[k].size()) > dense_col;
    if (dense_) {
      Md_ = Matrix::Zero(m_, m_);
      auto idx = [&](int i, int j) { return j * m_ + i; };
      for (auto& B : blocks_) build_pairs(B.rows, B.pair_index, idx);
      lp_pair_index_.resize(nl_);
      for (int k = 0; k < nl_; ++k) {
        std::vector<int> rows;
        for (auto [i, v] : lp_cols_[k]) rows.push_back(i);
        build_pairs(rows, lp_pair_index_[k], idx);
      }
      return;
    }
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < m_; ++i) trip.emplace_back(i, i, 1.0);
    auto collect = [&](const std::vector<int>& rows) {
      for (std::size_t c = 0; c < rows.size(); ++c)
        for (std::size_t a = c; a < rows.size(); ++a) trip.emplace_back(rows[a], rows[c], 1.0);
    };
    for (auto& B : blocks_) collect(B.rows);
    for (int k = 0; k < nl_; ++k) {
      if (lp_dense_[k]) continue;
      std::vector<int> rows;
      for (auto [i, v] : lp_cols_[k]) rows.push_back(i);
      collect(rows);
    }
    Ms_.resize(m_, m_);
    Ms_.setFromTriplets(trip.begin(), trip.end());
    Ms_.makeCompressed();
    auto idx = [&](int i, int j) {
      const int* inner = Ms_.innerIndexPtr();
      const int beg = Ms_.outerIndexPtr()[j], end = Ms_.outerIndexPtr()[j + 1];
      const int* p = std::lower_bound(inner + beg, inner + end, i);
      return static_cast<int>(p - inner);
    };
    for (auto& B : blocks_) build_pairs(B.rows, B.pair_index, idx);
    lp_pair_index_.resize(nl_);
    for (int k = 0; k < nl_; ++k) {
      if (lp_dense_[k]) continue;
      std::vector<int> rows;
      for (auto [i, v] : lp_cols_[k]) rows.push_back(i);
      build_pairs(rows, lp_pair_index_[k], idx);
    }
    for (int i = 0; i < m_; ++i) diag_index_.push_back(idx(i, i));
    ldlt_.analyzePattern(Ms_);
  }

  template <class F>
  static void build_pairs(const std::vector<int>& rows, std::vector<int>& out, F idx) {
    out.clear();
    for (std::size_t c = 0; c < rows.size(); ++c)
      for (std::size_t a = c; a < rows.size(); ++a) out.push_back(idx(rows[a], rows[c]));
  }

  // ---- starting point ----
  void initial_point() {
    for (auto& B : blocks_) {
      double cmax = 0, amax = 0;
      for (std::size_t a = 0; a < B.rows.size(); ++a) {
        double f = 0;
        for (const auto& e : B.mats[a]) f += (e.i == e.j ? 1 : 2) * e.v * e.v;
        amax = std::max(amax, (1 + std::abs(b_[B.rows[a]])) / (1 + std::sqrt(f)));
      }
      cmax = cdense_[&B - blocks_.data()].norm();
      const double n = B.n;
      const double xi = std::max({10.0, std::sqrt(n), n * amax});
      const double eta = std::max({10.0, std::sqrt(n), cmax});
      B.X = xi * Matrix::Identity(B.n, B.n);
      B.S = eta * Matrix::Identity(B.n, B.n);
    }
    x_ = Vector::Constant(nl_, 10.0);
    s_ = Vector::Constant(nl_, 10.0);
    y_ = Vector::Zero(m_);
  }

  // ---- operators ----
  Vector apply_A(const std::vector<Matrix>& Xb, const Vector& x) const {
    Vector out = Vector::Zero(m_);
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const auto& B = blocks_[b];
      for (std::size_t a = 0; a < B.rows.size(); ++a) out[B.rows[a]] += dot_sym(B.mats[a], Xb[b]);
    }
    for (int k = 0; k < nl_; ++k)
      if (x[k] != 0)
        for (auto [i, v] : lp_cols_[k]) out[i] += v * x[k];
    return out;
  }
  void apply_At(const Vector& y, std::vector<Matrix>& Sb, Vector& s) const {
    Sb.resize(blocks_.size());
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const auto& B = blocks_[b];
      Sb[b] = Matrix::Zero(B.n, B.n);
      for (std::size_t a = 0; a < B.rows.size(); ++a) add_sym(Sb[b], B.mats[a], y[B.rows[a]]);
    }
    s = Vector::Zero(nl_);
    for (int k = 0; k < nl_; ++k)
      for (auto [i, v] : lp_cols_[k]) s[k] += v * y[i];
  }

  void residuals() {
    std::vector<Matrix> Xb(blocks_.size());
    for (std::size_t b = 0; b < blocks_.size(); ++b) Xb[b] = blocks_[b].X;
    const Vector ax = apply_A(Xb, x_);
    rp_ = Vector::Map(b_.data(), m_) - ax;
    std::vector<Matrix> aty;
    Vector atyl;
    apply_At(y_, aty, atyl);
    Rd_.resize(blocks_.size());
    double dn = 0;
    pobj_ = 0;
    double xs = 0;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      Rd_[b] = cdense_[b] - aty[b] - blocks_[b].S;
      dn += Rd_[b].squaredNorm();
      pobj_ += (cdense_[b].cwiseProduct(blocks_[b].X)).sum();
      xs += (blocks_[b].X.cwiseProduct(blocks_[b].S)).sum();
    }
    rdl_ = Vector::Map(c_lp_.data(), nl_) - atyl - s_;
    dn += rdl_.squaredNorm();
    pobj_ += Vector::Map(c_lp_.data(), nl_).dot(x_);
    xs += x_.dot(s_);
    dobj_ = Vector::Map(b_.data(), m_).dot(y_);
    relp_ = rp_.norm() / (1 + bnorm_);
    reld_ = std::sqrt(dn) / (1 + cnorm_);
    relgap_ = std::abs(pobj_ - dobj_) / (1 + std::abs(pobj_) + std::abs(dobj_));
    int ntot = nl_;
    for (const auto& B : blocks_) ntot += B.n;
    mu_ = xs / std::max(1, ntot);
    ntot_ = ntot;
  }

  bool nt_scaling() {
    for (auto& B : blocks_) {
      Eigen::LLT<Matrix> lx(B.X), ls(B.S);
      if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) return false;
      B.Lx = lx.matrixL();
      B.Ls = ls.matrixL();
      Eigen::JacobiSVD<Matrix> svd(B.Ls.transpose() * B.Lx, Eigen::ComputeFullU | Eigen::ComputeFullV);
      B.lambda = svd.singularValues();
      if (B.lambda.minCoeff() <= 0) return false;
      const Vector dinv = B.lambda.cwiseSqrt().cwiseInverse();
      B.G = B.Lx * svd.matrixV() * dinv.asDiagonal();
      const Matrix Linv = B.Lx.triangularView<Eigen::Lower>().solve(Matrix::Identity(B.n, B.n));
      B.Ginv = B.lambda.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() * Linv;
      B.W = B.G * B.G.transpose();
      B.W = 0.5 * (B.W + B.W.transpose()).eval();
    }
    return true;
  }

  bool assemble_and_factor() {
    double* val;
    if (dense_) {
      Md_.setZero();
      val = Md_.data();
    } else {
      std::fill(Ms_.valuePtr(), Ms_.valuePtr() + Ms_.nonZeros(), 0.0);
      val = Ms_.valuePtr();
    }
    for (auto& B : blocks_) {
      const int r = static_cast<int>(B.rows.size());
      const Matrix& W = B.W;
      int cnt = 0;
      Matrix Q(B.n, B.n);
      for (int c = 0; c < r; ++c) {
        Q.setZero();
        for (const auto& e : B.mats[c]) {
          if (e.i == e.j) {
            Q.noalias() += e.v * W.col(e.i) * W.row(e.i);
          } else {
            Q.noalias() += e.v * W.col(e.i) * W.row(e.j);
            Q.noalias() += e.v * W.col(e.j) * W.row(e.i);
          }
        }
        for (int a = c; a < r; ++a) val[B.pair_index[cnt++]] += dot_sym(B.mats[a], Q);
      }
    }
    lp_w_ = x_.cwiseQuotient(s_);
    for (int k = 0; k < nl_; ++k) {
      if (lp_dense_[k]) continue;
      const auto& col = lp_cols_[k];
      int cnt = 0;
      for (std::size_t c = 0; c < col.size(); ++c)
        for (std::size_t a = c; a < col.size(); ++a)
          val[lp_pair_index_[k][cnt++]] += lp_w_[k] * col[a].second * col[c].second;
    }
    if (dense_) {
      for (double reg : {0.0, 1e-14, 1e-12, 1e-10}) {
        Matrix M = Md_;
        if (reg > 0) M.diagonal().array() += reg * std::max(1.0, Md_.diagonal().maxCoeff());
        dense_llt_.compute(M.selfadjointView<Eigen::Lower>());
        if (dense_llt_.info() == Eigen::Success) return true;
      }
      return false;
    }
    Ms_base_diag_.resize(m_);
    for (int i = 0; i < m_; ++i) Ms_base_diag_[i] = val[diag_index_[i]];
    double dmax = Ms_base_diag_.maxCoeff();
    bool ok = false;
    for (double reg : {0.0, 1e-14, 1e-12, 1e-10}) {
      for (int i = 0; i < m_; ++i) val[diag_index_[i]] = Ms_base_diag_[i] + reg * std::max(1.0, dmax);
      ldlt_.factorize(Ms_);
      if (ldlt_.info() == Eigen::Success && (ldlt_.vectorD().array() > 0).all()) {
        ok = true;
        break;
      }
    }
    if (!ok) return false;
    // Low-rank part from dense LP columns.
    dense_ids_.clear();
    for (int k = 0; k < nl_; ++k)
      if (lp_dense_[k]) dense_ids_.push_back(k);
    const int kd = static_cast<int>(dense_ids_.size());
    U_ = Matrix::Zero(m_, kd);
    for (int c = 0; c < kd; ++c)
      for (auto [i, v] : lp_cols_[dense_ids_[c]]) U_(i, c) = v;
    if (kd > 0) {
      Z_ = ldlt_.solve(U_);
      Matrix K = U_.transpose() * Z_;
      for (int c = 0; c < kd; ++c) K(c, c) += 1.0 / lp_w_[dense_ids_[c]];
      smw_.compute(K);
    }
    return true;
  }

  Vector schur_mult(const Vector& v) const {
    if (dense_) return Md_.selfadjointView<Eigen::Lower>() * v;
    Vector out = Ms_.selfadjointView<Eigen::Lower>() * v;
    // remove the diagonal regularisation effect: use the true diagonal
    for (int i = 0; i < m_; ++i) out[i] += (Ms_base_diag_[i] - Ms_.valuePtr()[diag_index_[i]]) * v[i];
    for (std::size_t c = 0; c < dense_ids_.size(); ++c) {
      const double w = lp_w_[dense_ids_[c]];
      out.noalias() += (w * U_.col(c).dot(v)) * U_.col(c);
    }
    return out;
  }

  Vector schur_solve_once(const Vector& r) const {
    if (dense_) return dense_llt_.solve(r);
    Vector z = ldlt_.solve(r);
    if (!dense_ids_.empty()) z -= Z_ * smw_.solve(U_.transpose() * z);
    return z;
  }

  Vector schur_solve(const Vector& r) const {
    Vector z = schur_solve_once(r);
    for (int k = 0; k < 3; ++k) {
      const Vector res = r - schur_mult(z);
      if (res.norm() <= 1e-15 * (1 + r.norm())) break;
      z += schur_solve_once(res);
    }
    return z;
  }

  struct Direction {
    std::vector<Matrix> dX, dS;
    Vector dx, ds, dy;
  };

  // Solve for the search direction given the complementarity targets H (blocks) and h (LP).
  Direction solve_direction(const std::vector<Matrix>& H, const Vector& h) const {
    std::vector<Matrix> WRW(blocks_.size());
    for (std::size_t b = 0; b < blocks_.size(); ++b)
      WRW[b] = blocks_[b].W * Rd_[b] * blocks_[b].W;
    const Vector wr = lp_w_.cwiseProduct(rdl_);
    std::vector<Matrix> HmW(blocks_.size());
    for (std::size_t b = 0; b < blocks_.size(); ++b) HmW[b] = H[b] - WRW[b];
    const Vector rhs = rp_ - apply_A(HmW, h - wr);
    Direction d;
    d.dy = schur_solve(rhs);
    apply_At(d.dy, d.dS, d.ds);
    d.dX.resize(blocks_.size());
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      d.dS[b] = Rd_[b] - d.dS[b];
      d.dX[b] = H[b] - blocks_[b].W * d.dS[b] * blocks_[b].W;
      d.dX[b] = 0.5 * (d.dX[b] + d.dX[b].transpose()).eval();
      d.dS[b] = 0.5 * (d.dS[b] + d.dS[b].transpose()).eval();
    }
    d.ds = rdl_ - d.ds;
    d.dx = h - lp_w_.cwiseProduct(d.ds);
    return d;
  }

  static double max_step_psd(const Matrix& L, const Matrix& D) {
    const Matrix T = L.triangularView<Eigen::Lower>().solve(
        L.triangularView<Eigen::Lower>().solve(D).transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (T + T.transpose()), Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues()[0];
    return lmin >= 0 ? kInf : -1.0 / lmin;
  }
  static double max_step_lp(const Vector& v, const Vector& dv) {
    double a = kInf;
    for (Eigen::Index k = 0; k < v.size(); ++k)
      if (dv[k] < 0) a = std::min(a, -v[k] / dv[k]);
    return a;
  }
  void step_lengths(const Direction& d, double& ap, double& ad) const {
    ap = max_step_lp(x_, d.dx);
    ad = max_step_lp(s_, d.ds);
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      ap = std::min(ap, max_step_psd(blocks_[b].Lx, d.dX[b]));
      ad = std::min(ad, max_step_psd(blocks_[b].Ls, d.dS[b]));
    }
  }

  bool step(double& ap_out, double& ad_out) {
    if (!nt_scaling()) return false;
    if (!assemble_and_factor()) return false;
    // predictor
    std::vector<Matrix> H(blocks_.size());
    for (std::size_t b = 0; b < blocks_.size(); ++b) H[b] = -blocks_[b].X;
    Vector h = -x_;
    Direction pred = solve_direction(H, h);
    double ap, ad;
    step_lengths(pred, ap, ad);
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    double xs_aff = 0;
    for (std::size_t b = 0; b < blocks_.size(); ++b)
      xs_aff += ((blocks_[b].X + ap * pred.dX[b]).cwiseProduct(blocks_[b].S + ad * pred.dS[b])).sum();
    xs_aff += (x_ + ap * pred.dx).dot(s_ + ad * pred.ds);
    const double mu_aff = xs_aff / ntot_;
    const double expon = std::max(1.0, 3 * std::min(ap, ad) * std::min(ap, ad));
    const double sigma = std::min(1.0, std::pow(std::max(0.0, mu_aff / mu_), expon));
    // corrector
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const auto& B = blocks_[b];
      const Matrix dXt = B.Ginv * pred.dX[b] * B.Ginv.transpose();
      const Matrix dSt = B.G.transpose() * pred.dS[b] * B.G;
      const Matrix prod = dXt * dSt;
      Matrix R = -0.5 * (prod + prod.transpose());
      for (int i = 0; i < B.n; ++i) R(i, i) += sigma * mu_ - B.lambda[i] * B.lambda[i];
      Matrix Ut(B.n, B.n);
      for (int i = 0; i < B.n; ++i)
        for (int j = 0; j < B.n; ++j) Ut(i, j) = 2 * R(i, j) / (B.lambda[i] + B.lambda[j]);
      H[b] = B.G * Ut * B.G.transpose();
      H[b] = 0.5 * (H[b] + H[b].transpose()).eval();
    }
    for (int k = 0; k < nl_; ++k)
      h[k] = (sigma * mu_ - x_[k] * s_[k] - pred.dx[k] * pred.ds[k]) / s_[k];
    Direction d = solve_direction(H, h);
    step_lengths(d, ap, ad);
    const double gamma = 0.9 + 0.09 * std::min(std::min(1.0, ap), std::min(1.0, ad));
    ap = std::min(1.0, gamma * ap);
    ad = std::min(1.0, gamma * ad);
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      auto& B = blocks_[b];
      B.X += ap * d.dX[b];
      B.S += ad * d.dS[b];
      B.X = 0.5 * (B.X + B.X.transpose()).eval();
      B.S = 0.5 * (B.S + B.S.transpose()).eval();
    }
    x_ += ap * d.dx;
    s_ += ad * d.ds;
    y_ += ad * d.dy;
    ap_out = ap;
    ad_out = ad;
    return true;
  }

  // ---- back to the caller's coordinates ----
  ConicSolution postsolve(SdpStatus st, int iters) const {
    ConicSolution out;
    out.status = st;
    out.iterations = iters;
    out.primal_residual = relp_;
    out.dual_residual = reld_;
    out.gap = relgap_;
    const int nb = static_cast<int>(prog_.block_sizes.size());
    const double xs = b_scale_, ss = obj_scale_;
    out.X.resize(nb);
    for (int b = 0; b < nb; ++b) {
      out.X[b] = Matrix::Zero(prog_.block_sizes[b], prog_.block_sizes[b]);
      const int rb = block_of_orig_[b];
      if (rb < 0) continue;
      const auto& B = blocks_[rb];
      for (int i = 0; i < B.n; ++i)
        for (int j = 0; j < B.n; ++j) out.X[b](B.keep[i], B.keep[j]) = xs * B.X(i, j);
    }
    out.x = xs * x_.head(prog_.lp_size);
    out.s = ss * s_.head(prog_.lp_size);
    out.y = Vector::Zero(prog_.rows.size());
    for (std::size_t r = 0; r < prog_.rows.size(); ++r)
      if (row_map_[r] >= 0) out.y[r] = ss * row_scale_[row_map_[r]] * y_[row_map_[r]];

    // Dual slack from the original data, then choose the reference-row duals so S ⪰ 0.
    out.S.resize(nb);
    for (int b = 0; b < nb; ++b) out.S[b] = prog_.c_blocks[b].dense();
    for (std::size_t r = 0; r < prog_.rows.size(); ++r) {
      if (out.y[r] == 0) continue;
      for (const auto& t : prog_.rows[r].blocks) {
        for (const auto& e : t.mat.entries) {
          out.S[t.block](e.i, e.j) -= out.y[r] * e.v;
          if (e.i != e.j) out.S[t.block](e.j, e.i) -= out.y[r] * e.v;
        }
      }
    }
    for (int b = 0; b < nb; ++b) {
      std::vector<int> K, J;
      for (int k = 0; k < prog_.block_sizes[b]; ++k) (coord_map_[b][k] < 0 ? K : J).push_back(k);
      if (K.empty()) continue;
      Matrix& Sf = out.S[b];
      std::vector<double> target(K.size());
      if (!J.empty()) {
        const auto& B = blocks_[block_of_orig_[b]];
        const Matrix Sjj = ss * B.S;  // interior iterate, positive definite
        Matrix Skj(K.size(), J.size());
        for (std::size_t a = 0; a < K.size(); ++a)
          for (std::size_t c = 0; c < J.size(); ++c) Skj(a, c) = Sf(K[a], J[c]);
        Eigen::LDLT<Matrix> ldlt(Sjj);
        const Matrix T = Skj * ldlt.solve(Skj.transpose());
        for (std::size_t a = 0; a < K.size(); ++a) {
          double off = 0;
          for (std::size_t c = 0; c < K.size(); ++c)
            if (c != a) off += std::abs(Sf(K[a], K[c]) - T(a, c));
          target[a] = T(a, a) + off + 1e-9 * (1 + std::abs(T(a, a)));
        }
      } else {
        for (std::size_t a = 0; a < K.size(); ++a) {
          double off = 0;
          for (std::size_t c = 0; c < K.size(); ++c)
            if (c != a) off += std::abs(Sf(K[a], K[c]));
          target[a] = off + 1e-9;
        }
      }
      for (std::size_t a = 0; a < K.size(); ++a) {
        const int k = K[a];
        // find the reference row for (b, k)
        for (std::size_t r = 0; r < prog_.rows.size(); ++r) {
          if (row_kind_[r] != kReference) continue;
          const auto& t = prog_.rows[r].blocks[0];
          if (t.block != b || t.mat.entries[0].i != k) continue;
          const double v = t.mat.entries[0].v;
          const double yref = (Sf(k, k) - target[a]) / v;
          out.y[r] = yref;
          Sf(k, k) = target[a];
          break;
        }
      }
      if (!J.empty()) {
        // Kept coordinates: use the engine's dual slack (PSD by construction).
        const auto& B = blocks_[block_of_orig_[b]];
        for (std::size_t i = 0; i < J.size(); ++i)
          for (std::size_t j = 0; j < J.size(); ++j) Sf(J[i], J[j]) = ss * B.S(i, j);
      }
    }
    for (int b = 0; b < nb; ++b) {
      const int rb = block_of_orig_[b];
      if (rb >= 0 && blocks_[rb].n == prog_.block_sizes[b]) out.S[b] = ss * blocks_[rb].S;
    }
    double pobj = 0;
    for (int b = 0; b < nb; ++b) pobj += prog_.c_blocks[b].dot(out.X[b]);
    for (int k = 0; k < prog_.lp_size; ++k) pobj += prog_.c_lp[k] * out.x[k];
    double dobj = 0;
    for (std::size_t r = 0; r < prog_.rows.size(); ++r) dobj += prog_.rows[r].rhs * out.y[r];
    out.primal_objective = pobj;
    out.dual_objective = dobj;
    return out;
  }

  enum RowKind : unsigned char { kKeep, kReference, kDuplicateRef };

  const ConicProgram& prog_;
  SdpOptions opt_;
  std::vector<RowKind> row_kind_;
  std::vector<std::vector<int>> coord_map_;
  std::vector<int> block_of_orig_;
  std::vector<Block> blocks_;
  std::vector<int> row_map_;
  std::vector<double> b_, c_lp_, row_scale_;
  std::vector<std::vector<std::pair<int, double>>> lp_cols_;
  std::vector<Matrix> cdense_;
  int m_ = 0, nl_ = 0, ntot_ = 1;
  double obj_scale_ = 1, b_scale_ = 1, bnorm_ = 0, cnorm_ = 0;

  bool dense_ = true;
  std::vector<char> lp_dense_;
  std::vector<std::vector<int>> lp_pair_index_;
  Matrix Md_;
  Eigen::LLT<Matrix> dense_llt_;
  Eigen::SparseMatrix<double> Ms_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt_;
  std::vector<int> diag_index_;
  Vector Ms_base_diag_;
  std::vector<int> dense_ids_;
  Matrix U_, Z_;
  Eigen::LDLT<Matrix> smw_;

  Vector x_, s_, y_, lp_w_;
  Vector rp_, rdl_;
  std::vector<Matrix> Rd_;
  double relp_ = 0, reld_ = 0, relgap_ = 0, mu_ = 0, pobj_ = 0, dobj_ = 0;
};

}  // namespace detail

inline ConicSolution solve_sdp(const ConicProgram& prog, const SdpOptions& opt = {}) {
  detail::InteriorPoint ipm(prog, opt);
  return ipm.run();
}

// Plain-text dump: block sizes, objective and rows as sparse triplets.
inline void write_conic(const ConicProgram& p, std::ostream& os) {
  os << std::setprecision(17);
  os << "blocks " << p.block_sizes.size();
  for (int n : p.block_sizes) os << ' ' << n;
  os << "\nlp " << p.lp_size << "\nrows " << p.rows.size() << "\nobjective\n";
  for (std::size_t b = 0; b < p.c_blocks.size(); ++b)
    for (const auto& e : p.c_blocks[b].entries)
      os << "  B" << b << ' ' << e.i << ' ' << e.j << ' ' << e.v << '\n';
  for (int k = 0; k < p.lp_size; ++k)
    if (p.c_lp[k] != 0) os << "  L " << k << ' ' << p.c_lp[k] << '\n';
  for (std::size_t r = 0; r < p.rows.size(); ++r) {
    const auto& row = p.rows[r];
    os << "row " << r << ' '
       << (row.sense == RowSense::Eq ? "=" : row.sense == RowSense::Le ? "<=" : ">=") << ' '
       << row.rhs << '\n';
    for (const auto& t : row.blocks)
      for (const auto& e : t.mat.entries)
        os << "  B" << t.block << ' ' << e.i << ' ' << e.j << ' ' << e.v << '\n';
    for (const auto& t : row.lp) os << "  L " << t.index << ' ' << t.v << '\n';
  }
}

}  // namespace ucsdp
