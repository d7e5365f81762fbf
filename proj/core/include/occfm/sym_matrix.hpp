#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

#include "occfm/common.hpp"

namespace occfm {

// Dense symmetric matrix, packed upper triangle in row-major order.
// Symmetry is structural: there is one cell per unordered index pair, so the
// represented matrix cannot drift asymmetric.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int n) : n_(n), a_(packed_size(n), 0.0) {
    if (n < 0) throw DimensionMismatch("SymMatrix: negative dimension");
  }

  static std::size_t packed_size(int n) {
    return static_cast<std::size_t>(n) * (static_cast<std::size_t>(n) + 1) / 2;
  }

  static SymMatrix identity(int n) {
    SymMatrix m(n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }

  // Builds from a full row-major n*n array; requires exact symmetry.
  static SymMatrix from_dense(int n, const double* full);

  int dim() const { return n_; }
  std::size_t packed_count() const { return a_.size(); }
  const double* packed() const { return a_.data(); }
  double* packed() { return a_.data(); }

  double operator()(int i, int j) const {
    assert(i >= 0 && i < n_ && j >= 0 && j < n_);
    return i <= j ? a_[index(i, j)] : a_[index(j, i)];
  }

  // Mutable cell for the unordered pair {i, j}.
  double& at(int i, int j) {
    assert(i >= 0 && i < n_ && j >= 0 && j < n_);
    return i <= j ? a_[index(i, j)] : a_[index(j, i)];
  }

  void set_zero() { a_.assign(a_.size(), 0.0); }
  bool is_zero() const;

  void scale(double alpha);
  // this += alpha * other
  void add_scaled(double alpha, const SymMatrix& other);
  // this += alpha * x x^T for sparse x
  void add_rank1(double alpha, const SparseVec& x);
  // this += alpha * q q^T for dense q
  void add_rank1_dense(double alpha, const double* q);

  // out = M v (dense v of length dim)
  void matvec(const double* v, double* out) const;
  // out += alpha * M v
  void matvec_add(double alpha, const double* v, double* out) const;
  // x^T M x for sparse x
  double quad_form(const SparseVec& x) const;
  // <M, x x^T - diag(x o x)> = x^T M x - sum_k x_k^2 M_kk
  double quad_form_offdiag(const SparseVec& x) const;

  double trace() const;
  double frob_norm_sq() const;
  double frob_norm() const;
  double max_abs() const;

  std::vector<double> to_dense() const;

  bool operator==(const SymMatrix&) const = default;

 private:
  std::size_t index(int i, int j) const {
    // i <= j
    std::size_t ii = static_cast<std::size_t>(i);
    return ii * n_ - ii * (ii - 1) / 2 + static_cast<std::size_t>(j - i);
  }

  int n_ = 0;
  std::vector<double> a_;
};

// Returns M + alpha * x x^T; throws DimensionMismatch if an index of x falls
// outside [0, dim).
SymMatrix rank1_update(SymMatrix m, double alpha, const SparseVec& x);

double frob_distance(const SymMatrix& a, const SymMatrix& b);

}  // namespace occfm
