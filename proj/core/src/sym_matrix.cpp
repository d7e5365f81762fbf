#include "occfm/sym_matrix.hpp"

#include <algorithm>
#include <cmath>

namespace occfm {

SymMatrix SymMatrix::from_dense(int n, const double* full) {
  SymMatrix m(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double upper = full[static_cast<std::size_t>(i) * n + j];
      double lower = full[static_cast<std::size_t>(j) * n + i];
      if (upper != lower)
        throw DimensionMismatch("SymMatrix::from_dense: input not symmetric");
      m.at(i, j) = upper;
    }
  }
  return m;
}

bool SymMatrix::is_zero() const {
  return std::all_of(a_.begin(), a_.end(), [](double v) { return v == 0.0; });
}

void SymMatrix::scale(double alpha) {
  for (double& v : a_) v *= alpha;
}

void SymMatrix::add_scaled(double alpha, const SymMatrix& other) {
  if (other.n_ != n_)
    throw DimensionMismatch("SymMatrix::add_scaled: dimension mismatch");
  for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += alpha * other.a_[k];
}

void SymMatrix::add_rank1(double alpha, const SparseVec& x) {
  const std::size_t nnz = x.nnz();
  for (std::size_t k = 0; k < nnz; ++k) {
    const int i = x.idx[k];
    if (i < 0 || i >= n_)
      throw DimensionMismatch("SymMatrix::add_rank1: index out of range");
    const double ax = alpha * x.val[k];
    const std::size_t row = index(i, i);
    for (std::size_t l = k; l < nnz; ++l)
      a_[row + static_cast<std::size_t>(x.idx[l] - i)] += ax * x.val[l];
  }
}

void SymMatrix::add_rank1_dense(double alpha, const double* q) {
  double* row = a_.data();
  for (int i = 0; i < n_; ++i) {
    const double aq = alpha * q[i];
    for (int j = i; j < n_; ++j) row[j - i] += aq * q[j];
    row += n_ - i;
  }
}

void SymMatrix::matvec(const double* v, double* out) const {
  std::fill(out, out + n_, 0.0);
  matvec_add(1.0, v, out);
}

void SymMatrix::matvec_add(double alpha, const double* v, double* out) const {
  const double* row = a_.data();
  for (int i = 0; i < n_; ++i) {
    const double vi = v[i];
    double acc = row[0] * vi;
    for (int j = i + 1; j < n_; ++j) {
      const double a = row[j - i];
      acc += a * v[j];
      out[j] += alpha * a * vi;
    }
    out[i] += alpha * acc;
    row += n_ - i;
  }
}

double SymMatrix::quad_form(const SparseVec& x) const {
  const std::size_t nnz = x.nnz();
  double diag = 0.0, off = 0.0;
  for (std::size_t k = 0; k < nnz; ++k) {
    const int i = x.idx[k];
    const double xk = x.val[k];
    const std::size_t row = index(i, i);
    diag += xk * xk * a_[row];
    double acc = 0.0;
    for (std::size_t l = k + 1; l < nnz; ++l)
      acc += a_[row + static_cast<std::size_t>(x.idx[l] - i)] * x.val[l];
    off += xk * acc;
  }
  return diag + 2.0 * off;
}

double SymMatrix::quad_form_offdiag(const SparseVec& x) const {
  const std::size_t nnz = x.nnz();
  double off = 0.0;
  for (std::size_t k = 0; k < nnz; ++k) {
    const int i = x.idx[k];
    const std::size_t row = index(i, i);
    double acc = 0.0;
    for (std::size_t l = k + 1; l < nnz; ++l)
      acc += a_[row + static_cast<std::size_t>(x.idx[l] - i)] * x.val[l];
    off += x.val[k] * acc;
  }
  return 2.0 * off;
}

double SymMatrix::trace() const {
  double t = 0.0;
  std::size_t k = 0;
  for (int i = 0; i < n_; ++i) {
    t += a_[k];
    k += static_cast<std::size_t>(n_ - i);
  }
  return t;
}

double SymMatrix::frob_norm_sq() const {
  // Off-diagonal packed cells count twice.
  double diag = 0.0, off = 0.0;
  const double* row = a_.data();
  for (int i = 0; i < n_; ++i) {
    diag += row[0] * row[0];
    for (int j = i + 1; j < n_; ++j) off += row[j - i] * row[j - i];
    row += n_ - i;
  }
  return diag + 2.0 * off;
}

double SymMatrix::frob_norm() const { return std::sqrt(frob_norm_sq()); }

double SymMatrix::max_abs() const {
  double m = 0.0;
  for (double v : a_) m = std::max(m, std::fabs(v));
  return m;
}

std::vector<double> SymMatrix::to_dense() const {
  std::vector<double> full(static_cast<std::size_t>(n_) * n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      full[static_cast<std::size_t>(i) * n_ + j] = (*this)(i, j);
  return full;
}

SymMatrix rank1_update(SymMatrix m, double alpha, const SparseVec& x) {
  m.add_rank1(alpha, x);
  return m;
}

double frob_distance(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim())
    throw DimensionMismatch("frob_distance: dimension mismatch");
  SymMatrix d = a;
  d.add_scaled(-1.0, b);
  return d.frob_norm();
}

}  // namespace occfm
