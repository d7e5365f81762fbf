#include "occfm/scaled_sym.hpp"

#include <algorithm>
#include <cmath>

#include "occfm/eigen.hpp"

namespace occfm {

ScaledSym::ScaledSym(int n)
    : n_(n), m_(n), pend_coef_(kPendCap, 0.0),
      pend_q_(static_cast<std::size_t>(n) * kPendCap, 0.0) {}

void ScaledSym::rescale(double a) {
  if (a == 0.0) {
    m_.set_zero();
    std::fill(pend_coef_.begin(), pend_coef_.end(), 0.0);
    pend_n_ = 0;
    s_ = 1.0;
    return;
  }
  s_ *= a;
  renormalize();
}

void ScaledSym::renormalize() {
  if (std::fabs(s_) >= 1e-100 && std::fabs(s_) <= 1e100) return;
  flush();
  m_.scale(s_);
  s_ = 1.0;
}

void ScaledSym::add_rank1(double coef, const double* q) {
  if (coef == 0.0) return;
  if (pend_n_ == kPendCap) flush();
  const int p = pend_n_++;
  pend_coef_[p] = coef / s_;
  for (int i = 0; i < n_; ++i)
    pend_q_[static_cast<std::size_t>(i) * kPendCap + p] = q[i];
}

void ScaledSym::flush() {
  if (pend_n_ == 0) return;
  const int pcount = pend_n_;
  // Row-blocked pass: pre-scale the block rows by the coefficients once,
  // then accumulate 32-wide dot products into the packed triangle.
  constexpr int kRowBlock = 64;
  std::vector<double> cq(static_cast<std::size_t>(kRowBlock) * kPendCap);
  for (int i0 = 0; i0 < n_; i0 += kRowBlock) {
    const int iend = std::min(i0 + kRowBlock, n_);
    for (int i = i0; i < iend; ++i) {
      const double* qi = &pend_q_[static_cast<std::size_t>(i) * kPendCap];
      double* ci = &cq[static_cast<std::size_t>(i - i0) * kPendCap];
      for (int p = 0; p < pcount; ++p) ci[p] = pend_coef_[p] * qi[p];
    }
    for (int i = i0; i < iend; ++i) {
      const double* ci = &cq[static_cast<std::size_t>(i - i0) * kPendCap];
      double* row = m_.packed() +
                    (static_cast<std::size_t>(i) * n_ -
                     static_cast<std::size_t>(i) * (i - 1) / 2);
      for (int j = i; j < n_; ++j) {
        const double* qj = &pend_q_[static_cast<std::size_t>(j) * kPendCap];
        double acc = 0.0;
        for (int p = 0; p < pcount; ++p) acc += ci[p] * qj[p];
        row[j - i] += acc;
      }
    }
  }
  std::fill(pend_coef_.begin(), pend_coef_.end(), 0.0);
  pend_n_ = 0;
}

void ScaledSym::add_matvec(double coef, const double* v, double* out) const {
  const double cs = coef * s_;
  if (cs == 0.0) return;
  m_.matvec_add(cs, v, out);
  for (int p = 0; p < pend_n_; ++p) {
    double t = 0.0;
    for (int i = 0; i < n_; ++i)
      t += pend_q_[static_cast<std::size_t>(i) * kPendCap + p] * v[i];
    const double a = cs * pend_coef_[p] * t;
    for (int i = 0; i < n_; ++i)
      out[i] += a * pend_q_[static_cast<std::size_t>(i) * kPendCap + p];
  }
}

void ScaledSym::add_matvec_block(double coef, int b, const double* V,
                                 double* Out) const {
  const double cs = coef * s_;
  if (cs == 0.0) return;
  std::vector<double> tmp(static_cast<std::size_t>(n_) * b);
  sym_matvec_block(m_, b, V, tmp.data());
  for (std::size_t i = 0; i < tmp.size(); ++i) Out[i] += cs * tmp[i];
  std::vector<double> acc(static_cast<std::size_t>(b));
  for (int p = 0; p < pend_n_; ++p) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int i = 0; i < n_; ++i) {
      const double q = pend_q_[static_cast<std::size_t>(i) * kPendCap + p];
      const double* vrow = V + static_cast<std::size_t>(i) * b;
      for (int k = 0; k < b; ++k) acc[k] += q * vrow[k];
    }
    const double a = cs * pend_coef_[p];
    for (int i = 0; i < n_; ++i) {
      const double q = pend_q_[static_cast<std::size_t>(i) * kPendCap + p];
      double* orow = Out + static_cast<std::size_t>(i) * b;
      for (int k = 0; k < b; ++k) orow[k] += a * q * acc[k];
    }
  }
}

double ScaledSym::quad_form(const SparseVec& x) const {
  double r = m_.quad_form(x);
  for (int p = 0; p < pend_n_; ++p) {
    double t = 0.0;
    for (std::size_t k = 0; k < x.nnz(); ++k)
      t += pend_q_[static_cast<std::size_t>(x.idx[k]) * kPendCap + p] *
           x.val[k];
    r += pend_coef_[p] * t * t;
  }
  return s_ * r;
}

double ScaledSym::quad_form_offdiag(const SparseVec& x) const {
  double r = m_.quad_form_offdiag(x);
  for (int p = 0; p < pend_n_; ++p) {
    double t = 0.0, diag = 0.0;
    for (std::size_t k = 0; k < x.nnz(); ++k) {
      const double q =
          pend_q_[static_cast<std::size_t>(x.idx[k]) * kPendCap + p];
      t += q * x.val[k];
      diag += q * q * x.val[k] * x.val[k];
    }
    r += pend_coef_[p] * (t * t - diag);
  }
  return s_ * r;
}

SymMatrix ScaledSym::materialize() const {
  SymMatrix out = m_;
  std::vector<double> col(static_cast<std::size_t>(n_));
  for (int p = 0; p < pend_n_; ++p) {
    for (int i = 0; i < n_; ++i)
      col[i] = pend_q_[static_cast<std::size_t>(i) * kPendCap + p];
    out.add_rank1_dense(pend_coef_[p], col.data());
  }
  out.scale(s_);
  return out;
}

}  // namespace occfm
