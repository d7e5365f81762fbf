#pragma once

#include <vector>

#include "occfm/sym_matrix.hpp"

namespace occfm {

// C = s * (M + sum_p c_p q_p q_p^T). Rescaling by (1 - gamma) is O(1) on s;
// rank-1 additions queue up in a fixed-width pending block and fold into M
// in one fused pass when the block fills. s is renormalized into M before it
// can underflow (it decays like exp(-2 sqrt(t)) under the gamma schedule).
class ScaledSym {
 public:
  explicit ScaledSym(int n);

  int dim() const { return n_; }
  bool is_zero() const { return s_ == 0.0 || (pend_n_ == 0 && m_.is_zero()); }

  // C *= a. a = 0 resets to the zero matrix.
  void rescale(double a);
  // C += coef * q q^T for dense unit-length q.
  void add_rank1(double coef, const double* q);
  // out += coef * C v
  void add_matvec(double coef, const double* v, double* out) const;
  // Out[i*b+k] += coef * (C V_k)[i], interleaved layout.
  void add_matvec_block(double coef, int b, const double* V, double* Out) const;

  // x^T C x and its diagonal-free variant, sparse x.
  double quad_form(const SparseVec& x) const;
  double quad_form_offdiag(const SparseVec& x) const;

  SymMatrix materialize() const;

 private:
  void flush();
  void renormalize();

  static constexpr int kPendCap = 32;
  int n_ = 0;
  double s_ = 1.0;
  SymMatrix m_;
  int pend_n_ = 0;
  std::vector<double> pend_coef_;  // kPendCap entries, relative to s_
  std::vector<double> pend_q_;     // n_ x kPendCap, row-major lanes
};

}  // namespace occfm
