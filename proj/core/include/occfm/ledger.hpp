#pragma once

#include <vector>

#include "occfm/model.hpp"
#include "occfm/sym_matrix.hpp"

namespace occfm {

enum class LedgerMode { dense, termlist };

// Accumulates gradient terms Sum_tau grad f_tau. Dense mode folds each term
// into a packed matrix (O(nnz^2) per add, O(d^2) per matrix-vector product);
// termlist keeps the raw terms (O(1) per add, O(sum nnz) per product). Both
// modes imply the same matrix.
class GradientLedger {
 public:
  GradientLedger(int dim, LedgerMode mode)
      : dim_(dim), mode_(mode),
        dense_(mode == LedgerMode::dense ? dim : 0) {}

  int dim() const { return dim_; }
  LedgerMode mode() const { return mode_; }
  std::size_t term_count() const { return count_; }
  bool empty() const { return count_ == 0; }

  // Zero-scale terms contribute nothing and are dropped.
  void add(const GradientTerm& term) {
    if (term.scale == 0.0) return;
    if (mode_ == LedgerMode::dense) {
      term.add_to(dense_);
    } else {
      terms_.push_back(term);
    }
    ++count_;
  }

  // out += coef * (sum) * v
  void apply_add(double coef, const double* v, double* out) const {
    if (mode_ == LedgerMode::dense) {
      dense_.matvec_add(coef, v, out);
    } else {
      for (const GradientTerm& t : terms_) t.apply_add(coef, v, out);
    }
  }

  // Block form over interleaved vectors: Out[i*b+k] += coef * (sum * V_k)[i].
  void apply_block_add(double coef, int b, const double* V, double* Out) const;

  // <sum, q q^T>
  double inner_rank1(const double* q) const {
    if (mode_ == LedgerMode::dense) {
      double r = 0.0;
      std::vector<double> tmp(static_cast<std::size_t>(dim_));
      dense_.matvec(q, tmp.data());
      for (int i = 0; i < dim_; ++i) r += q[i] * tmp[i];
      return r;
    }
    double r = 0.0;
    for (const GradientTerm& t : terms_) r += t.inner_rank1(q);
    return r;
  }

  SymMatrix materialize() const {
    if (mode_ == LedgerMode::dense) return dense_;
    SymMatrix m(dim_);
    for (const GradientTerm& t : terms_) t.add_to(m);
    return m;
  }

  // Dense-mode accumulator without a copy.
  const SymMatrix& dense_sum() const {
    if (mode_ != LedgerMode::dense)
      throw ConfigError("GradientLedger: dense_sum requires dense mode");
    return dense_;
  }

 private:
  int dim_;
  LedgerMode mode_;
  SymMatrix dense_;
  std::vector<GradientTerm> terms_;
  std::size_t count_ = 0;
};

}  // namespace occfm
