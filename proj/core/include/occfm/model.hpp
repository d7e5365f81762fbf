#pragma once

#include "occfm/common.hpp"
#include "occfm/sym_matrix.hpp"

namespace occfm {

enum class Task { regression, classification };
enum class LossTag { squared, logistic };
enum class DiagonalMode { all_pairs, exclude_diagonal };

struct LossKind {
  LossTag tag = LossTag::squared;
  DiagonalMode diagonal_mode = DiagonalMode::all_pairs;
};

// Features of length d+1 whose last coordinate is exactly 1.
struct AugmentedInstance {
  SparseVec features;
  double label = 0.0;
};

// Appends the constant coordinate: indices of x live in [0, d), the output
// gains index d with value 1.
SparseVec augment(const SparseVec& x, int d);

struct DecisionMatrix {
  SymMatrix matrix;
  double delta = 1.0;
};

// All-pairs: 1/2 xhat^T C xhat. Exclude-diagonal: <C, xhat xhat^T -
// diag(xhat o xhat)> verbatim, without the 1/2.
double predict(const SymMatrix& c, const SparseVec& xhat,
               DiagonalMode mode = DiagonalMode::all_pairs);
double predict(const DecisionMatrix& c, const SparseVec& xhat,
               DiagonalMode mode = DiagonalMode::all_pairs);

// squared: (yhat - y)^2; logistic: log(1 + exp(-y yhat)), overflow-safe.
double loss(const LossKind& kind, double yhat, double y);
// dloss/dyhat. squared: 2(yhat - y); logistic: -y sigma(-y yhat).
double loss_slope(const LossKind& kind, double yhat, double y);

// The gradient of f(C) = loss(predict(C, xhat), y) as a scaled rank-1
// object: scale * (d d^T) in all-pairs mode (scale = g/2), or
// scale * (d d^T - diag(d o d)) with scale = g when the diagonal is
// excluded. Never materializes the matrix unless asked.
struct GradientTerm {
  double scale = 0.0;
  SparseVec direction;
  bool exclude_diagonal = false;

  // Frobenius norm of the implied matrix.
  double frob_norm() const;
  double frob_norm_sq() const;
  // m += coef * implied
  void add_to(SymMatrix& m, double coef = 1.0) const;
  // out += coef * implied * v (dense v/out of length n)
  void apply_add(double coef, const double* v, double* out) const;
  // <implied, q q^T> for dense unit q
  double inner_rank1(const double* q) const;
};

GradientTerm gradient_term(const LossKind& kind, const SymMatrix& c,
                           const SparseVec& xhat, double y);
// Same, from an already computed prediction (lets callers with a non-matrix
// representation of C reuse the formula).
GradientTerm gradient_term_at(const LossKind& kind, double yhat,
                              const SparseVec& xhat, double y);
// Same, from an externally supplied slope dloss/dyhat (PA's hinge and
// epsilon-insensitive losses come through here).
GradientTerm gradient_term_from_slope(DiagonalMode mode, double slope,
                                      const SparseVec& xhat);

}  // namespace occfm
