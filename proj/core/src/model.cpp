#include "occfm/model.hpp"

#include <cmath>

namespace occfm {

SparseVec augment(const SparseVec& x, int d) {
  SparseVec out;
  out.idx.reserve(x.nnz() + 1);
  out.val.reserve(x.nnz() + 1);
  for (std::size_t k = 0; k < x.nnz(); ++k) {
    if (x.idx[k] < 0 || x.idx[k] >= d)
      throw DimensionMismatch("augment: feature index out of range");
    if (k > 0 && x.idx[k] <= x.idx[k - 1])
      throw DimensionMismatch("augment: indices must be strictly increasing");
    out.push(x.idx[k], x.val[k]);
  }
  out.push(d, 1.0);
  return out;
}

double predict(const SymMatrix& c, const SparseVec& xhat, DiagonalMode mode) {
  if (!xhat.idx.empty() &&
      (xhat.idx.front() < 0 || xhat.idx.back() >= c.dim()))
    throw DimensionMismatch("predict: feature index out of range");
  return mode == DiagonalMode::all_pairs ? 0.5 * c.quad_form(xhat)
                                         : c.quad_form_offdiag(xhat);
}

double predict(const DecisionMatrix& c, const SparseVec& xhat,
               DiagonalMode mode) {
  return predict(c.matrix, xhat, mode);
}

double loss(const LossKind& kind, double yhat, double y) {
  if (kind.tag == LossTag::squared) {
    const double e = yhat - y;
    return e * e;
  }
  const double z = y * yhat;
  return z >= 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
}

double loss_slope(const LossKind& kind, double yhat, double y) {
  if (kind.tag == LossTag::squared) return 2.0 * (yhat - y);
  const double z = y * yhat;
  // sigma(-z), evaluated without overflow on either side
  const double sig =
      z >= 0.0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
  return -y * sig;
}

double GradientTerm::frob_norm_sq() const {
  const double n2 = direction.norm2_sq();
  if (!exclude_diagonal) return scale * scale * n2 * n2;
  double quads = 0.0;
  for (double v : direction.val) quads += v * v * v * v;
  return scale * scale * (n2 * n2 - quads);
}

double GradientTerm::frob_norm() const { return std::sqrt(frob_norm_sq()); }

void GradientTerm::add_to(SymMatrix& m, double coef) const {
  const double a = coef * scale;
  if (a == 0.0) return;
  m.add_rank1(a, direction);
  if (exclude_diagonal)
    for (std::size_t k = 0; k < direction.nnz(); ++k)
      m.at(direction.idx[k], direction.idx[k]) -=
          a * direction.val[k] * direction.val[k];
}

void GradientTerm::apply_add(double coef, const double* v, double* out) const {
  const double a = coef * scale;
  if (a == 0.0) return;
  double t = 0.0;
  for (std::size_t k = 0; k < direction.nnz(); ++k)
    t += direction.val[k] * v[direction.idx[k]];
  for (std::size_t k = 0; k < direction.nnz(); ++k)
    out[direction.idx[k]] += a * t * direction.val[k];
  if (exclude_diagonal)
    for (std::size_t k = 0; k < direction.nnz(); ++k)
      out[direction.idx[k]] -=
          a * direction.val[k] * direction.val[k] * v[direction.idx[k]];
}

double GradientTerm::inner_rank1(const double* q) const {
  double t = 0.0;
  for (std::size_t k = 0; k < direction.nnz(); ++k)
    t += direction.val[k] * q[direction.idx[k]];
  double r = t * t;
  if (exclude_diagonal)
    for (std::size_t k = 0; k < direction.nnz(); ++k)
      r -= direction.val[k] * direction.val[k] * q[direction.idx[k]] *
           q[direction.idx[k]];
  return scale * r;
}

GradientTerm gradient_term_from_slope(DiagonalMode mode, double slope,
                                      const SparseVec& xhat) {
  GradientTerm term;
  term.direction = xhat;
  if (mode == DiagonalMode::all_pairs) {
    term.scale = 0.5 * slope;
  } else {
    term.scale = slope;
    term.exclude_diagonal = true;
  }
  return term;
}

GradientTerm gradient_term_at(const LossKind& kind, double yhat,
                              const SparseVec& xhat, double y) {
  return gradient_term_from_slope(kind.diagonal_mode,
                                  loss_slope(kind, yhat, y), xhat);
}

GradientTerm gradient_term(const LossKind& kind, const SymMatrix& c,
                           const SparseVec& xhat, double y) {
  return gradient_term_at(kind, predict(c, xhat, kind.diagonal_mode), xhat, y);
}

}  // namespace occfm
