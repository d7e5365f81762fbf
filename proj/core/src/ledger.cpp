#include "occfm/ledger.hpp"

#include "occfm/eigen.hpp"

namespace occfm {

void GradientLedger::apply_block_add(double coef, int b, const double* V,
                                     double* Out) const {
  if (mode_ == LedgerMode::dense) {
    std::vector<double> tmp(static_cast<std::size_t>(dim_) * b);
    sym_matvec_block(dense_, b, V, tmp.data());
    for (std::size_t i = 0; i < tmp.size(); ++i) Out[i] += coef * tmp[i];
    return;
  }
  std::vector<double> acc(static_cast<std::size_t>(b));
  for (const GradientTerm& t : terms_) {
    const double a = coef * t.scale;
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t k = 0; k < t.direction.nnz(); ++k) {
      const double* vrow = V + static_cast<std::size_t>(t.direction.idx[k]) * b;
      const double dv = t.direction.val[k];
      for (int c = 0; c < b; ++c) acc[c] += dv * vrow[c];
    }
    for (std::size_t k = 0; k < t.direction.nnz(); ++k) {
      const double dv = t.direction.val[k];
      double* orow = Out + static_cast<std::size_t>(t.direction.idx[k]) * b;
      for (int c = 0; c < b; ++c) orow[c] += a * dv * acc[c];
      if (t.exclude_diagonal) {
        const double* vrow =
            V + static_cast<std::size_t>(t.direction.idx[k]) * b;
        for (int c = 0; c < b; ++c) orow[c] -= a * dv * dv * vrow[c];
      }
    }
  }
}

}  // namespace occfm
