#pragma once

#include <cstdint>
#include <vector>

#include "occfm/sym_matrix.hpp"

namespace occfm {

struct EigenPair {
  double value = 0.0;
  std::vector<double> vector;
  double residual = 0.0;  // ||H q - value q||_2 at return
  int iterations = 0;     // operator applications consumed
};

// Eigenpairs ordered by non-increasing |value|; vectors[k] pairs values[k].
struct Spectrum {
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;
};

struct PowerOptions {
  double tol = 1e-6;
  int max_iter = 100;
  std::uint64_t seed = 0;
  // Optional warm start; normalized internally. Ignored when empty.
  const std::vector<double>* warm_start = nullptr;
  // When set, a non-converged solve returns the best pair seen instead of
  // throwing NonConvergence. Off by default; the strict contract applies.
  bool best_effort = false;
};

// Matrix-free symmetric linear operator.
class SymOperator {
 public:
  virtual ~SymOperator() = default;
  virtual int dim() const = 0;
  virtual void apply(const double* v, double* out) const = 0;
  // Applies to b vectors stored interleaved: V[i*b + k] is entry i of vector
  // k, likewise Out. Default falls back to per-vector apply.
  virtual void apply_block(int b, const double* V, double* Out) const;
};

class MatrixOperator final : public SymOperator {
 public:
  explicit MatrixOperator(const SymMatrix& m) : m_(m) {}
  int dim() const override { return m_.dim(); }
  void apply(const double* v, double* out) const override {
    m_.matvec(v, out);
  }
  void apply_block(int b, const double* V, double* Out) const override;

 private:
  const SymMatrix& m_;
};

// Fused block matvec over the packed triangle: Out = M V for b interleaved
// vectors (layout as in SymOperator::apply_block).
void sym_matvec_block(const SymMatrix& m, int b, const double* V, double* Out);

// Dominant eigenpair by power iteration from a seeded random unit start.
// Convergence: ||H q - lambda q|| <= tol * max(1, scale) where scale is
// ||H||_F for the matrix form and a running max of ||H v|| for the operator
// form. lambda is the Rayleigh quotient of the returned vector, so its sign
// is the sign of q^T H q. On stagnation the iteration switches to H^2 and
// extracts the answer with a 2-D Rayleigh-Ritz solve on span{v, Hv}, which
// resolves paired +/-lambda spectra. Throws ZeroMatrix when H = 0 and
// NonConvergence when the budget runs out (unless best_effort).
EigenPair dominant_eigenpair(const SymMatrix& h, const PowerOptions& opts = {});
EigenPair dominant_eigenpair(const SymOperator& h, const PowerOptions& opts = {});

// Warm-startable block power iteration with Rayleigh-Ritz extraction. Meets
// the dominant_eigenpair output contract; the state carries the previous
// Ritz basis across calls so successive solves on slowly drifting operators
// converge in a few applications.
struct TrackedPowerState {
  std::vector<double> block;  // interleaved n x b
  int n = 0;
  int b = 0;
  bool warm = false;
};
EigenPair dominant_eigenpair_tracked(const SymOperator& h,
                                     const PowerOptions& opts,
                                     TrackedPowerState& state,
                                     int block_size = 4);

// Full eigendecomposition by cyclic Jacobi rotations. Converges when the
// off-diagonal Frobenius norm falls below 1e-10 * ||M||_F, at most 30
// sweeps; throws NonConvergence otherwise.
Spectrum full_eigendecomposition(const SymMatrix& m);

// Fast full symmetric eigensolver: Householder tridiagonalization followed
// by implicit-shift QL. Same mathematical result as full_eigendecomposition;
// this is the route the projection hot paths take. values come back
// ascending; z is row-major n x n with column j the eigenvector of values[j]
// (empty when compute_vectors is false).
struct EighResult {
  std::vector<double> values;
  std::vector<double> z;
  int n = 0;
};
EighResult symmetric_eigh(const SymMatrix& m, bool compute_vectors = true);

}  // namespace occfm
