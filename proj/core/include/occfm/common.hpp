#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace occfm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimensions of two operands disagree.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// An iterative solve exhausted its budget without meeting its tolerance.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, double residual, int iterations)
      : Error(what), residual(residual), iterations(iterations) {}
  double residual;
  int iterations;
};

// The dominant eigenpair of the zero matrix is undefined.
class ZeroMatrix : public Error {
 public:
  using Error::Error;
};

// Malformed input data; carries the 1-based line number when known.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what, long line = 0)
      : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line(line) {}
  long line;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Sparse vector as parallel (index, value) arrays, indices strictly increasing.
struct SparseVec {
  std::vector<std::int32_t> idx;
  std::vector<double> val;

  std::size_t nnz() const { return idx.size(); }

  void push(std::int32_t i, double v) {
    idx.push_back(i);
    val.push_back(v);
  }

  double norm2_sq() const {
    double s = 0.0;
    for (double v : val) s += v * v;
    return s;
  }

  double dot_dense(const double* x) const {
    double s = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) s += val[k] * x[idx[k]];
    return s;
  }

  bool operator==(const SparseVec&) const = default;
};

}  // namespace occfm
