#pragma once

#include <vector>

#include "occfm/sym_matrix.hpp"

namespace occfm {

// Euclidean projection onto {w : ||w||_1 <= radius}. Exact sort-based
// soft-thresholding; signs and order of surviving coordinates preserved.
// Inputs already inside the ball come back unchanged.
std::vector<double> project_l1_ball(const std::vector<double>& v,
                                    double radius);

// Sum of absolute eigenvalues.
double nuclear_norm(const SymMatrix& m);

// Euclidean projection onto {C = C^T : ||C||_tr <= delta}: eigendecompose,
// project the eigenvalue vector onto the l1 ball, rebuild from the surviving
// eigenpairs. Returns the input unchanged when it is already feasible.
SymMatrix project_nuclear_ball_symmetric(const SymMatrix& m, double delta);

}  // namespace occfm
