#include "occfm/projection.hpp"

#include <algorithm>
#include <cmath>

#include "occfm/eigen.hpp"

namespace occfm {

std::vector<double> project_l1_ball(const std::vector<double>& v,
                                    double radius) {
  if (radius < 0.0)
    throw ConfigError("project_l1_ball: radius must be non-negative");
  double l1 = 0.0;
  for (double x : v) l1 += std::fabs(x);
  if (l1 <= radius) return v;

  std::vector<double> mag(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) mag[i] = std::fabs(v[i]);
  std::sort(mag.begin(), mag.end(), std::greater<double>());

  double cum = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < mag.size(); ++k) {
    cum += mag[k];
    const double cand = (cum - radius) / static_cast<double>(k + 1);
    if (k + 1 == mag.size() || mag[k + 1] <= cand) {
      theta = cand;
      break;
    }
  }

  std::vector<double> w(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double m = std::fabs(v[i]) - theta;
    w[i] = m > 0.0 ? std::copysign(m, v[i]) : 0.0;
  }
  return w;
}

double nuclear_norm(const SymMatrix& m) {
  if (m.dim() == 0) return 0.0;
  const EighResult eig = symmetric_eigh(m, /*compute_vectors=*/false);
  double s = 0.0;
  for (double lam : eig.values) s += std::fabs(lam);
  return s;
}

SymMatrix project_nuclear_ball_symmetric(const SymMatrix& m, double delta) {
  if (delta < 0.0)
    throw ConfigError("project_nuclear_ball_symmetric: delta must be non-negative");
  const int n = m.dim();
  if (n == 0) return m;

  const EighResult eig = symmetric_eigh(m, /*compute_vectors=*/true);
  double l1 = 0.0;
  for (double lam : eig.values) l1 += std::fabs(lam);
  if (l1 <= delta) return m;

  const std::vector<double> proj = project_l1_ball(eig.values, delta);

  SymMatrix out(n);
  std::vector<double> col(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const double lam = proj[static_cast<std::size_t>(j)];
    if (lam == 0.0) continue;
    for (int i = 0; i < n; ++i)
      col[static_cast<std::size_t>(i)] =
          eig.z[static_cast<std::size_t>(i) * n + j];
    out.add_rank1_dense(lam, col.data());
  }
  return out;
}

}  // namespace occfm
