#include "occfm/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "occfm/rng.hpp"

namespace occfm {

namespace {

double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double norm2_sq(const double* a, int n) { return dot(a, a, n); }

struct BestPair {
  double res = std::numeric_limits<double>::infinity();
  double value = 0.0;
  std::vector<double> vec;

  void offer(double r, double v, const double* q, int n) {
    if (r < res) {
      res = r;
      value = v;
      vec.assign(q, q + n);
    }
  }
};

// Eigenvector of [[s11, s12], [s12, s22]] for eigenvalue theta, normalized.
void eigvec2(double s11, double s22, double s12, double theta, double& c1,
             double& c2) {
  const double n1 = std::hypot(s12, theta - s11);
  const double n2 = std::hypot(theta - s22, s12);
  if (n1 >= n2 && n1 > 0.0) {
    c1 = s12 / n1;
    c2 = (theta - s11) / n1;
  } else if (n2 > 0.0) {
    c1 = (theta - s22) / n2;
    c2 = s12 / n2;
  } else {
    c1 = 1.0;
    c2 = 0.0;
  }
}

EigenPair power_solve(const SymOperator& op, const PowerOptions& opts,
                      double fixed_scale) {
  const int n = op.dim();
  if (n <= 0) throw DimensionMismatch("dominant_eigenpair: empty operator");
  Rng rng(opts.seed);

  std::vector<double> v;
  bool random_start = true;
  if (opts.warm_start && opts.warm_start->size() == static_cast<std::size_t>(n)) {
    const double nv = std::sqrt(norm2_sq(opts.warm_start->data(), n));
    if (nv > 0.0 && std::isfinite(nv)) {
      v = *opts.warm_start;
      for (double& x : v) x /= nv;
      random_start = false;
    }
  }
  if (v.empty()) v = rng.unit_vector(n);

  std::vector<double> w(n), u(n), y(n), hy(n);
  double scale_run = 1.0;
  auto scale = [&] {
    return fixed_scale > 0.0 ? std::max(1.0, fixed_scale) : scale_run;
  };
  BestPair best;
  int applications = 0;

  for (int it = 0; it < opts.max_iter; ++it) {
    op.apply(v.data(), w.data());
    ++applications;
    const double nw2 = norm2_sq(w.data(), n);
    const double nw = std::sqrt(nw2);
    scale_run = std::max(scale_run, nw);
    const double lam = dot(v.data(), w.data(), n);
    const double res = std::sqrt(std::max(0.0, nw2 - lam * lam));
    best.offer(res, lam, v.data(), n);
    if (res <= opts.tol * scale())
      return {lam, std::move(v), res, applications};
    if (nw == 0.0) {
      if (it == 0 && random_start)
        throw ZeroMatrix("dominant_eigenpair: operator is zero");
      v = rng.unit_vector(n);
      random_start = true;
      continue;
    }
    for (int i = 0; i < n; ++i) v[i] = w[i] / nw;
  }

  // Stagnated: iterate on H^2 so paired +/-lambda spectra stop oscillating,
  // and extract the answer from span{v, Hv} with a 2-D Rayleigh-Ritz solve.
  for (int it = 0; it < opts.max_iter; ++it) {
    op.apply(v.data(), u.data());
    ++applications;
    const double nu2 = norm2_sq(u.data(), n);
    const double nu = std::sqrt(nu2);
    scale_run = std::max(scale_run, nu);
    const double lam = dot(v.data(), u.data(), n);
    const double res = std::sqrt(std::max(0.0, nu2 - lam * lam));
    best.offer(res, lam, v.data(), n);
    if (res <= opts.tol * scale())
      return {lam, std::move(v), res, applications};
    if (nu == 0.0) {
      v = rng.unit_vector(n);
      continue;
    }

    op.apply(u.data(), w.data());
    ++applications;
    const double uw = dot(u.data(), w.data(), n);
    // Basis b1 = v, b2 = (u - lam v)/res; H b1 = u, H b2 = (w - lam u)/res.
    const double s11 = lam;
    const double s12 = res;  // (v^T H^2 v - lam^2)/res = res^2/res
    const double s22 = (uw - 2.0 * lam * nu2 + lam * lam * lam) / (res * res);
    const double mid = 0.5 * (s11 + s22);
    const double hd = 0.5 * (s11 - s22);
    const double disc = std::hypot(hd, s12);
    const double th1 = mid + disc, th2 = mid - disc;
    const double theta = std::fabs(th1) >= std::fabs(th2) ? th1 : th2;
    double c1, c2;
    eigvec2(s11, s22, s12, theta, c1, c2);
    const double b2c = c2 / res;
    for (int i = 0; i < n; ++i) {
      y[i] = c1 * v[i] + b2c * (u[i] - lam * v[i]);
      hy[i] = c1 * u[i] + b2c * (w[i] - lam * u[i]);
    }
    const double ny = std::sqrt(norm2_sq(y.data(), n));
    if (ny > 0.0) {
      double ry2 = 0.0, nhy2 = 0.0;
      for (int i = 0; i < n; ++i) {
        y[i] /= ny;
        hy[i] /= ny;
        const double r = hy[i] - theta * y[i];
        ry2 += r * r;
        nhy2 += hy[i] * hy[i];
      }
      scale_run = std::max(scale_run, std::sqrt(nhy2));
      const double ry = std::sqrt(ry2);
      best.offer(ry, theta, y.data(), n);
      if (ry <= opts.tol * scale())
        return {theta, std::move(y), ry, applications};
    }

    const double nw = std::sqrt(norm2_sq(w.data(), n));
    if (nw == 0.0) {
      v = rng.unit_vector(n);
      continue;
    }
    for (int i = 0; i < n; ++i) v[i] = w[i] / nw;
  }

  if (opts.best_effort && !best.vec.empty())
    return {best.value, std::move(best.vec), best.res, applications};
  throw NonConvergence("dominant_eigenpair: residual " +
                           std::to_string(best.res) + " after " +
                           std::to_string(applications) + " applications",
                       best.res, applications);
}

// Modified Gram-Schmidt over the columns of an interleaved n x b block.
// Degenerate columns are replaced with fresh seeded random directions.
void orthonormalize_block(std::vector<double>& block, int n, int b, Rng& rng) {
  for (int k = 0; k < b; ++k) {
    for (int attempt = 0;; ++attempt) {
      for (int l = 0; l < k; ++l) {
        double p = 0.0;
        for (int i = 0; i < n; ++i)
          p += block[static_cast<std::size_t>(i) * b + l] *
               block[static_cast<std::size_t>(i) * b + k];
        for (int i = 0; i < n; ++i)
          block[static_cast<std::size_t>(i) * b + k] -=
              p * block[static_cast<std::size_t>(i) * b + l];
      }
      double nk = 0.0;
      for (int i = 0; i < n; ++i) {
        const double x = block[static_cast<std::size_t>(i) * b + k];
        nk += x * x;
      }
      nk = std::sqrt(nk);
      if (nk > 1e-12 || attempt >= 8) {
        if (nk == 0.0) nk = 1.0;
        for (int i = 0; i < n; ++i)
          block[static_cast<std::size_t>(i) * b + k] /= nk;
        break;
      }
      const std::vector<double> fresh = rng.unit_vector(n);
      for (int i = 0; i < n; ++i)
        block[static_cast<std::size_t>(i) * b + k] = fresh[i];
    }
  }
}

}  // namespace

void SymOperator::apply_block(int b, const double* V, double* Out) const {
  const int n = dim();
  std::vector<double> tmp_in(n), tmp_out(n);
  for (int k = 0; k < b; ++k) {
    for (int i = 0; i < n; ++i)
      tmp_in[i] = V[static_cast<std::size_t>(i) * b + k];
    apply(tmp_in.data(), tmp_out.data());
    for (int i = 0; i < n; ++i)
      Out[static_cast<std::size_t>(i) * b + k] = tmp_out[i];
  }
}

void MatrixOperator::apply_block(int b, const double* V, double* Out) const {
  sym_matvec_block(m_, b, V, Out);
}

void sym_matvec_block(const SymMatrix& m, int b, const double* V, double* Out) {
  const int n = m.dim();
  std::fill(Out, Out + static_cast<std::size_t>(n) * b, 0.0);
  const double* row = m.packed();
  for (int i = 0; i < n; ++i) {
    const double* vi = V + static_cast<std::size_t>(i) * b;
    double* oi = Out + static_cast<std::size_t>(i) * b;
    const double d = row[0];
    for (int k = 0; k < b; ++k) oi[k] += d * vi[k];
    for (int j = i + 1; j < n; ++j) {
      const double a = row[j - i];
      const double* vj = V + static_cast<std::size_t>(j) * b;
      double* oj = Out + static_cast<std::size_t>(j) * b;
      for (int k = 0; k < b; ++k) {
        oi[k] += a * vj[k];
        oj[k] += a * vi[k];
      }
    }
    row += n - i;
  }
}

EigenPair dominant_eigenpair(const SymMatrix& h, const PowerOptions& opts) {
  if (h.dim() == 0) throw DimensionMismatch("dominant_eigenpair: empty matrix");
  if (h.is_zero()) throw ZeroMatrix("dominant_eigenpair: H = 0");
  MatrixOperator op(h);
  return power_solve(op, opts, h.frob_norm());
}

EigenPair dominant_eigenpair(const SymOperator& h, const PowerOptions& opts) {
  return power_solve(h, opts, -1.0);
}

EigenPair dominant_eigenpair_tracked(const SymOperator& op,
                                     const PowerOptions& opts,
                                     TrackedPowerState& state,
                                     int block_size) {
  const int n = op.dim();
  if (n <= 0) throw DimensionMismatch("dominant_eigenpair: empty operator");
  const int b = std::min(std::max(1, block_size), n);
  const int w_cap = std::min(2 * b, n);
  Rng rng(opts.seed);

  const bool cold = !(state.warm && state.n == n && state.b == b &&
                      state.block.size() == static_cast<std::size_t>(n) * b);
  if (cold) {
    state.block.assign(static_cast<std::size_t>(n) * b, 0.0);
    for (int k = 0; k < b; ++k) {
      const std::vector<double> col = rng.unit_vector(n);
      for (int i = 0; i < n; ++i)
        state.block[static_cast<std::size_t>(i) * b + k] = col[i];
    }
    state.n = n;
    state.b = b;
  }
  if (opts.warm_start &&
      opts.warm_start->size() == static_cast<std::size_t>(n)) {
    for (int i = 0; i < n; ++i)
      state.block[static_cast<std::size_t>(i) * b] = (*opts.warm_start)[i];
  }
  orthonormalize_block(state.block, n, b, rng);

  // Expanded basis W = [B | new directions from HB]; Z = H W.
  std::vector<double> y(static_cast<std::size_t>(n) * b);
  std::vector<double> w(static_cast<std::size_t>(n) * w_cap);
  std::vector<double> z(static_cast<std::size_t>(n) * w_cap);
  std::vector<double> extra(static_cast<std::size_t>(n) * w_cap);
  std::vector<double> cand(n), ritz(n), hritz(n);
  double scale_run = 1.0;
  BestPair best;
  int applications = 0;
  bool resought = false;

  auto col_of = [n](std::vector<double>& buf, int stride, int k,
                    const double* src) {
    for (int i = 0; i < n; ++i)
      buf[static_cast<std::size_t>(i) * stride + k] = src[i];
  };

  for (int it = 0; it < opts.max_iter; ++it) {
    op.apply_block(b, state.block.data(), y.data());
    applications += b;

    double max_col = 0.0;
    for (int k = 0; k < b; ++k) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        const double x = y[static_cast<std::size_t>(i) * b + k];
        s += x * x;
      }
      max_col = std::max(max_col, std::sqrt(s));
    }
    scale_run = std::max(scale_run, max_col);
    if (max_col == 0.0) {
      if ((cold && it == 0) || resought)
        throw ZeroMatrix("dominant_eigenpair: operator is zero");
      resought = true;
      for (int k = 0; k < b; ++k) {
        const std::vector<double> col = rng.unit_vector(n);
        col_of(state.block, b, k, col.data());
      }
      orthonormalize_block(state.block, n, b, rng);
      continue;
    }

    // W starts as B (orthonormal); extend with orthogonalized columns of HB.
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < b; ++k)
        w[static_cast<std::size_t>(i) * w_cap + k] =
            state.block[static_cast<std::size_t>(i) * b + k];
    int m = b;
    for (int k = 0; k < b && m < w_cap; ++k) {
      for (int i = 0; i < n; ++i)
        cand[i] = y[static_cast<std::size_t>(i) * b + k];
      double before = 0.0;
      for (int i = 0; i < n; ++i) before += cand[i] * cand[i];
      before = std::sqrt(before);
      if (before == 0.0) continue;
      for (int pass = 0; pass < 2; ++pass) {
        for (int l = 0; l < m; ++l) {
          double p = 0.0;
          for (int i = 0; i < n; ++i)
            p += w[static_cast<std::size_t>(i) * w_cap + l] * cand[i];
          for (int i = 0; i < n; ++i)
            cand[i] -= p * w[static_cast<std::size_t>(i) * w_cap + l];
        }
      }
      double after = 0.0;
      for (int i = 0; i < n; ++i) after += cand[i] * cand[i];
      after = std::sqrt(after);
      if (after > 1e-10 * std::max(1.0, before)) {
        for (int i = 0; i < n; ++i) cand[i] /= after;
        col_of(w, w_cap, m, cand.data());
        ++m;
      }
    }
    // Escape an exactly invariant but unconverged subspace with a fresh
    // random direction.
    if (m == b && m < w_cap) {
      std::vector<double> fresh = rng.unit_vector(n);
      for (int pass = 0; pass < 2; ++pass) {
        for (int l = 0; l < m; ++l) {
          double p = 0.0;
          for (int i = 0; i < n; ++i)
            p += w[static_cast<std::size_t>(i) * w_cap + l] * fresh[i];
          for (int i = 0; i < n; ++i)
            fresh[i] -= p * w[static_cast<std::size_t>(i) * w_cap + l];
        }
      }
      double nf = 0.0;
      for (double x : fresh) nf += x * x;
      nf = std::sqrt(nf);
      if (nf > 1e-10) {
        for (int i = 0; i < n; ++i) fresh[i] /= nf;
        col_of(w, w_cap, m, fresh.data());
        ++m;
      }
    }

    // Z = H W: the first b columns are HB, the extras need fresh applies.
    const int extras = m - b;
    if (extras > 0) {
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < extras; ++k)
          extra[static_cast<std::size_t>(i) * extras + k] =
              w[static_cast<std::size_t>(i) * w_cap + b + k];
      std::vector<double> extraz(static_cast<std::size_t>(n) * extras);
      op.apply_block(extras, extra.data(), extraz.data());
      applications += extras;
      for (int i = 0; i < n; ++i) {
        for (int k = 0; k < b; ++k)
          z[static_cast<std::size_t>(i) * w_cap + k] =
              y[static_cast<std::size_t>(i) * b + k];
        for (int k = 0; k < extras; ++k)
          z[static_cast<std::size_t>(i) * w_cap + b + k] =
              extraz[static_cast<std::size_t>(i) * extras + k];
      }
    } else {
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < b; ++k)
          z[static_cast<std::size_t>(i) * w_cap + k] =
              y[static_cast<std::size_t>(i) * b + k];
    }

    SymMatrix s(m);
    for (int k = 0; k < m; ++k) {
      for (int l = k; l < m; ++l) {
        double skl = 0.0, slk = 0.0;
        for (int i = 0; i < n; ++i) {
          const std::size_t off = static_cast<std::size_t>(i) * w_cap;
          skl += w[off + k] * z[off + l];
          slk += w[off + l] * z[off + k];
        }
        s.at(k, l) = 0.5 * (skl + slk);
      }
    }
    const Spectrum sp = full_eigendecomposition(s);

    const std::vector<double>& r0 = sp.vectors[0];
    double np2 = 0.0, nh2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const std::size_t off = static_cast<std::size_t>(i) * w_cap;
      double p = 0.0, hp = 0.0;
      for (int k = 0; k < m; ++k) {
        p += w[off + k] * r0[k];
        hp += z[off + k] * r0[k];
      }
      ritz[i] = p;
      hritz[i] = hp;
      np2 += p * p;
      nh2 += hp * hp;
    }
    const double np = std::sqrt(np2);
    if (np > 0.0) {
      const double theta = sp.values[0];
      double res2 = 0.0;
      for (int i = 0; i < n; ++i) {
        ritz[i] /= np;
        hritz[i] /= np;
        const double r = hritz[i] - theta * ritz[i];
        res2 += r * r;
      }
      scale_run = std::max(scale_run, std::sqrt(nh2) / np);
      const double res = std::sqrt(res2);
      best.offer(res, theta, ritz.data(), n);
      if (res <= opts.tol * scale_run) {
        for (int k = 0; k < b; ++k) {
          const std::vector<double>& rk = sp.vectors[k];
          for (int i = 0; i < n; ++i) {
            const std::size_t off = static_cast<std::size_t>(i) * w_cap;
            double p = 0.0;
            for (int l = 0; l < m; ++l) p += w[off + l] * rk[l];
            state.block[static_cast<std::size_t>(i) * b + k] = p;
          }
        }
        state.warm = true;
        return {theta, std::vector<double>(ritz), res, applications};
      }
    }

    // Restart from the leading Ritz vectors of the expanded space.
    for (int k = 0; k < b; ++k) {
      const std::vector<double>& rk = sp.vectors[k];
      for (int i = 0; i < n; ++i) {
        const std::size_t off = static_cast<std::size_t>(i) * w_cap;
        double p = 0.0;
        for (int l = 0; l < m; ++l) p += w[off + l] * rk[l];
        state.block[static_cast<std::size_t>(i) * b + k] = p;
      }
    }
    orthonormalize_block(state.block, n, b, rng);
  }

  state.warm = true;
  if (opts.best_effort && !best.vec.empty())
    return {best.value, std::move(best.vec), best.res, applications};
  throw NonConvergence("dominant_eigenpair: residual " +
                           std::to_string(best.res) + " after " +
                           std::to_string(applications) + " applications",
                       best.res, applications);
}

Spectrum full_eigendecomposition(const SymMatrix& m) {
  const int n = m.dim();
  Spectrum out;
  if (n == 0) return out;

  std::vector<double> a = m.to_dense();
  std::vector<double> vmat(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) vmat[static_cast<std::size_t>(i) * n + i] = 1.0;

  const double fro = m.frob_norm();
  if (fro > 0.0) {
    const double thresh = 1e-10 * fro;
    bool converged = false;
    for (int sweep = 0; sweep < 30 && !converged; ++sweep) {
      double off2 = 0.0;
      for (int p = 0; p < n - 1; ++p)
        for (int q = p + 1; q < n; ++q) {
          const double x = a[static_cast<std::size_t>(p) * n + q];
          off2 += x * x;
        }
      if (std::sqrt(2.0 * off2) <= thresh) {
        converged = true;
        break;
      }
      for (int p = 0; p < n - 1; ++p) {
        for (int q = p + 1; q < n; ++q) {
          const double apq = a[static_cast<std::size_t>(p) * n + q];
          if (apq == 0.0) continue;
          const double app = a[static_cast<std::size_t>(p) * n + p];
          const double aqq = a[static_cast<std::size_t>(q) * n + q];
          const double theta = (aqq - app) / (2.0 * apq);
          const double t =
              (theta >= 0.0 ? 1.0 : -1.0) /
              (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
          const double c = 1.0 / std::sqrt(t * t + 1.0);
          const double s = t * c;
          a[static_cast<std::size_t>(p) * n + p] = app - t * apq;
          a[static_cast<std::size_t>(q) * n + q] = aqq + t * apq;
          a[static_cast<std::size_t>(p) * n + q] = 0.0;
          a[static_cast<std::size_t>(q) * n + p] = 0.0;
          for (int k = 0; k < n; ++k) {
            if (k != p && k != q) {
              const double akp = a[static_cast<std::size_t>(k) * n + p];
              const double akq = a[static_cast<std::size_t>(k) * n + q];
              const double np_ = c * akp - s * akq;
              const double nq_ = s * akp + c * akq;
              a[static_cast<std::size_t>(k) * n + p] = np_;
              a[static_cast<std::size_t>(p) * n + k] = np_;
              a[static_cast<std::size_t>(k) * n + q] = nq_;
              a[static_cast<std::size_t>(q) * n + k] = nq_;
            }
            const double vkp = vmat[static_cast<std::size_t>(k) * n + p];
            const double vkq = vmat[static_cast<std::size_t>(k) * n + q];
            vmat[static_cast<std::size_t>(k) * n + p] = c * vkp - s * vkq;
            vmat[static_cast<std::size_t>(k) * n + q] = s * vkp + c * vkq;
          }
        }
      }
    }
    if (!converged) {
      double off2 = 0.0;
      for (int p = 0; p < n - 1; ++p)
        for (int q = p + 1; q < n; ++q) {
          const double x = a[static_cast<std::size_t>(p) * n + q];
          off2 += x * x;
        }
      const double off = std::sqrt(2.0 * off2);
      if (off > thresh)
        throw NonConvergence(
            "full_eigendecomposition: off-diagonal norm " +
                std::to_string(off) + " after 30 sweeps",
            off, 30);
    }
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int yj) {
    const double ax = std::fabs(a[static_cast<std::size_t>(x) * n + x]);
    const double ay = std::fabs(a[static_cast<std::size_t>(yj) * n + yj]);
    if (ax != ay) return ax > ay;
    return a[static_cast<std::size_t>(x) * n + x] >
           a[static_cast<std::size_t>(yj) * n + yj];
  });

  out.values.resize(static_cast<std::size_t>(n));
  out.vectors.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const int j = order[static_cast<std::size_t>(k)];
    out.values[static_cast<std::size_t>(k)] =
        a[static_cast<std::size_t>(j) * n + j];
    std::vector<double> col(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      col[static_cast<std::size_t>(i)] = vmat[static_cast<std::size_t>(i) * n + j];
    out.vectors[static_cast<std::size_t>(k)] = std::move(col);
  }
  return out;
}

namespace {

// Householder reduction to tridiagonal form; z row-major n x n. When
// accumulate is true, z comes back holding the orthogonal transform Q.
void tred2(std::vector<double>& z, int n, std::vector<double>& d,
           std::vector<double>& e, bool accumulate) {
  for (int i = n - 1; i > 0; --i) {
    const int l = i - 1;
    double h = 0.0, sc = 0.0;
    if (l > 0) {
      for (int k = 0; k <= l; ++k)
        sc += std::fabs(z[static_cast<std::size_t>(i) * n + k]);
      if (sc == 0.0) {
        e[i] = z[static_cast<std::size_t>(i) * n + l];
      } else {
        for (int k = 0; k <= l; ++k) {
          z[static_cast<std::size_t>(i) * n + k] /= sc;
          h += z[static_cast<std::size_t>(i) * n + k] *
               z[static_cast<std::size_t>(i) * n + k];
        }
        double f = z[static_cast<std::size_t>(i) * n + l];
        const double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
        e[i] = sc * g;
        h -= f * g;
        z[static_cast<std::size_t>(i) * n + l] = f - g;
        f = 0.0;
        for (int j = 0; j <= l; ++j) {
          if (accumulate)
            z[static_cast<std::size_t>(j) * n + i] =
                z[static_cast<std::size_t>(i) * n + j] / h;
          double gg = 0.0;
          for (int k = 0; k <= j; ++k)
            gg += z[static_cast<std::size_t>(j) * n + k] *
                  z[static_cast<std::size_t>(i) * n + k];
          for (int k = j + 1; k <= l; ++k)
            gg += z[static_cast<std::size_t>(k) * n + j] *
                  z[static_cast<std::size_t>(i) * n + k];
          e[j] = gg / h;
          f += e[j] * z[static_cast<std::size_t>(i) * n + j];
        }
        const double hh = f / (h + h);
        for (int j = 0; j <= l; ++j) {
          f = z[static_cast<std::size_t>(i) * n + j];
          const double gg = e[j] - hh * f;
          e[j] = gg;
          for (int k = 0; k <= j; ++k)
            z[static_cast<std::size_t>(j) * n + k] -=
                f * e[k] + gg * z[static_cast<std::size_t>(i) * n + k];
        }
      }
    } else {
      e[i] = z[static_cast<std::size_t>(i) * n + l];
    }
    d[i] = h;
  }
  if (accumulate) d[0] = 0.0;
  e[0] = 0.0;
  for (int i = 0; i < n; ++i) {
    if (accumulate) {
      const int l = i - 1;
      if (d[i] != 0.0) {
        for (int j = 0; j <= l; ++j) {
          double g = 0.0;
          for (int k = 0; k <= l; ++k)
            g += z[static_cast<std::size_t>(i) * n + k] *
                 z[static_cast<std::size_t>(k) * n + j];
          for (int k = 0; k <= l; ++k)
            z[static_cast<std::size_t>(k) * n + j] -=
                g * z[static_cast<std::size_t>(k) * n + i];
        }
      }
      d[i] = z[static_cast<std::size_t>(i) * n + i];
      z[static_cast<std::size_t>(i) * n + i] = 1.0;
      for (int j = 0; j <= l; ++j) {
        z[static_cast<std::size_t>(j) * n + i] = 0.0;
        z[static_cast<std::size_t>(i) * n + j] = 0.0;
      }
    } else {
      d[i] = z[static_cast<std::size_t>(i) * n + i];
    }
  }
}

// Implicit-shift QL on the tridiagonal (d, e); rotations accumulate into the
// columns of z when present.
void tqli(std::vector<double>& d, std::vector<double>& e, int n,
          std::vector<double>* z) {
  if (n <= 1) return;
  for (int i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
        if (std::fabs(e[m]) <= eps * dd) break;
      }
      if (m != l) {
        if (iter++ == 50)
          throw NonConvergence("symmetric_eigh: QL exceeded 50 iterations",
                               std::fabs(e[l]), iter);
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        int i = m - 1;
        for (; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          if (z) {
            double* zz = z->data();
            for (int k = 0; k < n; ++k) {
              f = zz[static_cast<std::size_t>(k) * n + i + 1];
              zz[static_cast<std::size_t>(k) * n + i + 1] =
                  s * zz[static_cast<std::size_t>(k) * n + i] + c * f;
              zz[static_cast<std::size_t>(k) * n + i] =
                  c * zz[static_cast<std::size_t>(k) * n + i] - s * f;
            }
          }
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

}  // namespace

EighResult symmetric_eigh(const SymMatrix& m, bool compute_vectors) {
  const int n = m.dim();
  EighResult out;
  out.n = n;
  if (n == 0) return out;
  if (n == 1) {
    out.values = {m(0, 0)};
    if (compute_vectors) out.z = {1.0};
    return out;
  }

  std::vector<double> z = m.to_dense();
  std::vector<double> d(static_cast<std::size_t>(n)),
      e(static_cast<std::size_t>(n));
  tred2(z, n, d, e, compute_vectors);
  tqli(d, e, n, compute_vectors ? &z : nullptr);

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return d[a] < d[b]; });

  out.values.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    out.values[static_cast<std::size_t>(j)] = d[order[static_cast<std::size_t>(j)]];
  if (compute_vectors) {
    out.z.resize(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
      const int src = order[static_cast<std::size_t>(j)];
      for (int i = 0; i < n; ++i)
        out.z[static_cast<std::size_t>(i) * n + j] =
            z[static_cast<std::size_t>(i) * n + src];
    }
  }
  return out;
}

}  // namespace occfm
