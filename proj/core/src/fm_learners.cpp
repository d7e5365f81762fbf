#include <cmath>

#include "occfm/learners.hpp"
#include "occfm/projection.hpp"
#include "occfm/rng.hpp"

namespace occfm {

namespace {

constexpr std::uint64_t kFmInitStream = 0xf0f0;

// FTRL-proximal closed form for one coordinate.
double ftrl_weight(const FtrlParams& p, double z, double n) {
  const double az = std::fabs(z);
  if (az <= p.l1) return 0.0;
  const double shrunk = z < 0.0 ? z + p.l1 : z - p.l1;
  return -shrunk / ((p.beta + std::sqrt(n)) / p.alpha + p.l2);
}

// Accumulate gradient g into (z, n), keeping the lazily derived weight
// consistent with the proximal term.
void ftrl_step(const FtrlParams& p, double g, double& z, double& n) {
  const double w = ftrl_weight(p, z, n);
  const double sigma = (std::sqrt(n + g * g) - std::sqrt(n)) / p.alpha;
  z += g - sigma * w;
  n += g * g;
}

// z value that makes ftrl_weight return w0 at n = 0; used to plant the
// Gaussian initialization of V inside the FTRL state.
double ftrl_encode(const FtrlParams& p, double w0) {
  if (w0 == 0.0) return 0.0;
  const double denom = p.beta / p.alpha + p.l2;
  const double z = -w0 * denom;
  return z < 0.0 ? z - p.l1 : z + p.l1;
}

void check_raw(const SparseVec& x, int dim) {
  if (!x.idx.empty() && (x.idx.front() < 0 || x.idx.back() >= dim))
    throw DimensionMismatch("learner: instance index out of range");
}

const LearnerConfig& checked(const LearnerConfig& cfg) {
  cfg.validate();
  return cfg;
}

}  // namespace

FmFtrlLearner::FmFtrlLearner(const LearnerConfig& cfg)
    : cfg_(checked(cfg)), d_(cfg.dim - 1), k_(cfg.fm_rank) {
  if (cfg_.dim < 2) throw ConfigError("fm-ftrl: dim must include the bias");
  zw_.assign(static_cast<std::size_t>(d_), 0.0);
  nw_.assign(static_cast<std::size_t>(d_), 0.0);
  zv_.assign(static_cast<std::size_t>(d_) * k_, 0.0);
  nv_.assign(static_cast<std::size_t>(d_) * k_, 0.0);
  Rng rng(Rng::derive(cfg_.seed, kFmInitStream));
  for (auto& z : zv_) z = ftrl_encode(cfg_.ftrl, 0.01 * rng.normal());
}

double FmFtrlLearner::weight_w0() const { return ftrl_weight(cfg_.ftrl, z0_, n0_); }

double FmFtrlLearner::weight_w(int i) const {
  return ftrl_weight(cfg_.ftrl, zw_[i], nw_[i]);
}

double FmFtrlLearner::weight_v(int i, int f) const {
  const std::size_t at = static_cast<std::size_t>(i) * k_ + f;
  return ftrl_weight(cfg_.ftrl, zv_[at], nv_[at]);
}

double FmFtrlLearner::predict(const SparseVec& xhat) const {
  check_raw(xhat, cfg_.dim);
  double yhat = weight_w0();
  std::vector<double> s(static_cast<std::size_t>(k_), 0.0);
  std::vector<double> q(static_cast<std::size_t>(k_), 0.0);
  for (std::size_t a = 0; a < xhat.nnz(); ++a) {
    const int i = xhat.idx[a];
    if (i >= d_) continue;  // appended bias: folded into w0
    const double x = xhat.val[a];
    yhat += weight_w(i) * x;
    for (int f = 0; f < k_; ++f) {
      const double vx = weight_v(i, f) * x;
      s[f] += vx;
      q[f] += vx * vx;
    }
  }
  for (int f = 0; f < k_; ++f) yhat += 0.5 * (s[f] * s[f] - q[f]);
  return yhat;
}

void FmFtrlLearner::update(const AugmentedInstance& inst) {
  const SparseVec& x = inst.features;
  check_raw(x, cfg_.dim);
  const double yhat = predict(x);
  const double g = loss_slope(cfg_.loss, yhat, inst.label);
  ++t_;
  ftrl_step(cfg_.ftrl, g, z0_, n0_);
  if (g == 0.0) return;

  std::vector<double> s(static_cast<std::size_t>(k_), 0.0);
  for (std::size_t a = 0; a < x.nnz(); ++a) {
    const int i = x.idx[a];
    if (i >= d_) continue;
    for (int f = 0; f < k_; ++f) s[f] += weight_v(i, f) * x.val[a];
  }
  for (std::size_t a = 0; a < x.nnz(); ++a) {
    const int i = x.idx[a];
    if (i >= d_) continue;
    const double xv = x.val[a];
    ftrl_step(cfg_.ftrl, g * xv, zw_[i], nw_[i]);
    for (int f = 0; f < k_; ++f) {
      const std::size_t at = static_cast<std::size_t>(i) * k_ + f;
      const double grad = g * xv * (s[f] - weight_v(i, f) * xv);
      ftrl_step(cfg_.ftrl, grad, zv_[at], nv_[at]);
    }
  }
}

CfmFtrlLearner::CfmFtrlLearner(const LearnerConfig& cfg)
    : cfg_(checked(cfg)), d_(cfg.dim - 1), gradsum_(cfg.dim - 1),
      z_(cfg.dim - 1) {
  if (cfg_.dim < 2) throw ConfigError("cfm-ftrl: dim must include the bias");
  zw_.assign(static_cast<std::size_t>(d_), 0.0);
  nw_.assign(static_cast<std::size_t>(d_), 0.0);
}

double CfmFtrlLearner::weight_w0() const { return ftrl_weight(cfg_.ftrl, z0_, n0_); }

double CfmFtrlLearner::weight_w(int i) const {
  return ftrl_weight(cfg_.ftrl, zw_[i], nw_[i]);
}

double CfmFtrlLearner::predict(const SparseVec& xhat) const {
  check_raw(xhat, cfg_.dim);
  double yhat = weight_w0();
  SparseVec raw;
  for (std::size_t a = 0; a < xhat.nnz(); ++a) {
    const int i = xhat.idx[a];
    if (i >= d_) continue;
    yhat += weight_w(i) * xhat.val[a];
    raw.push(i, xhat.val[a]);
  }
  return yhat + 0.5 * z_.quad_form(raw);
}

void CfmFtrlLearner::update(const AugmentedInstance& inst) {
  check_raw(inst.features, cfg_.dim);
  const double yhat = predict(inst.features);
  const double g = loss_slope(cfg_.loss, yhat, inst.label);
  const long long t = ++t_;

  ftrl_step(cfg_.ftrl, g, z0_, n0_);
  SparseVec raw;
  for (std::size_t a = 0; a < inst.features.nnz(); ++a) {
    const int i = inst.features.idx[a];
    if (i >= d_) continue;
    ftrl_step(cfg_.ftrl, g * inst.features.val[a], zw_[i], nw_[i]);
    raw.push(i, inst.features.val[a]);
  }

  const GradientTerm quad =
      gradient_term_from_slope(DiagonalMode::all_pairs, g, raw);
  quad.add_to(gradsum_);
  const double eta_t = cfg_.eta_scale / std::sqrt(static_cast<double>(t));
  SymMatrix target = gradsum_;
  target.scale(-0.5 * eta_t);
  z_ = project_nuclear_ball_symmetric(target, cfg_.delta);
}

}  // namespace occfm
