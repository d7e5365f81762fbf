#pragma once

#include <memory>
#include <string>
#include <vector>

#include "occfm/eigen.hpp"
#include "occfm/ledger.hpp"
#include "occfm/model.hpp"
#include "occfm/scaled_sym.hpp"

namespace occfm {

// Per-coordinate FTRL-proximal parameters (McMahan et al.).
struct FtrlParams {
  double alpha = 0.1;
  double beta = 1.0;
  double l1 = 0.0;
  double l2 = 1e-6;
};

struct LearnerConfig {
  int dim = 0;          // bias-augmented dimension d + 1
  double delta = 1.0;   // nuclear-ball radius
  double eta = 0.0;     // OCCFM step weight; 0 selects D/(4 G T^{3/4})
  double eta_scale = 1.0;  // baselines: learning rate eta_scale/sqrt(t)
  long long horizon = 1;   // T
  LossKind loss;
  double pa_aggressiveness = 1.0;
  double pa_epsilon = 0.1;  // epsilon-insensitive band for PA regression
  int fm_rank = 8;
  FtrlParams ftrl;
  std::uint64_t seed = 0;
  bool include_current_gradient = true;
  LedgerMode ledger_mode = LedgerMode::termlist;
  double power_tol = 1e-6;
  int power_max_iter = 100;
  bool power_best_effort = false;
  bool plain_oracle = false;  // single-vector power iteration, no warm start

  void validate() const;  // throws ConfigError
};

class OnlineLearner {
 public:
  virtual ~OnlineLearner() = default;
  virtual double predict(const SparseVec& xhat) const = 0;
  virtual void update(const AugmentedInstance& inst) = 0;
  virtual const char* name() const = 0;
  // Learners over the nuclear ball expose their matrix; factorized FM has
  // none. The matrix is d+1 square for CCFM learners and d square (raw
  // features) for CFM-FTRL's Z block.
  virtual bool has_decision_matrix() const { return false; }
  virtual SymMatrix decision_matrix() const;
};

// What the linear-minimization oracle did on the last update. stepped is
// false when the gradient operator was zero and the round was a no-op.
struct OracleStep {
  bool stepped = false;
  double lambda = 0.0;
  double gamma = 0.0;
  double eta = 0.0;
  std::vector<double> q;
};

// Projection-free online conditional gradient over the nuclear ball:
//   C_{t+1} = (1 - gamma_t) C_t + gamma_t * delta * sgn(lambda) q q^T
// with (lambda, q) the dominant eigenpair of -(eta * grad_sum + 2 C_t),
// gamma_t = t^{-1/2}. One dominant-eigenpair solve per round, no projection.
class OccfmLearner final : public OnlineLearner {
 public:
  explicit OccfmLearner(const LearnerConfig& cfg);

  double predict(const SparseVec& xhat) const override;
  void update(const AugmentedInstance& inst) override;
  const char* name() const override { return "occfm"; }
  bool has_decision_matrix() const override { return true; }
  SymMatrix decision_matrix() const override { return c_.materialize(); }

  const OracleStep& last_step() const { return step_; }
  const GradientLedger& grad_sum() const { return ledger_; }
  double g_max() const { return gmax_; }
  double last_eta() const { return step_.eta; }
  long long round() const { return t_; }

 private:
  void fold(const GradientTerm& g);

  LearnerConfig cfg_;
  ScaledSym c_;
  GradientLedger ledger_;
  TrackedPowerState track_;
  OracleStep step_;
  double gmax_ = 0.0;
  long long t_ = 0;
};

// Shared shell for the baselines that keep a dense matrix in the nuclear
// ball and project after each step.
class ProjectedLearner : public OnlineLearner {
 public:
  explicit ProjectedLearner(const LearnerConfig& cfg);
  double predict(const SparseVec& xhat) const override;
  bool has_decision_matrix() const override { return true; }
  SymMatrix decision_matrix() const override { return c_; }
  long long round() const { return t_; }

 protected:
  LearnerConfig cfg_;
  SymMatrix c_;
  long long t_ = 0;
};

// C_{t+1} = project(C_t - (eta_scale/sqrt(t)) grad f_t, delta).
class OgdLearner final : public ProjectedLearner {
 public:
  using ProjectedLearner::ProjectedLearner;
  void update(const AugmentedInstance& inst) override;
  const char* name() const override { return "ccfm-ogd"; }
};

// Passive-aggressive (PA-I): tau = min(C_agg, loss / ||grad||_F^2), with
// unit-margin hinge for classification and epsilon-insensitive loss for
// regression, then the same nuclear projection.
class PaLearner final : public ProjectedLearner {
 public:
  using ProjectedLearner::ProjectedLearner;
  void update(const AugmentedInstance& inst) override;
  const char* name() const override { return "ccfm-pa"; }
};

// Exact FTRL over the nuclear ball: C_{t+1} = project(-(eta_t/2) sum of
// gradients, delta), one full eigendecomposition per round.
class CcfmFtrlLearner final : public ProjectedLearner {
 public:
  explicit CcfmFtrlLearner(const LearnerConfig& cfg);
  void update(const AugmentedInstance& inst) override;
  const char* name() const override { return "ccfm-ftrl"; }
  const SymMatrix& grad_sum() const { return gradsum_; }

 private:
  SymMatrix gradsum_;
};

// Vanilla factorization machine (w0, w, V in R^{d x k}) trained with
// per-coordinate FTRL-proximal. Operates on the raw coordinates; the
// appended bias feature is covered by w0.
class FmFtrlLearner final : public OnlineLearner {
 public:
  explicit FmFtrlLearner(const LearnerConfig& cfg);
  double predict(const SparseVec& xhat) const override;
  void update(const AugmentedInstance& inst) override;
  const char* name() const override { return "fm-ftrl"; }

  double weight_w0() const;
  double weight_w(int i) const;
  double weight_v(int i, int f) const;

 private:
  LearnerConfig cfg_;
  int d_ = 0;
  int k_ = 1;
  double z0_ = 0.0, n0_ = 0.0;
  std::vector<double> zw_, nw_;
  std::vector<double> zv_, nv_;  // d x k row-major
  long long t_ = 0;
};

// Convex FM: separated (w0, w) by unconstrained FTRL plus a d x d quadratic
// block Z kept in the nuclear ball by the CCFM-FTRL rule. Predicts
// w0 + w.x + 1/2 <Z, x x^T> on the raw features.
class CfmFtrlLearner final : public OnlineLearner {
 public:
  explicit CfmFtrlLearner(const LearnerConfig& cfg);
  double predict(const SparseVec& xhat) const override;
  void update(const AugmentedInstance& inst) override;
  const char* name() const override { return "cfm-ftrl"; }
  bool has_decision_matrix() const override { return true; }
  SymMatrix decision_matrix() const override { return z_; }

  double weight_w0() const;
  double weight_w(int i) const;
  const SymMatrix& grad_sum() const { return gradsum_; }

 private:
  LearnerConfig cfg_;
  int d_ = 0;
  double z0_ = 0.0, n0_ = 0.0;
  std::vector<double> zw_, nw_;
  SymMatrix gradsum_;
  SymMatrix z_;
  long long t_ = 0;
};

const std::vector<std::string>& learner_names();
std::unique_ptr<OnlineLearner> make_learner(const std::string& name,
                                            const LearnerConfig& cfg);

}  // namespace occfm
