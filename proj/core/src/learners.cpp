#include "occfm/learners.hpp"

#include <cmath>

#include "occfm/projection.hpp"
#include "occfm/rng.hpp"

namespace occfm {

namespace {

constexpr std::uint64_t kOracleStream = 0x0ccf;

void check_instance(const SparseVec& x, int dim) {
  if (!x.idx.empty() && (x.idx.front() < 0 || x.idx.back() >= dim))
    throw DimensionMismatch("learner: instance index out of range");
}

// Validates before any member sized off the config gets built.
const LearnerConfig& checked(const LearnerConfig& cfg) {
  cfg.validate();
  return cfg;
}

}  // namespace

void LearnerConfig::validate() const {
  if (dim < 1) throw ConfigError("config: dim must be at least 1");
  if (!(delta > 0.0)) throw ConfigError("config: delta must be positive");
  if (eta < 0.0) throw ConfigError("config: eta must be >= 0 (0 = auto)");
  if (!(eta_scale > 0.0))
    throw ConfigError("config: eta_scale must be positive");
  if (horizon < 1) throw ConfigError("config: horizon must be at least 1");
  if (!(pa_aggressiveness > 0.0))
    throw ConfigError("config: pa_aggressiveness must be positive");
  if (pa_epsilon < 0.0)
    throw ConfigError("config: pa_epsilon must be >= 0");
  if (fm_rank < 1) throw ConfigError("config: fm_rank must be at least 1");
  if (!(ftrl.alpha > 0.0))
    throw ConfigError("config: ftrl alpha must be positive");
  if (ftrl.beta < 0.0 || ftrl.l1 < 0.0 || ftrl.l2 < 0.0)
    throw ConfigError("config: ftrl beta/l1/l2 must be >= 0");
  if (!(power_tol > 0.0))
    throw ConfigError("config: power_tol must be positive");
  if (power_max_iter < 1)
    throw ConfigError("config: power_max_iter must be at least 1");
}

SymMatrix OnlineLearner::decision_matrix() const {
  throw ConfigError(std::string(name()) + ": no decision matrix");
}

namespace {

// -grad F_t(C_t) = -(eta * grad_sum + 2 (C_t - C_1)), C_1 = 0, applied
// against the ledger and the scaled representation without materializing.
class NegGradOperator final : public SymOperator {
 public:
  NegGradOperator(const GradientLedger& ledger, const ScaledSym& c,
                  double eta)
      : ledger_(ledger), c_(c), eta_(eta) {}

  int dim() const override { return c_.dim(); }

  void apply(const double* v, double* out) const override {
    std::fill(out, out + c_.dim(), 0.0);
    ledger_.apply_add(-eta_, v, out);
    c_.add_matvec(-2.0, v, out);
  }

  void apply_block(int b, const double* V, double* Out) const override {
    std::fill(Out, Out + static_cast<std::size_t>(c_.dim()) * b, 0.0);
    ledger_.apply_block_add(-eta_, b, V, Out);
    c_.add_matvec_block(-2.0, b, V, Out);
  }

 private:
  const GradientLedger& ledger_;
  const ScaledSym& c_;
  double eta_;
};

}  // namespace

OccfmLearner::OccfmLearner(const LearnerConfig& cfg)
    : cfg_(checked(cfg)), c_(cfg.dim), ledger_(cfg.dim, cfg.ledger_mode) {}

double OccfmLearner::predict(const SparseVec& xhat) const {
  check_instance(xhat, cfg_.dim);
  return cfg_.loss.diagonal_mode == DiagonalMode::all_pairs
             ? 0.5 * c_.quad_form(xhat)
             : c_.quad_form_offdiag(xhat);
}

void OccfmLearner::fold(const GradientTerm& g) {
  ledger_.add(g);
  gmax_ = std::max(gmax_, g.frob_norm());
}

void OccfmLearner::update(const AugmentedInstance& inst) {
  check_instance(inst.features, cfg_.dim);
  const long long t = t_ + 1;
  const double yhat = predict(inst.features);
  const GradientTerm g =
      gradient_term_at(cfg_.loss, yhat, inst.features, inst.label);

  if (cfg_.include_current_gradient) fold(g);

  const double eta =
      cfg_.eta > 0.0
          ? cfg_.eta
          : (gmax_ > 0.0 ? 2.0 * cfg_.delta /
                               (4.0 * gmax_ *
                                std::pow(static_cast<double>(cfg_.horizon),
                                         0.75))
                         : 0.0);
  const double gamma = 1.0 / std::sqrt(static_cast<double>(t));
  step_ = OracleStep{};
  step_.eta = eta;
  step_.gamma = gamma;

  NegGradOperator op(ledger_, c_, eta);
  PowerOptions po;
  po.tol = cfg_.power_tol;
  po.max_iter = cfg_.power_max_iter;
  po.best_effort = cfg_.power_best_effort;
  po.seed = Rng::derive(cfg_.seed, kOracleStream, static_cast<std::uint64_t>(t));
  bool stepped = true;
  EigenPair pair;
  try {
    pair = cfg_.plain_oracle ? dominant_eigenpair(op, po)
                             : dominant_eigenpair_tracked(op, po, track_);
  } catch (const ZeroMatrix&) {
    stepped = false;  // Chat = C_t: the whole round is a no-op
  }

  if (stepped) {
    const double sign = pair.value < 0.0 ? -1.0 : 1.0;
    c_.rescale(1.0 - gamma);
    c_.add_rank1(gamma * cfg_.delta * sign, pair.vector.data());
    step_.stepped = true;
    step_.lambda = pair.value;
    step_.q = std::move(pair.vector);
  }

  if (!cfg_.include_current_gradient) fold(g);
  t_ = t;
}

ProjectedLearner::ProjectedLearner(const LearnerConfig& cfg)
    : cfg_(checked(cfg)), c_(cfg.dim) {}

double ProjectedLearner::predict(const SparseVec& xhat) const {
  check_instance(xhat, cfg_.dim);
  return occfm::predict(c_, xhat, cfg_.loss.diagonal_mode);
}

void OgdLearner::update(const AugmentedInstance& inst) {
  check_instance(inst.features, cfg_.dim);
  const long long t = ++t_;
  const double yhat = occfm::predict(c_, inst.features, cfg_.loss.diagonal_mode);
  const GradientTerm g =
      gradient_term_at(cfg_.loss, yhat, inst.features, inst.label);
  if (g.frob_norm_sq() == 0.0) return;  // C_t stays: it is already feasible
  const double lr = cfg_.eta_scale / std::sqrt(static_cast<double>(t));
  g.add_to(c_, -lr);
  c_ = project_nuclear_ball_symmetric(c_, cfg_.delta);
}

void PaLearner::update(const AugmentedInstance& inst) {
  check_instance(inst.features, cfg_.dim);
  ++t_;
  const double yhat = occfm::predict(c_, inst.features, cfg_.loss.diagonal_mode);
  double hinge, slope;
  if (cfg_.loss.tag == LossTag::logistic) {
    hinge = std::max(0.0, 1.0 - inst.label * yhat);
    slope = -inst.label;
  } else {
    const double r = yhat - inst.label;
    hinge = std::max(0.0, std::fabs(r) - cfg_.pa_epsilon);
    slope = r >= 0.0 ? 1.0 : -1.0;
  }
  if (hinge <= 0.0) return;  // passive
  const GradientTerm g =
      gradient_term_from_slope(cfg_.loss.diagonal_mode, slope, inst.features);
  const double gn2 = g.frob_norm_sq();
  if (gn2 <= 0.0) return;  // positive loss but nothing to move along
  const double tau = std::min(cfg_.pa_aggressiveness, hinge / gn2);
  g.add_to(c_, -tau);
  c_ = project_nuclear_ball_symmetric(c_, cfg_.delta);
}

CcfmFtrlLearner::CcfmFtrlLearner(const LearnerConfig& cfg)
    : ProjectedLearner(cfg), gradsum_(cfg.dim) {}

void CcfmFtrlLearner::update(const AugmentedInstance& inst) {
  check_instance(inst.features, cfg_.dim);
  const long long t = ++t_;
  const double yhat = occfm::predict(c_, inst.features, cfg_.loss.diagonal_mode);
  const GradientTerm g =
      gradient_term_at(cfg_.loss, yhat, inst.features, inst.label);
  g.add_to(gradsum_);
  const double eta_t = cfg_.eta_scale / std::sqrt(static_cast<double>(t));
  SymMatrix target = gradsum_;
  target.scale(-0.5 * eta_t);
  c_ = project_nuclear_ball_symmetric(target, cfg_.delta);
}

const std::vector<std::string>& learner_names() {
  static const std::vector<std::string> names = {
      "occfm",     "ccfm-ogd", "ccfm-pa",
      "ccfm-ftrl", "fm-ftrl",  "cfm-ftrl"};
  return names;
}

std::unique_ptr<OnlineLearner> make_learner(const std::string& name,
                                            const LearnerConfig& cfg) {
  if (name == "occfm") return std::make_unique<OccfmLearner>(cfg);
  if (name == "ccfm-ogd") return std::make_unique<OgdLearner>(cfg);
  if (name == "ccfm-pa") return std::make_unique<PaLearner>(cfg);
  if (name == "ccfm-ftrl") return std::make_unique<CcfmFtrlLearner>(cfg);
  if (name == "fm-ftrl") return std::make_unique<FmFtrlLearner>(cfg);
  if (name == "cfm-ftrl") return std::make_unique<CfmFtrlLearner>(cfg);
  throw ConfigError("unknown learner: " + name);
}

}  // namespace occfm
