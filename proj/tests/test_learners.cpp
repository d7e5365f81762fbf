#include <doctest.h>

#include <array>
#include <cmath>
#include <memory>
#include <vector>

#include "occfm/learners.hpp"
#include "occfm/projection.hpp"
#include "occfm/rng.hpp"
#include "occfm/scaled_sym.hpp"
#include "test_util.hpp"

using namespace occfm;
using namespace testutil;

namespace {

double frob_inner(const SymMatrix& a, const SymMatrix& b) {
  double diag = 0.0, off = 0.0;
  for (int i = 0; i < a.dim(); ++i) {
    diag += a(i, i) * b(i, i);
    for (int j = i + 1; j < a.dim(); ++j) off += a(i, j) * b(i, j);
  }
  return diag + 2.0 * off;
}

double nuclear_2x2(double a, double b, double c) {
  const double mid = 0.5 * (a + c);
  const double r = std::hypot(0.5 * (a - c), b);
  return std::fabs(mid + r) + std::fabs(mid - r);
}

// Oracle: exhaustive grid search over symmetric 2x2 matrices inside the
// nuclear ball. The step is a power of two so boundary points stay exact.
template <typename Obj>
std::array<double, 3> grid_argmin_2x2(double delta, double span, Obj&& f) {
  const double step = 1.0 / 64.0;
  const int half = static_cast<int>(span / step);
  double best = 1e300;
  std::array<double, 3> at{};
  for (int i = -half; i <= half; ++i) {
    const double a = i * step;
    for (int j = -half; j <= half; ++j) {
      const double b = j * step;
      for (int k = -half; k <= half; ++k) {
        const double c = k * step;
        if (nuclear_2x2(a, b, c) > delta + 1e-12) continue;
        const double v = f(a, b, c);
        if (v < best) {
          best = v;
          at = {a, b, c};
        }
      }
    }
  }
  return at;
}

// Oracle: standalone FTRL-proximal arithmetic for the reduction checks.
struct FtrlRef {
  double alpha = 0.1, beta = 1.0, l1 = 0.0, l2 = 1e-6;

  double weight(double z, double n) const {
    if (std::fabs(z) <= l1) return 0.0;
    const double shrunk = z < 0.0 ? z + l1 : z - l1;
    return -shrunk / ((beta + std::sqrt(n)) / alpha + l2);
  }
  void step(double g, double& z, double& n) const {
    const double w = weight(z, n);
    const double sigma = (std::sqrt(n + g * g) - std::sqrt(n)) / alpha;
    z += g - sigma * w;
    n += g * g;
  }
  double encode(double w) const {
    if (w == 0.0) return 0.0;
    const double z = -w * (beta / alpha + l2);
    return z < 0.0 ? z - l1 : z + l1;
  }
};

// Oracle: vanilla FM prediction as the literal i < j pair sum.
double naive_fm(double w0, const std::vector<double>& w,
                const std::vector<std::vector<double>>& v,
                const SparseVec& xhat, int d) {
  std::vector<double> x(d, 0.0);
  for (std::size_t a = 0; a < xhat.nnz(); ++a)
    if (xhat.idx[a] < d) x[xhat.idx[a]] = xhat.val[a];
  double y = w0;
  for (int i = 0; i < d; ++i) y += w[i] * x[i];
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      double p = 0.0;
      for (std::size_t f = 0; f < v[i].size(); ++f) p += v[i][f] * v[j][f];
      y += p * x[i] * x[j];
    }
  return y;
}

AugmentedInstance random_instance(int d, Rng& rng, bool classification) {
  SparseVec x;
  for (int i = 0; i < d; ++i)
    if (rng.uniform() < 0.5) x.push(i, rng.uniform(-1.5, 1.5));
  AugmentedInstance inst;
  inst.features = augment(x, d);
  inst.label = classification ? (rng.uniform() < 0.5 ? -1.0 : 1.0)
                              : rng.uniform(-2.0, 2.0);
  return inst;
}

AugmentedInstance frozen_instance() {
  AugmentedInstance inst;
  inst.features = sparse({{0, 1.0}, {1, 1.0}});  // already augmented, d = 1
  inst.label = 1.0;
  return inst;
}

LearnerConfig base_config(int dim) {
  LearnerConfig cfg;
  cfg.dim = dim;
  cfg.delta = 1.0;
  cfg.horizon = 100;
  cfg.seed = 9;
  return cfg;
}

}  // namespace

TEST_CASE("scaled symmetric state mirrors plain accumulation") {
  SUBCASE("random operation streams") {
    Rng rng(606);
    for (int rep = 0; rep < 6; ++rep) {
      const int n = 3 + static_cast<int>(rng.below(6));
      ScaledSym s(n);
      SymMatrix mirror(n);

      for (int op = 0; op < 120; ++op) {
        const double roll = rng.uniform();
        if (roll < 0.25) {
          const double a = rng.uniform(0.2, 1.0);
          s.rescale(a);
          mirror.scale(a);
        } else {
          const auto q = rng.unit_vector(n);
          const double coef = rng.uniform(-1.0, 1.0);
          s.add_rank1(coef, q.data());
          mirror.add_rank1_dense(coef, q.data());
        }

        if (op % 17 == 0) {
          SparseVec x;
          for (int i = 0; i < n; ++i)
            if (rng.uniform() < 0.6) x.push(i, rng.uniform(-1.0, 1.0));
          CHECK(s.quad_form(x) ==
                doctest::Approx(mirror.quad_form(x)).epsilon(1e-10).scale(1.0));
          CHECK(s.quad_form_offdiag(x) ==
                doctest::Approx(mirror.quad_form_offdiag(x))
                    .epsilon(1e-10)
                    .scale(1.0));

          std::vector<double> v(n), got(n, 0.0), want(n, 0.0);
          for (auto& e : v) e = rng.uniform(-1.0, 1.0);
          s.add_matvec(0.8, v.data(), got.data());
          mirror.matvec(v.data(), want.data());
          for (int i = 0; i < n; ++i)
            CHECK(got[i] ==
                  doctest::Approx(0.8 * want[i]).epsilon(1e-10).scale(1.0));

          const int b = 3;
          std::vector<double> V(static_cast<std::size_t>(n) * b),
              Got(V.size(), 0.0);
          for (auto& e : V) e = rng.uniform(-1.0, 1.0);
          s.add_matvec_block(-0.5, b, V.data(), Got.data());
          for (int k = 0; k < b; ++k) {
            std::vector<double> col(n), out(n, 0.0);
            for (int i = 0; i < n; ++i)
              col[i] = V[static_cast<std::size_t>(i) * b + k];
            mirror.matvec(col.data(), out.data());
            for (int i = 0; i < n; ++i)
              CHECK(Got[static_cast<std::size_t>(i) * b + k] ==
                    doctest::Approx(-0.5 * out[i]).epsilon(1e-10).scale(1.0));
          }
        }
      }
      CHECK(max_entry_diff(s.materialize(), mirror) < 1e-10);

      s.rescale(0.0);
      CHECK(s.is_zero());
      CHECK(s.materialize().is_zero());
    }
  }

  SUBCASE("tiny scales renormalize without drifting") {
    const int n = 4;
    ScaledSym s(n);
    SymMatrix mirror(n);
    Rng rng(707);
    for (int burst = 0; burst < 5; ++burst) {
      for (int i = 0; i < 3; ++i) {
        const auto q = rng.unit_vector(n);
        s.add_rank1(0.5, q.data());
        mirror.add_rank1_dense(0.5, q.data());
      }
      s.rescale(1e-30);
      mirror.scale(1e-30);
    }
    // |s| crossed 1e-100 twice on the way down to 1e-150
    const SymMatrix got = s.materialize();
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const double want = mirror(i, j);
        CHECK(got(i, j) == doctest::Approx(want).epsilon(1e-9).scale(
                               std::fabs(want) + 1e-200));
      }
  }
}

TEST_CASE("occfm follows the frozen single-step trace") {
  for (const bool plain : {false, true}) {
    CAPTURE(plain);
    LearnerConfig cfg = base_config(2);
    cfg.eta = 0.1;
    cfg.plain_oracle = plain;
    OccfmLearner learner(cfg);

    CHECK(learner.predict(frozen_instance().features) == 0.0);
    learner.update(frozen_instance());

    const SymMatrix c2 = learner.decision_matrix();
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        CHECK(c2(i, j) == doctest::Approx(0.5).epsilon(1e-9));

    const OracleStep& step = learner.last_step();
    CHECK(step.stepped);
    CHECK(step.gamma == doctest::Approx(1.0));
    CHECK(step.eta == doctest::Approx(0.1));
    CHECK(step.lambda == doctest::Approx(0.2).epsilon(1e-7));
    CHECK(norm(step.q) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK(learner.grad_sum().term_count() == 1);
    const SymMatrix s1 = learner.grad_sum().materialize();
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        CHECK(s1(i, j) == doctest::Approx(-1.0));

    CHECK(nuclear_norm(c2) == doctest::Approx(1.0).epsilon(1e-9));
    // the step landed on the prediction: 1/2 xhat' C2 xhat = 1 = y
    CHECK(learner.predict(frozen_instance().features) ==
          doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("occfm no-op rounds") {
  SUBCASE("zero gradient and zero state") {
    LearnerConfig cfg = base_config(2);
    AugmentedInstance inst = frozen_instance();
    inst.label = 0.0;  // yhat = y = 0: slope 0, ledger stays empty
    OccfmLearner learner(cfg);
    learner.update(inst);
    CHECK_FALSE(learner.last_step().stepped);
    CHECK(learner.decision_matrix().is_zero());
    CHECK(learner.grad_sum().empty());
    CHECK(learner.round() == 1);
  }
  SUBCASE("literal gradient timing defers the first step") {
    LearnerConfig cfg = base_config(2);
    cfg.eta = 0.1;
    cfg.include_current_gradient = false;
    OccfmLearner learner(cfg);

    learner.update(frozen_instance());
    CHECK_FALSE(learner.last_step().stepped);  // F_1 sums an empty ledger
    CHECK(learner.decision_matrix().is_zero());
    CHECK(learner.grad_sum().term_count() == 1);

    learner.update(frozen_instance());
    CHECK(learner.last_step().stepped);
    const double want = 0.5 / std::sqrt(2.0);  // gamma_2 * delta * (qq')_ij
    const SymMatrix c3 = learner.decision_matrix();
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        CHECK(c3(i, j) == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("occfm oracle steps are optimal over the ball and stay feasible") {
  for (DiagonalMode mode :
       {DiagonalMode::all_pairs, DiagonalMode::exclude_diagonal}) {
    CAPTURE(static_cast<int>(mode));
    const int d = 5;
    LearnerConfig cfg = base_config(d + 1);
    cfg.delta = 1.5;
    cfg.horizon = 60;
    cfg.loss.diagonal_mode = mode;
    OccfmLearner learner(cfg);

    std::vector<SymMatrix> feasible;
    for (int i = 0; i < 100; ++i)
      feasible.push_back(random_feasible(d + 1, cfg.delta, 4800 + i));

    Rng rng(2200 + static_cast<int>(mode));
    for (int t = 1; t <= 60; ++t) {
      const AugmentedInstance inst = random_instance(d, rng, false);
      const SymMatrix pre = learner.decision_matrix();
      learner.update(inst);
      const OracleStep& step = learner.last_step();
      if (!step.stepped) continue;

      SymMatrix grad_f = learner.grad_sum().materialize();
      grad_f.scale(step.eta);
      grad_f.add_scaled(2.0, pre);

      SymMatrix chat(d + 1);
      const double sign = step.lambda < 0.0 ? -1.0 : 1.0;
      chat.add_rank1_dense(cfg.delta * sign, step.q.data());

      CHECK(nuclear_norm(chat) == doctest::Approx(cfg.delta).epsilon(1e-8));

      const double at_chat = frob_inner(chat, grad_f);
      for (const SymMatrix& c : feasible)
        CHECK(at_chat <= frob_inner(c, grad_f) + 1e-8);

      CHECK(nuclear_norm(learner.decision_matrix()) <= cfg.delta + 1e-6);
    }
    CHECK(learner.round() == 60);
  }
}

TEST_CASE("occfm ledger modes stay equivalent end to end") {
  const int d = 7;
  LearnerConfig cfg = base_config(d + 1);
  cfg.delta = 2.0;
  cfg.horizon = 200;
  LearnerConfig dense_cfg = cfg;
  dense_cfg.ledger_mode = LedgerMode::dense;
  cfg.ledger_mode = LedgerMode::termlist;

  OccfmLearner terms(cfg), dense(dense_cfg);
  Rng rng(31);
  for (int t = 0; t < 200; ++t) {
    const AugmentedInstance inst = random_instance(d, rng, false);
    CHECK(terms.predict(inst.features) ==
          doctest::Approx(dense.predict(inst.features))
              .epsilon(1e-4)
              .scale(1.0));
    terms.update(inst);
    dense.update(inst);
  }
  CHECK(max_entry_diff(terms.decision_matrix(), dense.decision_matrix()) <
        1e-4);
}

TEST_CASE("occfm propagates solver failures unless best effort is on") {
  const int d = 11;
  LearnerConfig cfg = base_config(d + 1);
  cfg.power_tol = 1e-30;
  cfg.power_max_iter = 1;
  Rng rng(77);
  const AugmentedInstance inst = random_instance(d, rng, false);

  OccfmLearner strict(cfg);
  CHECK_THROWS_AS(strict.update(inst), NonConvergence);

  cfg.power_best_effort = true;
  OccfmLearner lenient(cfg);
  lenient.update(inst);
  CHECK(lenient.last_step().stepped);
  CHECK(nuclear_norm(lenient.decision_matrix()) <= cfg.delta + 1e-6);
}

TEST_CASE("ogd projected step matches the grid oracle") {
  SUBCASE("frozen step onto the ball boundary") {
    LearnerConfig cfg = base_config(2);
    OgdLearner learner(cfg);
    learner.update(frozen_instance());
    // target C_1 - lr * grad = [[1,1],[1,1]], projected to nuclear <= 1
    const SymMatrix c2 = learner.decision_matrix();
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        CHECK(c2(i, j) == doctest::Approx(0.5).epsilon(1e-10));

    const auto grid = grid_argmin_2x2(1.0, 1.0, [&](double a, double b,
                                                    double c) {
      return (a - 1.0) * (a - 1.0) + 2.0 * (b - 1.0) * (b - 1.0) +
             (c - 1.0) * (c - 1.0);
    });
    CHECK(std::fabs(grid[0] - c2(0, 0)) <= 1.5 / 64.0);
    CHECK(std::fabs(grid[1] - c2(0, 1)) <= 1.5 / 64.0);
    CHECK(std::fabs(grid[2] - c2(1, 1)) <= 1.5 / 64.0);
  }
  SUBCASE("active projection, non-grid optimum") {
    LearnerConfig cfg = base_config(2);
    AugmentedInstance inst;
    inst.features = sparse({{0, 1.3}, {1, 1.0}});
    inst.label = 0.7;
    OgdLearner learner(cfg);
    learner.update(inst);
    const SymMatrix c2 = learner.decision_matrix();
    // step point is 0.7 * xhat xhat'
    const double t00 = 0.7 * 1.69, t01 = 0.7 * 1.3, t11 = 0.7;
    const auto grid = grid_argmin_2x2(1.0, 2.0, [&](double a, double b,
                                                    double c) {
      return (a - t00) * (a - t00) + 2.0 * (b - t01) * (b - t01) +
             (c - t11) * (c - t11);
    });
    CHECK(std::fabs(grid[0] - c2(0, 0)) <= 2.0 / 64.0);
    CHECK(std::fabs(grid[1] - c2(0, 1)) <= 2.0 / 64.0);
    CHECK(std::fabs(grid[2] - c2(1, 1)) <= 2.0 / 64.0);
    CHECK(nuclear_norm(c2) <= 1.0 + 1e-6);
  }
  SUBCASE("zero gradient leaves the matrix alone") {
    LearnerConfig cfg = base_config(2);
    AugmentedInstance inst = frozen_instance();
    inst.label = 0.0;
    OgdLearner learner(cfg);
    learner.update(inst);
    CHECK(learner.decision_matrix().is_zero());
  }
  SUBCASE("inactive projection is a plain gradient step") {
    LearnerConfig cfg = base_config(2);
    cfg.delta = 1e9;
    OgdLearner learner(cfg);
    learner.update(frozen_instance());
    const SymMatrix c2 = learner.decision_matrix();
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        CHECK(c2(i, j) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("pa updates are passive below the margin and capped above it") {
  SUBCASE("passive regression inside the epsilon band") {
    LearnerConfig cfg = base_config(2);
    AugmentedInstance inst = frozen_instance();
    inst.label = 0.05;  // |yhat - y| = 0.05 < epsilon = 0.1
    PaLearner learner(cfg);
    learner.update(inst);
    CHECK(learner.decision_matrix().is_zero());
  }
  SUBCASE("satisfied hinge is a no-op") {
    LearnerConfig cfg = base_config(2);
    cfg.delta = 10.0;
    cfg.loss.tag = LossTag::logistic;
    PaLearner learner(cfg);
    learner.update(frozen_instance());  // tau = 1 lands exactly on margin 1
    const SymMatrix after_first = learner.decision_matrix();
    CHECK(learner.predict(frozen_instance().features) ==
          doctest::Approx(1.0));
    learner.update(frozen_instance());
    CHECK(max_entry_diff(after_first, learner.decision_matrix()) == 0.0);
  }
  SUBCASE("frozen aggressive regression step") {
    LearnerConfig cfg = base_config(2);
    cfg.pa_epsilon = 0.0;
    PaLearner learner(cfg);
    learner.update(frozen_instance());
    const SymMatrix c2 = learner.decision_matrix();
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        CHECK(c2(i, j) == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("zero gradient with positive loss skips the round") {
    LearnerConfig cfg = base_config(2);
    cfg.loss.diagonal_mode = DiagonalMode::exclude_diagonal;
    AugmentedInstance inst;
    inst.features = sparse({{1, 1.0}});  // bias only: no off-diagonal pairs
    inst.label = 5.0;
    PaLearner learner(cfg);
    learner.update(inst);
    CHECK(learner.decision_matrix().is_zero());
  }
  SUBCASE("scripted multi-round oracle with a binding cap") {
    const int d = 3;
    LearnerConfig cfg = base_config(d + 1);
    cfg.delta = 0.8;
    cfg.pa_aggressiveness = 0.3;
    PaLearner learner(cfg);
    SymMatrix replica(d + 1);
    Rng rng(505);
    for (int t = 0; t < 30; ++t) {
      const AugmentedInstance inst = random_instance(d, rng, false);
      const double yhat = predict(replica, inst.features);
      CHECK(learner.predict(inst.features) ==
            doctest::Approx(yhat).epsilon(1e-12).scale(1.0));
      learner.update(inst);

      const double r = yhat - inst.label;
      const double hinge = std::max(0.0, std::fabs(r) - cfg.pa_epsilon);
      if (hinge > 0.0) {
        const GradientTerm g = gradient_term_from_slope(
            DiagonalMode::all_pairs, r >= 0.0 ? 1.0 : -1.0, inst.features);
        const double gn2 = g.frob_norm_sq();
        if (gn2 > 0.0) {
          const double tau = std::min(cfg.pa_aggressiveness, hinge / gn2);
          g.add_to(replica, -tau);
          replica = project_nuclear_ball_symmetric(replica, cfg.delta);
        }
      }
      CHECK(max_entry_diff(replica, learner.decision_matrix()) < 1e-10);
    }
  }
}

TEST_CASE("ccfm-ftrl solves its quadratic exactly") {
  SUBCASE("empty gradient sum keeps the start point") {
    LearnerConfig cfg = base_config(2);
    AugmentedInstance inst = frozen_instance();
    inst.label = 0.0;
    CcfmFtrlLearner learner(cfg);
    learner.update(inst);
    CHECK(learner.decision_matrix().is_zero());
  }
  SUBCASE("unconstrained minimum when the ball is huge") {
    LearnerConfig cfg = base_config(2);
    cfg.delta = 1e9;
    CcfmFtrlLearner learner(cfg);
    learner.update(frozen_instance());
    // C_2 = -(eta_1/2) grad_sum = 0.5 * xhat xhat'
    const SymMatrix c2 = learner.decision_matrix();
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        CHECK(c2(i, j) == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("grid oracle on the constrained objective") {
    LearnerConfig cfg = base_config(2);
    cfg.delta = 0.8;
    CcfmFtrlLearner learner(cfg);
    SymMatrix sum(2);
    Rng rng(808);
    for (int t = 1; t <= 3; ++t) {
      AugmentedInstance inst;
      inst.features = sparse({{0, rng.uniform(-1.5, 1.5)}, {1, 1.0}});
      inst.label = rng.uniform(-1.0, 1.0);
      const double yhat = learner.predict(inst.features);
      learner.update(inst);
      gradient_term_at(cfg.loss, yhat, inst.features, inst.label).add_to(sum);

      const double eta_t = cfg.eta_scale / std::sqrt(static_cast<double>(t));
      const auto grid = grid_argmin_2x2(
          cfg.delta, 1.0, [&](double a, double b, double c) {
            const double lin = sum(0, 0) * a + 2.0 * sum(0, 1) * b +
                               sum(1, 1) * c;
            return eta_t * lin + a * a + 2.0 * b * b + c * c;
          });
      const SymMatrix got = learner.decision_matrix();
      CHECK(std::fabs(grid[0] - got(0, 0)) <= 2.0 / 64.0);
      CHECK(std::fabs(grid[1] - got(0, 1)) <= 2.0 / 64.0);
      CHECK(std::fabs(grid[2] - got(1, 1)) <= 2.0 / 64.0);
      CHECK(max_entry_diff(learner.grad_sum(), sum) < 1e-12);
    }
  }
}

TEST_CASE("fm-ftrl") {
  SUBCASE("factorized prediction equals the naive pair sum") {
    const int d = 6, k = 3;
    LearnerConfig cfg = base_config(d + 1);
    cfg.fm_rank = k;
    FmFtrlLearner learner(cfg);

    std::vector<double> w(d);
    std::vector<std::vector<double>> v(d, std::vector<double>(k));
    for (int i = 0; i < d; ++i) {
      w[i] = learner.weight_w(i);
      for (int f = 0; f < k; ++f) v[i][f] = learner.weight_v(i, f);
    }
    Rng rng(111);
    for (int rep = 0; rep < 20; ++rep) {
      const AugmentedInstance inst = random_instance(d, rng, false);
      CHECK(learner.predict(inst.features) ==
            doctest::Approx(naive_fm(learner.weight_w0(), w, v, inst.features,
                                     d))
                .epsilon(1e-12)
                .scale(1.0));
    }
  }
  SUBCASE("rank one with a single active feature is a linear model") {
    const int d = 4;
    LearnerConfig cfg = base_config(d + 1);
    cfg.fm_rank = 1;
    FmFtrlLearner learner(cfg);
    FtrlRef ref{cfg.ftrl.alpha, cfg.ftrl.beta, cfg.ftrl.l1, cfg.ftrl.l2};
    double z0 = 0.0, n0 = 0.0;
    std::vector<double> zw(d, 0.0), nw(d, 0.0);

    Rng rng(212);
    for (int t = 0; t < 20; ++t) {
      const int i = static_cast<int>(rng.below(d));
      AugmentedInstance inst;
      inst.features = augment(sparse({{i, rng.uniform(-2.0, 2.0)}}), d);
      inst.label = rng.uniform(-1.0, 1.0);

      const double want =
          ref.weight(z0, n0) + ref.weight(zw[i], nw[i]) * inst.features.val[0];
      CHECK(learner.predict(inst.features) ==
            doctest::Approx(want).epsilon(1e-12).scale(1.0));

      learner.update(inst);
      const double g = loss_slope(cfg.loss, want, inst.label);
      ref.step(g, z0, n0);
      ref.step(g * inst.features.val[0], zw[i], nw[i]);
    }
  }
  SUBCASE("parameter moves match finite-difference gradients") {
    const int d = 5, k = 2;
    for (LossTag tag : {LossTag::squared, LossTag::logistic}) {
      for (int rep = 0; rep < 10; ++rep) {
        LearnerConfig cfg = base_config(d + 1);
        cfg.fm_rank = k;
        cfg.loss.tag = tag;
        cfg.seed = 4000 + rep;
        FmFtrlLearner learner(cfg);
        FtrlRef ref{cfg.ftrl.alpha, cfg.ftrl.beta, cfg.ftrl.l1, cfg.ftrl.l2};

        std::vector<double> w(d);
        std::vector<std::vector<double>> v(d, std::vector<double>(k));
        for (int i = 0; i < d; ++i) {
          w[i] = learner.weight_w(i);
          for (int f = 0; f < k; ++f) v[i][f] = learner.weight_v(i, f);
        }
        Rng rng(3300 + rep);
        AugmentedInstance inst = random_instance(d, rng, tag == LossTag::logistic);
        if (inst.features.nnz() < 2)
          inst.features = augment(sparse({{0, 1.0}, {2, -1.0}}), d);

        const double base = naive_fm(learner.weight_w0(), w, v, inst.features, d);
        CHECK(learner.predict(inst.features) ==
              doctest::Approx(base).epsilon(1e-10).scale(1.0));
        learner.update(inst);

        const double eps = 1e-6;
        auto fd_loss = [&](double* slot) {
          const double keep = *slot;
          *slot = keep + eps;
          const double up =
              loss(cfg.loss, naive_fm(0.0, w, v, inst.features, d), inst.label);
          *slot = keep - eps;
          const double dn =
              loss(cfg.loss, naive_fm(0.0, w, v, inst.features, d), inst.label);
          *slot = keep;
          return (up - dn) / (2.0 * eps);
        };
        // w0 starts at zero, so naive_fm(0, ...) above is the base model;
        // its own gradient is the raw slope.
        const double g0 = loss_slope(cfg.loss, base, inst.label);
        double z0 = ref.encode(0.0), n0 = 0.0;
        ref.step(g0, z0, n0);
        CHECK(learner.weight_w0() ==
              doctest::Approx(ref.weight(z0, n0)).epsilon(1e-5).scale(1.0));

        for (int i = 0; i < d; ++i) {
          double zi = ref.encode(w[i]), ni = 0.0;
          const double gi = fd_loss(&w[i]);
          if (gi != 0.0) ref.step(gi, zi, ni);
          CHECK(learner.weight_w(i) ==
                doctest::Approx(ref.weight(zi, ni)).epsilon(1e-5).scale(1.0));
          for (int f = 0; f < k; ++f) {
            double zv = ref.encode(v[i][f]), nv = 0.0;
            const double gv = fd_loss(&v[i][f]);
            if (gv != 0.0) ref.step(gv, zv, nv);
            CHECK(learner.weight_v(i, f) ==
                  doctest::Approx(ref.weight(zv, nv)).epsilon(1e-5).scale(1.0));
          }
        }
      }
    }
  }
  SUBCASE("bias-only instance moves only w0") {
    const int d = 4;
    LearnerConfig cfg = base_config(d + 1);
    cfg.fm_rank = 2;
    FmFtrlLearner learner(cfg);
    std::vector<double> before;
    for (int i = 0; i < d; ++i) {
      before.push_back(learner.weight_w(i));
      for (int f = 0; f < 2; ++f) before.push_back(learner.weight_v(i, f));
    }
    AugmentedInstance inst;
    inst.features = augment(SparseVec{}, d);
    inst.label = 2.0;
    learner.update(inst);
    CHECK(learner.weight_w0() != 0.0);
    std::size_t at = 0;
    for (int i = 0; i < d; ++i) {
      CHECK(learner.weight_w(i) == before[at++]);
      for (int f = 0; f < 2; ++f) CHECK(learner.weight_v(i, f) == before[at++]);
    }
  }
}

TEST_CASE("cfm-ftrl") {
  SUBCASE("scripted one-step trace on two features") {
    const int d = 2;
    LearnerConfig cfg = base_config(d + 1);
    cfg.delta = 0.5;
    CfmFtrlLearner learner(cfg);
    FtrlRef ref{cfg.ftrl.alpha, cfg.ftrl.beta, cfg.ftrl.l1, cfg.ftrl.l2};

    AugmentedInstance inst;
    inst.features = augment(sparse({{0, 1.2}, {1, -0.7}}), d);
    inst.label = 1.5;
    CHECK(learner.predict(inst.features) == 0.0);
    learner.update(inst);

    const double g = loss_slope(cfg.loss, 0.0, inst.label);
    double z = 0.0, n = 0.0;
    ref.step(g, z, n);
    CHECK(learner.weight_w0() == doctest::Approx(ref.weight(z, n)));
    double z0 = 0.0, n0 = 0.0, z1 = 0.0, n1 = 0.0;
    ref.step(g * 1.2, z0, n0);
    ref.step(g * -0.7, z1, n1);
    CHECK(learner.weight_w(0) == doctest::Approx(ref.weight(z0, n0)));
    CHECK(learner.weight_w(1) == doctest::Approx(ref.weight(z1, n1)));

    SymMatrix target(d);
    target.add_rank1(0.5 * g, sparse({{0, 1.2}, {1, -0.7}}));
    target.scale(-0.5 * cfg.eta_scale);
    const SymMatrix want = project_nuclear_ball_symmetric(target, cfg.delta);
    CHECK(max_entry_diff(want, learner.decision_matrix()) < 1e-12);
  }
  SUBCASE("bias-only stream keeps Z at zero") {
    const int d = 3;
    LearnerConfig cfg = base_config(d + 1);
    CfmFtrlLearner learner(cfg);
    FtrlRef ref{cfg.ftrl.alpha, cfg.ftrl.beta, cfg.ftrl.l1, cfg.ftrl.l2};
    double z = 0.0, n = 0.0;
    Rng rng(44);
    for (int t = 0; t < 10; ++t) {
      AugmentedInstance inst;
      inst.features = augment(SparseVec{}, d);
      inst.label = rng.uniform(-1.0, 1.0);
      const double yhat = ref.weight(z, n);
      CHECK(learner.predict(inst.features) == doctest::Approx(yhat));
      learner.update(inst);
      ref.step(loss_slope(cfg.loss, yhat, inst.label), z, n);
    }
    CHECK(learner.decision_matrix().is_zero());
  }
  SUBCASE("parts separate into linear FTRL plus the projected block") {
    const int d = 3;
    LearnerConfig cfg = base_config(d + 1);
    cfg.delta = 0.6;
    cfg.loss.tag = LossTag::logistic;
    CfmFtrlLearner learner(cfg);
    FtrlRef ref{cfg.ftrl.alpha, cfg.ftrl.beta, cfg.ftrl.l1, cfg.ftrl.l2};
    double z0 = 0.0, n0 = 0.0;
    std::vector<double> zw(d, 0.0), nw(d, 0.0);
    SymMatrix sum(d);

    Rng rng(550);
    for (int t = 1; t <= 15; ++t) {
      const AugmentedInstance inst = random_instance(d, rng, true);
      const double yhat = learner.predict(inst.features);
      learner.update(inst);

      const double g = loss_slope(cfg.loss, yhat, inst.label);
      ref.step(g, z0, n0);
      SparseVec raw;
      for (std::size_t a = 0; a < inst.features.nnz(); ++a)
        if (inst.features.idx[a] < d) raw.push(inst.features.idx[a],
                                               inst.features.val[a]);
      for (std::size_t a = 0; a < raw.nnz(); ++a)
        ref.step(g * raw.val[a], zw[raw.idx[a]], nw[raw.idx[a]]);
      if (raw.nnz() > 0) sum.add_rank1(0.5 * g, raw);

      CHECK(learner.weight_w0() ==
            doctest::Approx(ref.weight(z0, n0)).epsilon(1e-12).scale(1.0));
      for (int i = 0; i < d; ++i)
        CHECK(learner.weight_w(i) ==
              doctest::Approx(ref.weight(zw[i], nw[i]))
                  .epsilon(1e-12)
                  .scale(1.0));

      SymMatrix target = sum;
      target.scale(-0.5 * cfg.eta_scale / std::sqrt(static_cast<double>(t)));
      const SymMatrix want = project_nuclear_ball_symmetric(target, cfg.delta);
      CHECK(max_entry_diff(want, learner.decision_matrix()) < 1e-10);
    }
  }
}

TEST_CASE("nuclear-ball learners stay feasible for ten thousand rounds") {
  struct Setup {
    const char* name;
    LossTag tag;
  };
  const Setup setups[] = {{"occfm", LossTag::squared},
                          {"ccfm-ogd", LossTag::squared},
                          {"ccfm-pa", LossTag::logistic},
                          {"ccfm-ftrl", LossTag::squared},
                          {"cfm-ftrl", LossTag::logistic}};
  const int d = 5;
  for (const Setup& setup : setups) {
    CAPTURE(setup.name);
    LearnerConfig cfg = base_config(d + 1);
    cfg.delta = 1.5;
    cfg.horizon = 10000;
    cfg.loss.tag = setup.tag;
    auto learner = make_learner(setup.name, cfg);
    REQUIRE(learner->has_decision_matrix());

    Rng rng(Rng::derive(123, setup.tag == LossTag::squared ? 1 : 2,
                        setup.name[0]));
    double worst = 0.0;
    for (int t = 0; t < 10000; ++t) {
      learner->update(random_instance(d, rng, setup.tag == LossTag::logistic));
      worst = std::max(worst, nuclear_norm(learner->decision_matrix()));
    }
    CHECK(worst <= cfg.delta + 1e-6);
  }
}

TEST_CASE("learner construction and configuration errors") {
  CHECK(learner_names().size() == 6);
  LearnerConfig cfg = base_config(3);
  for (const std::string& name : learner_names()) {
    auto learner = make_learner(name, cfg);
    CHECK(learner->name() == name);
  }
  CHECK_THROWS_AS(make_learner("sgd", cfg), ConfigError);

  CHECK_FALSE(make_learner("fm-ftrl", cfg)->has_decision_matrix());
  CHECK_THROWS_AS(make_learner("fm-ftrl", cfg)->decision_matrix(),
                  ConfigError);

  LearnerConfig bad = cfg;
  bad.delta = 0.0;
  CHECK_THROWS_AS(OccfmLearner{bad}, ConfigError);
  bad = cfg;
  bad.eta = -1.0;
  CHECK_THROWS_AS(OccfmLearner{bad}, ConfigError);
  bad = cfg;
  bad.horizon = 0;
  CHECK_THROWS_AS(OccfmLearner{bad}, ConfigError);
  bad = cfg;
  bad.fm_rank = 0;
  CHECK_THROWS_AS(FmFtrlLearner{bad}, ConfigError);
  bad = cfg;
  bad.dim = 0;
  CHECK_THROWS_AS(OccfmLearner{bad}, ConfigError);

  OccfmLearner learner(cfg);
  AugmentedInstance out_of_range;
  out_of_range.features = sparse({{7, 1.0}});
  CHECK_THROWS_AS(learner.update(out_of_range), DimensionMismatch);
}
