#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "occfm/data.hpp"
#include "occfm/learners.hpp"
#include "occfm/model.hpp"

namespace occfm {

struct RoundRecord {
  int round = 0;  // 1-based, strictly increasing
  double prediction = 0.0;
  double label = 0.0;
  double loss = 0.0;
  double cum_time = 0.0;  // seconds of predict+update so far, I/O excluded
};

// Augments each selected instance to dim+1 and pairs it with its label, in
// the given order.
std::vector<AugmentedInstance> make_stream(const Dataset& ds,
                                           const std::vector<int>& order);

// Predict, then reveal the label and update; one record per round. The
// monotonic clock covers predict+update only. A learner failure aborts the
// run, rethrown with the failing round in the message.
std::vector<RoundRecord> run_online(
    OnlineLearner& learner, const std::vector<AugmentedInstance>& stream,
    const LossKind& kind);

double rmse(const std::vector<RoundRecord>& records);
// Fraction of rounds with sign(prediction) != label; sign(0) counts as +1.
double error_rate(const std::vector<RoundRecord>& records);
// Rank statistic with midrank tie handling; throws when a class is absent.
double auc(const std::vector<RoundRecord>& records);

// Approximate argmin of the cumulative loss over the nuclear ball:
// projected full-gradient descent from zero with step 1/L, L estimated
// from sum ||xhat||^4, stopped at gradient norm <= 1e-6 or after `iters`
// steps. Returns the best point seen; a small seeded sample of feasible
// points is evaluated as a safety net.
DecisionMatrix best_fixed_comparator(
    const std::vector<AugmentedInstance>& stream, const LossKind& kind,
    double delta, int iters, std::uint64_t seed);

struct RegretReport {
  long horizon = 0;
  double learner_loss = 0.0;
  double comparator_loss = 0.0;
  double regret = 0.0;      // learner_loss - comparator_loss
  double d_diameter = 0.0;  // D = 2 delta
  double g_max = 0.0;       // max_t ||grad f_t(C_t)||_F over the trace
  double bound = 0.0;       // 12 D G T^{3/4} + D G T^{1/4}
  bool violated = false;    // regret > bound
};

// The comparator must come from the same stream the records were made on.
RegretReport regret_report(const std::vector<RoundRecord>& records,
                           const std::vector<AugmentedInstance>& stream,
                           const DecisionMatrix& comparator,
                           const LossKind& kind);

struct SyntheticSpec {
  int dim = 20;        // augmented dimension, constant coordinate last
  int horizon = 400;
  double delta = 5.0;  // the planted matrix gets nuclear norm 0.8 * delta
  int rank = 3;
  double noise = 0.1;
  double density = 0.4;
  Task task = Task::regression;
  std::uint64_t seed = 0;
};

// Labels come from a planted feasible rank-`rank` matrix plus Gaussian
// noise; classification takes the sign. Deterministic under the spec, and
// a shorter horizon with otherwise equal fields is a prefix of a longer one.
std::vector<AugmentedInstance> synthetic_stream(const SyntheticSpec& spec);

// Trace files: header `t,yhat,y,loss,cum_time`, one record per line.
void write_trace(const std::vector<RoundRecord>& records,
                 const std::string& path);
std::vector<RoundRecord> read_trace(const std::string& path);

// key=value lines, in order.
void write_summary(const std::vector<std::pair<std::string, std::string>>& kv,
                   const std::string& path);

// (cum_time, mean loss so far) sampled every `every` rounds, plus the final
// round; empty trace gives an empty curve.
std::vector<std::pair<double, double>> loss_time_curve(
    const std::vector<RoundRecord>& records, int every);

}  // namespace occfm
