#include "occfm/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <utility>

#include "occfm/projection.hpp"
#include "occfm/rng.hpp"
#include "text_util.hpp"

namespace occfm {
namespace {

constexpr std::uint64_t kSynthStream = 0x5f9e;
constexpr std::uint64_t kCompStream = 0xc09a;

double frob(const SymMatrix& m) {
  double s = 0.0;
  for (int i = 0; i < m.dim(); ++i)
    for (int j = i; j < m.dim(); ++j)
      s += m(i, j) * m(i, j) * (i == j ? 1.0 : 2.0);
  return std::sqrt(s);
}

double stream_loss(const SymMatrix& c,
                   const std::vector<AugmentedInstance>& stream,
                   const LossKind& kind) {
  double total = 0.0;
  for (const AugmentedInstance& inst : stream)
    total += loss(kind, predict(c, inst.features, kind.diagonal_mode),
                  inst.label);
  return total;
}

}  // namespace

std::vector<AugmentedInstance> make_stream(const Dataset& ds,
                                           const std::vector<int>& order) {
  std::vector<AugmentedInstance> stream;
  stream.reserve(order.size());
  for (int i : order) {
    if (i < 0 || static_cast<std::size_t>(i) >= ds.size())
      throw ConfigError("stream order index out of range");
    AugmentedInstance inst;
    inst.features = augment(ds.instances[i].x, ds.dim);
    inst.label = ds.instances[i].y;
    stream.push_back(std::move(inst));
  }
  return stream;
}

std::vector<RoundRecord> run_online(
    OnlineLearner& learner, const std::vector<AugmentedInstance>& stream,
    const LossKind& kind) {
  using clock = std::chrono::steady_clock;
  std::vector<RoundRecord> records;
  records.reserve(stream.size());
  std::chrono::nanoseconds spent{0};
  int t = 0;
  for (const AugmentedInstance& inst : stream) {
    ++t;
    RoundRecord rec;
    rec.round = t;
    try {
      const auto start = clock::now();
      rec.prediction = learner.predict(inst.features);
      learner.update(inst);
      spent += clock::now() - start;
    } catch (const Error& e) {
      throw Error(std::string(learner.name()) + " failed at round " +
                  std::to_string(t) + ": " + e.what());
    }
    rec.label = inst.label;
    rec.loss = loss(kind, rec.prediction, inst.label);
    rec.cum_time = std::chrono::duration<double>(spent).count();
    records.push_back(rec);
  }
  return records;
}

double rmse(const std::vector<RoundRecord>& records) {
  if (records.empty()) throw Error("rmse: empty trace");
  double s = 0.0;
  for (const RoundRecord& r : records) {
    const double e = r.prediction - r.label;
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(records.size()));
}

double error_rate(const std::vector<RoundRecord>& records) {
  if (records.empty()) throw Error("error_rate: empty trace");
  long bad = 0;
  for (const RoundRecord& r : records) {
    if (r.label != 1.0 && r.label != -1.0)
      throw Error("error_rate: labels must be -1 or +1");
    const double sign = r.prediction >= 0.0 ? 1.0 : -1.0;
    bad += sign != r.label;
  }
  return static_cast<double>(bad) / static_cast<double>(records.size());
}

double auc(const std::vector<RoundRecord>& records) {
  if (records.empty()) throw Error("auc: empty trace");
  std::vector<std::pair<double, double>> scored;  // (score, label)
  long np = 0, nn = 0;
  for (const RoundRecord& r : records) {
    if (r.label != 1.0 && r.label != -1.0)
      throw Error("auc: labels must be -1 or +1");
    (r.label > 0 ? np : nn) += 1;
    scored.emplace_back(r.prediction, r.label);
  }
  if (np == 0 || nn == 0) throw Error("auc: needs both classes");
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double rank_pos = 0.0;
  std::size_t i = 0;
  while (i < scored.size()) {
    std::size_t j = i;
    while (j < scored.size() && scored[j].first == scored[i].first) ++j;
    const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k)
      if (scored[k].second > 0) rank_pos += midrank;
    i = j;
  }
  const double dp = static_cast<double>(np), dn = static_cast<double>(nn);
  return (rank_pos - dp * (dp + 1.0) / 2.0) / (dp * dn);
}

DecisionMatrix best_fixed_comparator(
    const std::vector<AugmentedInstance>& stream, const LossKind& kind,
    double delta, int iters, std::uint64_t seed) {
  if (delta <= 0.0) throw ConfigError("comparator: delta must be positive");
  if (iters < 0) throw ConfigError("comparator: negative iteration budget");
  if (stream.empty()) throw ConfigError("comparator: empty stream");
  int n = 0;
  double s4 = 0.0;
  for (const AugmentedInstance& inst : stream) {
    if (!inst.features.idx.empty())
      n = std::max(n, inst.features.idx.back() + 1);
    const double q = inst.features.norm2_sq();
    s4 += q * q;
  }
  if (n == 0) throw ConfigError("comparator: all instances are empty");

  // Curvature bound of the cumulative loss, from the per-instance gradient
  // scale conventions: the all-pairs prediction differentiates to xx^T/2.
  const bool excl = kind.diagonal_mode == DiagonalMode::exclude_diagonal;
  const double l = kind.tag == LossTag::squared ? (excl ? 2.0 * s4 : 0.5 * s4)
                                                : (excl ? 0.25 * s4 : s4 / 16.0);

  SymMatrix c(n);
  SymMatrix best = c;
  double best_loss = stream_loss(c, stream, kind);
  if (l > 0.0) {
    const double step = 1.0 / l;
    for (int it = 0; it < iters; ++it) {
      SymMatrix grad(n);
      double cur = 0.0;
      for (const AugmentedInstance& inst : stream) {
        const double yhat = predict(c, inst.features, kind.diagonal_mode);
        cur += loss(kind, yhat, inst.label);
        gradient_term_from_slope(kind.diagonal_mode,
                                 loss_slope(kind, yhat, inst.label),
                                 inst.features)
            .add_to(grad);
      }
      if (cur < best_loss) {
        best_loss = cur;
        best = c;
      }
      if (frob(grad) <= 1e-6) break;
      grad.scale(-step);
      grad.add_scaled(1.0, c);  // now c - step * grad
      c = project_nuclear_ball_symmetric(grad, delta);
    }
    const double fin = stream_loss(c, stream, kind);
    if (fin < best_loss) {
      best_loss = fin;
      best = c;
    }
  }

  // Safety net: a few seeded feasible points, in case the descent stalled.
  Rng rng(Rng::derive(seed, kCompStream));
  for (int k = 0; k < 16; ++k) {
    SymMatrix cand(n);
    const int rank = 1 + static_cast<int>(rng.below(3));
    std::vector<std::pair<std::vector<double>, double>> parts;
    double wsum = 0.0;
    for (int p = 0; p < rank; ++p) {
      parts.emplace_back(rng.unit_vector(n), rng.uniform(-1.0, 1.0));
      wsum += std::abs(parts.back().second);
    }
    if (wsum == 0.0) continue;
    const double scale = delta * rng.uniform() / wsum;
    for (const auto& [q, w] : parts) cand.add_rank1_dense(w * scale, q.data());
    const double cl = stream_loss(cand, stream, kind);
    if (cl < best_loss) {
      best_loss = cl;
      best = cand;
    }
  }

  DecisionMatrix out;
  out.matrix = std::move(best);
  out.delta = delta;
  return out;
}

RegretReport regret_report(const std::vector<RoundRecord>& records,
                           const std::vector<AugmentedInstance>& stream,
                           const DecisionMatrix& comparator,
                           const LossKind& kind) {
  if (records.size() != stream.size())
    throw DimensionMismatch("regret: trace and stream lengths differ");
  RegretReport rep;
  rep.horizon = static_cast<long>(records.size());
  rep.d_diameter = 2.0 * comparator.delta;
  for (std::size_t t = 0; t < records.size(); ++t) {
    rep.learner_loss += records[t].loss;
    rep.comparator_loss +=
        loss(kind,
             predict(comparator.matrix, stream[t].features, kind.diagonal_mode),
             stream[t].label);
    const double slope =
        loss_slope(kind, records[t].prediction, records[t].label);
    rep.g_max = std::max(
        rep.g_max, gradient_term_from_slope(kind.diagonal_mode, slope,
                                            stream[t].features)
                       .frob_norm());
  }
  rep.regret = rep.learner_loss - rep.comparator_loss;
  const double t = static_cast<double>(rep.horizon);
  rep.bound = 12.0 * rep.d_diameter * rep.g_max * std::pow(t, 0.75) +
              rep.d_diameter * rep.g_max * std::pow(t, 0.25);
  rep.violated = rep.regret > rep.bound;
  return rep;
}

std::vector<AugmentedInstance> synthetic_stream(const SyntheticSpec& spec) {
  if (spec.dim < 2) throw ConfigError("synthetic: dim must be at least 2");
  if (spec.horizon < 0) throw ConfigError("synthetic: negative horizon");
  if (spec.delta <= 0.0) throw ConfigError("synthetic: delta must be positive");
  if (spec.rank < 1) throw ConfigError("synthetic: rank must be at least 1");
  if (spec.noise < 0.0) throw ConfigError("synthetic: negative noise");
  if (spec.density <= 0.0 || spec.density > 1.0)
    throw ConfigError("synthetic: density must be in (0, 1]");

  Rng rng(Rng::derive(spec.seed, kSynthStream));
  const int n = spec.dim;
  const int r = std::min(spec.rank, n);

  // Planted matrix: orthonormal directions, nuclear norm 0.8 * delta.
  std::vector<std::vector<double>> qs;
  while (static_cast<int>(qs.size()) < r) {
    std::vector<double> q = rng.unit_vector(n);
    for (const auto& prev : qs) {
      double dot = 0.0;
      for (int i = 0; i < n; ++i) dot += q[i] * prev[i];
      for (int i = 0; i < n; ++i) q[i] -= dot * prev[i];
    }
    double norm = 0.0;
    for (double v : q) norm += v * v;
    norm = std::sqrt(norm);
    if (norm < 1e-8) continue;
    for (double& v : q) v /= norm;
    qs.push_back(std::move(q));
  }
  std::vector<double> w(r);
  double wsum = 0.0;
  while (wsum == 0.0) {
    wsum = 0.0;
    for (double& v : w) {
      v = rng.uniform(-1.0, 1.0);
      wsum += std::abs(v);
    }
  }
  SymMatrix planted(n);
  const double scale = 0.8 * spec.delta / wsum;
  for (int p = 0; p < r; ++p) planted.add_rank1_dense(w[p] * scale, qs[p].data());

  std::vector<AugmentedInstance> stream;
  stream.reserve(spec.horizon);
  for (int t = 0; t < spec.horizon; ++t) {
    AugmentedInstance inst;
    for (int j = 0; j + 1 < n; ++j)
      if (rng.uniform() < spec.density)
        inst.features.push(j, rng.uniform(-1.0, 1.0));
    inst.features.push(n - 1, 1.0);
    const double clean = predict(planted, inst.features, DiagonalMode::all_pairs);
    const double noisy = clean + spec.noise * rng.normal();
    inst.label =
        spec.task == Task::regression ? noisy : (noisy >= 0.0 ? 1.0 : -1.0);
    stream.push_back(std::move(inst));
  }
  return stream;
}

void write_trace(const std::vector<RoundRecord>& records,
                 const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot write " + path);
  std::fprintf(f, "t,yhat,y,loss,cum_time\n");
  for (const RoundRecord& r : records)
    std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.17g\n", r.round, r.prediction,
                 r.label, r.loss, r.cum_time);
  if (std::fclose(f) != 0) throw Error("cannot write " + path);
}

std::vector<RoundRecord> read_trace(const std::string& path) {
  const auto lines = textutil::read_lines(path);
  if (lines.empty() || lines[0] != "t,yhat,y,loss,cum_time")
    throw ParseError("bad trace header in " + path, 1);
  std::vector<RoundRecord> records;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (textutil::blank(lines[li])) continue;
    const long lineno = static_cast<long>(li) + 1;
    const auto fields = textutil::split(lines[li], ",");
    if (fields.size() != 5)
      throw ParseError("expected t,yhat,y,loss,cum_time", lineno);
    RoundRecord r;
    r.round = static_cast<int>(textutil::parse_long(fields[0], lineno));
    r.prediction = textutil::parse_double(fields[1], lineno);
    r.label = textutil::parse_double(fields[2], lineno);
    r.loss = textutil::parse_double(fields[3], lineno);
    r.cum_time = textutil::parse_double(fields[4], lineno);
    records.push_back(r);
  }
  return records;
}

void write_summary(const std::vector<std::pair<std::string, std::string>>& kv,
                   const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot write " + path);
  for (const auto& [k, v] : kv) std::fprintf(f, "%s=%s\n", k.c_str(), v.c_str());
  if (std::fclose(f) != 0) throw Error("cannot write " + path);
}

std::vector<std::pair<double, double>> loss_time_curve(
    const std::vector<RoundRecord>& records, int every) {
  if (every < 1) throw ConfigError("curve: sampling stride must be positive");
  std::vector<std::pair<double, double>> curve;
  double cum = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    cum += records[i].loss;
    const int t = static_cast<int>(i) + 1;
    if (t % every == 0 || i + 1 == records.size())
      curve.emplace_back(records[i].cum_time, cum / t);
  }
  return curve;
}

}  // namespace occfm
