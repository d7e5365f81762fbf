#include "experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "occfm/common.hpp"
#include "occfm/data.hpp"
#include "occfm/eval.hpp"
#include "occfm/learners.hpp"
#include "occfm/model.hpp"
#include "occfm/rng.hpp"

namespace occfm::cli {
namespace {

constexpr std::uint64_t kLearnerStream = 0x10ca;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t comma = s.find(',', start);
    if (comma == std::string::npos) comma = s.size();
    std::string tok = s.substr(start, comma - start);
    if (!tok.empty()) out.push_back(tok);
    start = comma + 1;
  }
  return out;
}

double parse_double(const std::string& tok, const char* what) {
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size() || tok.empty() || !std::isfinite(v))
    throw ConfigError(std::string("config: bad ") + what + ": " + tok);
  return v;
}

long parse_long(const std::string& tok, const char* what) {
  char* end = nullptr;
  long v = std::strtol(tok.c_str(), &end, 10);
  if (end != tok.c_str() + tok.size() || tok.empty())
    throw ConfigError(std::string("config: bad ") + what + ": " + tok);
  return v;
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

Task parse_task(const std::string& s, Task fallback) {
  if (s.empty()) return fallback;
  if (s == "regression") return Task::regression;
  if (s == "classification") return Task::classification;
  throw ConfigError("config: unknown task: " + s);
}

LossKind resolve_kind(const ExperimentConfig& cfg, Task task) {
  LossKind kind;
  kind.tag =
      task == Task::classification ? LossTag::logistic : LossTag::squared;
  if (cfg.diagonal_mode == "exclude-diagonal")
    kind.diagonal_mode = DiagonalMode::exclude_diagonal;
  else if (cfg.diagonal_mode == "all-pairs")
    kind.diagonal_mode = DiagonalMode::all_pairs;
  else
    throw ConfigError("config: unknown diagonal mode: " + cfg.diagonal_mode);
  return kind;
}

Dataset load_data(const ExperimentConfig& cfg) {
  if (cfg.data.empty()) throw ConfigError("config: --data is required");
  if (cfg.format == "libsvm") {
    if (cfg.sample_users > 0 || cfg.sample_items > 0)
      throw ConfigError("config: subsampling applies to movielens data only");
    return load_libsvm(cfg.data);
  }
  MovielensFormat fmt;
  if (cfg.format == "ml-tsv")
    fmt = MovielensFormat::tsv;
  else if (cfg.format == "ml-colon")
    fmt = MovielensFormat::double_colon;
  else
    throw ConfigError("config: unknown format: " + cfg.format);
  MovielensData ml = load_movielens(cfg.data, fmt);
  if (cfg.sample_users > 0 || cfg.sample_items > 0) {
    int nu = cfg.sample_users > 0 ? cfg.sample_users
                                  : static_cast<int>(ml.map.users.size());
    int ni = cfg.sample_items > 0 ? cfg.sample_items
                                  : static_cast<int>(ml.map.items.size());
    ml = subsample_users_items(ml, nu, ni, cfg.seed);
  }
  return std::move(ml.data);
}

int dataset_max_nnz(const Dataset& ds) {
  int m = 0;
  for (const auto& inst : ds.instances)
    m = std::max(m, static_cast<int>(inst.x.nnz()));
  return m;
}

int stream_max_nnz(const std::vector<AugmentedInstance>& stream) {
  int m = 0;
  for (const auto& inst : stream)
    m = std::max(m, static_cast<int>(inst.features.nnz()));
  return m;
}

// Dense gradient accumulation beats the per-round term list once rows stop
// being sparse.
LearnerConfig base_learner_config(const ExperimentConfig& cfg, int aug_dim,
                                  const LossKind& kind, int max_nnz) {
  LearnerConfig lc;
  lc.dim = aug_dim;
  lc.delta = cfg.delta;
  lc.eta = cfg.eta;
  lc.loss = kind;
  lc.fm_rank = cfg.rank;
  lc.include_current_gradient = cfg.include_current_gradient;
  lc.ledger_mode = max_nnz > 64 ? LedgerMode::dense : LedgerMode::termlist;
  lc.seed = cfg.seed;
  return lc;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw ConfigError("config: cannot create output directory " + dir + ": " +
                      ec.message());
}

struct RunOutcome {
  int fold = 0;
  int run = 0;
  bool ok = false;
  std::string error;
  int rounds = 0;
  double rmse_v = std::nan("");
  double err_v = std::nan("");
  double auc_v = std::nan("");
  double wall = 0.0;
};

// All (fold, run) streams of one learner/delta over one dataset; traces and
// summary.txt land in `dir`. Failed runs leave an error record behind and
// flip the exit code, finished runs keep their outputs.
int run_block(const ExperimentConfig& cfg, const Dataset& ds, Task task,
              const LossKind& kind, double delta, const std::string& dir,
              std::vector<std::pair<std::string, std::string>>* grid_row) {
  ensure_dir(dir);
  const int n = static_cast<int>(ds.size());
  SplitPlan plan{cfg.seed, cfg.folds, cfg.runs};

  LearnerConfig base = base_learner_config(cfg, ds.dim + 1, kind,
                                           dataset_max_nnz(ds) + 1);
  base.delta = delta;
  base.horizon = 1;
  make_learner(cfg.learner, base);  // reject bad names/knobs before any output

  std::vector<std::pair<int, int>> jobs;
  for (int f = 0; f < cfg.folds; ++f)
    for (int r = 0; r < cfg.runs; ++r) jobs.emplace_back(f, r);
  std::vector<RunOutcome> outcomes(jobs.size());

  auto do_job = [&](std::size_t j) {
    RunOutcome& o = outcomes[j];
    o.fold = jobs[j].first;
    o.run = jobs[j].second;
    try {
      FoldRun fr = plan_stream(n, plan, o.fold, o.run);
      auto stream = make_stream(ds, fr.train);
      LearnerConfig lc = base;
      lc.horizon = static_cast<long long>(stream.size());
      lc.seed = Rng::derive(cfg.seed, kLearnerStream, o.fold, o.run);
      auto learner = make_learner(cfg.learner, lc);
      auto records = run_online(*learner, stream, kind);
      write_trace(records, dir + "/run-" + std::to_string(o.fold) + "-" +
                               std::to_string(o.run) + ".trace");
      o.rounds = static_cast<int>(records.size());
      o.wall = records.empty() ? 0.0 : records.back().cum_time;
      if (task == Task::regression) {
        o.rmse_v = rmse(records);
      } else {
        o.err_v = error_rate(records);
        try {
          o.auc_v = auc(records);
        } catch (const Error&) {
          // a run whose stream saw one class has no rank statistic
        }
      }
      o.ok = true;
    } catch (const Error& e) {
      o.error = e.what();
    }
  };

  int workers = cfg.workers > 0
                    ? cfg.workers
                    : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  if (cfg.timing) workers = 1;  // keep the clocked region unpreempted
  workers = std::min<int>(workers, static_cast<int>(jobs.size()));

  std::atomic<std::size_t> next{0};
  auto drain = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) do_job(j);
  };
  if (workers <= 1) {
    drain();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(drain);
    for (auto& t : pool) t.join();
  }

  std::vector<double> rmses, errs, aucs, walls;
  int completed = 0;
  for (const auto& o : outcomes) {
    if (!o.ok) continue;
    ++completed;
    walls.push_back(o.wall);
    if (task == Task::regression) {
      rmses.push_back(o.rmse_v);
    } else {
      errs.push_back(o.err_v);
      if (!std::isnan(o.auc_v)) aucs.push_back(o.auc_v);
    }
  }

  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("dataset", ds.name);
  kv.emplace_back("learner", cfg.learner);
  kv.emplace_back("task", task == Task::regression ? "regression"
                                                   : "classification");
  kv.emplace_back("delta", fmt_g(delta));
  kv.emplace_back("eta", fmt_g(cfg.eta));
  kv.emplace_back("diagonal_mode", cfg.diagonal_mode);
  kv.emplace_back("folds", std::to_string(cfg.folds));
  kv.emplace_back("runs", std::to_string(cfg.runs));
  kv.emplace_back("seed", std::to_string(cfg.seed));
  kv.emplace_back("completed", std::to_string(completed));
  std::string primary;
  if (task == Task::regression) {
    kv.emplace_back("rmse_mean", fmt_g(mean_of(rmses)));
    kv.emplace_back("rmse_std", fmt_g(std_of(rmses)));
    primary = fmt_g(mean_of(rmses));
  } else {
    kv.emplace_back("error_mean", fmt_g(mean_of(errs)));
    kv.emplace_back("error_std", fmt_g(std_of(errs)));
    kv.emplace_back("auc_mean", fmt_g(mean_of(aucs)));
    kv.emplace_back("auc_std", fmt_g(std_of(aucs)));
    primary = fmt_g(mean_of(errs));
  }
  kv.emplace_back("time_mean", fmt_g(mean_of(walls)));
  int failures = 0;
  for (const auto& o : outcomes) {
    if (o.ok) continue;
    ++failures;
    kv.emplace_back("error-" + std::to_string(o.fold) + "-" +
                        std::to_string(o.run),
                    o.error);
  }
  write_summary(kv, dir + "/summary.txt");

  if (grid_row) {
    grid_row->emplace_back(
        "delta",
        fmt_g(delta) +
            (task == Task::regression ? " rmse_mean=" : " error_mean=") +
            primary);
  }
  std::printf("%s: completed %d/%zu runs, %s=%s\n", dir.c_str(), completed,
              jobs.size(),
              task == Task::regression ? "rmse_mean" : "error_mean",
              primary.c_str());
  if (failures > 0)
    std::fprintf(stderr, "%d run(s) failed; see %s/summary.txt\n", failures,
                 dir.c_str());
  return failures > 0 ? 1 : 0;
}

}  // namespace

int cmd_run(const ExperimentConfig& cfg) {
  Dataset ds = load_data(cfg);
  Task task = parse_task(cfg.task, ds.task);
  LossKind kind = resolve_kind(cfg, task);
  const std::string base_dir = cfg.out + "/" + ds.name + "/" + cfg.learner;
  if (cfg.grid.empty())
    return run_block(cfg, ds, task, kind, cfg.delta, base_dir, nullptr);

  int rc = 0;
  std::vector<std::pair<std::string, std::string>> grid_rows;
  for (const auto& tok : split_list(cfg.grid)) {
    double delta = parse_double(tok, "grid delta");
    rc |= run_block(cfg, ds, task, kind, delta, base_dir + "/delta-" + tok,
                    &grid_rows);
  }
  if (grid_rows.empty()) throw ConfigError("config: empty --grid list");
  ensure_dir(base_dir);
  write_summary(grid_rows, base_dir + "/grid.txt");
  return rc;
}

int cmd_regret(const ExperimentConfig& cfg) {
  std::vector<long> horizons;
  for (const auto& tok : split_list(cfg.horizons)) {
    long T = parse_long(tok, "horizon");
    if (T < 1) throw ConfigError("config: horizons must be positive");
    horizons.push_back(T);
  }
  if (horizons.empty()) throw ConfigError("config: empty --horizons list");
  std::sort(horizons.begin(), horizons.end());

  Task task = parse_task(cfg.task, Task::regression);
  LossKind kind = resolve_kind(cfg, task);
  SyntheticSpec spec;
  spec.dim = cfg.dim;
  spec.horizon = static_cast<int>(horizons.back());
  spec.delta = cfg.delta;
  spec.noise = cfg.noise;
  spec.density = cfg.density;
  spec.task = task;
  spec.seed = cfg.seed;
  const auto full = synthetic_stream(spec);

  const std::string dir =
      cfg.out + "/synthetic-d" + std::to_string(cfg.dim) + "/" + cfg.learner;
  ensure_dir(dir);

  for (long T : horizons) {
    std::vector<AugmentedInstance> prefix(full.begin(), full.begin() + T);
    LearnerConfig lc =
        base_learner_config(cfg, spec.dim, kind, stream_max_nnz(prefix));
    lc.horizon = T;
    auto learner = make_learner(cfg.learner, lc);
    auto records = run_online(*learner, prefix, kind);
    DecisionMatrix comp = best_fixed_comparator(prefix, kind, cfg.delta,
                                                cfg.comparator_iters, cfg.seed);
    RegretReport rep = regret_report(records, prefix, comp, kind);

    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("horizon", std::to_string(rep.horizon));
    kv.emplace_back("learner", cfg.learner);
    kv.emplace_back("learner_loss", fmt_g(rep.learner_loss));
    kv.emplace_back("comparator_loss", fmt_g(rep.comparator_loss));
    kv.emplace_back("regret", fmt_g(rep.regret));
    kv.emplace_back("regret_per_round",
                    fmt_g(rep.regret / static_cast<double>(rep.horizon)));
    kv.emplace_back("d_diameter", fmt_g(rep.d_diameter));
    kv.emplace_back("g_max", fmt_g(rep.g_max));
    kv.emplace_back("bound", fmt_g(rep.bound));
    kv.emplace_back("violated", rep.violated ? "1" : "0");
    write_summary(kv, dir + "/regret-" + std::to_string(T) + ".txt");
    std::printf("T=%ld regret=%.6g regret/T=%.6g bound=%.6g violated=%s\n", T,
                rep.regret, rep.regret / static_cast<double>(T), rep.bound,
                rep.violated ? "yes" : "no");
  }
  std::printf("reports under %s\n", dir.c_str());
  return 0;
}

int cmd_bench(const ExperimentConfig& cfg) {
  std::vector<std::string> learners = split_list(cfg.learner);
  if (learners.empty()) throw ConfigError("config: no learner given");

  std::vector<AugmentedInstance> stream;
  int aug_dim = 0;
  std::string name;
  Task task = Task::regression;
  if (!cfg.data.empty()) {
    Dataset ds = load_data(cfg);
    task = parse_task(cfg.task, ds.task);
    std::vector<int> order(ds.size());
    for (std::size_t i = 0; i < order.size(); ++i)
      order[i] = static_cast<int>(i);
    stream = make_stream(ds, order);
    aug_dim = ds.dim + 1;
    name = ds.name;
  } else {
    task = parse_task(cfg.task, Task::regression);
    SyntheticSpec spec;
    spec.dim = cfg.dim;
    spec.horizon = cfg.horizon;
    spec.delta = cfg.delta;
    spec.noise = cfg.noise;
    spec.density = cfg.density;
    spec.task = task;
    spec.seed = cfg.seed;
    stream = synthetic_stream(spec);
    aug_dim = cfg.dim;
    name = "synthetic-d" + std::to_string(cfg.dim);
  }
  LossKind kind = resolve_kind(cfg, task);

  for (const auto& lname : learners) {
    LearnerConfig lc =
        base_learner_config(cfg, aug_dim, kind, stream_max_nnz(stream));
    lc.horizon = std::max<long long>(1, static_cast<long long>(stream.size()));
    auto learner = make_learner(lname, lc);
    auto records = run_online(*learner, stream, kind);
    auto curve = loss_time_curve(records, cfg.every);

    const std::string dir = cfg.out + "/" + name + "/" + lname;
    ensure_dir(dir);
    const std::string path = dir + "/bench.csv";
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw Error("cannot write " + path);
    std::fprintf(f, "cum_time,avg_loss\n");
    for (const auto& [t, loss] : curve)
      std::fprintf(f, "%.17g,%.17g\n", t, loss);
    if (std::fclose(f) != 0) throw Error("write failed: " + path);
    std::printf("%s: rounds=%zu time=%.6fs final_avg_loss=%s -> %s\n",
                lname.c_str(), records.size(),
                records.empty() ? 0.0 : records.back().cum_time,
                curve.empty() ? "n/a" : fmt_g(curve.back().second).c_str(),
                path.c_str());
  }
  return 0;
}

int cmd_folds(const ExperimentConfig& cfg) {
  Dataset ds = load_data(cfg);
  SplitPlan plan{cfg.seed, cfg.folds, cfg.runs};
  auto folds = plan_folds(static_cast<int>(ds.size()), plan);
  std::printf("dataset=%s n=%zu folds=%d runs=%d seed=%llu\n", ds.name.c_str(),
              ds.size(), cfg.folds, cfg.runs,
              static_cast<unsigned long long>(cfg.seed));
  for (std::size_t i = 0; i < folds.size(); ++i) {
    std::printf("fold %zu size %zu:", i, folds[i].size());
    for (int idx : folds[i]) std::printf(" %d", idx);
    std::printf("\n");
  }
  return 0;
}

}  // namespace occfm::cli
