#include <cstdio>
#include <exception>

#include <CLI11.hpp>

#include "experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Online compact convexified factorization machines"};
  app.require_subcommand(1);

  occfm::cli::ExperimentConfig cfg;

  // Options live on the root so a flat key=value --config file can fill any
  // of them; subcommands fall through to here.
  app.add_option("--data", cfg.data, "Dataset file");
  app.add_option("--format", cfg.format, "Input format")
      ->check(CLI::IsMember({"ml-tsv", "ml-colon", "libsvm"}))
      ->capture_default_str();
  app.add_option("--task", cfg.task,
                 "regression|classification (default: per dataset)")
      ->check(CLI::IsMember({"regression", "classification"}));
  app.add_option(
         "--learner", cfg.learner,
         "occfm|ccfm-ogd|ccfm-pa|ccfm-ftrl|fm-ftrl|cfm-ftrl; bench takes "
         "a comma list")
      ->capture_default_str();
  app.add_option("--delta", cfg.delta, "Nuclear-ball radius")
      ->capture_default_str();
  app.add_option("--eta", cfg.eta,
                 "Gradient-sum weight; 0 picks the horizon-based default")
      ->capture_default_str();
  app.add_option("--rank", cfg.rank, "Rank of the factorized baselines")
      ->capture_default_str();
  app.add_option("--seed", cfg.seed, "Master seed")
      ->envname("OCCFM_SEED")
      ->capture_default_str();
  app.add_option("--folds", cfg.folds, "Cross-validation folds")
      ->capture_default_str();
  app.add_option("--runs", cfg.runs, "Stream permutations per fold")
      ->capture_default_str();
  app.add_option("--sample-users", cfg.sample_users,
                 "Subsample this many users (movielens formats; 0 = all)")
      ->capture_default_str();
  app.add_option("--sample-items", cfg.sample_items,
                 "Subsample this many items (movielens formats; 0 = all)")
      ->capture_default_str();
  app.add_option("--workers", cfg.workers,
                 "Concurrent (fold, run) streams; 0 = available cores")
      ->capture_default_str();
  app.add_flag("--timing", cfg.timing,
               "Run serially so wall-clock numbers are undisturbed");
  app.add_option("--out", cfg.out, "Output directory")->capture_default_str();
  app.add_flag("--include-current-gradient,!--no-include-current-gradient",
               cfg.include_current_gradient,
               "Fold the current round's gradient into the step oracle");
  app.add_option("--diagonal-mode", cfg.diagonal_mode,
                 "all-pairs|exclude-diagonal")
      ->check(CLI::IsMember({"all-pairs", "exclude-diagonal"}))
      ->capture_default_str();
  app.add_option("--grid", cfg.grid,
                 "run: comma list of delta values to sweep");
  app.add_option("--horizons", cfg.horizons, "regret: comma list of horizons")
      ->capture_default_str();
  app.add_option("--comparator-iters", cfg.comparator_iters,
                 "regret: offline comparator gradient steps")
      ->capture_default_str();
  app.add_option("--dim", cfg.dim, "Synthetic stream dimension")
      ->capture_default_str();
  app.add_option("--noise", cfg.noise, "Synthetic label noise")
      ->capture_default_str();
  app.add_option("--density", cfg.density, "Synthetic feature density")
      ->capture_default_str();
  app.add_option("--horizon", cfg.horizon,
                 "bench: synthetic stream length (when --data is absent)")
      ->capture_default_str();
  app.add_option("--every", cfg.every,
                 "bench: curve sampling stride in rounds")
      ->capture_default_str();
  app.set_config("--config", "",
                 "Flat key=value file (# comments); flags win over file "
                 "values");

  int rc = 0;
  auto guarded = [&](int (*fn)(const occfm::cli::ExperimentConfig&)) {
    try {
      rc = fn(cfg);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      rc = 1;
    }
  };

  auto* run = app.add_subcommand(
      "run", "Stream every (fold, permutation) pair and summarize metrics");
  run->fallthrough();
  run->callback([&] { guarded(occfm::cli::cmd_run); });

  auto* regret = app.add_subcommand(
      "regret", "Measure regret against the best fixed matrix in hindsight");
  regret->fallthrough();
  regret->callback([&] { guarded(occfm::cli::cmd_regret); });

  auto* bench = app.add_subcommand(
      "bench", "Emit loss-vs-time curves for one or more learners");
  bench->fallthrough();
  bench->callback([&] { guarded(occfm::cli::cmd_bench); });

  auto* folds = app.add_subcommand("folds", "Print the fold assignment");
  folds->fallthrough();
  folds->callback([&] { guarded(occfm::cli::cmd_folds); });

  CLI11_PARSE(app, argc, argv);
  return rc;
}
