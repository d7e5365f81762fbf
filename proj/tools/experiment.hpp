#pragma once

#include <cstdint>
#include <string>

namespace occfm::cli {

// One flat bag of knobs shared by all subcommands; every field has a
// default, a config-file key equal to the flag name, and a flag override.
struct ExperimentConfig {
  std::string data;                  // dataset path; regret/bench fall back to
                                     // a synthetic stream when empty
  std::string format = "ml-tsv";     // ml-tsv | ml-colon | libsvm
  std::string task;                  // empty = dataset default
  std::string learner = "occfm";     // bench accepts a comma list
  double delta = 1.0;
  double eta = 0.0;                  // 0 selects the horizon-based default
  int rank = 8;                      // factorized baselines
  std::uint64_t seed = 0;
  int folds = 5;
  int runs = 20;
  int sample_users = 0;              // 0 = keep all
  int sample_items = 0;
  int workers = 0;                   // 0 = available cores; timing forces 1
  bool timing = false;
  std::string out = "out";
  bool include_current_gradient = true;
  std::string diagonal_mode = "all-pairs";  // all-pairs | exclude-diagonal
  std::string grid;                  // comma list of delta values

  // synthetic stream shape (regret, bench without --data)
  int dim = 20;
  int horizon = 400;
  double noise = 0.1;
  double density = 0.4;
  std::string horizons = "100,400,1600";
  int comparator_iters = 500;
  int every = 10;                    // bench curve sampling stride
};

int cmd_run(const ExperimentConfig& cfg);
int cmd_regret(const ExperimentConfig& cfg);
int cmd_bench(const ExperimentConfig& cfg);
int cmd_folds(const ExperimentConfig& cfg);

}  // namespace occfm::cli
