#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "occfm/common.hpp"
#include "occfm/model.hpp"

namespace occfm {

struct Instance {
  SparseVec x;
  double y = 0.0;

  bool operator==(const Instance&) const = default;
};

// Immutable after load. Every feature index lies in [0, dim); classification
// labels are in {-1, +1}, regression labels are finite.
struct Dataset {
  std::vector<Instance> instances;
  int dim = 0;
  Task task = Task::regression;
  std::string name;

  std::size_t size() const { return instances.size(); }
};

enum class MovielensFormat { tsv, double_colon };

// Original user/item ids -> one-hot columns. Users occupy [0, |U|) and items
// [|U|, |U|+|I|), each block ordered by original id.
struct OneHotMap {
  std::map<long, int> users;
  std::map<long, int> items;

  int dim() const { return static_cast<int>(users.size() + items.size()); }
  bool operator==(const OneHotMap&) const = default;
};

struct MovielensData {
  Dataset data;
  OneHotMap map;
};

// Rating files: `user<TAB>item<TAB>rating<TAB>timestamp` (tsv) or
// `user::item::rating::timestamp` (double_colon). Timestamps are parsed and
// discarded. Each instance gets exactly two unit features, user then item.
MovielensData load_movielens(const std::string& path, MovielensFormat fmt);

// Re-read under a frozen map; ids absent from the map are an error.
Dataset load_movielens(const std::string& path, MovielensFormat fmt,
                       const OneHotMap& map);

// Keeps only ratings whose user and item both fall in a seeded sample of
// n_users/n_items ids, re-indexed densely over the sampled sets. Asking for
// more ids than exist keeps all of them and warns on stderr.
MovielensData subsample_users_items(const MovielensData& ds, int n_users,
                                    int n_items, std::uint64_t seed);

// `label idx:val ...` classification lines. The index base is auto-detected:
// 0-based iff index 0 occurs anywhere, else 1-based. Labels map to {-1, +1}
// with 0 -> -1.
Dataset load_libsvm(const std::string& path);

// Canonical cache: header `#dim=<d> task=<regression|classification>`, then
// one `label idx:val ...` record per line, 0-based. Doubles round-trip
// bit-exactly.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

struct SplitPlan {
  std::uint64_t seed = 0;
  int n_folds = 5;
  int runs = 20;
};

// Seed streams for the split plan, fixed so that fold membership and stream
// orders can be reproduced outside this module: fold assignment shuffles
// [0, n) under Rng(Rng::derive(seed, kFoldStream)) and deals round-robin;
// the (fold, run) train order shuffles the ascending complement of the fold
// under Rng(Rng::derive(seed, kOrderStream, fold, run)); subsampling draws
// from Rng(Rng::derive(seed, kSampleStream)), users first.
inline constexpr std::uint64_t kFoldStream = 0x5b17;
inline constexpr std::uint64_t kOrderStream = 0x07de;
inline constexpr std::uint64_t kSampleStream = 0x5a3e;

// Balanced partition of [0, n) into n_folds disjoint ascending index lists.
std::vector<std::vector<int>> plan_folds(int n, const SplitPlan& plan);

struct FoldRun {
  int fold = 0;
  int run = 0;
  std::vector<int> train;    // the other folds, in seeded stream order
  std::vector<int> heldout;  // this fold, ascending
};

FoldRun plan_stream(int n, const SplitPlan& plan, int fold, int run);

}  // namespace occfm
