#include "occfm/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <utility>

#include "occfm/rng.hpp"
#include "text_util.hpp"

namespace occfm {
namespace {

using textutil::blank;
using textutil::parse_double;
using textutil::parse_long;
using textutil::read_lines;
using textutil::split;

std::string stem_of(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

struct RawRating {
  long user = 0;
  long item = 0;
  double rating = 0.0;
  long line = 0;
};

std::vector<RawRating> read_ratings(const std::string& path,
                                    MovielensFormat fmt) {
  const std::string sep = fmt == MovielensFormat::tsv ? "\t" : "::";
  std::vector<RawRating> out;
  long lineno = 0;
  for (const std::string& line : read_lines(path)) {
    ++lineno;
    if (blank(line)) continue;
    const auto fields = split(line, sep);
    if (fields.size() != 4)
      throw ParseError("expected user, item, rating, timestamp", lineno);
    RawRating r;
    r.user = parse_long(fields[0], lineno);
    r.item = parse_long(fields[1], lineno);
    r.rating = parse_double(fields[2], lineno);
    parse_long(fields[3], lineno);  // timestamp, discarded
    r.line = lineno;
    out.push_back(r);
  }
  if (out.empty()) throw ParseError("no ratings in " + path);
  return out;
}

Dataset encode_ratings(const std::vector<RawRating>& ratings,
                       const OneHotMap& map, std::string name) {
  Dataset ds;
  ds.dim = map.dim();
  ds.task = Task::regression;
  ds.name = std::move(name);
  ds.instances.reserve(ratings.size());
  for (const RawRating& r : ratings) {
    const auto u = map.users.find(r.user);
    if (u == map.users.end())
      throw ParseError("unknown user id " + std::to_string(r.user), r.line);
    const auto i = map.items.find(r.item);
    if (i == map.items.end())
      throw ParseError("unknown item id " + std::to_string(r.item), r.line);
    Instance inst;
    inst.x.push(u->second, 1.0);
    inst.x.push(i->second, 1.0);
    inst.y = r.rating;
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

// `label idx:val ...`, whitespace-separated; features come back sorted by
// index and duplicate-free.
struct RawRecord {
  double label = 0.0;
  std::vector<std::pair<long, double>> feats;
};

RawRecord parse_record(const std::string& line, long lineno) {
  RawRecord raw;
  bool have_label = false;
  std::size_t pos = 0;
  while (pos < line.size()) {
    std::size_t end = line.find_first_of(" \t", pos);
    if (end == std::string::npos) end = line.size();
    if (end > pos) {
      const std::string tok = line.substr(pos, end - pos);
      if (!have_label) {
        raw.label = parse_double(tok, lineno);
        have_label = true;
      } else {
        const std::size_t colon = tok.find(':');
        if (colon == std::string::npos)
          throw ParseError("expected idx:val, got '" + tok + "'", lineno);
        const long idx = parse_long(tok.substr(0, colon), lineno);
        if (idx < 0) throw ParseError("negative feature index", lineno);
        raw.feats.emplace_back(idx, parse_double(tok.substr(colon + 1), lineno));
      }
    }
    pos = end + 1;
  }
  std::sort(raw.feats.begin(), raw.feats.end());
  for (std::size_t k = 1; k < raw.feats.size(); ++k)
    if (raw.feats[k].first == raw.feats[k - 1].first)
      throw ParseError(
          "duplicate feature index " + std::to_string(raw.feats[k].first),
          lineno);
  return raw;
}

}  // namespace

MovielensData load_movielens(const std::string& path, MovielensFormat fmt) {
  const auto ratings = read_ratings(path, fmt);
  MovielensData md;
  for (const RawRating& r : ratings) {
    md.map.users.emplace(r.user, 0);
    md.map.items.emplace(r.item, 0);
  }
  int next = 0;
  for (auto& kv : md.map.users) kv.second = next++;
  for (auto& kv : md.map.items) kv.second = next++;
  md.data = encode_ratings(ratings, md.map, stem_of(path));
  return md;
}

Dataset load_movielens(const std::string& path, MovielensFormat fmt,
                       const OneHotMap& map) {
  return encode_ratings(read_ratings(path, fmt), map, stem_of(path));
}

MovielensData subsample_users_items(const MovielensData& ds, int n_users,
                                    int n_items, std::uint64_t seed) {
  if (n_users < 1 || n_items < 1)
    throw ConfigError("subsample: user and item counts must be positive");
  const auto pick = [](std::vector<long> ids, int want, Rng& rng,
                       const char* what) {
    if (static_cast<int>(ids.size()) <= want) {
      if (static_cast<int>(ids.size()) < want)
        std::fprintf(stderr, "subsample: only %zu %s available, keeping all\n",
                     ids.size(), what);
      return ids;
    }
    rng.shuffle(ids.begin(), ids.end());
    ids.resize(want);
    std::sort(ids.begin(), ids.end());
    return ids;
  };
  std::vector<long> uids, iids;
  for (const auto& kv : ds.map.users) uids.push_back(kv.first);
  for (const auto& kv : ds.map.items) iids.push_back(kv.first);
  Rng rng(Rng::derive(seed, kSampleStream));
  const auto su = pick(std::move(uids), n_users, rng, "users");
  const auto si = pick(std::move(iids), n_items, rng, "items");

  MovielensData sub;
  int next = 0;
  for (long id : su) sub.map.users[id] = next++;
  for (long id : si) sub.map.items[id] = next++;

  // Old column -> original id, to filter the encoded instances.
  std::vector<long> col_id(ds.map.dim(), 0);
  for (const auto& kv : ds.map.users) col_id[kv.second] = kv.first;
  for (const auto& kv : ds.map.items) col_id[kv.second] = kv.first;

  sub.data.dim = sub.map.dim();
  sub.data.task = Task::regression;
  sub.data.name = ds.data.name + "-sub";
  for (const Instance& inst : ds.data.instances) {
    const auto u = sub.map.users.find(col_id[inst.x.idx[0]]);
    const auto i = sub.map.items.find(col_id[inst.x.idx[1]]);
    if (u == sub.map.users.end() || i == sub.map.items.end()) continue;
    Instance kept;
    kept.x.push(u->second, 1.0);
    kept.x.push(i->second, 1.0);
    kept.y = inst.y;
    sub.data.instances.push_back(std::move(kept));
  }
  return sub;
}

Dataset load_libsvm(const std::string& path) {
  std::vector<RawRecord> raws;
  bool saw_zero = false;
  long max_idx = -1;
  long lineno = 0;
  for (const std::string& line : read_lines(path)) {
    ++lineno;
    if (blank(line)) continue;
    RawRecord raw = parse_record(line, lineno);
    for (const auto& f : raw.feats) {
      saw_zero = saw_zero || f.first == 0;
      max_idx = std::max(max_idx, f.first);
    }
    raws.push_back(std::move(raw));
  }
  if (raws.empty()) throw ParseError("no instances in " + path);

  const long base = saw_zero ? 0 : 1;
  if (max_idx - base + 1 > 2147483647L)
    throw ParseError("feature index too large in " + path);
  Dataset ds;
  ds.task = Task::classification;
  ds.name = stem_of(path);
  ds.dim = static_cast<int>(std::max<long>(max_idx - base + 1, 0));
  ds.instances.reserve(raws.size());
  for (const RawRecord& raw : raws) {
    Instance inst;
    inst.y = raw.label > 0 ? 1.0 : -1.0;
    for (const auto& f : raw.feats)
      inst.x.push(static_cast<std::int32_t>(f.first - base), f.second);
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot write " + path);
  std::fprintf(f, "#dim=%d task=%s\n", ds.dim,
               ds.task == Task::regression ? "regression" : "classification");
  for (const Instance& inst : ds.instances) {
    std::fprintf(f, "%.17g", inst.y);
    for (std::size_t k = 0; k < inst.x.nnz(); ++k)
      std::fprintf(f, " %d:%.17g", inst.x.idx[k], inst.x.val[k]);
    std::fputc('\n', f);
  }
  if (std::fclose(f) != 0) throw Error("cannot write " + path);
}

Dataset load_dataset(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw ParseError("empty cache file " + path);
  int dim = 0;
  char task[32] = {0};
  if (std::sscanf(lines[0].c_str(), "#dim=%d task=%31s", &dim, task) != 2 ||
      dim < 0)
    throw ParseError("bad cache header '" + lines[0] + "'", 1);
  Dataset ds;
  ds.dim = dim;
  ds.name = stem_of(path);
  if (std::strcmp(task, "regression") == 0) {
    ds.task = Task::regression;
  } else if (std::strcmp(task, "classification") == 0) {
    ds.task = Task::classification;
  } else {
    throw ParseError("bad task '" + std::string(task) + "'", 1);
  }
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const long lineno = static_cast<long>(li) + 1;
    if (blank(lines[li])) continue;
    const RawRecord raw = parse_record(lines[li], lineno);
    Instance inst;
    inst.y = raw.label;
    if (ds.task == Task::classification && inst.y != 1.0 && inst.y != -1.0)
      throw ParseError("classification label must be -1 or +1", lineno);
    for (const auto& f : raw.feats) {
      if (f.first >= dim)
        throw ParseError("feature index " + std::to_string(f.first) +
                             " out of range for dim " + std::to_string(dim),
                         lineno);
      inst.x.push(static_cast<std::int32_t>(f.first), f.second);
    }
    ds.instances.push_back(std::move(inst));
  }
  if (ds.instances.empty()) throw ParseError("no instances in " + path);
  return ds;
}

std::vector<std::vector<int>> plan_folds(int n, const SplitPlan& plan) {
  if (plan.n_folds < 2) throw ConfigError("split: need at least 2 folds");
  if (n < plan.n_folds) throw ConfigError("split: fewer instances than folds");
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  Rng rng(Rng::derive(plan.seed, kFoldStream));
  rng.shuffle(perm.begin(), perm.end());
  std::vector<std::vector<int>> folds(plan.n_folds);
  for (int i = 0; i < n; ++i) folds[i % plan.n_folds].push_back(perm[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

FoldRun plan_stream(int n, const SplitPlan& plan, int fold, int run) {
  if (fold < 0 || fold >= plan.n_folds)
    throw ConfigError("split: fold out of range");
  if (run < 0) throw ConfigError("split: run must be nonnegative");
  const auto folds = plan_folds(n, plan);
  FoldRun fr;
  fr.fold = fold;
  fr.run = run;
  fr.heldout = folds[fold];
  std::vector<char> held(n, 0);
  for (int i : fr.heldout) held[i] = 1;
  fr.train.reserve(n - fr.heldout.size());
  for (int i = 0; i < n; ++i)
    if (!held[i]) fr.train.push_back(i);
  Rng rng(Rng::derive(plan.seed, kOrderStream, static_cast<std::uint64_t>(fold),
                      static_cast<std::uint64_t>(run)));
  rng.shuffle(fr.train.begin(), fr.train.end());
  return fr;
}

}  // namespace occfm
