#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "labrisk/errors.hpp"
#include "labrisk/matrix.hpp"
#include "labrisk/rng.hpp"

namespace labrisk::sweep {

struct SplitSpec {
  double train = 0.60, val = 0.20, test = 0.20;
  std::uint64_t seed = 1;
};

struct Split {
  std::vector<std::size_t> train_idx, val_idx, test_idx;
};

namespace detail {
// Unique subjects in order of first appearance (stable across platforms).
inline std::vector<std::string> unique_subjects(
    const std::vector<std::string>& ids) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& id : ids)
    if (seen.insert(id).second) out.push_back(id);
  return out;
}
}  // namespace detail

// Shuffle subjects and cut by cumulative subject fraction; every visit
// follows its subject, so partitions never share a subject.
inline Split group_shuffle_split(const std::vector<std::string>& subject_ids,
                                 const SplitSpec& spec) {
  if (std::abs(spec.train + spec.val + spec.test - 1.0) > 1e-9)
    throw UserError("split fractions must sum to 1");
  auto subjects = detail::unique_subjects(subject_ids);
  if (subjects.size() < 3)
    throw UserError("group_shuffle_split: need at least 3 subjects");
  Rng rng(spec.seed);
  rng.shuffle(subjects);
  const std::size_t n = subjects.size();
  const std::size_t n_train = static_cast<std::size_t>(
      std::llround(spec.train * static_cast<double>(n)));
  const std::size_t n_val = static_cast<std::size_t>(
      std::llround((spec.train + spec.val) * static_cast<double>(n)));
  std::map<std::string, int> part;
  for (std::size_t i = 0; i < n; ++i)
    part[subjects[i]] = i < n_train ? 0 : (i < n_val ? 1 : 2);
  Split s;
  for (std::size_t r = 0; r < subject_ids.size(); ++r) {
    switch (part.at(subject_ids[r])) {
      case 0: s.train_idx.push_back(r); break;
      case 1: s.val_idx.push_back(r); break;
      default: s.test_idx.push_back(r); break;
    }
  }
  return s;
}

struct Fold {
  std::vector<std::size_t> fit_idx, score_idx;
};

// Grouped k-fold: subjects are shuffled and dealt round-robin; no subject
// ever appears on both sides of a fold.
inline std::vector<Fold> grouped_kfold(
    const std::vector<std::string>& subject_ids, int folds,
    std::uint64_t seed) {
  auto subjects = detail::unique_subjects(subject_ids);
  if (static_cast<int>(subjects.size()) < folds)
    throw UserError("grouped_kfold: fewer distinct subjects than folds");
  Rng rng(seed);
  rng.shuffle(subjects);
  std::map<std::string, int> fold_of;
  for (std::size_t i = 0; i < subjects.size(); ++i)
    fold_of[subjects[i]] = static_cast<int>(i % folds);
  std::vector<Fold> out(folds);
  for (std::size_t r = 0; r < subject_ids.size(); ++r) {
    const int f = fold_of.at(subject_ids[r]);
    for (int g = 0; g < folds; ++g)
      (g == f ? out[g].score_idx : out[g].fit_idx).push_back(r);
  }
  return out;
}

}  // namespace labrisk::sweep
