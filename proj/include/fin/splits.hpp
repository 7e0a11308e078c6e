#pragma once

// Train/validation/test partitioning protocols.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fin/dataset.hpp"

namespace fin {

enum class SplitMode { RepeatedRandom, LeaveSubjectsOut, FractionSweep };

struct SplitPlan {
  SplitMode mode = SplitMode::RepeatedRandom;
  double test_frac = 0.15;
  double val_frac = 0.15;
  int repeats = 50;
  std::vector<double> fractions{1.0};
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on fractions outside (0, 1), test + val
  /// not below 1, non-positive repeats, or unsorted sweep fractions.
  void validate() const;
};

/// Sorted, pairwise disjoint index sets covering the dataset.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Repetition k: a seeded round(test_frac * N) test draw, then
/// round(val_frac * remaining) validation items. Throws SplitError when any
/// part ends up missing a class.
Split split_repeated(const LabeledDataset& data, const SplitPlan& plan, int k);

/// Everything of test_subject is test, of val_subject validation, the rest
/// training. Throws SplitError on unknown or equal subjects.
Split split_leave_subjects_out(const LabeledDataset& data, std::int64_t val_subject, std::int64_t test_subject);

/// Distinct subject ids in ascending order.
std::vector<std::int64_t> subjects_of(const LabeledDataset& data);

/// Stratified draw of round(fraction * |pool|) items from pool, seeded by
/// (seed, repetition, fraction). fraction 1 returns pool unchanged. Throws
/// SplitError if a class present in pool gets no item.
std::vector<std::size_t> subsample_stratified(const LabeledDataset& data, const std::vector<std::size_t>& pool,
                                              double fraction, std::uint64_t seed, int repetition);

}  // namespace fin
