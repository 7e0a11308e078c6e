#include "fin/splits.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "fin/errors.hpp"
#include "fin/rng.hpp"

namespace fin {

namespace {

std::size_t round_count(double frac, std::size_t n) {
  return static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
}

void require_classes(const LabeledDataset& data, const std::vector<std::size_t>& part, const char* name) {
  std::vector<bool> seen(data.n_classes, false);
  for (std::size_t i : part) seen[static_cast<std::size_t>(data.labels[i])] = true;
  for (std::size_t c = 0; c < data.n_classes; ++c)
    if (!seen[c]) throw SplitError(std::string(name) + " partition has no item of class " + std::to_string(c));
}

}  // namespace

void SplitPlan::validate() const {
  if (!(test_frac > 0.0 && test_frac < 1.0) || !(val_frac > 0.0 && val_frac < 1.0))
    throw std::invalid_argument("test and validation fractions must lie in (0, 1)");
  if (!(test_frac + val_frac < 1.0)) throw std::invalid_argument("test + validation fractions must be below 1");
  if (repeats <= 0) throw std::invalid_argument("repeats must be positive");
  if (fractions.empty()) throw std::invalid_argument("at least one training fraction is required");
  for (double f : fractions)
    if (!(f > 0.0 && f <= 1.0)) throw std::invalid_argument("training fractions must lie in (0, 1]");
  if (!std::is_sorted(fractions.begin(), fractions.end()) ||
      std::adjacent_find(fractions.begin(), fractions.end()) != fractions.end())
    throw std::invalid_argument("training fractions must be strictly ascending");
}

Split split_repeated(const LabeledDataset& data, const SplitPlan& plan, int k) {
  plan.validate();
  if (k < 0 || k >= plan.repeats) throw std::invalid_argument("repetition index outside [0, repeats)");
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(plan.seed, "split", static_cast<std::uint64_t>(k)));
  shuffle(order, rng);

  const std::size_t n_test = round_count(plan.test_frac, n);
  const std::size_t n_val = round_count(plan.val_frac, n - n_test);
  if (n_test == 0 || n_val == 0 || n_test + n_val >= n) throw SplitError("dataset too small for the split fractions");
  Split s;
  s.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test),
               order.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), order.end());
  for (auto* part : {&s.train, &s.val, &s.test}) std::sort(part->begin(), part->end());
  require_classes(data, s.train, "train");
  require_classes(data, s.val, "validation");
  require_classes(data, s.test, "test");
  return s;
}

std::vector<std::int64_t> subjects_of(const LabeledDataset& data) {
  std::set<std::int64_t> ids;
  for (const auto& s : data.subject_ids)
    if (s) ids.insert(*s);
  return {ids.begin(), ids.end()};
}

Split split_leave_subjects_out(const LabeledDataset& data, std::int64_t val_subject, std::int64_t test_subject) {
  if (val_subject == test_subject) throw SplitError("validation and test subjects must differ");
  const auto ids = subjects_of(data);
  for (auto id : {val_subject, test_subject})
    if (!std::binary_search(ids.begin(), ids.end(), id)) throw SplitError("unknown subject " + std::to_string(id));
  Split s;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& sub = data.subject_ids[i];
    if (sub == test_subject) s.test.push_back(i);
    else if (sub == val_subject) s.val.push_back(i);
    else s.train.push_back(i);
  }
  if (s.train.empty()) throw SplitError("no training items remain");
  require_classes(data, s.train, "train");
  return s;
}

std::vector<std::size_t> subsample_stratified(const LabeledDataset& data, const std::vector<std::size_t>& pool,
                                              double fraction, std::uint64_t seed, int repetition) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("fraction must lie in (0, 1]");
  if (fraction == 1.0) return pool;
  const std::size_t target = round_count(fraction, pool.size());
  std::vector<std::vector<std::size_t>> by_class(data.n_classes);
  for (std::size_t i : pool) by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);

  // Largest-remainder allocation of the target over classes.
  std::vector<std::size_t> take(data.n_classes);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < data.n_classes; ++c) {
    const double exact = fraction * static_cast<double>(by_class[c].size());
    take[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += take[c];
    remainders.emplace_back(-(exact - std::floor(exact)), c);
  }
  std::sort(remainders.begin(), remainders.end());
  for (std::size_t r = 0; assigned < target && r < remainders.size(); ++r, ++assigned) ++take[remainders[r].second];

  Rng rng(derive_seed(seed, "subsample", static_cast<std::uint64_t>(repetition), std::bit_cast<std::uint64_t>(fraction)));
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < data.n_classes; ++c) {
    if (by_class[c].empty()) continue;
    if (take[c] == 0) throw SplitError("training fraction leaves class " + std::to_string(c) + " empty");
    shuffle(by_class[c], rng);
    out.insert(out.end(), by_class[c].begin(), by_class[c].begin() + static_cast<std::ptrdiff_t>(take[c]));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace fin
