#pragma once

// Labeled multi-channel TF datasets: synthetic tasks built from the oracles
// and CSV ingest/export for external data.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fin/features.hpp"
#include "fin/matrix.hpp"
#include "fin/signal_gen.hpp"

namespace fin {

/// Row i of inputs holds item i's channels back to back, each a flattened
/// TF map of tf_dim values.
struct LabeledDataset {
  std::size_t n_channels = 1;
  std::size_t tf_dim = 0;
  std::size_t n_classes = 2;
  Matrix inputs;
  std::vector<int> labels;
  std::vector<std::optional<std::int64_t>> subject_ids;
  std::vector<std::int64_t> item_ids;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t input_dim() const noexcept { return n_channels * tf_dim; }

  /// Throws std::invalid_argument on inconsistent shapes, labels outside
  /// [0, n_classes) or a class with fewer than 2 items.
  void validate() const;

  /// One-hot targets for the given rows.
  Matrix one_hot(std::span<const std::size_t> rows) const;
  std::vector<int> labels_at(std::span<const std::size_t> rows) const;

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

enum class TaskKind { FeatureThreshold, MultiFeature, Csv };

struct TaskSpec {
  TaskKind kind = TaskKind::FeatureThreshold;
  std::vector<FeatureId> features{FeatureId::Entropy};
  std::size_t n_channels = 1;
  std::size_t n_items = 2000;
  double label_noise = 0.05;
  std::size_t n_subjects = 0;  // > 0 assigns subject item % n_subjects
  std::uint64_t seed = 0;
  std::filesystem::path csv_path;
  std::size_t signal_length = 512;
  double sample_rate = 128.0;
  WaveletConfig wavelet;
  FeatureConfig feature_config;

  /// "feature-threshold:<feature>", "multi-feature:<f1>+<f2>..." or "csv:<path>".
  static TaskSpec parse(const std::string& text);
  std::string to_string() const;
};

/// Per-item scores and the rule a synthetic task labels by.
struct TaskTruth {
  std::vector<double> scores;   // label = scores > threshold before noise
  double threshold = 0.0;
  std::vector<double> weights;  // multi_feature only, one per feature
  std::vector<bool> flipped;
};

/// feature_threshold: label is 1 when the channel-mean oracle value exceeds
/// the corpus median. multi_feature: label is 1 when a fixed random linear
/// rule over per-feature ranks (channel means, scaled to [0, 1]) exceeds its
/// median. Each label then flips with probability label_noise.
LabeledDataset make_task(const TaskSpec& spec, TaskTruth* truth = nullptr);

/// Schema: item_id,subject_id,label,channel,v0,...; one row per
/// (item, channel), channels of an item adjacent and in order.
void write_dataset_csv(const LabeledDataset& data, const std::filesystem::path& path);
LabeledDataset read_dataset_csv(const std::filesystem::path& path);

}  // namespace fin
