#pragma once

// Benchmark protocols: repeated splits, training-fraction sweeps, baseline
// topology search, classical comparators, statistics and report files.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fin/classical.hpp"
#include "fin/dataset.hpp"
#include "fin/engine.hpp"
#include "fin/splits.hpp"
#include "fin/stats.hpp"
#include "fin/train.hpp"

namespace fin::bench {

enum class ModelKind { Fin, FinReinit, FinEnsemble, BaselineSearch, Knn, LinearMargin };

/// A model entry of a benchmark. Textual forms: fin:<path>,
/// fin-reinit:<path>, fin-ensemble:<path>+<path>..., baseline-search, knn,
/// linear-margin.
struct ModelSpec {
  ModelKind kind = ModelKind::Knn;
  std::vector<std::filesystem::path> paths;
  std::vector<FinArtifact> artifacts;  // filled by load_artifacts()

  static ModelSpec parse(const std::string& text);
  /// Kind plus artifact file stems, e.g. "fin-ensemble:entropy+kurtosis".
  std::string tag() const;
  bool uses_artifacts() const noexcept { return !paths.empty(); }
  void load_artifacts();
};

/// Comma-separated list; duplicate tags are rejected.
std::vector<ModelSpec> parse_models(const std::string& list);

struct SearchConfig {
  std::size_t n_candidates = 20;
  int search_splits = 3;  // leading splits used for selection
  int min_layers = 2;     // affine layers, softmax output included
  int max_layers = 10;
  std::vector<std::size_t> widths{32, 64, 128, 256, 512};
};

struct BenchConfig {
  SplitPlan plan;
  nn::TrainConfig train{0.01, 0.9, 32, 30, 5, 0};
  std::size_t knn_k = 5;
  LinearMarginConfig margin;
  SearchConfig search;
  bool serial_timing = false;  // one run at a time, for wall-clock comparisons
  std::uint64_t seed = 0;
};

struct RunRecord {
  std::string model_tag;
  int split = 0;
  double fraction = 1.0;
  std::size_t n_train = 0;
  double accuracy = 0.0;
  double train_seconds = 0.0;
  nn::TrainHistory history;  // empty for non-neural models
};

struct Aggregate {
  std::string model_tag;
  double fraction = 0.0;  // unused in per-model aggregates
  std::size_t n_runs = 0;
  double accuracy_mean = 0.0, accuracy_std = 0.0;
  double seconds_mean = 0.0, seconds_std = 0.0;
};

struct StatRecord {
  std::string test;  // "welch_greater" or "levene"
  std::string group_a, group_b;
  double fraction = 1.0;
  double statistic = 0.0;
  double p_value = 1.0;
  double corrected_p = 1.0;
  std::string verdict;  // "significant", "not_significant" or "degenerate"
};

struct SearchRecord {
  std::size_t candidate = 0;
  std::string topology;
  std::size_t n_params = 0;
  int split = 0;
  double val_accuracy = 0.0;
  bool diverged = false;
};

struct SearchResult {
  std::vector<nn::Topology> candidates;
  std::vector<SearchRecord> records;
  std::vector<double> mean_val_accuracy;  // per candidate
  std::size_t winner = 0;
};

struct RunFailure {
  std::string model_tag;
  int split = 0;
  double fraction = 1.0;
  bool diverged = false;
  std::string message;
};

struct EvalReport {
  std::string task;
  std::vector<RunRecord> runs;
  std::vector<Aggregate> aggregates;           // per model tag
  std::vector<Aggregate> fraction_aggregates;  // per (fraction, model tag)
  std::vector<StatRecord> stats;
  std::optional<SearchResult> search;
  std::vector<RunFailure> failures;
};

/// Ordered pair of model tags compared with a one-tailed Welch test
/// (group_a greater) and Levene's test, per fraction.
struct Comparison {
  std::string group_a, group_b;
};

double accuracy(std::span<const int> predicted, std::span<const int> truth);

/// Random baseline topologies: layer count, widths and hidden activations
/// drawn uniformly, softmax output.
std::vector<nn::Topology> sample_topologies(std::size_t input_dim, std::size_t n_classes, const SearchConfig& cfg,
                                            std::uint64_t seed);

/// Trains every candidate on each split's training part and scores it on
/// the validation part only. Highest mean validation accuracy wins; ties go
/// to fewer parameters, then the lower index. Diverged runs score 0.
SearchResult baseline_search(const LabeledDataset& data, const std::vector<Split>& splits,
                             const std::vector<nn::Topology>& candidates, const nn::TrainConfig& cfg,
                             std::uint64_t seed, bool serial = false);

/// The split used for repetition k of the plan.
Split make_split(const LabeledDataset& data, const SplitPlan& plan, int k);
int split_count(const LabeledDataset& data, const SplitPlan& plan);

/// Trains on (subsampled train, val) and evaluates on test; all randomness
/// comes from the split index k and the bench seed.
using Runner = std::function<RunRecord(const Split& split, int k, double fraction)>;

/// For every split and fraction, subsamples the training part (stratified)
/// and calls runner. Runs execute concurrently unless serial is set.
std::vector<RunRecord> fraction_sweep(const LabeledDataset& data, const SplitPlan& plan, const Runner& runner,
                                      bool serial = false, std::vector<RunFailure>* failures = nullptr);

/// Full protocol over all models; statistics use the given comparisons, or
/// every ordered pair of models in list order when empty.
EvalReport run_benchmark(const LabeledDataset& data, const std::vector<ModelSpec>& models, const BenchConfig& cfg,
                         const std::vector<Comparison>& comparisons = {});

std::vector<Aggregate> aggregate_by_model(const std::vector<RunRecord>& runs);
std::vector<Aggregate> aggregate_by_fraction(const std::vector<RunRecord>& runs);

/// Welch and Levene statistics for each comparison and fraction, Bonferroni
/// corrected within each test family.
std::vector<StatRecord> compare_runs(const std::vector<RunRecord>& runs, const std::vector<Comparison>& comparisons,
                                     double alpha = 0.05);

/// Accuracy samples of one model at one fraction, ordered by split.
std::vector<double> accuracies(const std::vector<RunRecord>& runs, const std::string& tag, double fraction);

/// report.json (canonical), runs.csv, aggregates.csv, loss_curves.csv,
/// fraction_accuracy.csv and, after a baseline search, search.csv.
void emit_report(const EvalReport& report, const std::filesystem::path& dir);

std::string report_json(const EvalReport& report);

}  // namespace fin::bench
