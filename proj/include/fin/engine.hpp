#pragma once

// Feature-imitating networks: pretraining against the closed-form oracles,
// the .fin artifact format, head replacement for transfer, and per-channel
// ensembles.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fin/features.hpp"
#include "fin/matrix.hpp"
#include "fin/net.hpp"
#include "fin/signal_gen.hpp"
#include "fin/train.hpp"

namespace fin {

inline constexpr int kFinFormatVersion = 1;

struct HistorySummary {
  double best_val_loss = 0.0;
  int epochs = 0;

  friend bool operator==(const HistorySummary&, const HistorySummary&) = default;
};

/// A pretrained network together with what it imitates and the range that
/// maps the feature onto [0, 1].
struct FinArtifact {
  FeatureId feature = FeatureId::Entropy;
  nn::DenseNet net;
  std::vector<double> norm_lo;
  std::vector<double> norm_hi;
  std::string gen_spec_digest;
  HistorySummary history_summary;
  int format_version = kFinFormatVersion;

  /// Throws CorruptArtifact when the output width, normalization vectors or
  /// network shapes are inconsistent.
  void validate() const;

  friend bool operator==(const FinArtifact&, const FinArtifact&) = default;
};

/// The default FIN body: 1024-512-256-64-out with relu hidden layers and a
/// linear regression output.
nn::Topology default_fin_topology(std::size_t input_dim, std::size_t output_dim);

struct PretrainOptions {
  std::size_t n_signals = 20000;
  double val_fraction = 0.15;
  WaveletConfig wavelet;
  FeatureConfig features;
  nn::EpochObserver observer;
};

struct PretrainResult {
  FinArtifact artifact;
  nn::TrainHistory history;
  std::vector<std::uint64_t> train_indices;  // corpus indices used for fitting
  std::vector<std::uint64_t> val_indices;    // held out for early stopping
  double val_mae = 0.0;                      // clamped, normalized scale
};

/// Network inputs (flattened TF maps) and raw oracle targets for corpus
/// signals, computed in parallel. Row i belongs to indices[i].
struct FeatureCorpus {
  Matrix inputs;
  Matrix targets;
};

FeatureCorpus build_feature_corpus(const GenSpec& gen, std::span<const std::uint64_t> indices, FeatureId feature,
                                   const WaveletConfig& wavelet = {}, const FeatureConfig& features = {});

/// Linear-interpolated percentile (q in [0, 100]) of unsorted values.
double percentile(std::vector<double> values, double q);

/// Builds the synthetic corpus, fits the 0.1/99.9-percentile normalization
/// range on the training part, holds out val_fraction for early stopping and
/// trains with MSE. Throws CorpusDegenerateError if any range is narrower
/// than 1e-6 and propagates DivergedError.
PretrainResult pretrain_fin(FeatureId feature, const GenSpec& gen, const nn::Topology& topology,
                            const nn::TrainConfig& cfg, const PretrainOptions& options = {});

/// Canonical .fin text: compact JSON with sorted keys, newline terminated.
std::string serialize_fin(const FinArtifact& artifact);
FinArtifact parse_fin(std::string_view text);

void save_fin(const FinArtifact& artifact, const std::filesystem::path& path);
FinArtifact load_fin(const std::filesystem::path& path);

/// Drops the final (regression) layer and appends a freshly initialized
/// softmax layer over the penultimate representation.
nn::DenseNet attach_head(const FinArtifact& artifact, std::size_t n_classes, std::uint64_t seed);

/// Keeps the full network, regression layer included, and appends a softmax
/// layer over the imitated feature values. This is the single-branch,
/// single-channel case of build_ensemble.
nn::DenseNet extend_with_head(const FinArtifact& artifact, std::size_t n_classes, std::uint64_t seed);

/// FIN branches shared across channels. An input row holds n_channels
/// consecutive blocks of branch_input_dim() values. Each branch runs on every
/// channel; outputs are concatenated branch-major then channel-major and fed
/// to a softmax head.
struct EnsembleNet {
  std::vector<nn::DenseNet> branches;
  std::size_t n_channels = 1;
  nn::DenseNet head;

  std::size_t branch_input_dim() const { return branches.front().input_dim(); }
  std::size_t input_dim() const { return n_channels * branch_input_dim(); }
  std::size_t head_input_dim() const;
  std::size_t class_count() const { return head.output_dim(); }

  friend bool operator==(const EnsembleNet&, const EnsembleNet&) = default;
};

/// Throws ShapeError on an empty artifact list or mismatched input widths.
EnsembleNet build_ensemble(std::span<const FinArtifact> artifacts, std::size_t n_channels, std::size_t n_classes,
                           std::uint64_t seed);

Matrix forward_batch(const EnsembleNet& net, const Matrix& inputs);
double backprop(const EnsembleNet& net, const Matrix& inputs, const Matrix& targets, nn::Loss loss,
                nn::Gradients& grads);
double evaluate_loss(const EnsembleNet& net, const Matrix& inputs, const Matrix& targets, nn::Loss loss);
std::vector<int> predict_classes(const EnsembleNet& net, const Matrix& inputs);
std::vector<nn::Layer*> parameter_layers(EnsembleNet& net);

/// Softmax cross-entropy training of every layer with early stopping.
template <nn::TrainableModel M>
nn::TrainResult<M> fine_tune(M model, const nn::Dataset& train_set, const nn::Dataset& val_set,
                             const nn::TrainConfig& cfg, const nn::EpochObserver& observer = {}) {
  return nn::train(std::move(model), train_set, val_set, cfg, nn::Loss::SoftmaxCrossEntropy, observer);
}

struct ReconstructionReport {
  std::vector<double> errors;  // per signal, in [0, 1]
  double mean = 0.0;
  double stddev = 0.0;
  double p05 = 0.0, p25 = 0.0, p50 = 0.0, p75 = 0.0, p95 = 0.0, max = 0.0;
  std::vector<std::size_t> histogram;  // 50 equal bins over [0, 1]
};

inline constexpr std::size_t kReconBins = 50;

/// Absolute error between the clamped FIN output and the normalized oracle,
/// averaged over output entries for vector features.
ReconstructionReport reconstruction_report(const FinArtifact& artifact, std::span<const Signal> signals,
                                           const WaveletConfig& wavelet = {}, const FeatureConfig& features = {});

/// Same, for precomputed inputs and raw targets.
ReconstructionReport reconstruction_report(const FinArtifact& artifact, const Matrix& inputs, const Matrix& raw_targets);

}  // namespace fin
