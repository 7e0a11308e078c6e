#pragma once

// Synthetic pretraining corpus and the time-frequency input representation.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fin/matrix.hpp"
#include "fin/signal.hpp"

namespace fin {

enum class Family { WhiteNoise = 0, SineMixture = 1, ArProcess = 2, Burst = 3 };
inline constexpr std::size_t kFamilyCount = 4;

std::string_view family_name(Family f) noexcept;

/// Recipe for a reproducible synthetic corpus. Signal i of the corpus is
/// generate(spec, i); nothing else influences it.
struct GenSpec {
  std::size_t length = 512;
  double sample_rate = 128.0;
  std::array<double, kFamilyCount> family_weights{0.25, 0.25, 0.25, 0.25};
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument unless length >= 64, rate > 0, weights
  /// non-negative and summing to 1 within 1e-9.
  void validate() const;

  /// Canonical JSON (sorted keys, compact).
  std::string canonical_json() const;

  /// 16 hex digits of FNV-1a over canonical_json().
  std::string digest() const;
};

Family family_of(const GenSpec& spec, std::uint64_t index);

/// Standardized signal i of the corpus: zero mean, unit (population) variance.
Signal generate(const GenSpec& spec, std::uint64_t index);

/// Affine map to zero mean and unit population variance.
/// Throws DegenerateSignal on zero variance.
Signal standardize(const Signal& signal);

struct WaveletConfig {
  std::size_t n_scales = 32;
  std::size_t n_frames = 32;
  double min_frequency = 1.0;  // Hz; the top scale sits at sample_rate / 4
  double omega0 = 6.0;

  std::size_t input_dim() const noexcept { return n_scales * n_frames; }
};

/// Scales x frames magnitude map. Row r is centred on scales[r] Hz; scales
/// are strictly descending.
struct TFMap {
  std::size_t n_scales = 0;
  std::size_t n_frames = 0;
  std::vector<double> magnitudes;  // row-major n_scales x n_frames
  std::vector<double> scales;

  double at(std::size_t scale, std::size_t frame) const noexcept { return magnitudes[scale * n_frames + frame]; }
};

/// Centre frequencies used by wavelet_transform for a given sample rate.
std::vector<double> wavelet_frequencies(double sample_rate, const WaveletConfig& cfg);

/// Complex Morlet CWT magnitude, mean-pooled along time to cfg.n_frames
/// columns. The wavelet's frequency response peaks at 2, so a sinusoid of
/// amplitude A at a centre frequency shows magnitude A. Computed in the
/// frequency domain with zero padding to at least twice the signal length.
TFMap wavelet_transform(const Signal& signal, const WaveletConfig& cfg = {});
TFMap wavelet_transform(const Signal& signal, std::size_t n_scales, std::size_t n_frames);

/// Row-major flattening, length n_scales * n_frames.
std::vector<double> flatten_tf(const TFMap& tf);

/// Inverse of flatten_tf for a known shape.
TFMap reshape_tf(std::span<const double> flat, std::size_t n_scales, std::size_t n_frames,
                 std::vector<double> scales = {});

/// Flattened TF maps of generate(spec, i) for each index, one row per signal.
/// Rows are computed in parallel; the result does not depend on thread count.
Matrix tf_corpus(const GenSpec& spec, std::span<const std::uint64_t> indices, const WaveletConfig& cfg = {});

namespace serial {
Matrix tf_corpus(const GenSpec& spec, std::span<const std::uint64_t> indices, const WaveletConfig& cfg = {});
}

/// Debug export: header `index,s0,...`, one signal per row.
void write_corpus_csv(const std::filesystem::path& path, const GenSpec& spec, std::uint64_t count);

/// Reads signals written by write_corpus_csv (or any file of that schema).
/// Returns (index, signal) pairs in file order.
std::vector<std::pair<std::uint64_t, Signal>> read_signal_csv(const std::filesystem::path& path, double sample_rate);

}  // namespace fin
