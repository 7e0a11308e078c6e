#pragma once

// Closed-form signal features. These are the regression targets FINs learn
// to imitate and the ground truth every reconstruction is checked against.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fin/errors.hpp"
#include "fin/signal.hpp"

namespace fin {

enum class FeatureId { Entropy, Kurtosis, Skewness, FundamentalFrequency, Mfcc, Regularity };

inline constexpr std::array<FeatureId, 6> kAllFeatures{
    FeatureId::Entropy,     FeatureId::Kurtosis, FeatureId::Skewness, FeatureId::FundamentalFrequency,
    FeatureId::Mfcc,        FeatureId::Regularity};

/// Lowercase wire name: entropy, kurtosis, skewness, f0, mfcc, regularity.
std::string_view feature_name(FeatureId id) noexcept;

/// Inverse of feature_name. Throws std::invalid_argument on unknown names.
FeatureId parse_feature(std::string_view name);

struct F0Config {
  double threshold = 0.3;      // minimum normalized autocorrelation of the accepted peak
  double min_frequency = 1.0;  // Hz; sets the longest lag searched
};

struct MfccConfig {
  double frame_seconds = 0.025;
  double hop_seconds = 0.010;
  std::size_t n_filters = 26;
  std::size_t n_coeffs = 13;
  double log_floor = 1e-10;
};

struct FeatureConfig {
  std::size_t entropy_bins = 16;
  F0Config f0;
  MfccConfig mfcc;
};

/// Number of values a feature produces (n_coeffs for Mfcc, 1 otherwise).
std::size_t feature_width(FeatureId id, const FeatureConfig& cfg = {}) noexcept;

struct FeatureValue {
  std::vector<double> values;
  bool normalized = false;

  friend bool operator==(const FeatureValue&, const FeatureValue&) = default;
};

/// Thrown by feature_vector; names the feature whose oracle failed.
class FeatureError : public Error {
 public:
  FeatureError(FeatureId feature, const std::string& what)
      : Error(std::string(feature_name(feature)) + ": " + what), feature_(feature) {}
  FeatureId feature() const noexcept { return feature_; }

 private:
  FeatureId feature_;
};

/// Base-2 entropy of an n_bins equal-width amplitude histogram spanning
/// [min, max] of the samples. A constant signal returns 0.
double shannon_entropy(const Signal& signal, std::size_t n_bins = 16);

/// Fisher excess kurtosis m4/m2^2 - 3 from biased central moments.
/// Throws DegenerateSignal on zero variance.
double kurtosis(const Signal& signal);

/// m3/m2^(3/2) from biased central moments. Throws DegenerateSignal on zero variance.
double skewness(const Signal& signal);

/// Lowest periodic frequency in Hz from the first normalized-autocorrelation
/// peak above the threshold, refined by parabolic interpolation. The signal
/// mean is removed first. Returns nullopt when no lag qualifies.
std::optional<double> fundamental_frequency(const Signal& signal, const F0Config& cfg = {});

/// Mean-pooled MFCC vector of length cfg.n_coeffs: Hamming-windowed frames,
/// power spectrum, triangular mel filterbank from 0 Hz to Nyquist, floored
/// natural log, unnormalized DCT-II.
std::vector<double> mfcc(const Signal& signal, const MfccConfig& cfg = {});

/// Sorted squared-amplitude persistence score in [0, 1]: sustained activity
/// scores near 1, isolated bursts near 0. Throws DegenerateSignal on an
/// all-zero signal.
double regularity(const Signal& signal);

/// Raw (unnormalized) value of one feature. A missing fundamental frequency
/// is reported as 0 Hz so it can serve as a regression target.
FeatureValue compute_feature(const Signal& signal, FeatureId id, const FeatureConfig& cfg = {});

/// (value - lo) / (hi - lo), clipped to [0, 1]. Requires hi > lo elementwise.
FeatureValue normalize_feature(const FeatureValue& value, std::span<const double> lo,
                               std::span<const double> hi);

/// Inverse affine map of normalize_feature (exact on the unclipped region).
FeatureValue denormalize_feature(const FeatureValue& value, std::span<const double> lo,
                                 std::span<const double> hi);

/// Concatenated raw feature values in list order. Errors are rethrown as
/// FeatureError tagged with the failing feature.
FeatureValue feature_vector(const Signal& signal, std::span<const FeatureId> features,
                            const FeatureConfig& cfg = {});

/// Normalized concatenation; lo/hi hold one range per output value.
FeatureValue feature_vector(const Signal& signal, std::span<const FeatureId> features,
                            std::span<const double> lo, std::span<const double> hi,
                            const FeatureConfig& cfg = {});

}  // namespace fin
