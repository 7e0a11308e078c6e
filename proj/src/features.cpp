#include "fin/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <unsupported/Eigen/FFT>

namespace fin {

namespace {

struct CentralMoments {
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
};

CentralMoments central_moments(const Signal& signal) {
  const auto x = signal.samples();
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (*lo == *hi) throw DegenerateSignal("zero-variance signal");

  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());

  CentralMoments m;
  for (double v : x) {
    const double d = v - mean;
    const double d2 = d * d;
    m.m2 += d2;
    m.m3 += d2 * d;
    m.m4 += d2 * d2;
  }
  const double n = static_cast<double>(x.size());
  m.m2 /= n;
  m.m3 /= n;
  m.m4 /= n;
  if (!(m.m2 > 0.0)) throw DegenerateSignal("zero-variance signal");
  return m;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Row-major n_filters x (nfft/2 + 1) triangular weights.
std::vector<double> mel_filterbank(std::size_t n_filters, std::size_t nfft, double sample_rate) {
  const std::size_t n_bins = nfft / 2 + 1;
  const double mel_hi = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(n_filters + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_hi * static_cast<double>(i) / static_cast<double>(n_filters + 1));

  std::vector<double> bank(n_filters * n_bins, 0.0);
  for (std::size_t m = 0; m < n_filters; ++m) {
    const double left = edges[m], centre = edges[m + 1], right = edges[m + 2];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(nfft);
      const double up = (f - left) / (centre - left);
      const double down = (right - f) / (right - centre);
      bank[m * n_bins + k] = std::max(0.0, std::min(up, down));
    }
  }
  return bank;
}

}  // namespace

std::string_view feature_name(FeatureId id) noexcept {
  switch (id) {
    case FeatureId::Entropy: return "entropy";
    case FeatureId::Kurtosis: return "kurtosis";
    case FeatureId::Skewness: return "skewness";
    case FeatureId::FundamentalFrequency: return "f0";
    case FeatureId::Mfcc: return "mfcc";
    case FeatureId::Regularity: return "regularity";
  }
  return "unknown";
}

FeatureId parse_feature(std::string_view name) {
  for (FeatureId id : kAllFeatures)
    if (feature_name(id) == name) return id;
  throw std::invalid_argument("unknown feature '" + std::string(name) + "'");
}

std::size_t feature_width(FeatureId id, const FeatureConfig& cfg) noexcept {
  return id == FeatureId::Mfcc ? cfg.mfcc.n_coeffs : 1;
}

double shannon_entropy(const Signal& signal, std::size_t n_bins) {
  if (n_bins < 2) throw std::invalid_argument("entropy needs at least 2 bins");
  const auto x = signal.samples();
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it, span = *hi_it - *lo_it;
  if (span == 0.0) return 0.0;

  std::vector<std::size_t> counts(n_bins, 0);
  for (double v : x) {
    auto k = static_cast<std::size_t>((v - lo) / span * static_cast<double>(n_bins));
    ++counts[std::min(k, n_bins - 1)];
  }
  const double n = static_cast<double>(x.size());
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return std::clamp(h, 0.0, std::log2(static_cast<double>(n_bins)));
}

double kurtosis(const Signal& signal) {
  if (signal.size() < 4) throw std::invalid_argument("kurtosis needs at least 4 samples");
  const auto m = central_moments(signal);
  return m.m4 / (m.m2 * m.m2) - 3.0;
}

double skewness(const Signal& signal) {
  if (signal.size() < 3) throw std::invalid_argument("skewness needs at least 3 samples");
  const auto m = central_moments(signal);
  return m.m3 / std::pow(m.m2, 1.5);
}

std::optional<double> fundamental_frequency(const Signal& signal, const F0Config& cfg) {
  if (!(cfg.min_frequency > 0.0)) throw std::invalid_argument("f0 minimum frequency must be positive");
  const double fs = signal.sample_rate();
  const std::size_t n = signal.size();
  if (static_cast<double>(n) < 2.0 * fs / cfg.min_frequency)
    throw std::invalid_argument("signal too short for the configured minimum frequency");

  const auto max_lag = static_cast<std::size_t>(std::floor(fs / cfg.min_frequency));
  if (max_lag < 2) return std::nullopt;

  std::vector<double> x(signal.samples().begin(), signal.samples().end());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  for (double& v : x) v -= mean;

  double energy = 0.0;
  for (double v : x) energy += v * v;
  if (!(energy > 0.0)) return std::nullopt;

  std::vector<double> r(max_lag + 2);
  for (std::size_t lag = 0; lag < r.size(); ++lag) {
    double acc = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) acc += x[t] * x[t + lag];
    r[lag] = acc / energy;
  }

  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    if (r[lag] > cfg.threshold && r[lag] > r[lag - 1] && r[lag] >= r[lag + 1]) {
      const double a = r[lag - 1], b = r[lag], c = r[lag + 1];
      const double denom = a - 2.0 * b + c;
      const double shift = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
      return fs / (static_cast<double>(lag) + shift);
    }
  }
  return std::nullopt;
}

std::vector<double> mfcc(const Signal& signal, const MfccConfig& cfg) {
  if (cfg.n_filters == 0 || cfg.n_coeffs == 0 || cfg.n_coeffs > cfg.n_filters)
    throw std::invalid_argument("mfcc needs 0 < n_coeffs <= n_filters");
  const double fs = signal.sample_rate();
  const auto frame = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.frame_seconds * fs)));
  const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.hop_seconds * fs)));
  const std::size_t n = signal.size();
  if (n < frame) throw std::invalid_argument("signal shorter than one mfcc frame");

  const std::size_t nfft = std::bit_ceil(frame);
  const std::size_t n_bins = nfft / 2 + 1;
  const std::size_t n_frames = 1 + (n - frame) / hop;
  const auto bank = mel_filterbank(cfg.n_filters, nfft, fs);

  std::vector<double> window(frame, 1.0);
  if (frame > 1)
    for (std::size_t i = 0; i < frame; ++i)
      window[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                         static_cast<double>(frame - 1));

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> buf(nfft), spec(nfft);
  std::vector<double> log_energy(cfg.n_filters);
  std::vector<double> pooled(cfg.n_coeffs, 0.0);
  const auto x = signal.samples();

  for (std::size_t f = 0; f < n_frames; ++f) {
    std::fill(buf.begin(), buf.end(), std::complex<double>{});
    for (std::size_t i = 0; i < frame; ++i) buf[i] = x[f * hop + i] * window[i];
    fft.fwd(spec, buf);

    for (std::size_t m = 0; m < cfg.n_filters; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < n_bins; ++k)
        e += bank[m * n_bins + k] * std::norm(spec[k]) / static_cast<double>(nfft);
      log_energy[m] = std::log(std::max(e, cfg.log_floor));
    }
    for (std::size_t c = 0; c < cfg.n_coeffs; ++c) {
      double acc = 0.0;
      for (std::size_t m = 0; m < cfg.n_filters; ++m)
        acc += log_energy[m] * std::cos(std::numbers::pi * static_cast<double>(c) *
                                        (static_cast<double>(m) + 0.5) / static_cast<double>(cfg.n_filters));
      pooled[c] += acc;
    }
  }
  for (double& v : pooled) v /= static_cast<double>(n_frames);
  return pooled;
}

double regularity(const Signal& signal) {
  const std::size_t n = signal.size();
  if (n < 2) throw std::invalid_argument("regularity needs at least 2 samples");
  std::vector<double> q(n);
  std::transform(signal.samples().begin(), signal.samples().end(), q.begin(), [](double v) { return v * v; });
  std::sort(q.begin(), q.end(), std::greater<>());

  double total = 0.0, weighted = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double rank = static_cast<double>(i + 1);
    total += q[i];
    weighted += rank * rank * q[i];
  }
  if (!(total > 0.0)) throw DegenerateSignal("all-zero signal");
  const double nn = static_cast<double>(n);
  return std::clamp(std::sqrt(weighted / (nn * nn / 3.0 * total)), 0.0, 1.0);
}

FeatureValue compute_feature(const Signal& signal, FeatureId id, const FeatureConfig& cfg) {
  switch (id) {
    case FeatureId::Entropy: return {{shannon_entropy(signal, cfg.entropy_bins)}, false};
    case FeatureId::Kurtosis: return {{kurtosis(signal)}, false};
    case FeatureId::Skewness: return {{skewness(signal)}, false};
    case FeatureId::FundamentalFrequency: return {{fundamental_frequency(signal, cfg.f0).value_or(0.0)}, false};
    case FeatureId::Mfcc: return {mfcc(signal, cfg.mfcc), false};
    case FeatureId::Regularity: return {{regularity(signal)}, false};
  }
  throw std::invalid_argument("unknown feature id");
}

FeatureValue normalize_feature(const FeatureValue& value, std::span<const double> lo, std::span<const double> hi) {
  const std::size_t n = value.values.size();
  if (lo.size() != n || hi.size() != n) throw std::invalid_argument("normalization range length mismatch");
  FeatureValue out{std::vector<double>(n), true};
  for (std::size_t i = 0; i < n; ++i) {
    if (!(hi[i] > lo[i])) throw std::invalid_argument("normalization range requires hi > lo");
    out.values[i] = std::clamp((value.values[i] - lo[i]) / (hi[i] - lo[i]), 0.0, 1.0);
  }
  return out;
}

FeatureValue denormalize_feature(const FeatureValue& value, std::span<const double> lo, std::span<const double> hi) {
  const std::size_t n = value.values.size();
  if (lo.size() != n || hi.size() != n) throw std::invalid_argument("normalization range length mismatch");
  FeatureValue out{std::vector<double>(n), false};
  for (std::size_t i = 0; i < n; ++i) out.values[i] = lo[i] + value.values[i] * (hi[i] - lo[i]);
  return out;
}

FeatureValue feature_vector(const Signal& signal, std::span<const FeatureId> features, const FeatureConfig& cfg) {
  FeatureValue out;
  for (FeatureId id : features) {
    try {
      const auto v = compute_feature(signal, id, cfg);
      out.values.insert(out.values.end(), v.values.begin(), v.values.end());
    } catch (const std::exception& e) {
      throw FeatureError(id, e.what());
    }
  }
  return out;
}

FeatureValue feature_vector(const Signal& signal, std::span<const FeatureId> features, std::span<const double> lo,
                            std::span<const double> hi, const FeatureConfig& cfg) {
  return normalize_feature(feature_vector(signal, features, cfg), lo, hi);
}

}  // namespace fin
