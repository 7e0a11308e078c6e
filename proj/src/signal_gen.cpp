#include "fin/signal_gen.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <unsupported/Eigen/FFT>

#include "fin/csv.hpp"
#include "fin/errors.hpp"
#include "fin/rng.hpp"

namespace fin {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<double> white_noise(std::size_t n, Rng& rng) {
  std::vector<double> x(n);
  for (double& v : x) v = rng.normal();
  return x;
}

std::vector<double> sine_mixture(std::size_t n, double fs, Rng& rng) {
  const std::size_t components = 1 + rng.below(5);
  const double f_lo = std::log(1.0), f_hi = std::log(0.45 * fs);
  std::vector<double> x(n, 0.0);
  for (std::size_t c = 0; c < components; ++c) {
    const double freq = std::exp(rng.uniform(f_lo, f_hi));
    const double amp = rng.uniform(0.2, 1.0);
    const double phase = rng.uniform(0.0, kTwoPi);
    for (std::size_t t = 0; t < n; ++t)
      x[t] += amp * std::sin(kTwoPi * freq * static_cast<double>(t) / fs + phase);
  }
  const double noise = rng.uniform(0.0, 0.2);
  for (double& v : x) v += noise * rng.normal();
  return x;
}

// AR(1..3) with poles drawn inside the unit circle; optionally one complex pair.
std::vector<double> ar_process(std::size_t n, Rng& rng) {
  const std::size_t order = 1 + rng.below(3);
  std::vector<std::complex<double>> poles;
  if (order >= 2 && rng.bernoulli(0.5)) {
    const double radius = rng.uniform(0.5, 0.98);
    const double angle = rng.uniform(0.05, 0.95) * std::numbers::pi;
    poles.push_back(std::polar(radius, angle));
    poles.push_back(std::polar(radius, -angle));
  }
  while (poles.size() < order) poles.emplace_back(rng.uniform(-0.95, 0.95), 0.0);

  // prod (1 - p z^-1) = 1 - a1 z^-1 - a2 z^-2 - ...
  std::vector<std::complex<double>> poly{1.0};
  for (const auto& p : poles) {
    std::vector<std::complex<double>> next(poly.size() + 1, 0.0);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      next[i] += poly[i];
      next[i + 1] -= p * poly[i];
    }
    poly = std::move(next);
  }
  std::vector<double> coeffs(order);
  for (std::size_t i = 0; i < order; ++i) coeffs[i] = -poly[i + 1].real();

  constexpr std::size_t burn_in = 256;
  std::vector<double> x(n + burn_in, 0.0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    double v = rng.normal();
    for (std::size_t i = 0; i < order && i < t; ++i) v += coeffs[i] * x[t - 1 - i];
    x[t] = v;
  }
  return {x.begin() + burn_in, x.end()};
}

// Noise or sine carrier under a random on/off envelope.
std::vector<double> burst(std::size_t n, double fs, Rng& rng) {
  std::vector<double> carrier(n);
  if (rng.bernoulli(0.5)) {
    for (double& v : carrier) v = rng.normal();
  } else {
    const double freq = std::exp(rng.uniform(std::log(2.0), std::log(0.4 * fs)));
    const double phase = rng.uniform(0.0, kTwoPi);
    for (std::size_t t = 0; t < n; ++t) carrier[t] = std::sin(kTwoPi * freq * static_cast<double>(t) / fs + phase);
  }
  const std::size_t bursts = 1 + rng.below(6);
  const double duty = rng.uniform(0.05, 1.0);
  const double off_level = rng.uniform(0.0, 0.1);
  const auto burst_len = std::max<std::size_t>(
      1, static_cast<std::size_t>(duty * static_cast<double>(n) / static_cast<double>(bursts)));

  std::vector<double> envelope(n, off_level);
  for (std::size_t b = 0; b < bursts; ++b) {
    const std::size_t start = rng.below(n - std::min(burst_len, n) + 1);
    for (std::size_t t = start; t < std::min(n, start + burst_len); ++t) envelope[t] = 1.0;
  }
  for (std::size_t t = 0; t < n; ++t) carrier[t] *= envelope[t];
  return carrier;
}

std::size_t fft_length(std::size_t n) { return std::bit_ceil(2 * n); }

}  // namespace

std::string_view family_name(Family f) noexcept {
  switch (f) {
    case Family::WhiteNoise: return "white_noise";
    case Family::SineMixture: return "sine_mixture";
    case Family::ArProcess: return "ar_process";
    case Family::Burst: return "burst";
  }
  return "unknown";
}

void GenSpec::validate() const {
  if (length < 64) throw std::invalid_argument("GenSpec.length must be >= 64");
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate))
    throw std::invalid_argument("GenSpec.sample_rate must be positive");
  double sum = 0.0;
  for (double w : family_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("family weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("family weights must sum to 1");
}

std::string GenSpec::canonical_json() const {
  nlohmann::json j;
  j["length"] = length;
  j["sample_rate"] = sample_rate;
  j["seed"] = seed;
  nlohmann::json w;
  for (std::size_t i = 0; i < kFamilyCount; ++i) w[std::string(family_name(static_cast<Family>(i)))] = family_weights[i];
  j["family_weights"] = w;
  return j.dump();
}

std::string GenSpec::digest() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_string(canonical_json())));
  return buf;
}

Family family_of(const GenSpec& spec, std::uint64_t index) {
  const double u = Rng(derive_seed(spec.seed, "family", index)).uniform();
  double cumulative = 0.0;
  std::size_t last_nonzero = 0;
  for (std::size_t i = 0; i < kFamilyCount; ++i) {
    if (spec.family_weights[i] <= 0.0) continue;
    last_nonzero = i;
    cumulative += spec.family_weights[i];
    if (u < cumulative) return static_cast<Family>(i);
  }
  return static_cast<Family>(last_nonzero);
}

Signal generate(const GenSpec& spec, std::uint64_t index) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, "signal", index));
  std::vector<double> x;
  switch (family_of(spec, index)) {
    case Family::WhiteNoise: x = white_noise(spec.length, rng); break;
    case Family::SineMixture: x = sine_mixture(spec.length, spec.sample_rate, rng); break;
    case Family::ArProcess: x = ar_process(spec.length, rng); break;
    case Family::Burst: x = burst(spec.length, spec.sample_rate, rng); break;
  }
  return standardize(Signal(std::move(x), spec.sample_rate));
}

Signal standardize(const Signal& signal) {
  const auto x = signal.samples();
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= n;
  if (!(var > 0.0)) throw DegenerateSignal("cannot standardize a zero-variance signal");
  const double scale = 1.0 / std::sqrt(var);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) * scale;

  // One correction pass absorbs the rounding left by the first.
  double m2 = 0.0;
  for (double v : out) m2 += v;
  m2 /= n;
  for (double& v : out) v -= m2;
  double v2 = 0.0;
  for (double v : out) v2 += v * v;
  v2 /= n;
  const double s2 = 1.0 / std::sqrt(v2);
  for (double& v : out) v *= s2;
  return Signal(std::move(out), signal.sample_rate());
}

std::vector<double> wavelet_frequencies(double sample_rate, const WaveletConfig& cfg) {
  const double f_hi = sample_rate / 4.0;
  if (!(cfg.min_frequency > 0.0) || !(cfg.min_frequency < f_hi))
    throw std::invalid_argument("wavelet min_frequency must lie in (0, sample_rate/4)");
  if (cfg.n_scales == 0) throw std::invalid_argument("wavelet needs at least one scale");
  std::vector<double> freqs(cfg.n_scales);
  if (cfg.n_scales == 1) {
    freqs[0] = f_hi;
    return freqs;
  }
  const double ratio = cfg.min_frequency / f_hi;
  for (std::size_t i = 0; i < cfg.n_scales; ++i)
    freqs[i] = f_hi * std::pow(ratio, static_cast<double>(i) / static_cast<double>(cfg.n_scales - 1));
  return freqs;
}

TFMap wavelet_transform(const Signal& signal, const WaveletConfig& cfg) {
  const std::size_t n = signal.size();
  if (cfg.n_frames == 0 || n < cfg.n_frames) throw std::invalid_argument("signal shorter than n_frames");
  const double fs = signal.sample_rate();

  TFMap tf;
  tf.n_scales = cfg.n_scales;
  tf.n_frames = cfg.n_frames;
  tf.scales = wavelet_frequencies(fs, cfg);
  tf.magnitudes.assign(cfg.n_scales * cfg.n_frames, 0.0);

  const std::size_t nfft = fft_length(n);
  thread_local Eigen::FFT<double> fft;
  std::vector<std::complex<double>> padded(nfft), spectrum(nfft), filtered(nfft), coeffs(nfft);
  for (std::size_t t = 0; t < n; ++t) padded[t] = signal[t];
  fft.fwd(spectrum, padded);

  for (std::size_t s = 0; s < cfg.n_scales; ++s) {
    const double scale = cfg.omega0 / (kTwoPi * tf.scales[s]);
    std::fill(filtered.begin(), filtered.end(), std::complex<double>{});
    for (std::size_t k = 1; k <= nfft / 2; ++k) {
      const double omega = kTwoPi * static_cast<double>(k) * fs / static_cast<double>(nfft);
      const double arg = scale * omega - cfg.omega0;
      filtered[k] = spectrum[k] * (2.0 * std::exp(-0.5 * arg * arg));
    }
    fft.inv(coeffs, filtered);

    double* row = tf.magnitudes.data() + s * cfg.n_frames;
    for (std::size_t f = 0; f < cfg.n_frames; ++f) {
      const std::size_t begin = f * n / cfg.n_frames, end = (f + 1) * n / cfg.n_frames;
      double acc = 0.0;
      for (std::size_t t = begin; t < end; ++t) acc += std::abs(coeffs[t]);
      row[f] = acc / static_cast<double>(end - begin);
    }
  }
  return tf;
}

TFMap wavelet_transform(const Signal& signal, std::size_t n_scales, std::size_t n_frames) {
  WaveletConfig cfg;
  cfg.n_scales = n_scales;
  cfg.n_frames = n_frames;
  return wavelet_transform(signal, cfg);
}

std::vector<double> flatten_tf(const TFMap& tf) { return tf.magnitudes; }

TFMap reshape_tf(std::span<const double> flat, std::size_t n_scales, std::size_t n_frames,
                 std::vector<double> scales) {
  if (flat.size() != n_scales * n_frames) throw ShapeError("flattened map length does not match shape");
  TFMap tf;
  tf.n_scales = n_scales;
  tf.n_frames = n_frames;
  tf.magnitudes.assign(flat.begin(), flat.end());
  tf.scales = std::move(scales);
  return tf;
}

Matrix tf_corpus(const GenSpec& spec, std::span<const std::uint64_t> indices, const WaveletConfig& cfg) {
  spec.validate();
  Matrix out(indices.size(), cfg.input_dim());
  const auto n = static_cast<std::ptrdiff_t>(indices.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto tf = wavelet_transform(generate(spec, indices[i]), cfg);
    std::copy(tf.magnitudes.begin(), tf.magnitudes.end(), out.row(static_cast<std::size_t>(i)).begin());
  }
  return out;
}

namespace serial {
Matrix tf_corpus(const GenSpec& spec, std::span<const std::uint64_t> indices, const WaveletConfig& cfg) {
  spec.validate();
  Matrix out(indices.size(), cfg.input_dim());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto tf = wavelet_transform(generate(spec, indices[i]), cfg);
    std::copy(tf.magnitudes.begin(), tf.magnitudes.end(), out.row(i).begin());
  }
  return out;
}
}  // namespace serial

void write_corpus_csv(const std::filesystem::path& path, const GenSpec& spec, std::uint64_t count) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "index";
  for (std::size_t i = 0; i < spec.length; ++i) out << ",s" << i;
  out << '\n';
  for (std::uint64_t idx = 0; idx < count; ++idx) {
    const auto s = generate(spec, idx);
    out << idx;
    for (double v : s.samples()) out << ',' << csv::format_double(v);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::pair<std::uint64_t, Signal>> read_signal_csv(const std::filesystem::path& path, double sample_rate) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IngestError(1, "missing header");
  const auto header = csv::split(line);
  if (header.empty() || header[0] != "index") throw IngestError(1, "header must start with 'index'");

  std::vector<std::pair<std::uint64_t, Signal>> signals;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() < 2) throw IngestError(row, "expected index and at least one sample");
    try {
      const auto idx = csv::parse_int(fields[0]);
      if (idx < 0) throw std::invalid_argument("negative index");
      std::vector<double> samples;
      samples.reserve(fields.size() - 1);
      for (std::size_t i = 1; i < fields.size(); ++i) samples.push_back(csv::parse_double(fields[i]));
      signals.emplace_back(static_cast<std::uint64_t>(idx), Signal(std::move(samples), sample_rate));
    } catch (const std::invalid_argument& e) {
      throw IngestError(row, e.what());
    }
  }
  return signals;
}

}  // namespace fin
