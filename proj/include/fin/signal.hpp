#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fin {

/// A finite 1-D real time series with its sample rate in Hz.
///
/// Construction validates: non-empty, every sample finite, rate > 0.
/// Violations throw std::invalid_argument.
class Signal {
 public:
  Signal(std::vector<double> samples, double sample_rate);

  std::span<const double> samples() const noexcept { return samples_; }
  double sample_rate() const noexcept { return sample_rate_; }
  std::size_t size() const noexcept { return samples_.size(); }
  double operator[](std::size_t i) const noexcept { return samples_[i]; }
  double duration() const noexcept { return static_cast<double>(samples_.size()) / sample_rate_; }

  friend bool operator==(const Signal&, const Signal&) = default;

 private:
  std::vector<double> samples_;
  double sample_rate_;
};

}  // namespace fin
