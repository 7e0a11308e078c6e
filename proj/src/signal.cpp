#include "fin/signal.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace fin {

Signal::Signal(std::vector<double> samples, double sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
  if (samples_.empty()) throw std::invalid_argument("signal has no samples");
  if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_))
    throw std::invalid_argument("sample rate must be positive and finite");
  for (double v : samples_)
    if (!std::isfinite(v)) throw std::invalid_argument("signal contains a non-finite sample");
}

}  // namespace fin
