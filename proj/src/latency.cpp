#include "fauno/latency.hpp"

#include <cmath>

#include "fauno/errors.hpp"

namespace fauno {

double comm_latency_seconds(double size_bits, const Link& link) {
  if (!(size_bits > 0.0)) {
    throw InvalidArgumentError("comm_latency: size_bits must be positive");
  }
  if (!(link.bandwidth_hz > 0.0)) {
    throw InvalidArgumentError("comm_latency: bandwidth must be positive");
  }
  const double snr_db = link.tx_power_dbm + link.gain_db - link.noise_dbm;
  const double snr = std::pow(10.0, snr_db / 10.0);
  if (!std::isfinite(snr)) {
    throw InvalidArgumentError("comm_latency: SNR not finite");
  }
  const double capacity = link.bandwidth_hz * std::log2(1.0 + snr);
  return size_bits / capacity;
}

Tick comm_latency(double size_bits, const Link& link, double ticks_per_second) {
  if (!(ticks_per_second > 0.0)) {
    throw InvalidArgumentError("comm_latency: ticks_per_second must be positive");
  }
  const double seconds = comm_latency_seconds(size_bits, link);
  const double ticks = std::ceil(seconds * ticks_per_second);
  return std::max<Tick>(1, static_cast<Tick>(ticks));
}

}  // namespace fauno
