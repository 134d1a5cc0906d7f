#pragma once

#include "fauno/types.hpp"

namespace fauno {

// Shannon-Hartley transmission time in seconds for `size_bits` over `link`.
// Capacity is B * log2(1 + 10^((P + G - noise)/10)) bits per second.
double comm_latency_seconds(double size_bits, const Link& link);

// Same, quantized to simulation ticks: ceil(seconds * ticks_per_second),
// floored at one tick. Sub-tick delivery is not representable.
Tick comm_latency(double size_bits, const Link& link, double ticks_per_second);

}  // namespace fauno
