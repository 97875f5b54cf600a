#pragma once

#include <limits>
#include <optional>
#include <stdexcept>

#include "hyline/distribution.hpp"

namespace hyline {

/// Thrown when the load carried by flows up to some size reaches 1.
class SaturationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ThresholdInputs {
  SizeDistribution dist;
  double capacity_bps = 1e9;
  double total_load = 0.6;  // fraction of capacity
  double t_cost_s = 100e-6;
  /// Overrides the rate derived from total_load; used to probe saturation.
  std::optional<double> arrival_rate_override;
};

/// Flows per second offered to one link of capacity C at the configured load.
double arrival_rate(const ThresholdInputs& in);

/// Mean time a flow of `x_bytes` waits before it is first served under
/// M/G/1 with preemptive SRPT, service time = size * 8 / C.
double expected_wait(const ThresholdInputs& in, double x_bytes);

/// Share of the offered bytes carried by flows no larger than `x_bytes`.
double load_fraction_below(const ThresholdInputs& in, double x_bytes);

struct ThresholdBand {
  double h_low = 0.0;
  double h_high = 0.0;
  double chosen_h = 0.0;

  bool empty() const { return h_low > h_high; }
  bool contains(double h) const { return !empty() && h_low <= h && h <= h_high; }
};

struct BandOptions {
  double resolution_bytes = 1000.0;
  double max_load_fraction = 0.1;
  double static_h = 1e6;
};

/// h_low is the smallest grid size whose wait reaches t_cost (infinity if
/// none does); h_high is the largest grid size whose load fraction stays
/// within max_load_fraction. Both snap inward to the grid.
ThresholdBand compute_band(const ThresholdInputs& in, const BandOptions& opts = {});

}  // namespace hyline
