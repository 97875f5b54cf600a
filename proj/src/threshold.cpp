#include "hyline/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hyline {

double arrival_rate(const ThresholdInputs& in) {
  if (in.arrival_rate_override) return *in.arrival_rate_override;
  if (!(in.total_load >= 0.0 && in.total_load < 1.0))
    throw std::invalid_argument("total_load must be in [0, 1)");
  return in.total_load * in.capacity_bps / (in.dist.mean() * 8.0);
}

double expected_wait(const ThresholdInputs& in, double x_bytes) {
  const double lambda = arrival_rate(in);
  if (lambda == 0.0 || x_bytes <= 0.0) return 0.0;
  const double scale = 8.0 / in.capacity_bps;  // bytes -> seconds
  const double x = x_bytes * scale;
  const double first = in.dist.partial_mean(x_bytes) * scale;
  const double second = in.dist.partial_second_moment(x_bytes) * scale * scale;
  const double rho = lambda * first;
  if (rho >= 1.0)
    throw SaturationError("load of flows up to " + std::to_string(x_bytes) +
                          " bytes reaches " + std::to_string(rho));
  const double tail = 1.0 - in.dist.cdf(x_bytes);
  return lambda * (second + x * x * tail) / (2.0 * (1.0 - rho) * (1.0 - rho));
}

double load_fraction_below(const ThresholdInputs& in, double x_bytes) {
  if (x_bytes <= 0.0) return 0.0;
  return std::min(1.0, in.dist.partial_mean(x_bytes) / in.dist.mean());
}

ThresholdBand compute_band(const ThresholdInputs& in, const BandOptions& opts) {
  const double step = opts.resolution_bytes;
  if (!(step > 0.0)) throw std::invalid_argument("band resolution must be positive");
  // grid points step * i for i in [1, top]; past max_size both curves are flat
  const auto top = static_cast<long long>(std::ceil(in.dist.max_size() / step)) + 1;

  ThresholdBand band;
  band.chosen_h = opts.static_h;

  // smallest i with wait(i) >= t_cost
  if (expected_wait(in, step * static_cast<double>(top)) < in.t_cost_s) {
    band.h_low = std::numeric_limits<double>::infinity();
  } else {
    long long lo = 0;  // wait(lo) < t_cost, or lo == 0
    long long hi = top;
    while (hi - lo > 1) {
      const long long mid = lo + (hi - lo) / 2;
      if (expected_wait(in, step * static_cast<double>(mid)) >= in.t_cost_s)
        hi = mid;
      else
        lo = mid;
    }
    band.h_low = step * static_cast<double>(hi);
  }

  // largest i with fraction(i) <= max_load_fraction
  if (load_fraction_below(in, step) > opts.max_load_fraction) {
    band.h_high = 0.0;
  } else if (load_fraction_below(in, step * static_cast<double>(top)) <= opts.max_load_fraction) {
    band.h_high = std::numeric_limits<double>::infinity();
  } else {
    long long lo = 1;
    long long hi = top;  // fraction(top) == 1
    while (hi - lo > 1) {
      const long long mid = lo + (hi - lo) / 2;
      if (load_fraction_below(in, step * static_cast<double>(mid)) <= opts.max_load_fraction)
        lo = mid;
      else
        hi = mid;
    }
    band.h_high = step * static_cast<double>(lo);
  }
  return band;
}

}  // namespace hyline
