#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace hyline {

struct CdfKnot {
  double size;  // bytes
  double cumulative_probability;
};

/// Empirical flow-size distribution with a piecewise-linear CDF between
/// knots. The CDF is zero below the first knot, so a first knot with
/// probability p0 > 0 carries a point mass of p0 at that size.
class SizeDistribution {
 public:
  /// Validates: sizes strictly increasing and positive, probabilities
  /// nondecreasing in [0,1], last probability 1.
  explicit SizeDistribution(std::vector<CdfKnot> knots);

  /// "size_bytes cumulative_probability" per line, '#' comments allowed.
  static SizeDistribution parse(std::istream& in);
  static SizeDistribution load(const std::filesystem::path& file);

  const std::vector<CdfKnot>& knots() const { return knots_; }
  double min_size() const { return knots_.front().size; }
  double max_size() const { return knots_.back().size; }

  double cdf(double size) const;
  /// Inverse CDF for u in [0,1).
  double quantile(double u) const;
  double mean() const { return partial_mean(max_size()); }

  /// E[S; S <= x] = integral of s dF(s) over [0, x].
  double partial_mean(double x) const;
  /// E[S^2; S <= x].
  double partial_second_moment(double x) const;

  /// Same distribution with `factor` knots per original segment.
  SizeDistribution refined(int factor) const;

  void write(std::ostream& os) const;

 private:
  std::vector<CdfKnot> knots_;
};

}  // namespace hyline
