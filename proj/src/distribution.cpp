#include "hyline/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

namespace hyline {

SizeDistribution::SizeDistribution(std::vector<CdfKnot> knots) : knots_(std::move(knots)) {
  if (knots_.empty()) throw std::invalid_argument("SizeDistribution: no knots");
  double prev_size = 0.0;
  double prev_p = 0.0;
  for (const CdfKnot& k : knots_) {
    if (!(k.size > prev_size))
      throw std::invalid_argument("SizeDistribution: sizes must be positive and strictly increasing");
    if (!(k.cumulative_probability >= prev_p) || k.cumulative_probability > 1.0)
      throw std::invalid_argument("SizeDistribution: probabilities must be nondecreasing in [0,1]");
    prev_size = k.size;
    prev_p = k.cumulative_probability;
  }
  if (std::abs(knots_.back().cumulative_probability - 1.0) > 1e-9)
    throw std::invalid_argument("SizeDistribution: last cumulative probability must be 1");
  knots_.back().cumulative_probability = 1.0;
}

SizeDistribution SizeDistribution::parse(std::istream& in) {
  std::vector<CdfKnot> knots;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double size = 0.0;
    double p = 0.0;
    if (!(ls >> size)) continue;  // blank
    if (!(ls >> p))
      throw std::invalid_argument("distribution line " + std::to_string(lineno) +
                                  ": expected 'size_bytes cumulative_probability'");
    std::string extra;
    if (ls >> extra)
      throw std::invalid_argument("distribution line " + std::to_string(lineno) + ": trailing data");
    knots.push_back({size, p});
  }
  return SizeDistribution(std::move(knots));
}

SizeDistribution SizeDistribution::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open distribution file " + file.string());
  return parse(in);
}

double SizeDistribution::cdf(double size) const {
  if (size < knots_.front().size) return 0.0;
  if (size >= knots_.back().size) return 1.0;
  auto hi = std::upper_bound(knots_.begin(), knots_.end(), size,
                             [](double s, const CdfKnot& k) { return s < k.size; });
  auto lo = hi - 1;
  const double t = (size - lo->size) / (hi->size - lo->size);
  return lo->cumulative_probability + t * (hi->cumulative_probability - lo->cumulative_probability);
}

double SizeDistribution::quantile(double u) const {
  if (u <= knots_.front().cumulative_probability) return knots_.front().size;
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    const CdfKnot& a = knots_[i - 1];
    const CdfKnot& b = knots_[i];
    if (u <= b.cumulative_probability) {
      const double dp = b.cumulative_probability - a.cumulative_probability;
      if (dp <= 0.0) return b.size;
      return a.size + (u - a.cumulative_probability) / dp * (b.size - a.size);
    }
  }
  return knots_.back().size;
}

namespace {

// integral of s^power * density over [a, min(b, x)] for one linear segment
double segment_moment(const CdfKnot& a, const CdfKnot& b, double x, int power) {
  if (x <= a.size) return 0.0;
  const double hi = std::min(x, b.size);
  const double density = (b.cumulative_probability - a.cumulative_probability) / (b.size - a.size);
  if (power == 1) return density * (hi * hi - a.size * a.size) / 2.0;
  return density * (hi * hi * hi - a.size * a.size * a.size) / 3.0;
}

double moment(const std::vector<CdfKnot>& knots, double x, int power) {
  const CdfKnot& first = knots.front();
  if (x < first.size) return 0.0;
  double sum = first.cumulative_probability * (power == 1 ? first.size : first.size * first.size);
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (x <= knots[i - 1].size) break;
    sum += segment_moment(knots[i - 1], knots[i], x, power);
  }
  return sum;
}

}  // namespace

double SizeDistribution::partial_mean(double x) const { return moment(knots_, x, 1); }

double SizeDistribution::partial_second_moment(double x) const { return moment(knots_, x, 2); }

SizeDistribution SizeDistribution::refined(int factor) const {
  if (factor < 1) throw std::invalid_argument("refined: factor must be >= 1");
  std::vector<CdfKnot> out;
  out.push_back(knots_.front());
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    const CdfKnot& a = knots_[i - 1];
    const CdfKnot& b = knots_[i];
    for (int j = 1; j <= factor; ++j) {
      const double t = static_cast<double>(j) / factor;
      out.push_back({a.size + t * (b.size - a.size),
                     a.cumulative_probability + t * (b.cumulative_probability - a.cumulative_probability)});
    }
  }
  out.back() = knots_.back();
  return SizeDistribution(std::move(out));
}

void SizeDistribution::write(std::ostream& os) const {
  os << std::setprecision(17);
  for (const CdfKnot& k : knots_) os << k.size << ' ' << k.cumulative_probability << '\n';
}

}  // namespace hyline
