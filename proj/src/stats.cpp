#include "hqm/stats.hpp"

#include <cmath>
#include <string>

namespace hqm::stats {

namespace {

void require_finite(std::span<const double> x, const char* which) {
  for (const double v : x) {
    if (!std::isfinite(v)) throw Error(Errc::NonFinite, which);
  }
}

}  // namespace

CorrelationResult pearson(std::span<const double> x,
                          std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(Errc::LengthMismatch,
                std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  }
  if (x.size() < 2) throw Error(Errc::TooFewPoints, std::to_string(x.size()));
  require_finite(x, "x");
  require_finite(y, "y");

  // Single-pass co-moment update. Every product is formed as dx*dy or dx*dx
  // so swapping x and y yields bit-identical sums.
  double mean_x = 0.0;
  double mean_y = 0.0;
  double m2_x = 0.0;
  double m2_y = 0.0;
  double co = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double k = static_cast<double>(i + 1);
    const double dx = x[i] - mean_x;
    const double dy = y[i] - mean_y;
    const double w = (k - 1.0) / k;
    m2_x += dx * dx * w;
    m2_y += dy * dy * w;
    co += dx * dy * w;
    mean_x += dx / k;
    mean_y += dy / k;
  }
  if (m2_x <= 0.0) throw Error(Errc::DegenerateVariance, "x");
  if (m2_y <= 0.0) throw Error(Errc::DegenerateVariance, "y");

  // sqrt(c*c) == c exactly in IEEE arithmetic, so identical inputs give 1.0.
  double r = co / std::sqrt(m2_x * m2_y);
  r = std::clamp(r, -1.0, 1.0);
  return {r, x.size()};
}

double mean(std::span<const double> x) {
  if (x.empty()) throw Error(Errc::TooFewPoints, "0");
  double sum = 0.0;
  double comp = 0.0;
  for (const double v : x) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return (sum + comp) / static_cast<double>(x.size());
}

double stddev(std::span<const double> x) {
  if (x.size() < 2) throw Error(Errc::TooFewPoints, std::to_string(x.size()));
  const double m = mean(x);
  std::vector<double> sq;
  sq.reserve(x.size());
  for (const double v : x) sq.push_back((v - m) * (v - m));
  return std::sqrt(mean(sq));
}

}  // namespace hqm::stats
