#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "hqm/error.hpp"
#include "hqm/rng.hpp"

namespace hqm::stats {

struct CorrelationResult {
  double r = 0.0;
  std::size_t n = 0;

  bool operator==(const CorrelationResult&) const = default;
};

/// Pearson product-moment correlation with population moments.
/// Throws LengthMismatch, TooFewPoints (n < 2), NonFinite, DegenerateVariance.
CorrelationResult pearson(std::span<const double> x, std::span<const double> y);

/// Compensated (Neumaier) mean. Throws TooFewPoints on empty input.
double mean(std::span<const double> x);

/// Population standard deviation. Throws TooFewPoints when |x| < 2.
double stddev(std::span<const double> x);

/// Seeded subset of `ids` of size `n`, returned in original order.
/// Deterministic in (ids order, n, seed); see rng.hpp for the algorithm.
template <typename T>
std::vector<T> sample_subset(std::span<const T> ids, std::size_t n,
                             std::uint64_t seed) {
  if (n > ids.size()) {
    throw Error(Errc::SubsetTooLarge,
                std::to_string(n) + " > " + std::to_string(ids.size()));
  }
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(seed);
  shuffle(order, rng);
  order.resize(n);
  std::sort(order.begin(), order.end());

  std::vector<T> out;
  out.reserve(n);
  for (const auto idx : order) out.push_back(ids[idx]);
  return out;
}

template <typename T>
std::vector<T> sample_subset(const std::vector<T>& ids, std::size_t n,
                             std::uint64_t seed) {
  return sample_subset(std::span<const T>(ids), n, seed);
}

}  // namespace hqm::stats
