#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ksvm/dataset.hpp"

namespace ksvm::testing {

/// Uniform points in [lo, hi]^d.
inline Matrix uniform_points(Index n, Index d, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix points(n, d);
  for (Index k = 0; k < d; ++k) {
    for (Index i = 0; i < n; ++i) points(i, k) = u(rng);
  }
  return points;
}

/// Two Gaussian blobs centered at -shift and +shift along every axis;
/// labels 1 and 2, alternating so both classes are always present.
inline Dataset two_blobs(Index n, Index d, double shift, std::mt19937_64& rng, double spread = 1.0) {
  std::normal_distribution<double> noise(0.0, spread);
  Matrix points(n, d);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const bool positive = i % 2 == 0;
    labels[static_cast<std::size_t>(i)] = positive ? 2 : 1;
    for (Index k = 0; k < d; ++k) points(i, k) = (positive ? shift : -shift) + noise(rng);
  }
  return {points, labels};
}

/// Labels from a random sign pattern, with both classes forced present.
inline Dataset random_binary(Index n, Index d, std::mt19937_64& rng) {
  Matrix points = uniform_points(n, d, rng);
  std::bernoulli_distribution coin(0.5);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (auto& label : labels) label = coin(rng) ? 1 : -1;
  labels[0] = 1;
  labels[1] = -1;
  return {points, labels};
}

/// k classes in d dimensions, each a Gaussian around a distinct center.
inline Dataset gaussian_classes(int k, Index per_class, Index d, std::mt19937_64& rng, double spread = 0.3) {
  std::normal_distribution<double> noise(0.0, spread);
  std::uniform_real_distribution<double> center(-4.0, 4.0);
  Matrix centers(k, d);
  for (Index i = 0; i < centers.size(); ++i) centers.data()[i] = center(rng);
  Matrix points(k * per_class, d);
  std::vector<int> labels;
  for (Index i = 0; i < k * per_class; ++i) {
    const int c = static_cast<int>(i % k);
    labels.push_back(c);
    for (Index j = 0; j < d; ++j) points(i, j) = centers(c, j) + noise(rng);
  }
  return {points, labels};
}

}  // namespace ksvm::testing
