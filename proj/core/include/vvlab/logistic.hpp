#pragma once

#include <cstdint>
#include <span>

#include "vvlab/tensor.hpp"

namespace vvlab {

struct LogisticModel {
  Tensor weights;  // [d]
  float bias = 0.0f;

  /// P(label = 1 | row).
  double probability(std::span<const float> row) const;
  int predict(std::span<const float> row) const { return probability(row) > 0.5 ? 1 : 0; }
};

struct LogisticOptions {
  float l2 = 1e-3f;
  int steps = 500;
  float lr = 0.1f;
  std::uint64_t seed = 0;
};

/// L2-regularized logistic regression trained by full-batch gradient descent
/// from zero initialization. Minimizes mean log-loss + (l2/2)·|w|².
/// Labels are 0/1. Deterministic for identical inputs; `seed` is recorded for
/// interface stability but the full-batch solver draws no randomness.
LogisticModel logistic_fit(const Tensor& features, std::span<const int> labels, const LogisticOptions& options = {});

/// Fraction of rows whose predicted label matches.
double accuracy(const LogisticModel& model, const Tensor& features, std::span<const int> labels);

}  // namespace vvlab
