#include "vvlab/logistic.hpp"

#include <cmath>
#include <vector>

#include "vvlab/error.hpp"

namespace vvlab {
namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

double LogisticModel::probability(std::span<const float> row) const {
  double z = bias;
  for (std::size_t j = 0; j < row.size(); ++j) z += static_cast<double>(weights[j]) * row[j];
  return sigmoid(z);
}

LogisticModel logistic_fit(const Tensor& features, std::span<const int> labels, const LogisticOptions& options) {
  if (features.rank() != 2) {
    throw DimensionError("logistic_fit: features must be [n, d], got " + shape_to_string(features.shape()));
  }
  const std::size_t n = features.dim(0), d = features.dim(1);
  if (labels.size() != n) throw DimensionError("logistic_fit: label count does not match rows");
  if (n < 2) throw ArgumentError("logistic_fit: need at least two samples");
  bool has0 = false, has1 = false;
  for (int y : labels) {
    if (y != 0 && y != 1) throw ArgumentError("logistic_fit: labels must be 0 or 1");
    (y ? has1 : has0) = true;
  }
  if (!has0 || !has1) throw ArgumentError("logistic_fit: both labels must be present");

  std::vector<double> w(d, 0.0), grad(d);
  double b = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int step = 0; step < options.steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const float* x = features.data() + i * d;
      double z = b;
      for (std::size_t j = 0; j < d; ++j) z += w[j] * x[j];
      const double err = sigmoid(z) - labels[i];
      for (std::size_t j = 0; j < d; ++j) grad[j] += err * x[j];
      grad_b += err;
    }
    for (std::size_t j = 0; j < d; ++j) w[j] -= options.lr * (grad[j] * inv_n + options.l2 * w[j]);
    b -= options.lr * grad_b * inv_n;
  }

  LogisticModel model{Tensor({d}), static_cast<float>(b)};
  for (std::size_t j = 0; j < d; ++j) model.weights[j] = static_cast<float>(w[j]);
  return model;
}

double accuracy(const LogisticModel& model, const Tensor& features, std::span<const int> labels) {
  if (labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += model.predict(features.row(i)) == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace vvlab
