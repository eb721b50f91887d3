#include <algorithm>
#include <cmath>
#include <random>

#include "vvlab/error.hpp"
#include "vvlab/logistic.hpp"
#include "vvlab/observe.hpp"

namespace vvlab::observe {
namespace {

constexpr std::size_t kMinPerSide = 5;

std::vector<std::size_t> shuffled(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  // Fisher-Yates with plain modulo so the split does not depend on the
  // standard library's distribution implementation.
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
  return idx;
}

bool same_point_sets(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) return false;
  auto sorted_rows = [](const Tensor& m) {
    std::vector<std::vector<float>> rows;
    for (std::size_t r = 0; r < m.rows(); ++r) rows.emplace_back(m.row(r).begin(), m.row(r).end());
    std::sort(rows.begin(), rows.end());
    return rows;
  };
  return sorted_rows(a) == sorted_rows(b);
}

Tensor gather(const Tensor& a, const Tensor& b, const std::vector<std::pair<int, std::size_t>>& picks) {
  const std::size_t d = a.cols();
  Tensor out({picks.size(), d});
  for (std::size_t i = 0; i < picks.size(); ++i) {
    const auto src = (picks[i].first == 0 ? a : b).row(picks[i].second);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

// z-score columns of `fit` in place and apply the same transform to `other`.
void standardize(Tensor& fit, Tensor* other) {
  const std::size_t n = fit.rows(), d = fit.cols();
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += fit.at(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (fit.at(i, j) - mean) * (fit.at(i, j) - mean);
    var /= static_cast<double>(n);
    const double sd = var > 1e-24 ? std::sqrt(var) : 1.0;
    for (std::size_t i = 0; i < n; ++i) fit.at(i, j) = static_cast<float>((fit.at(i, j) - mean) / sd);
    if (other) {
      for (std::size_t i = 0; i < other->rows(); ++i) {
        other->at(i, j) = static_cast<float>((other->at(i, j) - mean) / sd);
      }
    }
  }
}

}  // namespace

ProbeResult probe_features(const Tensor& features_a, const Tensor& features_b, const ProbeOptions& options) {
  if (features_a.empty() || features_b.empty()) throw ArgumentError("probe needs samples on both sides");
  if (features_a.rank() != 2 || features_b.rank() != 2 || features_a.cols() != features_b.cols()) {
    throw DimensionError("probe features must be matrices with equal widths, got " +
                         shape_to_string(features_a.shape()) + " and " + shape_to_string(features_b.shape()));
  }
  const std::size_t na = features_a.rows(), nb = features_b.rows();

  ProbeResult result;
  result.held_out = na >= kMinPerSide && nb >= kMinPerSide;
  result.degenerate = !result.held_out || same_point_sets(features_a, features_b);

  std::vector<std::pair<int, std::size_t>> train_picks, test_picks;
  for (int side = 0; side < 2; ++side) {
    // same permutation on both sides, so identical sides split identically
    std::mt19937_64 rng(options.seed);
    const std::size_t n = side == 0 ? na : nb;
    const auto order = shuffled(n, rng);
    const std::size_t n_test =
        result.held_out ? std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.2 * n))) : 0;
    for (std::size_t i = 0; i < n; ++i) (i < n_test ? test_picks : train_picks).emplace_back(side, order[i]);
  }

  Tensor train = gather(features_a, features_b, train_picks);
  Tensor test = test_picks.empty() ? Tensor() : gather(features_a, features_b, test_picks);
  standardize(train, test_picks.empty() ? nullptr : &test);

  auto labels_of = [](const std::vector<std::pair<int, std::size_t>>& picks) {
    std::vector<int> labels;
    for (const auto& p : picks) labels.push_back(p.first);
    return labels;
  };
  const auto train_labels = labels_of(train_picks);
  const LogisticModel fitted =
      logistic_fit(train, train_labels, LogisticOptions{options.l2, options.steps, options.lr, options.seed});

  result.n_train = train_picks.size();
  result.n_test = test_picks.size();
  result.train_accuracy = vvlab::accuracy(fitted, train, train_labels);
  result.accuracy = test_picks.empty() ? result.train_accuracy : vvlab::accuracy(fitted, test, labels_of(test_picks));
  return result;
}

ProbeResult probe_layerwise(std::span<const model::ActivationCache> caches_a,
                            std::span<const model::ActivationCache> caches_b, std::size_t layer,
                            const ProbeOptions& options) {
  if (caches_a.empty() || caches_b.empty()) throw ArgumentError("probe needs caches on both sides");
  const auto hook = model::HookPoint::resid_post(layer);
  auto cls_rows = [&](std::span<const model::ActivationCache> caches) {
    const std::size_t d = caches.front().at(hook).cols();
    Tensor out({caches.size(), d});
    for (std::size_t i = 0; i < caches.size(); ++i) {
      const Tensor& t = caches[i].at(hook);
      if (t.cols() != d) throw DimensionError("probe caches disagree on d_model at " + hook.to_string());
      std::copy(t.row(0).begin(), t.row(0).end(), out.row(i).begin());
    }
    return out;
  };
  ProbeResult r = probe_features(cls_rows(caches_a), cls_rows(caches_b), options);
  r.layer = layer;
  return r;
}

}  // namespace vvlab::observe
