#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "seeds.hpp"
#include "vvlab/backprop.hpp"
#include "vvlab/error.hpp"
#include "vvlab/model.hpp"
#include "vvlab/organism.hpp"
#include "vvlab/parallel.hpp"

namespace vvlab::organism {
namespace {

constexpr std::uint64_t kJitterTag = 0x6a6974;
constexpr std::uint64_t kShuffleTag = 0x73687566;

class Adam {
 public:
  Adam(const model::ModelConfig& config, const TrainOptions& opt)
      : opt_(opt), m_(model::zeros_like(config)), v_(model::zeros_like(config)) {}

  void step(model::Weights& weights, const model::Gradients& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(static_cast<double>(opt_.beta1), t_);
    const double bc2 = 1.0 - std::pow(static_cast<double>(opt_.beta2), t_);
    auto w = model::parameters(weights);
    auto g = model::parameters(grads);
    auto m = model::parameters(m_);
    auto v = model::parameters(v_);
    for (std::size_t p = 0; p < w.size(); ++p) {
      float* wp = w[p].second->data();
      const float* gp = g[p].second->data();
      float* mp = m[p].second->data();
      float* vp = v[p].second->data();
      for (std::size_t i = 0; i < w[p].second->size(); ++i) {
        mp[i] = opt_.beta1 * mp[i] + (1.0f - opt_.beta1) * gp[i];
        vp[i] = opt_.beta2 * vp[i] + (1.0f - opt_.beta2) * gp[i] * gp[i];
        const double mhat = mp[i] / bc1;
        const double vhat = vp[i] / bc2;
        wp[i] -= static_cast<float>(opt_.lr * mhat / (std::sqrt(vhat) + opt_.adam_eps));
      }
    }
  }

 private:
  TrainOptions opt_;
  model::Weights m_, v_;
  int t_ = 0;
};

std::vector<Tensor> prepare_inputs(const model::ModelConfig& config, const std::vector<Clip>& dataset,
                                   std::uint64_t seed) {
  std::vector<Tensor> inputs;
  inputs.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset[i].label < 0 || static_cast<std::size_t>(dataset[i].label) >= config.num_classes) {
      throw ArgumentError("clip " + std::to_string(i) + " has label " + std::to_string(dataset[i].label) +
                          " outside the model's classes");
    }
    inputs.push_back(training_frames(dataset[i], config, seed, i));
  }
  return inputs;
}

}  // namespace

Tensor training_frames(const Clip& clip, const model::ModelConfig& config, std::uint64_t seed, std::size_t index) {
  return sample_frames(clip.video, config.frames, seeds::mix(seeds::mix(seed, kJitterTag), index));
}

TrainResult train(const model::Weights& initial, const model::ModelConfig& config, const std::vector<Clip>& dataset,
                  const TrainOptions& options) {
  if (dataset.empty()) throw ArgumentError("train: dataset is empty");
  if (options.epochs < 0 || options.batch_size == 0) throw ArgumentError("train: epochs >= 0 and batch_size > 0");
  model::check_shapes(initial, config);
  const std::vector<Tensor> inputs = prepare_inputs(config, dataset, options.seed);
  const std::size_t n = dataset.size();

  TrainResult result{initial, {}};
  Adam adam(config, options);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> sample_loss(n);

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::mt19937_64 rng(seeds::mix(seeds::mix(options.seed, kShuffleTag), static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);

    for (std::size_t begin = 0; begin < n; begin += options.batch_size) {
      const std::size_t count = std::min(options.batch_size, n - begin);
      std::vector<model::LossGradient> results(count);
      parallel_for(count, [&](std::size_t b) {
        const std::size_t idx = order[begin + b];
        results[b] = model::loss_and_gradient(inputs[idx], static_cast<std::size_t>(dataset[idx].label),
                                              result.weights, config);
      });
      model::Gradients total = std::move(results[0].grads);
      for (std::size_t b = 1; b < count; ++b) {
        auto dst = model::parameters(total);
        auto src = model::parameters(std::as_const(results[b].grads));
        for (std::size_t p = 0; p < dst.size(); ++p) add_inplace(*dst[p].second, *src[p].second);
      }
      const float inv = 1.0f / static_cast<float>(count);
      for (auto& [name, t] : model::parameters(total)) {
        for (auto& v : t->values()) v *= inv;
      }
      for (std::size_t b = 0; b < count; ++b) {
        const float loss = results[b].loss;
        if (!std::isfinite(loss)) {
          throw TrainingError(epoch, "training diverged: non-finite loss in epoch " + std::to_string(epoch));
        }
        sample_loss[order[begin + b]] = loss;
      }
      adam.step(result.weights, total);
    }

    double mean = 0.0;
    for (double l : sample_loss) mean += l;
    mean /= static_cast<double>(n);
    if (!std::isfinite(mean)) {
      throw TrainingError(epoch, "training diverged: non-finite loss in epoch " + std::to_string(epoch));
    }
    result.loss_curve.push_back(mean);
  }
  for (const auto& [name, t] : model::parameters(std::as_const(result.weights))) {
    if (!t->all_finite()) {
      throw TrainingError(options.epochs - 1, "training diverged: parameter " + name + " is not finite");
    }
  }
  return result;
}

double dataset_loss(const model::Weights& weights, const model::ModelConfig& config, const std::vector<Clip>& dataset,
                    std::uint64_t seed) {
  const std::vector<Tensor> inputs = prepare_inputs(config, dataset, seed);
  std::vector<double> losses(inputs.size());
  parallel_for(inputs.size(), [&](std::size_t i) {
    const auto logits = model::forward(inputs[i], weights, config).logits;
    losses[i] = cross_entropy(logits, static_cast<std::size_t>(dataset[i].label));
  });
  double total = 0.0;
  for (double l : losses) total += l;
  return total / static_cast<double>(std::max<std::size_t>(1, inputs.size()));
}

double train_accuracy(const model::Weights& weights, const model::ModelConfig& config,
                      const std::vector<Clip>& dataset, std::uint64_t seed) {
  const std::vector<Tensor> inputs = prepare_inputs(config, dataset, seed);
  std::vector<int> hit(inputs.size(), 0);
  parallel_for(inputs.size(), [&](std::size_t i) {
    const Tensor logits = model::forward(inputs[i], weights, config).logits;
    const auto best = std::max_element(logits.data(), logits.data() + logits.size()) - logits.data();
    hit[i] = best == dataset[i].label;
  });
  const auto hits = std::accumulate(hit.begin(), hit.end(), 0);
  return static_cast<double>(hits) / static_cast<double>(std::max<std::size_t>(1, inputs.size()));
}

}  // namespace vvlab::organism
