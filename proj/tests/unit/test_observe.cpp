#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "vvlab/error.hpp"
#include "vvlab/model.hpp"
#include "vvlab/observe.hpp"
#include "vvlab/ops.hpp"

using namespace vvlab;
using namespace vvlab::model;
using namespace vvlab::observe;

namespace {

struct TinyRun {
  ModelConfig config;
  Weights weights;
  Tensor video;
  ForwardResult result;
};

TinyRun run_tiny(std::uint64_t seed, std::span<const Intervention> iv = {}) {
  TinyRun r{oracle::tiny_config(), {}, {}, {}};
  r.weights = oracle::random_weights(r.config, seed);
  r.video = oracle::random_video(r.config, seed + 1000);
  r.result = forward(r.video, r.weights, r.config, iv, attribution_hooks(r.config));
  return r;
}

// u·(γ ⊙ (c − mean c))/σ with σ from the CLS row of the final residual.
double frozen_contribution(const Tensor& component, const Tensor& final_resid, const Weights& w, std::size_t cls,
                           double eps) {
  const std::size_t d = final_resid.cols();
  double mu = 0, var = 0, cm = 0;
  for (std::size_t j = 0; j < d; ++j) mu += final_resid.at(0, j), cm += component.at(0, j);
  mu /= d;
  cm /= d;
  for (std::size_t j = 0; j < d; ++j) var += (final_resid.at(0, j) - mu) * (final_resid.at(0, j) - mu);
  const double sigma = std::sqrt(var / d + eps);
  double out = 0;
  for (std::size_t j = 0; j < d; ++j)
    out += w.unembed.at(j, cls) * w.final_ln_gamma[j] * (component.at(0, j) - cm) / sigma;
  return out;
}

double sum(const std::vector<float>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST(Dla, CompletenessOnRandomModels) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TinyRun r = run_tiny(seed);
    for (std::size_t cls = 0; cls < r.config.num_classes; ++cls) {
      const DlaReport rep = dla_layerwise(r.result.cache, r.weights, r.config, cls);
      const double logit = r.result.logits[cls];
      const double total = rep.embed_contrib + sum(rep.attn_contrib) + sum(rep.mlp_contrib) + rep.bias_terms;
      EXPECT_NEAR(total, rep.reconstructed_logit, 1e-5);
      EXPECT_NEAR(rep.reconstructed_logit, logit, 1e-4 * std::max(1.0, std::abs(logit))) << seed;
      EXPECT_NEAR(rep.actual_logit, logit, 1e-5);
      EXPECT_EQ(rep.attn_contrib.size(), r.config.num_layers);
    }
  }
}

TEST(Dla, ContributionsMatchFrozenLnOracle) {
  const TinyRun r = run_tiny(7);
  const auto& cache = r.result.cache;
  const Tensor& final_resid = cache.at(HookPoint::resid_post(r.config.num_layers - 1));
  const double eps = r.config.ln_eps;
  const DlaReport rep = dla_layerwise(cache, r.weights, r.config, 1);
  EXPECT_NEAR(rep.embed_contrib, frozen_contribution(cache.at(HookPoint::embed()), final_resid, r.weights, 1, eps),
              1e-5);
  for (std::size_t l = 0; l < r.config.num_layers; ++l) {
    EXPECT_NEAR(rep.attn_contrib[l],
                frozen_contribution(cache.at(HookPoint::attn_out(l)), final_resid, r.weights, 1, eps), 1e-5);
    EXPECT_NEAR(rep.mlp_contrib[l],
                frozen_contribution(cache.at(HookPoint::mlp_out(l)), final_resid, r.weights, 1, eps), 1e-5);
  }
  double bias = r.weights.unembed_bias[1];
  for (std::size_t j = 0; j < r.config.d_model; ++j) bias += r.weights.unembed.at(j, 1) * r.weights.final_ln_beta[j];
  EXPECT_NEAR(rep.bias_terms, bias, 1e-5);
}

TEST(Dla, SingleSurvivingComponentCarriesTheLogit) {
  const ModelConfig c = oracle::tiny_config();
  const Shape row{c.seq_len(), c.d_model};
  std::vector<Intervention> iv{Intervention::replace(HookPoint::embed(), Tensor(row))};
  for (std::size_t l = 0; l < c.num_layers; ++l) {
    iv.push_back(Intervention::replace(HookPoint::attn_out(l), Tensor(row)));
    if (l != 1) iv.push_back(Intervention::replace(HookPoint::mlp_out(l), Tensor(row)));
  }
  const TinyRun r = run_tiny(3, iv);
  const DlaReport rep = dla_layerwise(r.result.cache, r.weights, c, 2);
  EXPECT_NEAR(rep.mlp_contrib[1], r.result.logits[2] - rep.bias_terms, 1e-5);
  EXPECT_EQ(rep.mlp_contrib[0], 0.0f);
  EXPECT_EQ(rep.embed_contrib, 0.0f);
}

TEST(Dla, ErrorsNameTheMissingHook) {
  const TinyRun r = run_tiny(1);
  model::ActivationCache partial;
  for (const auto& [hook, t] : r.result.cache.entries())
    if (hook != HookPoint::mlp_out(1)) partial.put(hook, t);
  try {
    dla_layerwise(partial, r.weights, r.config, 0);
    FAIL();
  } catch (const CacheError& e) {
    EXPECT_NE(std::string(e.what()).find("blocks.1.mlp_out"), std::string::npos);
  }
  EXPECT_THROW(dla_layerwise(r.result.cache, r.weights, r.config, 3), ArgumentError);
}

TEST(Dla, FrozenReadoutProjectsTheFinalResidual) {
  const TinyRun r = run_tiny(9);
  const FrozenReadout ro = frozen_readout(r.result.cache, r.weights, r.config, 0);
  const Tensor& final_resid = r.result.cache.at(HookPoint::resid_post(r.config.num_layers - 1));
  EXPECT_NEAR(ro.project(final_resid.row(0)) + ro.bias_terms, r.result.logits[0], 1e-5);
  EXPECT_NEAR(std::accumulate(ro.direction.begin(), ro.direction.end(), 0.0), 0.0, 1e-9);
}

TEST(TokenScores, SumMatchesAttentionDla) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const TinyRun r = run_tiny(100 + seed);
    const std::size_t cls = seed % r.config.num_classes;
    const DlaReport rep = dla_layerwise(r.result.cache, r.weights, r.config, cls);
    const TokenScores ts = token_contributions(r.result.cache, r.weights, r.config, cls);
    ASSERT_EQ(ts.scores.size(), r.config.num_tokens());
    double total = ts.cls_self_term;
    for (float s : ts.scores.values()) total += s;
    const double want = sum(rep.attn_contrib);
    EXPECT_NEAR(total, want, 1e-4 * std::max(1.0, std::abs(want))) << seed;
  }
}

TEST(TokenScores, MatchDirectPathOracle) {
  const TinyRun r = run_tiny(11);
  const ModelConfig& c = r.config;
  const std::size_t cls = 1;
  const auto& cache = r.result.cache;
  const FrozenReadout ro = frozen_readout(cache, r.weights, c, cls);
  std::vector<double> want(c.num_tokens(), 0.0);
  const std::size_t dh = c.head_dim(), S = c.seq_len();
  for (std::size_t l = 0; l < c.num_layers; ++l) {
    const auto& L = r.weights.layers[l];
    const Tensor x = layernorm(cache.at(HookPoint::resid_pre(l)), L.ln1_gamma, L.ln1_beta, c.ln_eps);
    const Tensor& A = cache.at(HookPoint::attn_weights(l));
    for (std::size_t h = 0; h < c.num_heads; ++h) {
      for (std::size_t t = 0; t < c.num_tokens(); ++t) {
        std::vector<double> out(c.d_model);
        for (std::size_t j = 0; j < c.d_model; ++j) out[j] = L.b_o[j] / c.num_heads;
        for (std::size_t k = 0; k < dh; ++k) {
          double v = L.b_v[h * dh + k];
          for (std::size_t i = 0; i < c.d_model; ++i) v += x.at(t + 1, i) * L.w_v.at(i, h * dh + k);
          for (std::size_t j = 0; j < c.d_model; ++j) out[j] += v * L.w_o.at(h * dh + k, j);
        }
        double proj = 0;
        for (std::size_t j = 0; j < c.d_model; ++j) proj += ro.direction[j] * out[j];
        want[t] += A[(h * S + 0) * S + t + 1] * proj;
      }
    }
  }
  const TokenScores ts = token_contributions(cache, r.weights, c, cls);
  for (std::size_t t = 0; t < want.size(); ++t) EXPECT_NEAR(ts.scores[t], want[t], 1e-5) << t;
  EXPECT_EQ(ts.as_grid().shape(), (Shape{2, 2, 2}));
}

TEST(TokenScores, IdenticalTokensScoreEqually) {
  const ModelConfig c = oracle::tiny_config();
  Weights w = oracle::random_weights(c, 12);
  for (std::size_t r = 2; r < c.seq_len(); ++r)
    for (std::size_t j = 0; j < c.d_model; ++j) w.position_embedding.at(r, j) = w.position_embedding.at(1, j);
  const Tensor video(Shape{c.frames, c.image_size, c.image_size, c.channels}, 0.3f);
  const auto run = forward(video, w, c, {}, attribution_hooks(c));
  const TokenScores ts = token_contributions(run.cache, w, c, 0);
  for (float s : ts.scores.values()) EXPECT_NEAR(s, ts.scores[0], 1e-6);
  const ClsAttentionMap m = cls_attention(run.cache, c, 1, 1);
  for (float a : m.grid.values()) EXPECT_NEAR(a, m.grid[0], 1e-6);
}

TEST(ClsAttention, RowOfSoftmaxOnTheGrid) {
  const TinyRun r = run_tiny(13);
  const ModelConfig& c = r.config;
  const std::size_t S = c.seq_len();
  for (std::size_t l = 0; l < c.num_layers; ++l) {
    for (std::size_t h = 0; h < c.num_heads; ++h) {
      const ClsAttentionMap m = cls_attention(r.result.cache, c, l, h);
      const Tensor& A = r.result.cache.at(HookPoint::attn_weights(l));
      EXPECT_EQ(m.grid.shape(), (Shape{2, 2, 2}));
      double total = m.cls_self;
      for (std::size_t t = 0; t < c.num_tokens(); ++t) {
        EXPECT_GE(m.grid[t], 0.0f);
        EXPECT_EQ(m.grid[t], A[h * S * S + t + 1]);
        total += m.grid[t];
      }
      EXPECT_NEAR(total, 1.0, 1e-6);
      EXPECT_EQ(m.cls_self, A[h * S * S]);
    }
  }
  EXPECT_THROW(cls_attention(r.result.cache, c, 2, 0), ArgumentError);
  EXPECT_THROW(cls_attention(r.result.cache, c, 0, 2), ArgumentError);
}

TEST(ClsAttention, UniformAttentionGivesFlatGrid) {
  const ModelConfig c = oracle::tiny_config();
  Weights w = oracle::random_weights(c, 14);
  for (auto& L : w.layers) {
    L.w_q = Tensor(L.w_q.shape());
    L.b_q = Tensor(L.b_q.shape());
  }
  const auto run = forward(oracle::random_video(c, 15), w, c, {}, {HookPoint::attn_weights(0)});
  const ClsAttentionMap m = cls_attention(run.cache, c, 0, 1);
  for (float a : m.grid.values()) EXPECT_NEAR(a, 1.0 / 9.0, 1e-7);
  EXPECT_NEAR(m.cls_self, 1.0 / 9.0, 1e-7);
}

TEST(Probe, SeparableClustersReachFullAccuracy) {
  const Tensor a = oracle::random_tensor({20, 6}, 1, 0.3);
  Tensor b = oracle::random_tensor({20, 6}, 2, 0.3);
  for (std::size_t i = 0; i < b.rows(); ++i) b.at(i, 2) += 3.0f;
  const ProbeResult r = probe_features(a, b);
  EXPECT_EQ(r.train_accuracy, 1.0);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_TRUE(r.held_out);
  EXPECT_FALSE(r.degenerate);
  EXPECT_EQ(r.n_test, 8u);
  EXPECT_EQ(r.n_train, 32u);
}

TEST(Probe, PermutedLabelsStayNearChance) {
  // Permutation null: both sides drawn from one pool, so labels carry no signal.
  double mean = 0;
  const int trials = 20;
  for (int s = 0; s < trials; ++s) {
    const Tensor pool = oracle::random_tensor({32, 8}, 500 + s);
    std::vector<std::size_t> idx(32);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), std::mt19937_64(s));
    Tensor a({16, 8}), b({16, 8});
    for (std::size_t i = 0; i < 16; ++i) {
      std::copy_n(pool.row(idx[i]).begin(), 8, a.row(i).begin());
      std::copy_n(pool.row(idx[16 + i]).begin(), 8, b.row(i).begin());
    }
    ProbeOptions o;
    o.seed = static_cast<std::uint64_t>(s);
    mean += probe_features(a, b, o).accuracy / trials;
  }
  EXPECT_LE(mean, 0.70);
}

TEST(Probe, SmallSamplesAreFlagged) {
  const Tensor a = oracle::random_tensor({2, 4}, 3);
  Tensor b = oracle::random_tensor({2, 4}, 4);
  const ProbeResult r = probe_features(a, b);
  EXPECT_TRUE(r.degenerate);
  EXPECT_FALSE(r.held_out);
  EXPECT_EQ(r.n_test, 0u);
  EXPECT_EQ(r.n_train, 4u);
  EXPECT_EQ(r.accuracy, r.train_accuracy);
  // a single pair, one sample per side
  const ProbeResult pair = probe_features(oracle::random_tensor({1, 4}, 3), oracle::random_tensor({1, 4}, 4));
  EXPECT_TRUE(pair.degenerate);
  EXPECT_EQ(pair.n_train, 2u);
  EXPECT_EQ(pair.train_accuracy, 1.0);
  EXPECT_THROW(probe_features(Tensor(), b), ArgumentError);
  EXPECT_THROW(probe_features(oracle::random_tensor({3, 5}, 3), b), DimensionError);
}

TEST(Probe, IdenticalSidesAreDegenerateAndAtChance) {
  const Tensor a = oracle::random_tensor({10, 4}, 5);
  const ProbeResult r = probe_features(a, a);
  EXPECT_TRUE(r.degenerate);
  EXPECT_TRUE(r.held_out);
  EXPECT_NEAR(r.accuracy, 0.5, 1e-12);
}

TEST(Probe, DeterministicGivenSeed) {
  const Tensor a = oracle::random_tensor({12, 5}, 6);
  const Tensor b = oracle::random_tensor({12, 5}, 7, 1.3);
  ProbeOptions o;
  o.seed = 4;
  const ProbeResult x = probe_features(a, b, o), y = probe_features(a, b, o);
  EXPECT_EQ(x.accuracy, y.accuracy);
  EXPECT_EQ(x.train_accuracy, y.train_accuracy);
}

TEST(Probe, LayerwiseReadsClsOfResidPost) {
  const ModelConfig c = oracle::tiny_config();
  const Weights w = oracle::random_weights(c, 20);
  std::vector<ActivationCache> a, b;
  for (std::uint64_t s = 0; s < 6; ++s) {
    a.push_back(forward(oracle::random_video(c, s), w, c, {}, {HookPoint::resid_post(1)}).cache);
    Tensor bright = oracle::random_video(c, 50 + s);
    for (auto& v : bright.values()) v = 0.5f + 0.5f * v;
    b.push_back(forward(bright, w, c, {}, {HookPoint::resid_post(1)}).cache);
  }
  Tensor fa({6, c.d_model}), fb({6, c.d_model});
  for (std::size_t i = 0; i < 6; ++i) {
    const auto ra = a[i].at(HookPoint::resid_post(1)).row(0);
    const auto rb = b[i].at(HookPoint::resid_post(1)).row(0);
    std::copy(ra.begin(), ra.end(), fa.row(i).begin());
    std::copy(rb.begin(), rb.end(), fb.row(i).begin());
  }
  const ProbeResult viaCache = probe_layerwise(a, b, 1);
  const ProbeResult viaRows = probe_features(fa, fb);
  EXPECT_EQ(viaCache.layer, 1u);
  EXPECT_EQ(viaCache.accuracy, viaRows.accuracy);
  EXPECT_EQ(viaCache.train_accuracy, viaRows.train_accuracy);
  EXPECT_THROW(probe_layerwise(a, b, 0), CacheError);
  EXPECT_THROW(probe_layerwise({}, b, 1), ArgumentError);
}
