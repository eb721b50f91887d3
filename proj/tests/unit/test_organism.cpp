#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <cstring>

#include "oracles.hpp"
#include "vvlab/error.hpp"
#include "vvlab/model.hpp"
#include "vvlab/organism.hpp"

using namespace vvlab;
using namespace vvlab::organism;

namespace {

VideoSpec bowling(Outcome o, std::uint64_t traj = 3, std::uint64_t bg = 4, float noise = 0.02f) {
  return {kBowling, o, traj, bg, noise};
}

std::size_t frame_size(const Tensor& v) { return v.size() / v.dim(0); }

std::vector<Clip> clips_of(const std::vector<DatasetItem>& items) {
  std::vector<Clip> out;
  for (const auto& it : items) out.push_back(it.clip);
  return out;
}

}  // namespace

TEST(Render, Deterministic) {
  const RenderConfig rc;
  for (int cls = 0; cls < kRenderableClasses; ++cls) {
    VideoSpec s{cls, Outcome::Success, 10, 11, 0.05f};
    EXPECT_TRUE(render_video(s, rc).clip.video.bit_equal(render_video(s, rc).clip.video)) << cls;
    s.background_seed = 12;
    EXPECT_FALSE(render_video(s, rc).clip.video.bit_equal(render_video({cls, Outcome::Success, 10, 11, 0.05f}, rc).clip.video));
  }
}

TEST(Render, ShapeRangeAndLabel) {
  const RenderConfig rc;
  const RenderedClip r = render_video({kSweeping, Outcome::Success, 1, 2, 0.3f}, rc);
  EXPECT_EQ(r.clip.video.shape(), (Shape{40, 32, 32, 1}));
  EXPECT_EQ(r.object_mask.shape(), (Shape{40, 32, 32}));
  EXPECT_EQ(r.clip.label, kSweeping);
  for (float v : r.clip.video.values()) ASSERT_TRUE(v >= 0.0f && v <= 1.0f);
  EXPECT_THROW(render_video({7, Outcome::Success, 1, 2, 0.0f}, rc), ArgumentError);
  EXPECT_THROW(render_video({kBowling, Outcome::Success, 1, 2, -0.1f}, rc), ArgumentError);
}

TEST(Render, OutcomesIdenticalBeforeDivergence) {
  const RenderConfig rc;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Tensor s = render_video(bowling(Outcome::Success, seed, seed + 100), rc).clip.video;
    const Tensor f = render_video(bowling(Outcome::Failure, seed, seed + 100), rc).clip.video;
    const std::size_t n = frame_size(s);
    const std::size_t d = rc.divergence_frame();
    EXPECT_EQ(d, 13u);
    EXPECT_TRUE(std::equal(s.data(), s.data() + d * n, f.data())) << seed;
    EXPECT_FALSE(std::equal(s.data() + d * n, s.data() + s.size(), f.data() + d * n)) << seed;
  }
}

TEST(Render, PairDiffersOnlyInsideOutcomeRegion) {
  const RenderConfig rc;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const VideoSpec spec = bowling(Outcome::Success, seed, 7 * seed);
    const Tensor s = render_video(spec, rc).clip.video;
    const Tensor f = render_video(bowling(Outcome::Failure, seed, 7 * seed), rc).clip.video;
    const Tensor mask = outcome_region_mask(spec, rc);
    std::size_t inside = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i] == 0.0f) ASSERT_EQ(s[i], f[i]) << "pixel " << i;
      inside += mask[i] != 0.0f;
    }
    EXPECT_GT(inside, 0u);
    for (std::size_t i = 0; i < rc.divergence_frame() * 32 * 32; ++i) ASSERT_EQ(mask[i], 0.0f);
  }
}

TEST(Render, FailurePinsStayPut) {
  const RenderConfig rc;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Tensor f = render_video(bowling(Outcome::Failure, seed, seed, 0.0f), rc).clip.video;
    const Tensor s = render_video(bowling(Outcome::Success, seed, seed, 0.0f), rc).clip.video;
    const std::size_t n = frame_size(f);
    std::vector<std::size_t> pins;
    for (std::size_t i = 0; i < n; ++i)
      if (f[i] == 0.8f) pins.push_back(i);
    ASSERT_GE(pins.size(), 6u);
    bool success_moved = false;
    for (std::size_t t = 0; t < rc.frames_raw; ++t) {
      for (std::size_t i : pins) {
        ASSERT_GE(f[t * n + i], 0.8f) << "frame " << t;
        success_moved |= s[t * n + i] < 0.8f;
      }
    }
    EXPECT_TRUE(success_moved);
  }
}

TEST(Sampling, StrideArithmetic) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const FrameSelection sel = select_frames(40, 8, seed);
    EXPECT_EQ(sel.stride, 5u);
    EXPECT_LE(sel.start, 4u);  // start + 35 must stay below 40
    ASSERT_EQ(sel.indices.size(), 8u);
    for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(sel.indices[i], sel.start + 5 * i);
  }
  const FrameSelection id = select_frames(8, 8, 99);
  EXPECT_EQ(id.start, 0u);
  EXPECT_EQ(id.indices, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7}));
  EXPECT_THROW(select_frames(7, 8, 0), SamplingError);
  EXPECT_THROW(select_frames(7, 0, 0), SamplingError);
}

TEST(Sampling, StartsAreUniformAndSeedsDisagree) {
  // Enumeration oracle: 40 raw frames, 8 samples → 5 admissible starts, so
  // two independent seeds collide with probability 1/5.
  std::map<std::size_t, int> hist;
  for (std::uint64_t seed = 0; seed < 5000; ++seed) ++hist[select_frames(40, 8, seed).start];
  ASSERT_EQ(hist.size(), 5u);
  EXPECT_EQ(hist.rbegin()->first, 4u);
  double chi2 = 0;
  for (const auto& [start, count] : hist) chi2 += (count - 1000.0) * (count - 1000.0) / 1000.0;
  EXPECT_LT(chi2, 18.5);  // 4 dof, p = 0.001

  int differ = 0;
  for (std::uint64_t i = 0; i < 100; ++i)
    differ += select_frames(40, 8, 1000 + 2 * i).start != select_frames(40, 8, 1001 + 2 * i).start;
  EXPECT_GE(differ, 70);  // mean 80, sd 4
}

TEST(Sampling, SampleFramesPicksSelectedFrames) {
  const Tensor v = render_video(bowling(Outcome::Success), RenderConfig{}).clip.video;
  const Tensor s = sample_frames(v, 8, 42);
  const FrameSelection sel = select_frames(40, 8, 42);
  const std::size_t n = frame_size(v);
  ASSERT_EQ(s.shape(), (Shape{8, 32, 32, 1}));
  for (std::size_t i = 0; i < 8; ++i)
    EXPECT_TRUE(std::equal(s.data() + i * n, s.data() + (i + 1) * n, v.data() + sel.indices[i] * n));
}

TEST(Sampling, TokenMaskMarksTouchedTubelets) {
  const model::ModelConfig c = model::desk_config();
  Tensor mask({8, 32, 32});
  mask[(3 * 32 + 17) * 32 + 9] = 1.0f;  // frame 3 → tubelet-time 1, row 2, col 1
  const std::vector<bool> tm = token_mask(mask, c);
  ASSERT_EQ(tm.size(), 64u);
  EXPECT_EQ(std::count(tm.begin(), tm.end(), true), 1);
  EXPECT_TRUE(tm[1 * 16 + 2 * 4 + 1]);
  EXPECT_THROW(token_mask(Tensor({8, 32, 31}), c), DimensionError);
}

TEST(Dataset, CountsAndPairs) {
  const auto items = build_dataset(16, model::desk_config(), 5);
  ASSERT_EQ(items.size(), 64u);
  std::map<int, int> per_class;
  std::map<Outcome, int> bowling_outcomes;
  std::map<int, std::vector<const DatasetItem*>> pairs;
  for (const auto& it : items) {
    ++per_class[it.clip.label];
    EXPECT_EQ(it.clip.label, it.spec.action_class);
    if (it.clip.label == kBowling) {
      ++bowling_outcomes[it.clip.outcome];
      pairs[it.pair_id].push_back(&it);
    } else {
      EXPECT_EQ(it.pair_id, -1);
    }
  }
  for (int c = 0; c < 4; ++c) EXPECT_EQ(per_class[c], 16);
  EXPECT_EQ(bowling_outcomes[Outcome::Success], 8);
  EXPECT_EQ(bowling_outcomes[Outcome::Failure], 8);
  EXPECT_EQ(pairs.size(), 8u);
  for (const auto& [id, members] : pairs) {
    ASSERT_EQ(members.size(), 2u);
    EXPECT_NE(members[0]->clip.outcome, members[1]->clip.outcome);
    EXPECT_EQ(members[0]->spec.background_seed, members[1]->spec.background_seed);
    EXPECT_EQ(members[0]->spec.trajectory_seed, members[1]->spec.trajectory_seed);
  }
}

TEST(Dataset, DeterministicAndSeedSensitive) {
  const auto a = build_dataset(4, model::desk_config(), 9);
  const auto b = build_dataset(4, model::desk_config(), 9);
  const auto c = build_dataset(4, model::desk_config(), 10);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(a[i].clip.video.bit_equal(b[i].clip.video));
  EXPECT_FALSE(a[0].clip.video.bit_equal(c[0].clip.video));
}

TEST(Dataset, OddCountAndErrors) {
  const auto items = build_dataset(3, model::desk_config(), 1);
  int success = 0, failure = 0;
  for (const auto& it : items) {
    if (it.clip.label != kBowling) continue;
    (it.clip.outcome == Outcome::Success ? success : failure)++;
  }
  EXPECT_EQ(success, 2);
  EXPECT_EQ(failure, 1);
  EXPECT_THROW(build_dataset(0, model::desk_config(), 1), ArgumentError);
  model::ModelConfig five = model::desk_config();
  five.num_classes = 5;
  five.class_names.clear();
  EXPECT_THROW(build_dataset(2, five, 1), ArgumentError);
  EXPECT_THROW(build_dataset(2, model::desk_config(), 1, 0.02f, 6), ArgumentError);
}

TEST(ClipIo, RoundTripAndErrors) {
  const Clip clip = render_video(bowling(Outcome::Failure), RenderConfig{}).clip;
  const std::string bytes = encode_clip(clip);
  EXPECT_EQ(bytes.size(), 4 + 16 + clip.video.size() * 4 + 2);
  EXPECT_EQ(bytes.substr(0, 4), "VVC1");
  EXPECT_EQ(bytes.back(), '\0');  // Failure flag
  const Clip back = decode_clip(bytes);
  EXPECT_TRUE(back.video.bit_equal(clip.video));
  EXPECT_EQ(back.label, clip.label);
  EXPECT_EQ(back.outcome, Outcome::Failure);

  EXPECT_THROW(decode_clip("VVW1" + bytes.substr(4)), FormatError);
  EXPECT_THROW(decode_clip(bytes.substr(0, 12)), FormatError);
  EXPECT_THROW(decode_clip(bytes.substr(0, bytes.size() - 1)), FormatError);
  EXPECT_THROW(decode_clip(bytes + "x"), FormatError);
  std::string bad_flag = bytes;
  bad_flag.back() = 2;
  EXPECT_THROW(decode_clip(bad_flag), FormatError);
  std::string bad_pixel = bytes;
  const float two = 2.0f;
  std::memcpy(bad_pixel.data() + 20, &two, 4);
  EXPECT_THROW(decode_clip(bad_pixel), FormatError);

  const auto path = std::filesystem::temp_directory_path() / "vvlab_clip_test.vvc1";
  save_clip(path, clip);
  EXPECT_TRUE(load_clip(path).video.bit_equal(clip.video));
  std::filesystem::remove(path);
  EXPECT_THROW(load_clip(path), IoError);
}

class TinyTraining : public ::testing::Test {
 protected:
  void SetUp() override {
    config = oracle::tiny_config();
    clips = clips_of(build_dataset(4, config, 2));
    init = model::init_random(config, 3);
  }
  model::ModelConfig config;
  std::vector<Clip> clips;
  model::Weights init;
};

TEST_F(TinyTraining, ZeroLearningRateLeavesWeightsAndLossFlat) {
  TrainOptions o;
  o.epochs = 3;
  o.lr = 0.0f;
  o.batch_size = 4;
  const TrainResult r = train(init, config, clips, o);
  ASSERT_EQ(r.loss_curve.size(), 3u);
  EXPECT_EQ(r.loss_curve[0], r.loss_curve[1]);
  EXPECT_EQ(r.loss_curve[1], r.loss_curve[2]);
  auto a = model::parameters(init);
  auto b = model::parameters(r.weights);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(a[i].second->bit_equal(*b[i].second)) << a[i].first;
  EXPECT_NEAR(r.loss_curve[0], dataset_loss(init, config, clips, o.seed), 1e-6);
}

TEST_F(TinyTraining, InitialLossNearLogClasses) {
  EXPECT_NEAR(dataset_loss(init, config, clips, 0), std::log(3.0), 0.3);
  const auto desk = model::desk_config();
  const auto desk_clips = clips_of(build_dataset(2, desk, 1));
  EXPECT_NEAR(dataset_loss(model::init_random(desk, 1), desk, desk_clips, 0), std::log(4.0), 0.3);
}

TEST_F(TinyTraining, DeterministicAndLearning) {
  TrainOptions o;
  o.epochs = 30;
  o.lr = 1e-2f;
  o.batch_size = 4;
  o.seed = 8;
  const TrainResult a = train(init, config, clips, o);
  const TrainResult b = train(init, config, clips, o);
  EXPECT_EQ(a.loss_curve, b.loss_curve);
  EXPECT_TRUE(a.weights.unembed.bit_equal(b.weights.unembed));
  EXPECT_LT(a.loss_curve.back(), a.loss_curve.front());
}

TEST_F(TinyTraining, OutcomeNeverEntersTheLoss) {
  TrainOptions o;
  o.epochs = 4;
  o.lr = 5e-3f;
  o.batch_size = 3;
  // permute outcome flags only; videos and labels stay in place
  std::vector<Clip> permuted = clips;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    const Outcome o2 = clips[(i + 1) % clips.size()].outcome;
    permuted[i].outcome = o2 == Outcome::Success ? Outcome::Failure : Outcome::Success;
  }
  const TrainResult a = train(init, config, clips, o);
  const TrainResult b = train(init, config, permuted, o);
  ASSERT_EQ(a.loss_curve.size(), b.loss_curve.size());
  for (std::size_t i = 0; i < a.loss_curve.size(); ++i) EXPECT_EQ(a.loss_curve[i], b.loss_curve[i]);
  auto wa = model::parameters(a.weights);
  auto wb = model::parameters(b.weights);
  for (std::size_t i = 0; i < wa.size(); ++i) EXPECT_TRUE(wa[i].second->bit_equal(*wb[i].second)) << wa[i].first;
}

TEST_F(TinyTraining, DivergenceReportsTheEpoch) {
  model::Weights w = init;
  w.unembed[0] = std::nanf("");
  TrainOptions o;
  o.epochs = 2;
  try {
    train(w, config, clips, o);
    FAIL();
  } catch (const TrainingError& e) {
    EXPECT_EQ(e.epoch(), 0);
  }
}

TEST_F(TinyTraining, RejectsBadInputs) {
  TrainOptions o;
  EXPECT_THROW(train(init, config, {}, o), ArgumentError);
  o.batch_size = 0;
  EXPECT_THROW(train(init, config, clips, o), ArgumentError);
  std::vector<Clip> bad = clips;
  bad[0].label = 9;
  EXPECT_THROW(train(init, config, bad, TrainOptions{}), ArgumentError);
}
