#include <algorithm>
#include <cmath>
#include <random>

#include "seeds.hpp"
#include "vvlab/error.hpp"
#include "vvlab/organism.hpp"

namespace vvlab::organism {
namespace {

constexpr float kBallValue = 0.95f;
constexpr float kPinValue = 0.8f;
constexpr std::uint64_t kTrajectoryTag = 0x7472616a;

struct Point {
  float x;
  float y;
};

// Greyscale scene layer: objects only, background handled separately.
class Canvas {
 public:
  Canvas(std::size_t frames, std::size_t size) : size_(size), value_({frames, size, size}), mask_({frames, size, size}) {}

  void disc(std::size_t f, Point c, float radius, float value) {
    const float r2 = radius * radius;
    for (std::size_t y = 0; y < size_; ++y) {
      for (std::size_t x = 0; x < size_; ++x) {
        const float dx = static_cast<float>(x) + 0.5f - c.x;
        const float dy = static_cast<float>(y) + 0.5f - c.y;
        if (dx * dx + dy * dy <= r2) set(f, y, x, value);
      }
    }
  }

  void square(std::size_t f, Point c, float side, float value) {
    const float half = side / 2.0f;
    for (std::size_t y = 0; y < size_; ++y) {
      for (std::size_t x = 0; x < size_; ++x) {
        const float px = static_cast<float>(x) + 0.5f, py = static_cast<float>(y) + 0.5f;
        if (std::abs(px - c.x) <= half && std::abs(py - c.y) <= half) set(f, y, x, value);
      }
    }
  }

  Tensor& values() { return value_; }
  Tensor& mask() { return mask_; }

 private:
  void set(std::size_t f, std::size_t y, std::size_t x, float v) {
    const std::size_t i = (f * size_ + y) * size_ + x;
    value_[i] = std::max(value_[i], v);
    mask_[i] = 1.0f;
  }

  std::size_t size_;
  Tensor value_;
  Tensor mask_;
};

float uniform(std::mt19937_64& rng, float lo, float hi) { return std::uniform_real_distribution<float>(lo, hi)(rng); }

void draw_bowling(Canvas& canvas, const VideoSpec& spec, const RenderConfig& cfg) {
  const auto S = static_cast<float>(cfg.image_size);
  const std::size_t T = cfg.frames_raw;
  std::mt19937_64 rng(seeds::mix(spec.trajectory_seed, kTrajectoryTag));
  const float radius = std::max(1.5f, 0.07f * S);
  const Point start{S / 2 + uniform(rng, -0.08f * S, 0.08f * S), 0.9f * S};
  const Point pins_center{S / 2, 0.18f * S};
  const bool left_gutter = std::uniform_int_distribution<int>(0, 1)(rng) == 0;
  const float gutter_x = left_gutter ? 0.06f * S : 0.94f * S;
  const float arrival = 0.65f * static_cast<float>(T);
  const std::size_t diverge = cfg.divergence_frame();
  const float pin_side = std::max(1.0f, 0.07f * S);

  const Point pin_offsets[] = {{-0.1f * S, -0.06f * S}, {0.0f, -0.06f * S}, {0.1f * S, -0.06f * S},
                               {-0.05f * S, 0.0f},      {0.05f * S, 0.0f},  {0.0f, 0.06f * S}};

  auto on_line = [&](float f) {
    const float u = f / arrival;
    return Point{start.x + (pins_center.x - start.x) * u, start.y + (pins_center.y - start.y) * u};
  };
  const Point at_divergence = on_line(static_cast<float>(diverge));

  for (std::size_t f = 0; f < T; ++f) {
    const auto ff = static_cast<float>(f);
    const bool success = spec.outcome == Outcome::Success;
    Point ball = on_line(ff);
    if (!success && f >= diverge) {
      const float drift = std::min(1.0f, (ff - static_cast<float>(diverge)) / 6.0f);
      ball.x = at_divergence.x + (gutter_x - at_divergence.x) * drift;
    }
    if (ball.y > -radius) canvas.disc(f, ball, radius, kBallValue);

    const float scatter = success ? std::max(0.0f, ff - arrival) * 0.8f : 0.0f;
    for (const Point& off : pin_offsets) {
      const float len = std::hypot(off.x, off.y);
      const Point dir{off.x / len, off.y / len};
      canvas.square(f, {pins_center.x + off.x + dir.x * scatter, pins_center.y + off.y + dir.y * scatter}, pin_side,
                    kPinValue);
    }
  }
}

void draw_bouncing(Canvas& canvas, const VideoSpec& spec, const RenderConfig& cfg) {
  const auto S = static_cast<float>(cfg.image_size);
  std::mt19937_64 rng(seeds::mix(spec.trajectory_seed, kTrajectoryTag));
  const float radius = std::max(1.5f, 0.08f * S);
  const float x = uniform(rng, 0.3f * S, 0.7f * S);
  const float period = 16.0f;
  const float phase = uniform(rng, 0.0f, period);
  const float top = 0.2f * S, bottom = 0.8f * S;
  for (std::size_t f = 0; f < cfg.frames_raw; ++f) {
    const float p = std::fmod(static_cast<float>(f) + phase, period) / period;  // [0, 1)
    const float tri = p < 0.5f ? 2.0f * p : 2.0f - 2.0f * p;
    canvas.disc(f, {x, bottom + (top - bottom) * tri}, radius, kBallValue);
  }
}

void draw_sweeping(Canvas& canvas, const VideoSpec& spec, const RenderConfig& cfg) {
  const auto S = static_cast<float>(cfg.image_size);
  std::mt19937_64 rng(seeds::mix(spec.trajectory_seed, kTrajectoryTag));
  const float radius = std::max(1.5f, 0.08f * S);
  const float y = uniform(rng, 0.3f * S, 0.7f * S);
  const bool rightward = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
  const float span = static_cast<float>(cfg.frames_raw - 1);
  for (std::size_t f = 0; f < cfg.frames_raw; ++f) {
    float u = static_cast<float>(f) / span;
    if (!rightward) u = 1.0f - u;
    canvas.disc(f, {0.1f * S + 0.8f * S * u, y}, radius, kBallValue);
  }
}

void draw_colliding(Canvas& canvas, const VideoSpec& spec, const RenderConfig& cfg) {
  const auto S = static_cast<float>(cfg.image_size);
  std::mt19937_64 rng(seeds::mix(spec.trajectory_seed, kTrajectoryTag));
  const float radius = std::max(1.5f, 0.07f * S);
  const float y = uniform(rng, 0.35f * S, 0.65f * S);
  const float meet = static_cast<float>(cfg.frames_raw) / 2.0f;
  const float gap = 0.35f * S - radius;  // travel until the discs touch
  for (std::size_t f = 0; f < cfg.frames_raw; ++f) {
    const float u = 1.0f - std::abs(static_cast<float>(f) - meet) / meet;  // 0 → 1 → 0
    const float travel = gap * std::clamp(u, 0.0f, 1.0f);
    canvas.disc(f, {0.15f * S + travel, y}, radius, kBallValue);
    canvas.disc(f, {0.85f * S - travel, y}, radius, kBallValue);
  }
}

Canvas draw_objects(const VideoSpec& spec, const RenderConfig& cfg) {
  if (spec.action_class < 0 || spec.action_class >= kRenderableClasses) {
    throw ArgumentError("render_video: action class " + std::to_string(spec.action_class) +
                        " has no renderer (classes 0..3 are drawable)");
  }
  Canvas canvas(cfg.frames_raw, cfg.image_size);
  switch (spec.action_class) {
    case kBowling: draw_bowling(canvas, spec, cfg); break;
    case kBouncing: draw_bouncing(canvas, spec, cfg); break;
    case kSweeping: draw_sweeping(canvas, spec, cfg); break;
    default: draw_colliding(canvas, spec, cfg); break;
  }
  return canvas;
}

void check_render_config(const VideoSpec& spec, const RenderConfig& cfg) {
  if (cfg.frames_raw == 0 || cfg.image_size < 4 || cfg.channels == 0) {
    throw ArgumentError("render config needs frames_raw > 0, image_size >= 4, channels > 0");
  }
  if (!(spec.noise_std >= 0.0f) || !std::isfinite(spec.noise_std)) {
    throw ArgumentError("noise_std must be finite and non-negative");
  }
}

}  // namespace

std::string outcome_name(Outcome o) { return o == Outcome::Success ? "success" : "failure"; }

RenderConfig RenderConfig::for_model(const model::ModelConfig& config, std::size_t frames_raw) {
  return {frames_raw, config.image_size, config.channels};
}

RenderedClip render_video(const VideoSpec& spec, const RenderConfig& cfg) {
  check_render_config(spec, cfg);
  Canvas objects = draw_objects(spec, cfg);
  const std::size_t S = cfg.image_size, T = cfg.frames_raw, C = cfg.channels;

  // Background and noise come only from background_seed, never from the outcome.
  std::mt19937_64 rng(spec.background_seed);
  std::uniform_real_distribution<float> texture(0.0f, 0.08f);
  std::vector<float> backdrop(S * S);
  for (std::size_t y = 0; y < S; ++y) {
    for (std::size_t x = 0; x < S; ++x) {
      const float fx = (static_cast<float>(x) + 0.5f) / static_cast<float>(S);
      const bool gutter = fx < 0.12f || fx >= 0.88f;
      backdrop[y * S + x] = (gutter ? 0.02f : 0.08f) + texture(rng);
    }
  }
  std::normal_distribution<float> noise(0.0f, 1.0f);

  RenderedClip out;
  out.clip.label = spec.action_class;
  out.clip.outcome = spec.outcome;
  out.clip.video = Tensor({T, S, S, C});
  const Tensor& obj = objects.values();
  const Tensor& mask = objects.mask();
  for (std::size_t f = 0; f < T; ++f) {
    for (std::size_t p = 0; p < S * S; ++p) {
      const std::size_t i = f * S * S + p;
      const float scene = mask[i] > 0.0f ? obj[i] : backdrop[p];
      for (std::size_t c = 0; c < C; ++c) {
        const float n = spec.noise_std * noise(rng);
        out.clip.video[i * C + c] = std::clamp(scene + n, 0.0f, 1.0f);
      }
    }
  }
  out.object_mask = std::move(objects.mask());
  return out;
}

Tensor outcome_region_mask(const VideoSpec& spec, const RenderConfig& cfg) {
  check_render_config(spec, cfg);
  VideoSpec success = spec, failure = spec;
  success.outcome = Outcome::Success;
  failure.outcome = Outcome::Failure;
  Canvas a = draw_objects(success, cfg);
  Canvas b = draw_objects(failure, cfg);
  const std::size_t S = cfg.image_size;
  Tensor region({cfg.frames_raw, S, S});
  for (std::size_t f = cfg.divergence_frame(); f < cfg.frames_raw; ++f) {
    for (std::size_t p = 0; p < S * S; ++p) {
      const std::size_t i = f * S * S + p;
      region[i] = (a.mask()[i] > 0.0f || b.mask()[i] > 0.0f) ? 1.0f : 0.0f;
    }
  }
  return region;
}

FrameSelection select_frames(std::size_t frames_raw, std::size_t num_frames, std::uint64_t jitter_seed) {
  if (num_frames == 0) throw SamplingError("cannot sample zero frames");
  if (num_frames > frames_raw) {
    throw SamplingError("cannot sample " + std::to_string(num_frames) + " frames from a " +
                        std::to_string(frames_raw) + "-frame clip");
  }
  FrameSelection sel;
  sel.stride = frames_raw / num_frames;
  const std::size_t max_start = frames_raw - (num_frames - 1) * sel.stride - 1;
  std::mt19937_64 rng(jitter_seed);
  sel.start = std::uniform_int_distribution<std::size_t>(0, max_start)(rng);
  for (std::size_t i = 0; i < num_frames; ++i) sel.indices.push_back(sel.start + i * sel.stride);
  return sel;
}

Tensor sample_frames(const Tensor& video, std::size_t num_frames, std::uint64_t jitter_seed) {
  if (video.rank() != 4) throw DimensionError("sample_frames: expected [T,H,W,C], got " + shape_to_string(video.shape()));
  const FrameSelection sel = select_frames(video.dim(0), num_frames, jitter_seed);
  const std::size_t frame_size = video.size() / video.dim(0);
  Shape shape = video.shape();
  shape[0] = num_frames;
  Tensor out(shape);
  for (std::size_t i = 0; i < num_frames; ++i) {
    std::copy_n(video.data() + sel.indices[i] * frame_size, frame_size, out.data() + i * frame_size);
  }
  return out;
}

std::vector<bool> token_mask(const Tensor& sampled_mask, const model::ModelConfig& config) {
  const Shape expected{config.frames, config.image_size, config.image_size};
  if (sampled_mask.shape() != expected) {
    throw DimensionError("token_mask: mask shape " + shape_to_string(sampled_mask.shape()) + " does not match " +
                         shape_to_string(expected));
  }
  const auto grid = config.grid();
  const auto [tt, th, tw] = config.tubelet;
  const std::size_t S = config.image_size;
  std::vector<bool> flags(grid.size(), false);
  for (std::size_t f = 0; f < config.frames; ++f)
    for (std::size_t y = 0; y < S; ++y)
      for (std::size_t x = 0; x < S; ++x) {
        if (sampled_mask[(f * S + y) * S + x] > 0.0f) {
          flags[((f / tt) * grid.rows + y / th) * grid.cols + x / tw] = true;
        }
      }
  return flags;
}

}  // namespace vvlab::organism
