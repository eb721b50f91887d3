#include <algorithm>
#include <cmath>

#include "vvlab/error.hpp"
#include "vvlab/report.hpp"

namespace vvlab::report {
namespace {

std::uint8_t to_byte(double unit) { return static_cast<std::uint8_t>(std::lround(std::clamp(unit, 0.0, 1.0) * 255.0)); }

std::string netpbm_header(const char* magic, std::size_t width, std::size_t height) {
  return std::string(magic) + "\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
}

}  // namespace

std::vector<std::uint8_t> normalize_to_bytes(const Tensor& grid) {
  if (grid.empty()) throw ArgumentError("cannot render an empty grid");
  if (!grid.all_finite()) throw ArgumentError("cannot render a grid with non-finite values");
  const auto [lo_it, hi_it] = std::minmax_element(grid.values().begin(), grid.values().end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<std::uint8_t> out(grid.size(), 128);
  if (hi > lo) {
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = to_byte((grid[i] - lo) / (hi - lo));
  }
  return out;
}

std::string encode_heatmap(const Tensor& grid) {
  if (grid.rank() != 2) throw DimensionError("heatmap grid must be [rows, cols], got " + shape_to_string(grid.shape()));
  const auto bytes = normalize_to_bytes(grid);
  return netpbm_header("P5", grid.dim(1), grid.dim(0)) + std::string(bytes.begin(), bytes.end());
}

std::string encode_overlay(const Tensor& frame, const Tensor& grid, float alpha) {
  if (grid.rank() != 2) throw DimensionError("overlay grid must be [rows, cols], got " + shape_to_string(grid.shape()));
  const std::size_t channels = frame.rank() == 3 ? frame.dim(2) : 1;
  if ((frame.rank() != 2 && frame.rank() != 3) || (channels != 1 && channels != 3)) {
    throw DimensionError("overlay frame must be [H, W] or [H, W, 1|3], got " + shape_to_string(frame.shape()));
  }
  if (!(alpha >= 0.0f && alpha <= 1.0f)) throw ArgumentError("overlay alpha must lie in [0, 1]");
  const std::size_t h = frame.dim(0), w = frame.dim(1), gh = grid.dim(0), gw = grid.dim(1);
  const auto heat = normalize_to_bytes(grid);

  std::string out = netpbm_header("P6", w, h);
  out.reserve(out.size() + h * w * 3);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double cell = heat[(y * gh / h) * gw + x * gw / w] / 255.0;
      const float* px = frame.data() + (y * w + x) * channels;
      for (std::size_t c = 0; c < 3; ++c) {
        const double base = px[channels == 3 ? c : 0];
        const double tint = c == 0 ? cell : 0.0;
        out.push_back(static_cast<char>(to_byte((1.0 - alpha) * base + alpha * tint)));
      }
    }
  }
  return out;
}

Tensor grid_frame(const Tensor& grid, std::size_t t) {
  if (grid.rank() != 3) throw DimensionError("expected a [T', H', W'] grid, got " + shape_to_string(grid.shape()));
  if (t >= grid.dim(0)) throw ArgumentError("grid frame " + std::to_string(t) + " out of range");
  const std::size_t plane = grid.dim(1) * grid.dim(2);
  return Tensor({grid.dim(1), grid.dim(2)},
                std::vector<float>(grid.data() + t * plane, grid.data() + (t + 1) * plane));
}

}  // namespace vvlab::report
