#include "binary_io.hpp"
#include "vvlab/error.hpp"
#include "vvlab/organism.hpp"

namespace vvlab::organism {

std::string encode_clip(const Clip& clip) {
  const Tensor& v = clip.video;
  if (v.rank() != 4) throw DimensionError("encode_clip: video must be [T,H,W,C], got " + shape_to_string(v.shape()));
  if (clip.label < 0 || clip.label > 255) throw ArgumentError("encode_clip: label must fit in one byte");
  std::string out = "VVC1";
  out.reserve(4 + 16 + v.size() * 4 + 2);
  for (std::size_t a = 0; a < 4; ++a) binary::put_u32(out, static_cast<std::uint32_t>(v.dim(a)));
  for (float x : v.values()) {
    if (!(x >= 0.0f && x <= 1.0f)) throw ArgumentError("encode_clip: pixel values must lie in [0, 1]");
    binary::put_f32(out, x);
  }
  out.push_back(static_cast<char>(clip.label));
  out.push_back(static_cast<char>(clip.outcome == Outcome::Success ? 1 : 0));
  return out;
}

Clip decode_clip(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "VVC1") != 0) throw FormatError("not a VVC1 clip (bad magic)");
  if (bytes.size() < 20) throw FormatError("VVC1 clip truncated inside the dimension header");
  Shape shape(4);
  for (std::size_t a = 0; a < 4; ++a) {
    shape[a] = binary::get_u32(bytes, 4 + 4 * a);
    if (shape[a] == 0) throw FormatError("VVC1 clip has a zero dimension");
  }
  const std::size_t n = shape_numel(shape);
  const std::size_t expected = 20 + n * 4 + 2;
  if (bytes.size() < expected) throw FormatError("VVC1 clip truncated: payload needs " + std::to_string(expected) + " bytes");
  if (bytes.size() > expected) throw FormatError("VVC1 clip has trailing bytes");
  std::vector<float> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    data[i] = binary::get_f32(bytes, 20 + 4 * i);
    if (!(data[i] >= 0.0f && data[i] <= 1.0f)) throw FormatError("VVC1 clip has a pixel outside [0, 1]");
  }
  Clip clip;
  clip.video = Tensor(shape, std::move(data));
  clip.label = static_cast<unsigned char>(bytes[20 + n * 4]);
  const auto flag = static_cast<unsigned char>(bytes[21 + n * 4]);
  if (flag > 1) throw FormatError("VVC1 clip has an invalid outcome flag");
  clip.outcome = flag ? Outcome::Success : Outcome::Failure;
  return clip;
}

void save_clip(const std::filesystem::path& path, const Clip& clip) { binary::write_file(path, encode_clip(clip)); }

Clip load_clip(const std::filesystem::path& path) { return decode_clip(binary::read_file(path)); }

}  // namespace vvlab::organism
