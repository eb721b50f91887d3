#include "oracles.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace oracle {

using vvlab::Tensor;
using vvlab::model::ModelConfig;
using vvlab::model::Weights;

Matrix to_matrix(const Tensor& t) {
  const std::size_t cols = t.shape().back();
  const std::size_t rows = t.size() / cols;
  Matrix m(rows, std::vector<double>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m[r][c] = t.data()[r * cols + c];
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.size(), std::vector<double>(b.front().size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.front().size(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < b.size(); ++k) s += a[i][k] * b[k][j];
      out[i][j] = s;
    }
  return out;
}

namespace {

std::vector<double> vec(const Tensor& t) { return std::vector<double>(t.values().begin(), t.values().end()); }

std::vector<double> layernorm_row(const std::vector<double>& x, const Tensor& g, const Tensor& b, double eps) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= x.size();
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= x.size();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) / std::sqrt(var + eps) * g[i] + b[i];
  return out;
}

Matrix layernorm(const Matrix& x, const Tensor& g, const Tensor& b, double eps) {
  Matrix out;
  for (const auto& row : x) out.push_back(layernorm_row(row, g, b, eps));
  return out;
}

Matrix affine(const Matrix& x, const Tensor& w, const Tensor& b) {
  Matrix out = matmul(x, to_matrix(w));
  for (auto& row : out)
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += b[j];
  return out;
}

}  // namespace

double gelu_tanh(double x) { return 0.5 * x * (1.0 + std::tanh(std::sqrt(2.0 / M_PI) * (x + 0.044715 * x * x * x))); }
double gelu_erf(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

Matrix tubelets(const Tensor& video, const ModelConfig& cfg) {
  const std::size_t S = cfg.image_size, C = cfg.channels;
  const auto& tb = cfg.tubelet;
  Matrix out;
  for (std::size_t t0 = 0; t0 < cfg.frames; t0 += tb.t)
    for (std::size_t y0 = 0; y0 < S; y0 += tb.h)
      for (std::size_t x0 = 0; x0 < S; x0 += tb.w) {
        std::vector<double> patch;
        for (std::size_t dt = 0; dt < tb.t; ++dt)
          for (std::size_t dy = 0; dy < tb.h; ++dy)
            for (std::size_t dx = 0; dx < tb.w; ++dx)
              for (std::size_t c = 0; c < C; ++c)
                patch.push_back(video.data()[(((t0 + dt) * S + y0 + dy) * S + x0 + dx) * C + c]);
        out.push_back(patch);
      }
  return out;
}

Reference forward(const Tensor& video, const Weights& w, const ModelConfig& cfg) {
  const double eps = cfg.ln_eps;
  const std::size_t d = cfg.d_model, H = cfg.num_heads, dh = d / H;
  auto gelu = [&](double x) { return cfg.gelu == vvlab::GeluVariant::Tanh ? gelu_tanh(x) : gelu_erf(x); };

  Matrix x = affine(tubelets(video, cfg), w.patch_kernel, w.patch_bias);
  x.insert(x.begin(), vec(w.cls_embedding));
  const Matrix pos = to_matrix(w.position_embedding);
  for (std::size_t r = 0; r < x.size(); ++r)
    for (std::size_t j = 0; j < d; ++j) x[r][j] += pos[r][j];

  Reference ref;
  ref.embed = x;
  const std::size_t S = x.size();
  for (const auto& L : w.layers) {
    const Matrix n1 = layernorm(x, L.ln1_gamma, L.ln1_beta, eps);
    const Matrix q = affine(n1, L.w_q, L.b_q), k = affine(n1, L.w_k, L.b_k), v = affine(n1, L.w_v, L.b_v);
    Matrix z(S, std::vector<double>(d, 0.0));
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t i = 0; i < S; ++i) {
        std::vector<double> s(S);
        double mx = -1e300;
        for (std::size_t j = 0; j < S; ++j) {
          double dot = 0.0;
          for (std::size_t c = 0; c < dh; ++c) dot += q[i][h * dh + c] * k[j][h * dh + c];
          s[j] = dot / std::sqrt(static_cast<double>(dh));
          mx = std::max(mx, s[j]);
        }
        double total = 0.0;
        for (auto& e : s) total += (e = std::exp(e - mx));
        for (std::size_t j = 0; j < S; ++j)
          for (std::size_t c = 0; c < dh; ++c) z[i][h * dh + c] += s[j] / total * v[j][h * dh + c];
      }
    }
    const Matrix attn = affine(z, L.w_o, L.b_o);
    for (std::size_t r = 0; r < S; ++r)
      for (std::size_t j = 0; j < d; ++j) x[r][j] += attn[r][j];
    Matrix hidden = affine(layernorm(x, L.ln2_gamma, L.ln2_beta, eps), L.w_in, L.b_in);
    for (auto& row : hidden)
      for (auto& e : row) e = gelu(e);
    const Matrix mlp = affine(hidden, L.w_out, L.b_out);
    for (std::size_t r = 0; r < S; ++r)
      for (std::size_t j = 0; j < d; ++j) x[r][j] += mlp[r][j];
    ref.resid_post.push_back(x);
  }
  const Matrix cls = {layernorm_row(x[0], w.final_ln_gamma, w.final_ln_beta, eps)};
  ref.logits = affine(cls, w.unembed, w.unembed_bias)[0];
  return ref;
}

Netpbm parse_netpbm(const std::string& bytes) {
  Netpbm img;
  std::size_t pos = 0;
  auto skip = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto token = [&] {
    skip();
    std::string t;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) t += bytes[pos++];
    return t;
  };
  img.magic = token();
  if (img.magic != "P5" && img.magic != "P6") throw std::runtime_error("not a binary PGM/PPM");
  img.width = std::stoul(token());
  img.height = std::stoul(token());
  img.maxval = std::stoul(token());
  ++pos;  // exactly one whitespace byte before the raster
  const std::size_t n = img.width * img.height * (img.magic == "P6" ? 3 : 1);
  if (bytes.size() - pos != n) throw std::runtime_error("raster size mismatch");
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return img;
}

RoutedModel routed_model(double gain) {
  RoutedModel m;
  ModelConfig& c = m.config;
  c.num_layers = 2;
  c.num_heads = 1;
  c.d_model = 4;
  c.d_mlp = 4;
  c.num_classes = 2;
  c.frames = 2;
  c.image_size = 2;
  c.channels = 1;
  c.tubelet = {2, 2, 2};
  c.class_names.clear();
  m.weights = vvlab::model::zeros_like(c);
  Weights& w = m.weights;

  // Token embedding: dims 0/1 carry ±0.01·(pixel sum), dims 2/3 a fixed ±1 offset.
  for (std::size_t r = 0; r < 8; ++r) {
    w.patch_kernel.at(r, 0) = 0.01f;
    w.patch_kernel.at(r, 1) = -0.01f;
  }
  w.patch_bias[2] = 1.0f;
  w.patch_bias[3] = -1.0f;
  w.cls_embedding[2] = 1.0f;
  w.cls_embedding[3] = -1.0f;
  for (auto& L : w.layers) {
    for (std::size_t j = 0; j < 4; ++j) {
      L.ln1_gamma[j] = L.ln2_gamma[j] = 1.0f;
    }
  }
  // Layer 1 MLP: hidden unit 0 reads ln2 dim 0 around a linear operating
  // point of the GELU, and writes to dim 2.
  auto& mlp = w.layers[1];
  mlp.w_in.at(0, 0) = static_cast<float>(gain);
  mlp.b_in[0] = 0.0f;
  mlp.w_out.at(0, 2) = 1.0f;
  for (std::size_t j = 0; j < 4; ++j) w.final_ln_gamma[j] = 1.0f;
  w.unembed.at(2, 0) = 1.0f;
  w.unembed.at(0, 1) = 1.0f;

  m.src = Tensor({2, 2, 2, 1}, 0.6f);
  m.dst = Tensor({2, 2, 2, 1}, 0.4f);
  return m;
}

std::vector<double> numeric_gradient(const std::function<double(const Tensor&)>& f, Tensor x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const float orig = x[i];
    x[i] = static_cast<float>(orig + h);
    const double hi = f(x);
    const double step_hi = static_cast<double>(x[i]) - orig;
    x[i] = static_cast<float>(orig - h);
    const double lo = f(x);
    const double step_lo = orig - static_cast<double>(x[i]);
    x[i] = orig;
    g[i] = (hi - lo) / (step_hi + step_lo);
  }
  return g;
}

double relative_error(const std::vector<double>& a, const std::vector<double>& b, double floor) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

ModelConfig tiny_config() {
  ModelConfig c;
  c.num_layers = 2;
  c.num_heads = 2;
  c.d_model = 8;
  c.d_mlp = 16;
  c.num_classes = 3;
  c.frames = 4;
  c.image_size = 8;
  c.channels = 1;
  c.tubelet = {2, 4, 4};
  c.class_names = {"a", "b", "c"};
  return c;
}

Weights random_weights(const ModelConfig& cfg, std::uint64_t seed, double stddev) {
  Weights w = vvlab::model::zeros_like(cfg);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& [name, t] : vvlab::model::parameters(w)) {
    const bool gamma = name.find("gamma") != std::string::npos;
    const bool small = gamma || name.find("beta") != std::string::npos || name.find("b_") != std::string::npos ||
                       name.find("bias") != std::string::npos;
    for (auto& v : t->values()) v = static_cast<float>((gamma ? 1.0 : 0.0) + n(rng) * (small ? 0.1 : stddev));
  }
  return w;
}

Tensor random_tensor(vvlab::Shape shape, std::uint64_t seed, double stddev) {
  Tensor t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, stddev);
  for (auto& v : t.values()) v = static_cast<float>(n(rng));
  return t;
}

Tensor random_video(const ModelConfig& cfg, std::uint64_t seed) {
  Tensor t({cfg.frames, cfg.image_size, cfg.image_size, cfg.channels});
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : t.values()) v = static_cast<float>(u(rng));
  return t;
}

}  // namespace oracle
