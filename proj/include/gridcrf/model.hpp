#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "gridcrf/random.hpp"
#include "gridcrf/types.hpp"

namespace gridcrf {

struct PixelFeatureConfig {
  int num_fourier = 0;        // extra random-projection cosine features
  double fourier_scale = 3.0; // frequency std-dev of the projections
  std::uint64_t seed = 1;

  void validate() const {
    if (num_fourier < 0)
      throw std::invalid_argument("PixelFeatureConfig: num_fourier must be >= 0");
    if (num_fourier > 0 && !(fourier_scale > 0.0))
      throw std::invalid_argument("PixelFeatureConfig: fourier_scale must be > 0");
  }
};

/// Per-pixel feature rows: intensity channels, normalized coordinates, and
/// optional fixed cosine projections of those base features.
struct PixelFeatures {
  int width = 0;
  int height = 0;
  int dim = 0;
  std::vector<double> values;  // width*height*dim, row-major

  int num_pixels() const { return width * height; }
  const double* row(int p) const {
    return values.data() + static_cast<std::size_t>(p) * dim;
  }
  double* row(int p) {
    return values.data() + static_cast<std::size_t>(p) * dim;
  }
};

/// Base features per pixel: channels, x/width, y/height. When configured,
/// appends num_fourier features sqrt(2/m)*cos(omega_j . base + b_j) with
/// seeded omega ~ N(0, scale^2) and b ~ U[0, 2pi); fixed thereafter.
inline PixelFeatures make_pixel_features(const GridImage& image,
                                         const PixelFeatureConfig& config = {}) {
  config.validate();
  const int base_dim = image.channels + 2;
  const int m = config.num_fourier;

  std::vector<double> omega(static_cast<std::size_t>(m) * base_dim);
  std::vector<double> phase(m);
  if (m > 0) {
    Rng rng(config.seed);
    for (double& w : omega) w = config.fourier_scale * rng.normal();
    for (double& b : phase) b = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }

  PixelFeatures f;
  f.width = image.width;
  f.height = image.height;
  f.dim = base_dim + m;
  f.values.resize(static_cast<std::size_t>(image.num_pixels()) * f.dim);
  const double amp = m > 0 ? std::sqrt(2.0 / m) : 0.0;
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const int p = y * image.width + x;
      double* row = f.row(p);
      const double* px = image.pixel(p);
      for (int c = 0; c < image.channels; ++c) row[c] = px[c];
      row[image.channels] = static_cast<double>(x) / image.width;
      row[image.channels + 1] = static_cast<double>(y) / image.height;
      for (int j = 0; j < m; ++j) {
        const double* wj = omega.data() + static_cast<std::size_t>(j) * base_dim;
        double dot = 0.0;
        for (int d = 0; d < base_dim; ++d) dot += wj[d] * row[d];
        row[base_dim + j] = amp * std::cos(dot + phase[j]);
      }
    }
  return f;
}

struct ModelShape {
  int in_dim = 0;
  int hidden_dim = 0;  // 0 = plain linear classifier
  int out_dim = 0;

  void validate() const {
    if (in_dim <= 0 || out_dim <= 0 || hidden_dim < 0)
      throw std::invalid_argument("ModelShape: invalid dimensions");
  }

  // Flat parameter layout: [W1 (hidden x in), b1 (hidden), W2 (out x hidden),
  // b2 (out)]; linear models use [W (out x in), b (out)].
  std::size_t param_count() const {
    if (hidden_dim > 0)
      return static_cast<std::size_t>(hidden_dim) * in_dim + hidden_dim +
             static_cast<std::size_t>(out_dim) * hidden_dim + out_dim;
    return static_cast<std::size_t>(out_dim) * in_dim + out_dim;
  }

  bool operator==(const ModelShape&) const = default;
};

/// Classifier parameters in one flat vector; see ModelShape for the layout.
struct ModelParams {
  ModelShape shape;
  std::vector<double> theta;

  void validate() const {
    shape.validate();
    if (theta.size() != shape.param_count())
      throw std::invalid_argument("ModelParams: theta length mismatch");
    for (double v : theta)
      if (!std::isfinite(v))
        throw std::invalid_argument("ModelParams: non-finite parameter");
  }

  // Layout accessors (offsets into theta).
  std::size_t w1_off() const { return 0; }
  std::size_t b1_off() const {
    return static_cast<std::size_t>(shape.hidden_dim) * shape.in_dim;
  }
  std::size_t w2_off() const { return b1_off() + shape.hidden_dim; }
  std::size_t b2_off() const {
    return w2_off() + static_cast<std::size_t>(shape.out_dim) * shape.hidden_dim;
  }
  // Linear layout.
  std::size_t w_off() const { return 0; }
  std::size_t b_off() const {
    return static_cast<std::size_t>(shape.out_dim) * shape.in_dim;
  }
};

/// Weights ~ N(0, (0.1/sqrt(fan_in))^2), biases zero; deterministic per seed.
inline ModelParams init_model_params(const ModelShape& shape, std::uint64_t seed) {
  shape.validate();
  ModelParams params;
  params.shape = shape;
  params.theta.assign(shape.param_count(), 0.0);
  Rng rng(seed);
  if (shape.hidden_dim > 0) {
    const double s1 = 0.1 / std::sqrt(static_cast<double>(shape.in_dim));
    const double s2 = 0.1 / std::sqrt(static_cast<double>(shape.hidden_dim));
    std::size_t i = params.w1_off();
    for (int j = 0; j < shape.hidden_dim * shape.in_dim; ++j)
      params.theta[i++] = s1 * rng.normal();
    i = params.w2_off();
    for (int j = 0; j < shape.out_dim * shape.hidden_dim; ++j)
      params.theta[i++] = s2 * rng.normal();
  } else {
    const double s = 0.1 / std::sqrt(static_cast<double>(shape.in_dim));
    std::size_t i = params.w_off();
    for (int j = 0; j < shape.out_dim * shape.in_dim; ++j)
      params.theta[i++] = s * rng.normal();
  }
  return params;
}

namespace detail {

inline void check_forward_shapes(const ModelParams& params, const PixelFeatures& features) {
  if (params.shape.in_dim != features.dim)
    throw std::invalid_argument("model: feature dimension mismatch");
  if (params.theta.size() != params.shape.param_count())
    throw std::invalid_argument("model: theta length mismatch");
}

// Pre-softmax scores for one pixel; scratch `hidden` sized hidden_dim.
inline void pixel_scores(const ModelParams& params, const double* f,
                         double* hidden, double* scores) {
  const ModelShape& sh = params.shape;
  const double* th = params.theta.data();
  if (sh.hidden_dim > 0) {
    const double* w1 = th + params.w1_off();
    const double* b1 = th + params.b1_off();
    const double* w2 = th + params.w2_off();
    const double* b2 = th + params.b2_off();
    for (int h = 0; h < sh.hidden_dim; ++h) {
      double a = b1[h];
      const double* row = w1 + static_cast<std::size_t>(h) * sh.in_dim;
      for (int d = 0; d < sh.in_dim; ++d) a += row[d] * f[d];
      hidden[h] = a > 0.0 ? a : 0.0;  // rectifier
    }
    for (int k = 0; k < sh.out_dim; ++k) {
      double a = b2[k];
      const double* row = w2 + static_cast<std::size_t>(k) * sh.hidden_dim;
      for (int h = 0; h < sh.hidden_dim; ++h) a += row[h] * hidden[h];
      scores[k] = a;
    }
  } else {
    const double* w = th + params.w_off();
    const double* b = th + params.b_off();
    for (int k = 0; k < sh.out_dim; ++k) {
      double a = b[k];
      const double* row = w + static_cast<std::size_t>(k) * sh.in_dim;
      for (int d = 0; d < sh.in_dim; ++d) a += row[d] * f[d];
      scores[k] = a;
    }
  }
}

}  // namespace detail

/// Per-pixel class probabilities softmax(scores(p)).
inline SoftSegmentation forward(const ModelParams& params, const PixelFeatures& features) {
  detail::check_forward_shapes(params, features);
  const int n = features.num_pixels();
  const int k = params.shape.out_dim;
  SoftSegmentation seg;
  seg.width = features.width;
  seg.height = features.height;
  seg.num_labels = k;
  seg.probs.resize(static_cast<std::size_t>(n) * k);
  std::vector<double> hidden(std::max(params.shape.hidden_dim, 1));
  std::vector<double> scores(k);
  for (int p = 0; p < n; ++p) {
    detail::pixel_scores(params, features.row(p), hidden.data(), scores.data());
    softmax_row(scores.data(), seg.row(p), k);
  }
  return seg;
}

/// Parameter gradient for upstream dL/d(pre-softmax scores), one K-row per
/// pixel. Callers fold the softmax Jacobian into `upstream` themselves.
inline std::vector<double> backward(const ModelParams& params,
                                    const PixelFeatures& features,
                                    const std::vector<double>& upstream) {
  detail::check_forward_shapes(params, features);
  const ModelShape& sh = params.shape;
  const int n = features.num_pixels();
  const int k = sh.out_dim;
  if (upstream.size() != static_cast<std::size_t>(n) * k)
    throw std::invalid_argument("backward: upstream length mismatch");

  std::vector<double> grad(params.theta.size(), 0.0);
  const double* th = params.theta.data();
  if (sh.hidden_dim > 0) {
    const double* w1 = th + params.w1_off();
    const double* b1 = th + params.b1_off();
    const double* w2 = th + params.w2_off();
    double* g_w1 = grad.data() + params.w1_off();
    double* g_b1 = grad.data() + params.b1_off();
    double* g_w2 = grad.data() + params.w2_off();
    double* g_b2 = grad.data() + params.b2_off();
    std::vector<double> pre(sh.hidden_dim), act(sh.hidden_dim), dh(sh.hidden_dim);
    for (int p = 0; p < n; ++p) {
      const double* f = features.row(p);
      for (int h = 0; h < sh.hidden_dim; ++h) {
        double a = b1[h];
        const double* row = w1 + static_cast<std::size_t>(h) * sh.in_dim;
        for (int d = 0; d < sh.in_dim; ++d) a += row[d] * f[d];
        pre[h] = a;
        act[h] = a > 0.0 ? a : 0.0;
      }
      const double* g = upstream.data() + static_cast<std::size_t>(p) * k;
      std::fill(dh.begin(), dh.end(), 0.0);
      for (int j = 0; j < k; ++j) {
        const double gj = g[j];
        g_b2[j] += gj;
        const double* row = w2 + static_cast<std::size_t>(j) * sh.hidden_dim;
        double* grow = g_w2 + static_cast<std::size_t>(j) * sh.hidden_dim;
        for (int h = 0; h < sh.hidden_dim; ++h) {
          grow[h] += gj * act[h];
          dh[h] += gj * row[h];
        }
      }
      for (int h = 0; h < sh.hidden_dim; ++h) {
        if (pre[h] <= 0.0) continue;  // rectifier gate
        g_b1[h] += dh[h];
        double* grow = g_w1 + static_cast<std::size_t>(h) * sh.in_dim;
        for (int d = 0; d < sh.in_dim; ++d) grow[d] += dh[h] * f[d];
      }
    }
  } else {
    double* g_w = grad.data() + params.w_off();
    double* g_b = grad.data() + params.b_off();
    for (int p = 0; p < n; ++p) {
      const double* f = features.row(p);
      const double* g = upstream.data() + static_cast<std::size_t>(p) * k;
      for (int j = 0; j < k; ++j) {
        g_b[j] += g[j];
        double* grow = g_w + static_cast<std::size_t>(j) * sh.in_dim;
        for (int d = 0; d < sh.in_dim; ++d) grow[d] += g[j] * f[d];
      }
    }
  }
  return grad;
}

struct SgdConfig {
  double learning_rate = 0.01;
  // Phase 2 updates aggregate gradients over every unlabeled pixel, so they
  // run orders of magnitude hotter than the scribble-only phase-1 loss and
  // want a cooler step; 0 inherits learning_rate.
  double phase2_learning_rate = 0.0005;
  double momentum = 0.9;
  int batch_size = 1;
  int phase1_iters = 400;
  int phase2_iters = 1500;
  std::uint64_t seed = 1;

  double effective_phase2_lr() const {
    return phase2_learning_rate > 0.0 ? phase2_learning_rate : learning_rate;
  }

  void validate() const {
    if (!(learning_rate > 0.0))
      throw std::invalid_argument("SgdConfig: learning_rate must be > 0");
    if (!(phase2_learning_rate >= 0.0))
      throw std::invalid_argument("SgdConfig: phase2_learning_rate must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0))
      throw std::invalid_argument("SgdConfig: momentum must be in [0,1)");
    if (batch_size < 1)
      throw std::invalid_argument("SgdConfig: batch_size must be >= 1");
    if (phase1_iters < 0 || phase2_iters < 0)
      throw std::invalid_argument("SgdConfig: iteration counts must be >= 0");
  }
};

struct SgdState {
  std::vector<double> velocity;
};

/// Momentum update: v <- mu*v + g; theta <- theta - lr*v.
inline void sgd_step(ModelParams& params, const std::vector<double>& grads,
                     const SgdConfig& config, SgdState& state) {
  if (grads.size() != params.theta.size())
    throw std::invalid_argument("sgd_step: gradient length mismatch");
  if (state.velocity.empty()) state.velocity.assign(params.theta.size(), 0.0);
  if (state.velocity.size() != params.theta.size())
    throw std::invalid_argument("sgd_step: velocity length mismatch");
  for (std::size_t i = 0; i < params.theta.size(); ++i) {
    state.velocity[i] = config.momentum * state.velocity[i] + grads[i];
    params.theta[i] -= config.learning_rate * state.velocity[i];
  }
}

namespace detail {

inline void write_double_le(std::ostream& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(buf), 8);
}

inline double read_double_le(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  if (!in) throw std::runtime_error("checkpoint: truncated parameter block");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace detail

/// Checkpoint layout: two text lines
///   gridcrf-params 1
///   <in_dim> <hidden_dim> <out_dim> <param_count>
/// followed by param_count little-endian IEEE-754 doubles.
inline void save_checkpoint(const std::string& path, const ModelParams& params) {
  params.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open for write: " + path);
  out << "gridcrf-params 1\n"
      << params.shape.in_dim << ' ' << params.shape.hidden_dim << ' '
      << params.shape.out_dim << ' ' << params.theta.size() << '\n';
  for (double v : params.theta) detail::write_double_le(out, v);
  if (!out) throw std::runtime_error("checkpoint: write failed: " + path);
}

inline ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open: " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "gridcrf-params" || version != 1)
    throw std::runtime_error("checkpoint: unrecognized header in " + path);
  ModelParams params;
  std::size_t count = 0;
  in >> params.shape.in_dim >> params.shape.hidden_dim >> params.shape.out_dim >> count;
  if (!in) throw std::runtime_error("checkpoint: malformed shape line in " + path);
  in.get();  // consume the newline before the binary block
  if (count != params.shape.param_count())
    throw std::runtime_error("checkpoint: parameter count does not match shape");
  params.theta.resize(count);
  for (std::size_t i = 0; i < count; ++i) params.theta[i] = detail::read_double_le(in);
  params.validate();
  return params;
}

}  // namespace gridcrf
