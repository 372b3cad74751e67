#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "gridcrf/energy.hpp"
#include "gridcrf/random.hpp"
#include "gridcrf/types.hpp"

namespace gridcrf {

/// A generated image with full ground truth and partial scribble supervision.
struct SyntheticScene {
  GridImage image;
  Labeling gt;
  ScribbleMask scribbles;
  std::uint64_t seed = 0;
  std::string kind;
  double noise = 0.0;
  double contrast = 0.0;
  int dominant_t = -1;  // staircase only: x of the dominant intensity step

  void validate() const {
    image.validate();
    gt.validate();
    scribbles.validate();
    if (gt.width != image.width || gt.height != image.height ||
        scribbles.width != image.width || scribbles.height != image.height)
      throw std::invalid_argument("SyntheticScene: component size mismatch");
    for (int p = 0; p < gt.num_pixels(); ++p)
      if (scribbles.is_labeled(p) && scribbles.label_at(p) != gt[p])
        throw std::invalid_argument("SyntheticScene: scribble contradicts ground truth");
  }
};

/// Piecewise-constant 1 x length intensity profile: starts at `base`, adds
/// step_heights[i] at x = step_positions[i], plus seeded Gaussian noise,
/// clipped to [0,1]. Ground truth splits at the largest-magnitude step; the
/// two scribble chains sit strictly inside each segment.
inline SyntheticScene gen_staircase_1d(int length, const std::vector<int>& step_positions,
                                       const std::vector<double>& step_heights,
                                       double noise, std::uint64_t seed,
                                       double base = 0.15) {
  if (length < 8) throw std::invalid_argument("gen_staircase_1d: length must be >= 8");
  if (step_positions.empty() || step_positions.size() != step_heights.size())
    throw std::invalid_argument("gen_staircase_1d: positions/heights mismatch");
  for (std::size_t i = 0; i < step_positions.size(); ++i) {
    if (step_positions[i] < 1 || step_positions[i] > length - 1)
      throw std::invalid_argument("gen_staircase_1d: step position out of range");
    if (i > 0 && step_positions[i] <= step_positions[i - 1])
      throw std::invalid_argument("gen_staircase_1d: positions must be strictly increasing");
  }
  if (!(noise >= 0.0)) throw std::invalid_argument("gen_staircase_1d: noise must be >= 0");

  std::size_t dominant = 0;
  for (std::size_t i = 1; i < step_heights.size(); ++i)
    if (std::abs(step_heights[i]) > std::abs(step_heights[dominant])) dominant = i;
  const int t_star = step_positions[dominant];
  if (t_star < 3 || t_star > length - 3)
    throw std::invalid_argument("gen_staircase_1d: dominant step too close to the ends");

  Rng rng(seed);
  std::vector<double> intensity(length);
  double level = base;
  std::size_t next_step = 0;
  for (int x = 0; x < length; ++x) {
    while (next_step < step_positions.size() && step_positions[next_step] == x)
      level += step_heights[next_step++];
    intensity[x] = std::clamp(level + noise * rng.normal(), 0.0, 1.0);
  }

  SyntheticScene scene;
  scene.image = GridImage(length, 1, 1, std::move(intensity));
  std::vector<int> labels(length);
  for (int x = 0; x < length; ++x) labels[x] = x >= t_star ? 1 : 0;
  scene.gt = Labeling(length, 1, 2, std::move(labels));

  scene.scribbles = ScribbleMask::empty(length, 1, 2);
  ScribbleChain left{0, {}};
  for (int x = 1; x <= t_star - 2; ++x) left.pixels.push_back({x, 0});
  ScribbleChain right{1, {}};
  for (int x = t_star + 1; x <= length - 2; ++x) right.pixels.push_back({x, 0});
  scene.scribbles.paint_chain(left);
  scene.scribbles.paint_chain(right);

  scene.seed = seed;
  scene.kind = "staircase";
  scene.noise = noise;
  scene.contrast = std::abs(step_heights[dominant]);
  scene.dominant_t = t_star;
  scene.validate();
  return scene;
}

/// Randomized staircase suite: one dominant step near the middle plus a few
/// small distractor steps of alternating sign.
inline std::vector<SyntheticScene> gen_staircase_suite(int num_scenes, int length,
                                                       double noise, std::uint64_t seed) {
  if (num_scenes < 1) throw std::invalid_argument("gen_staircase_suite: need >= 1 scene");
  std::vector<SyntheticScene> scenes;
  scenes.reserve(num_scenes);
  for (int i = 0; i < num_scenes; ++i) {
    const std::uint64_t scene_seed = seed + 0x9E3779B97F4A7C15ull * (i + 1);
    Rng rng(scene_seed);
    const int t_star = rng.uniform_int(length / 3, 2 * length / 3);
    const int num_distractors = rng.uniform_int(1, 3);
    std::vector<int> positions{t_star};
    std::vector<double> heights{rng.uniform(0.55, 0.7)};
    double sign = rng.uniform() < 0.5 ? 1.0 : -1.0;
    for (int d = 0; d < num_distractors; ++d) {
      int pos = 0;
      bool ok = false;
      for (int attempt = 0; attempt < 64 && !ok; ++attempt) {
        pos = rng.uniform_int(4, length - 4);
        ok = true;
        for (int existing : positions)
          if (std::abs(existing - pos) < 4) ok = false;
      }
      if (!ok) continue;
      positions.push_back(pos);
      heights.push_back(sign * rng.uniform(0.06, 0.14));
      sign = -sign;
    }
    std::vector<std::size_t> order(positions.size());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return positions[a] < positions[b]; });
    std::vector<int> sorted_pos;
    std::vector<double> sorted_h;
    for (std::size_t j : order) {
      sorted_pos.push_back(positions[j]);
      sorted_h.push_back(heights[j]);
    }
    scenes.push_back(gen_staircase_1d(length, sorted_pos, sorted_h, noise, scene_seed));
  }
  return scenes;
}

struct LandscapeCurves {
  std::vector<int> t;           // split positions 1..length-1
  std::vector<double> grid_cost;
  std::vector<double> dense_cost;
};

/// Potts cost of every two-segment split S^t = {x | x < t} of a 1-D scene
/// under nearest-neighbor and large-neighborhood weights.
inline LandscapeCurves landscape_1d(const SyntheticScene& scene,
                                    const EnergyParams& grid_params,
                                    const EnergyParams& dense_params) {
  if (scene.image.height != 1)
    throw std::invalid_argument("landscape_1d: scene must be 1 x N");
  const int length = scene.image.width;
  const PairwiseGraph grid = build_grid_weights(scene.image, grid_params);
  const PairwiseGraph dense = build_dense_weights(scene.image, dense_params);

  LandscapeCurves curves;
  std::vector<int> labels(length, 1);
  for (int t = 1; t <= length - 1; ++t) {
    labels[t - 1] = 0;  // extend segment {x < t} one pixel at a time
    const Labeling split(length, 1, 2, std::vector<int>(labels));
    curves.t.push_back(t);
    curves.grid_cost.push_back(potts_energy(split, grid));
    curves.dense_cost.push_back(potts_energy(split, dense));
  }
  return curves;
}

/// Strict local minima, one-sided at the ends.
inline int count_strict_local_minima(const std::vector<double>& curve) {
  const int n = static_cast<int>(curve.size());
  int count = 0;
  for (int i = 0; i < n; ++i) {
    const bool left = i == 0 || curve[i] < curve[i - 1];
    const bool right = i == n - 1 || curve[i] < curve[i + 1];
    count += left && right;
  }
  return count;
}

namespace detail {

// Pixel lies inside `label`'s region with a Chebyshev-2 margin; pixels beyond
// the raster count as matching (the image border is not a region boundary).
inline bool interior2(const Labeling& gt, int x, int y, int label) {
  for (int dy = -2; dy <= 2; ++dy)
    for (int dx = -2; dx <= 2; ++dx) {
      const int nx = x + dx;
      const int ny = y + dy;
      if (nx < 0 || nx >= gt.width || ny < 0 || ny >= gt.height) continue;
      if (gt[ny * gt.width + nx] != label) return false;
    }
  return true;
}

// Longest horizontal run of interior pixels of `label`; empty when none.
inline std::vector<std::pair<int, int>> longest_interior_run(const Labeling& gt, int label) {
  std::vector<std::pair<int, int>> best;
  for (int y = 0; y < gt.height; ++y) {
    int run_start = -1;
    for (int x = 0; x <= gt.width; ++x) {
      const bool in = x < gt.width && gt[y * gt.width + x] == label &&
                      interior2(gt, x, y, label);
      if (in && run_start < 0) run_start = x;
      if (!in && run_start >= 0) {
        if (x - run_start > static_cast<int>(best.size())) {
          best.clear();
          for (int rx = run_start; rx < x; ++rx) best.push_back({rx, y});
        }
        run_start = -1;
      }
    }
  }
  return best;
}

}  // namespace detail

/// K-region 2-D scene: background plus K-1 random ellipses with evenly spread
/// mean intensities (span scaled by `contrast`), additive Gaussian noise, and
/// one horizontal interior scribble chain per region. Retries placement until
/// every region supports a chain of >= 3 interior pixels.
inline SyntheticScene gen_blobs_2d(int width, int height, int num_labels, double noise,
                                   double contrast, std::uint64_t seed) {
  if (width < 16 || height < 16)
    throw std::invalid_argument("gen_blobs_2d: raster must be at least 16 x 16");
  if (num_labels < 2) throw std::invalid_argument("gen_blobs_2d: need >= 2 labels");
  if (!(noise >= 0.0)) throw std::invalid_argument("gen_blobs_2d: noise must be >= 0");
  if (!(contrast > 0.0 && contrast <= 1.0))
    throw std::invalid_argument("gen_blobs_2d: contrast must be in (0,1]");

  constexpr int kMaxAttempts = 128;
  constexpr int kChainCap = 24;
  const int n = width * height;
  const double min_dim = std::min(width, height);

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(seed + 0x9E3779B97F4A7C15ull * attempt);
    // Small rasters can reject many layouts, so retries favor larger blobs;
    // attempt 0 keeps the unbiased distribution.
    const double grow = 1.0 + 0.02 * attempt;
    std::vector<int> labels(n, 0);
    for (int k = 1; k < num_labels; ++k) {
      const double cx = rng.uniform(0.22, 0.78) * width;
      const double cy = rng.uniform(0.22, 0.78) * height;
      const double a = std::min(0.3, rng.uniform(0.14, 0.26) * grow) * min_dim;
      const double b = std::min(0.3, rng.uniform(0.14, 0.26) * grow) * min_dim;
      const double phi = rng.uniform(0.0, std::numbers::pi);
      const double c = std::cos(phi), s = std::sin(phi);
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
          const double dx = x + 0.5 - cx;
          const double dy = y + 0.5 - cy;
          const double u = (c * dx + s * dy) / a;
          const double v = (-s * dx + c * dy) / b;
          if (u * u + v * v <= 1.0) labels[y * width + x] = k;
        }
    }

    Labeling gt(width, height, num_labels, std::move(labels));
    std::vector<std::vector<std::pair<int, int>>> runs(num_labels);
    bool viable = true;
    for (int k = 0; k < num_labels && viable; ++k) {
      runs[k] = detail::longest_interior_run(gt, k);
      viable = runs[k].size() >= 3;
    }
    if (!viable) continue;

    const double lo = 0.12;
    const double span = 0.8 * contrast;
    std::vector<double> means(num_labels);
    for (int k = 0; k < num_labels; ++k)
      means[k] = lo + span * k / (num_labels - 1);

    std::vector<double> intensity(n);
    for (int p = 0; p < n; ++p)
      intensity[p] = std::clamp(means[gt[p]] + noise * rng.normal(), 0.0, 1.0);

    SyntheticScene scene;
    scene.image = GridImage(width, height, 1, std::move(intensity));
    scene.gt = std::move(gt);
    scene.scribbles = ScribbleMask::empty(width, height, num_labels);
    for (int k = 0; k < num_labels; ++k) {
      auto& run = runs[k];
      if (static_cast<int>(run.size()) > kChainCap) {
        const int start = (static_cast<int>(run.size()) - kChainCap) / 2;
        run = {run.begin() + start, run.begin() + start + kChainCap};
      }
      ScribbleChain chain;
      chain.label = k;
      chain.pixels = std::move(run);
      scene.scribbles.paint_chain(chain);
    }
    scene.seed = seed;
    scene.kind = "blobs";
    scene.noise = noise;
    scene.contrast = contrast;
    scene.validate();
    return scene;
  }
  throw std::runtime_error("gen_blobs_2d: no viable layout after max attempts");
}

inline std::vector<SyntheticScene> gen_blob_suite(int num_scenes, int width, int height,
                                                  int num_labels, double noise,
                                                  double contrast, std::uint64_t seed) {
  if (num_scenes < 1) throw std::invalid_argument("gen_blob_suite: need >= 1 scene");
  std::vector<SyntheticScene> scenes;
  scenes.reserve(num_scenes);
  for (int i = 0; i < num_scenes; ++i)
    scenes.push_back(gen_blobs_2d(width, height, num_labels, noise, contrast,
                                  seed + 1000003ull * (i + 1)));
  return scenes;
}

}  // namespace gridcrf
