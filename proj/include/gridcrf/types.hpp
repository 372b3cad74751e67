#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gridcrf {

// Instance exceeds a configured size cap (edge budget, enumeration guard).
struct resource_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input lacks a structural feature the operation needs (e.g. chains).
struct unsupported_input : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Connectivity { grid4, grid8, dense };

inline const char* to_string(Connectivity c) {
  switch (c) {
    case Connectivity::grid4: return "grid4";
    case Connectivity::grid8: return "grid8";
    case Connectivity::dense: return "dense";
  }
  return "?";
}

inline Connectivity connectivity_from_string(const std::string& s) {
  if (s == "grid4") return Connectivity::grid4;
  if (s == "grid8") return Connectivity::grid8;
  if (s == "dense") return Connectivity::dense;
  throw std::invalid_argument("unknown connectivity: " + s);
}

/// 2D raster of per-pixel intensity vectors in [0,1], row-major,
/// 1 (grayscale) or 3 (RGB) channels.
struct GridImage {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<double> data;  // width*height*channels

  GridImage() = default;
  GridImage(int w, int h, int c, std::vector<double> d)
      : width(w), height(h), channels(c), data(std::move(d)) {
    validate();
  }

  int num_pixels() const { return width * height; }

  const double* pixel(int p) const {
    return data.data() + static_cast<std::size_t>(p) * channels;
  }
  double* pixel(int p) {
    return data.data() + static_cast<std::size_t>(p) * channels;
  }

  double squared_diff(int p, int q) const {
    const double* a = pixel(p);
    const double* b = pixel(q);
    double s = 0.0;
    for (int c = 0; c < channels; ++c) {
      const double d = a[c] - b[c];
      s += d * d;
    }
    return s;
  }

  void validate() const {
    if (width <= 0 || height <= 0)
      throw std::invalid_argument("GridImage: non-positive dimensions");
    if (channels != 1 && channels != 3)
      throw std::invalid_argument("GridImage: channels must be 1 or 3");
    if (data.size() != static_cast<std::size_t>(width) * height * channels)
      throw std::invalid_argument("GridImage: data length mismatch");
    for (double v : data)
      if (!std::isfinite(v) || v < 0.0 || v > 1.0)
        throw std::invalid_argument("GridImage: value outside [0,1]");
  }
};

/// One discrete label per pixel.
struct Labeling {
  int width = 0;
  int height = 0;
  int num_labels = 0;
  std::vector<int> labels;  // width*height entries in [0, num_labels)

  Labeling() = default;
  Labeling(int w, int h, int k, std::vector<int> l)
      : width(w), height(h), num_labels(k), labels(std::move(l)) {
    validate();
  }

  static Labeling constant(int w, int h, int k, int value) {
    return Labeling(w, h, k, std::vector<int>(static_cast<std::size_t>(w) * h, value));
  }

  int num_pixels() const { return width * height; }
  int operator[](int p) const { return labels[p]; }

  void validate() const {
    if (width <= 0 || height <= 0 || num_labels <= 0)
      throw std::invalid_argument("Labeling: non-positive dimensions");
    if (labels.size() != static_cast<std::size_t>(width) * height)
      throw std::invalid_argument("Labeling: label count mismatch");
    for (int l : labels)
      if (l < 0 || l >= num_labels)
        throw std::invalid_argument("Labeling: label out of range");
  }
};

/// Per-pixel K-way probability rows (row-major, width*height*K).
struct SoftSegmentation {
  int width = 0;
  int height = 0;
  int num_labels = 0;
  std::vector<double> probs;

  SoftSegmentation() = default;
  SoftSegmentation(int w, int h, int k, std::vector<double> p)
      : width(w), height(h), num_labels(k), probs(std::move(p)) {
    validate();
  }

  int num_pixels() const { return width * height; }

  const double* row(int p) const {
    return probs.data() + static_cast<std::size_t>(p) * num_labels;
  }
  double* row(int p) {
    return probs.data() + static_cast<std::size_t>(p) * num_labels;
  }

  Labeling argmax() const {
    std::vector<int> out(num_pixels());
    for (int p = 0; p < num_pixels(); ++p) {
      const double* r = row(p);
      out[p] = static_cast<int>(std::max_element(r, r + num_labels) - r);
    }
    return Labeling(width, height, num_labels, std::move(out));
  }

  void validate() const {
    if (width <= 0 || height <= 0 || num_labels <= 0)
      throw std::invalid_argument("SoftSegmentation: non-positive dimensions");
    if (probs.size() != static_cast<std::size_t>(width) * height * num_labels)
      throw std::invalid_argument("SoftSegmentation: probs length mismatch");
    for (int p = 0; p < num_pixels(); ++p) {
      const double* r = row(p);
      double sum = 0.0;
      for (int k = 0; k < num_labels; ++k) {
        if (!(r[k] >= 0.0 && r[k] <= 1.0))
          throw std::invalid_argument("SoftSegmentation: entry outside [0,1]");
        sum += r[k];
      }
      if (std::abs(sum - 1.0) > 1e-6)
        throw std::invalid_argument("SoftSegmentation: row does not sum to 1");
    }
  }
};

/// Ordered pixel run of one scribble stroke.
struct ScribbleChain {
  int label = 0;
  std::vector<std::pair<int, int>> pixels;  // (x, y) along the stroke
};

inline constexpr int kUnlabeled = -1;

/// Partial ground truth: per pixel either kUnlabeled or a label in [0,K).
/// Chains, when present, carry the stroke ordering the raster loses.
struct ScribbleMask {
  int width = 0;
  int height = 0;
  int num_labels = 0;
  std::vector<int> entries;
  std::vector<ScribbleChain> chains;

  ScribbleMask() = default;
  ScribbleMask(int w, int h, int k, std::vector<int> e,
               std::vector<ScribbleChain> c = {})
      : width(w), height(h), num_labels(k), entries(std::move(e)),
        chains(std::move(c)) {
    validate();
  }

  static ScribbleMask empty(int w, int h, int k) {
    return ScribbleMask(w, h, k,
                        std::vector<int>(static_cast<std::size_t>(w) * h, kUnlabeled));
  }

  int num_pixels() const { return width * height; }
  bool has_chains() const { return !chains.empty(); }
  bool is_labeled(int p) const { return entries[p] != kUnlabeled; }
  int label_at(int p) const { return entries[p]; }

  int num_labeled() const {
    int n = 0;
    for (int e : entries) n += (e != kUnlabeled);
    return n;
  }

  void paint_chain(const ScribbleChain& chain) {
    for (auto [x, y] : chain.pixels) entries[static_cast<std::size_t>(y) * width + x] = chain.label;
    chains.push_back(chain);
  }

  void validate() const {
    if (width <= 0 || height <= 0 || num_labels <= 0)
      throw std::invalid_argument("ScribbleMask: non-positive dimensions");
    if (entries.size() != static_cast<std::size_t>(width) * height)
      throw std::invalid_argument("ScribbleMask: entry count mismatch");
    for (int e : entries)
      if (e != kUnlabeled && (e < 0 || e >= num_labels))
        throw std::invalid_argument("ScribbleMask: label out of range");
    for (const auto& ch : chains) {
      if (ch.label < 0 || ch.label >= num_labels)
        throw std::invalid_argument("ScribbleMask: chain label out of range");
      if (ch.pixels.empty())
        throw std::invalid_argument("ScribbleMask: empty chain");
      for (auto [x, y] : ch.pixels)
        if (x < 0 || x >= width || y < 0 || y >= height)
          throw std::invalid_argument("ScribbleMask: chain pixel outside raster");
    }
  }
};

/// Undirected weighted edge between pixel indices p < q.
struct Edge {
  int p = 0;
  int q = 0;
  double w = 0.0;
};

struct NeighborhoodSpec {
  Connectivity connectivity = Connectivity::grid4;
  int spatial_radius = 0;  // dense only
};

/// Explicit neighbor structure shared by all energies and solvers.
struct PairwiseGraph {
  int num_pixels = 0;
  std::vector<Edge> edges;
  NeighborhoodSpec neighborhood;

  PairwiseGraph() = default;
  PairwiseGraph(int n, std::vector<Edge> e, NeighborhoodSpec spec = {})
      : num_pixels(n), edges(std::move(e)), neighborhood(spec) {
    validate();
  }

  double total_weight() const {
    double s = 0.0;
    for (const Edge& e : edges) s += e.w;
    return s;
  }

  void validate() const {
    if (num_pixels <= 0)
      throw std::invalid_argument("PairwiseGraph: non-positive pixel count");
    std::vector<std::uint64_t> keys;
    keys.reserve(edges.size());
    for (const Edge& e : edges) {
      if (e.p < 0 || e.p >= num_pixels || e.q < 0 || e.q >= num_pixels)
        throw std::invalid_argument("PairwiseGraph: endpoint out of range");
      if (e.p == e.q)
        throw std::invalid_argument("PairwiseGraph: self-edge");
      if (!std::isfinite(e.w) || e.w < 0.0)
        throw std::invalid_argument("PairwiseGraph: weight must be finite and >= 0");
      const std::uint64_t a = static_cast<std::uint64_t>(std::min(e.p, e.q));
      const std::uint64_t b = static_cast<std::uint64_t>(std::max(e.p, e.q));
      keys.push_back((a << 32) | b);
    }
    std::sort(keys.begin(), keys.end());
    if (std::adjacent_find(keys.begin(), keys.end()) != keys.end())
      throw std::invalid_argument("PairwiseGraph: duplicate unordered pair");
  }
};

/// CSR view of a PairwiseGraph, both directions materialized.
struct Adjacency {
  std::vector<int> offset;                    // num_pixels + 1
  std::vector<std::pair<int, double>> nbrs;   // (neighbor, weight)

  std::span<const std::pair<int, double>> of(int p) const {
    return {nbrs.data() + offset[p],
            static_cast<std::size_t>(offset[p + 1] - offset[p])};
  }
};

inline Adjacency build_adjacency(const PairwiseGraph& g) {
  Adjacency adj;
  adj.offset.assign(g.num_pixels + 1, 0);
  for (const Edge& e : g.edges) {
    ++adj.offset[e.p + 1];
    ++adj.offset[e.q + 1];
  }
  for (int i = 0; i < g.num_pixels; ++i) adj.offset[i + 1] += adj.offset[i];
  adj.nbrs.resize(g.edges.size() * 2);
  std::vector<int> cursor(adj.offset.begin(), adj.offset.end() - 1);
  for (const Edge& e : g.edges) {
    adj.nbrs[cursor[e.p]++] = {e.q, e.w};
    adj.nbrs[cursor[e.q]++] = {e.p, e.w};
  }
  return adj;
}

/// Probability vector with a single unit entry at `label`.
inline std::vector<double> one_hot(int label, int k) {
  if (k <= 0) throw std::invalid_argument("one_hot: k must be positive");
  if (label < 0 || label >= k)
    throw std::invalid_argument("one_hot: label out of range");
  std::vector<double> v(k, 0.0);
  v[label] = 1.0;
  return v;
}

/// Max-subtracted softmax over one score row.
inline void softmax_row(const double* scores, double* out, int k) {
  double m = scores[0];
  for (int i = 1; i < k; ++i) m = std::max(m, scores[i]);
  if (!std::isfinite(m)) throw std::domain_error("softmax: non-finite score");
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    out[i] = std::exp(scores[i] - m);
    sum += out[i];
  }
  for (int i = 0; i < k; ++i) out[i] /= sum;
}

inline std::vector<double> softmax(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("softmax: empty input");
  for (double s : scores)
    if (!std::isfinite(s)) throw std::domain_error("softmax: non-finite score");
  std::vector<double> out(scores.size());
  softmax_row(scores.data(), out.data(), static_cast<int>(scores.size()));
  return out;
}

/// Keep the centered ceil(keep_ratio*n) pixels of every chain (at least one;
/// ratio 0 degenerates each stroke to a click). The returned mask is the
/// rasterization of the shortened chains.
inline ScribbleMask shorten_scribbles(const ScribbleMask& mask, double keep_ratio) {
  if (!mask.has_chains())
    throw unsupported_input("shorten_scribbles: mask has no chains");
  if (!(keep_ratio >= 0.0 && keep_ratio <= 1.0))
    throw std::invalid_argument("shorten_scribbles: keep_ratio outside [0,1]");

  ScribbleMask out = ScribbleMask::empty(mask.width, mask.height, mask.num_labels);
  for (const ScribbleChain& ch : mask.chains) {
    const int n = static_cast<int>(ch.pixels.size());
    const int keep = std::max(1, static_cast<int>(std::ceil(keep_ratio * n)));
    const int start = (n - keep + 1) / 2;  // round-half-up centering
    ScribbleChain cut;
    cut.label = ch.label;
    cut.pixels.assign(ch.pixels.begin() + start, ch.pixels.begin() + start + keep);
    out.paint_chain(cut);
  }
  return out;
}

}  // namespace gridcrf
