#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "gridcrf/types.hpp"

namespace gridcrf {

// Stand-in for an infinite unary cost. Large enough to dominate any feasible
// finite configuration at desk scale, small enough to keep flow arithmetic
// exact in doubles.
inline constexpr double kProhibitive = 1e9;

// Clamp inside -log(S_p^k); the divergence is undefined at exactly zero.
inline constexpr double kProbClamp = 1e-12;

// Floor for the contrast bandwidth estimate on constant images.
inline constexpr double kSigma2Floor = 1e-8;

struct EnergyParams {
  double lambda = 1.0;        // regularizer strength, >= 0
  double sigma2 = 1.0;        // contrast bandwidth (normalized units squared), > 0
  double delta = 8.0;         // spatial bandwidth in pixels, dense only
  int spatial_radius = 0;     // dense truncation radius; 0 = auto (3*delta)
  Connectivity connectivity = Connectivity::grid4;
  std::size_t max_edges = 20'000'000;

  int resolved_spatial_radius() const {
    return spatial_radius > 0 ? spatial_radius
                              : static_cast<int>(std::ceil(3.0 * delta));
  }

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
      throw std::invalid_argument("EnergyParams: lambda must be >= 0");
    if (!(sigma2 > 0.0))
      throw std::invalid_argument("EnergyParams: sigma2 must be > 0");
    if (connectivity == Connectivity::dense) {
      if (!(delta > 0.0))
        throw std::invalid_argument("EnergyParams: delta must be > 0 for dense");
      if (resolved_spatial_radius() < 1)
        throw std::invalid_argument("EnergyParams: spatial_radius must be >= 1");
    }
  }
};

/// Per-pixel K-vector of costs; entries are finite or exactly kProhibitive.
struct UnaryTable {
  int num_pixels = 0;
  int num_labels = 0;
  std::vector<double> costs;  // num_pixels * num_labels

  UnaryTable() = default;
  UnaryTable(int n, int k, std::vector<double> c)
      : num_pixels(n), num_labels(k), costs(std::move(c)) {
    validate();
  }
  UnaryTable(int n, int k) : num_pixels(n), num_labels(k),
      costs(static_cast<std::size_t>(n) * k, 0.0) {}

  double at(int p, int k) const {
    return costs[static_cast<std::size_t>(p) * num_labels + k];
  }
  double& at(int p, int k) {
    return costs[static_cast<std::size_t>(p) * num_labels + k];
  }

  double total_at(const Labeling& l) const {
    double s = 0.0;
    for (int p = 0; p < num_pixels; ++p) s += at(p, l[p]);
    return s;
  }

  void validate() const {
    if (num_pixels <= 0 || num_labels <= 0)
      throw std::invalid_argument("UnaryTable: non-positive dimensions");
    if (costs.size() != static_cast<std::size_t>(num_pixels) * num_labels)
      throw std::invalid_argument("UnaryTable: cost count mismatch");
    for (double c : costs)
      if (!std::isfinite(c))
        throw std::invalid_argument("UnaryTable: non-finite cost");
  }
};

namespace detail {

// Enumerates each unordered neighbor pair of the topology exactly once, in
// deterministic raster order. For dense, dist2 is the squared pixel distance.
template <class F>
void for_each_neighbor_pair(int width, int height, const NeighborhoodSpec& spec, F&& f) {
  const auto idx = [width](int x, int y) { return y * width + x; };
  switch (spec.connectivity) {
    case Connectivity::grid4:
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
          if (x + 1 < width) f(idx(x, y), idx(x + 1, y), 1.0);
          if (y + 1 < height) f(idx(x, y), idx(x, y + 1), 1.0);
        }
      break;
    case Connectivity::grid8:
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
          if (x + 1 < width) f(idx(x, y), idx(x + 1, y), 1.0);
          if (y + 1 < height) {
            f(idx(x, y), idx(x, y + 1), 1.0);
            if (x + 1 < width) f(idx(x, y), idx(x + 1, y + 1), 2.0);
            if (x > 0) f(idx(x, y), idx(x - 1, y + 1), 2.0);
          }
        }
      break;
    case Connectivity::dense: {
      const int r = spec.spatial_radius;
      const int r2 = r * r;
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
          for (int dy = 0; dy <= r; ++dy) {
            const int qy = y + dy;
            if (qy >= height) break;
            const int dx_lo = (dy == 0) ? 1 : -r;
            for (int dx = dx_lo; dx <= r; ++dx) {
              const int qx = x + dx;
              if (qx < 0 || qx >= width) continue;
              const int d2 = dx * dx + dy * dy;
              if (d2 > r2) continue;
              f(idx(x, y), idx(qx, qy), static_cast<double>(d2));
            }
          }
      break;
    }
  }
}

}  // namespace detail

/// Mean squared intensity difference over all neighbor pairs of the topology,
/// floored at kSigma2Floor for constant images.
inline double estimate_sigma2(const GridImage& image, const NeighborhoodSpec& spec) {
  double sum = 0.0;
  std::size_t count = 0;
  detail::for_each_neighbor_pair(image.width, image.height, spec,
                                 [&](int p, int q, double) {
                                   sum += image.squared_diff(p, q);
                                   ++count;
                                 });
  if (count == 0)
    throw std::invalid_argument("estimate_sigma2: topology has no neighbor pairs");
  const double s2 = sum / static_cast<double>(count);
  return s2 < kSigma2Floor ? kSigma2Floor : s2;
}

/// Contrast-weighted nearest-neighbor edges:
/// w_pq = lambda * exp(-||I_p - I_q||^2 / (2 sigma^2)).
inline PairwiseGraph build_grid_weights(const GridImage& image, const EnergyParams& params) {
  params.validate();
  if (params.connectivity == Connectivity::dense)
    throw std::invalid_argument("build_grid_weights: connectivity must be grid4 or grid8");
  std::vector<Edge> edges;
  detail::for_each_neighbor_pair(
      image.width, image.height, {params.connectivity, 0},
      [&](int p, int q, double) {
        const double w = params.lambda *
                         std::exp(-image.squared_diff(p, q) / (2.0 * params.sigma2));
        edges.push_back({p, q, w});
      });
  return PairwiseGraph(image.num_pixels(), std::move(edges),
                       {params.connectivity, 0});
}

/// Truncated large-neighborhood edges:
/// w_pq = lambda * exp(-||I_p - I_q||^2 / sigma^2) * exp(-||p - q||^2 / delta^2)
/// for all pairs with ||p - q|| <= spatial_radius. Note the sigma^2 divisor
/// (no factor 2) differs from the grid weights.
inline PairwiseGraph build_dense_weights(const GridImage& image, const EnergyParams& params) {
  params.validate();
  if (params.connectivity != Connectivity::dense)
    throw std::invalid_argument("build_dense_weights: connectivity must be dense");
  const int radius = params.resolved_spatial_radius();

  // Edge count is bounded by N * |disk(radius)| / 2; reject before allocating.
  const std::size_t disk = static_cast<std::size_t>((2 * radius + 1)) * (2 * radius + 1);
  const std::size_t bound = static_cast<std::size_t>(image.num_pixels()) * disk / 2;
  if (bound > params.max_edges)
    throw resource_error("build_dense_weights: edge bound " + std::to_string(bound) +
                         " exceeds cap " + std::to_string(params.max_edges));

  const double delta2 = params.delta * params.delta;
  std::vector<Edge> edges;
  detail::for_each_neighbor_pair(
      image.width, image.height, {Connectivity::dense, radius},
      [&](int p, int q, double dist2) {
        const double w = params.lambda *
                         std::exp(-image.squared_diff(p, q) / params.sigma2) *
                         std::exp(-dist2 / delta2);
        edges.push_back({p, q, w});
      });
  if (edges.size() > params.max_edges)
    throw resource_error("build_dense_weights: edge count exceeds cap");
  return PairwiseGraph(image.num_pixels(), std::move(edges),
                       {Connectivity::dense, radius});
}

/// Sum of weights over edges whose endpoint labels differ.
inline double potts_energy(const Labeling& labeling, const PairwiseGraph& graph) {
  if (labeling.num_pixels() != graph.num_pixels)
    throw std::invalid_argument("potts_energy: size mismatch");
  double e = 0.0;
  for (const Edge& edge : graph.edges)
    if (labeling[edge.p] != labeling[edge.q]) e += edge.w;
  return e;
}

/// Quadratic relaxation of the Potts energy, evaluated per edge in the
/// three-term form <1,S_p> + <1,S_q> - 2<S_p,S_q>.
inline double relaxed_potts_energy(const SoftSegmentation& seg, const PairwiseGraph& graph) {
  if (seg.num_pixels() != graph.num_pixels)
    throw std::invalid_argument("relaxed_potts_energy: size mismatch");
  const int k = seg.num_labels;
  double e = 0.0;
  for (const Edge& edge : graph.edges) {
    const double* sp = seg.row(edge.p);
    const double* sq = seg.row(edge.q);
    double sum_p = 0.0, sum_q = 0.0, dot = 0.0;
    for (int i = 0; i < k; ++i) {
      sum_p += sp[i];
      sum_q += sq[i];
      dot += sp[i] * sq[i];
    }
    e += edge.w * (sum_p + sum_q - 2.0 * dot);
  }
  return e;
}

/// d/dS_p of relaxed_potts_energy: sum over incident edges of w_pq*(1 - 2 S_q).
/// Returned row-major, num_pixels * K.
inline std::vector<double> relaxed_potts_gradient(const SoftSegmentation& seg,
                                                  const PairwiseGraph& graph) {
  if (seg.num_pixels() != graph.num_pixels)
    throw std::invalid_argument("relaxed_potts_gradient: size mismatch");
  const int k = seg.num_labels;
  std::vector<double> grad(static_cast<std::size_t>(seg.num_pixels()) * k, 0.0);
  for (const Edge& edge : graph.edges) {
    const double* sp = seg.row(edge.p);
    const double* sq = seg.row(edge.q);
    double* gp = grad.data() + static_cast<std::size_t>(edge.p) * k;
    double* gq = grad.data() + static_cast<std::size_t>(edge.q) * k;
    for (int i = 0; i < k; ++i) {
      gp[i] += edge.w * (1.0 - 2.0 * sq[i]);
      gq[i] += edge.w * (1.0 - 2.0 * sp[i]);
    }
  }
  return grad;
}

/// Unary table of the latent discrete subproblem: on unlabeled pixels the
/// divergence to the current prediction, -gamma*log(max(S_p^k, eps)); on
/// scribbled pixels the equality constraint encoded with prohibitive costs.
inline UnaryTable adm_unary_from_prediction(const SoftSegmentation& seg,
                                            const ScribbleMask& mask, double gamma) {
  if (seg.width != mask.width || seg.height != mask.height)
    throw std::invalid_argument("adm_unary_from_prediction: size mismatch");
  if (seg.num_labels != mask.num_labels)
    throw std::invalid_argument("adm_unary_from_prediction: label count mismatch");
  if (!(gamma >= 0.0))
    throw std::invalid_argument("adm_unary_from_prediction: gamma must be >= 0");

  const int k = seg.num_labels;
  UnaryTable table(seg.num_pixels(), k);
  double max_finite_row = 0.0;
  for (int p = 0; p < seg.num_pixels(); ++p) {
    if (mask.is_labeled(p)) {
      const int y = mask.label_at(p);
      for (int i = 0; i < k; ++i) table.at(p, i) = (i == y) ? 0.0 : kProhibitive;
    } else {
      const double* sp = seg.row(p);
      double row_max = 0.0;
      for (int i = 0; i < k; ++i) {
        const double c = -gamma * std::log(std::max(sp[i], kProbClamp));
        table.at(p, i) = c;
        row_max = std::max(row_max, c);
      }
      max_finite_row += row_max;
    }
  }
  // Any feasible finite configuration costs at most the per-pixel maxima;
  // the constraint constant must stay strictly above that.
  if (max_finite_row >= kProhibitive)
    throw std::logic_error("adm_unary_from_prediction: prohibitive constant too small");
  return table;
}

}  // namespace gridcrf
