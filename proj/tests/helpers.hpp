#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "gridcrf/energy.hpp"
#include "gridcrf/random.hpp"
#include "gridcrf/solvers.hpp"
#include "gridcrf/types.hpp"

namespace testutil {

// Unit-weight grid-4 topology helper.
inline gridcrf::PairwiseGraph grid4_graph(int width, int height,
                                          std::function<double(int, int)> weight) {
  std::vector<gridcrf::Edge> edges;
  const auto idx = [width](int x, int y) { return y * width + x; };
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      if (x + 1 < width)
        edges.push_back({idx(x, y), idx(x + 1, y), weight(idx(x, y), idx(x + 1, y))});
      if (y + 1 < height)
        edges.push_back({idx(x, y), idx(x, y + 1), weight(idx(x, y), idx(x, y + 1))});
    }
  return gridcrf::PairwiseGraph(width * height, std::move(edges));
}

// Random Potts instance on a width x height grid-4 with uniform unaries in
// [-2,2] and weights in [0, max_w].
inline gridcrf::DiscreteProblem random_problem(int width, int height, int k,
                                               gridcrf::Rng& rng, double max_w = 1.5) {
  const int n = width * height;
  std::vector<double> costs(static_cast<std::size_t>(n) * k);
  for (double& c : costs) c = rng.uniform(-2.0, 2.0);
  gridcrf::PairwiseGraph graph =
      grid4_graph(width, height, [&](int, int) { return rng.uniform(0.0, max_w); });
  return gridcrf::DiscreteProblem(gridcrf::UnaryTable(n, k, std::move(costs)),
                                  std::move(graph), k);
}

// Normalized random soft segmentation (bypasses no validation; rows sum to 1).
inline gridcrf::SoftSegmentation random_soft(int width, int height, int k,
                                             gridcrf::Rng& rng) {
  gridcrf::SoftSegmentation seg;
  seg.width = width;
  seg.height = height;
  seg.num_labels = k;
  seg.probs.resize(static_cast<std::size_t>(width) * height * k);
  for (int p = 0; p < width * height; ++p) {
    double* row = seg.probs.data() + static_cast<std::size_t>(p) * k;
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
      row[i] = rng.uniform(0.05, 1.0);
      sum += row[i];
    }
    for (int i = 0; i < k; ++i) row[i] /= sum;
  }
  return seg;
}

inline gridcrf::Labeling random_labeling(int width, int height, int k, gridcrf::Rng& rng) {
  std::vector<int> labels(static_cast<std::size_t>(width) * height);
  for (int& l : labels) l = rng.uniform_int(0, k - 1);
  return gridcrf::Labeling(width, height, k, std::move(labels));
}

inline gridcrf::GridImage random_image(int width, int height, gridcrf::Rng& rng) {
  std::vector<double> data(static_cast<std::size_t>(width) * height);
  for (double& v : data) v = rng.uniform(0.0, 1.0);
  return gridcrf::GridImage(width, height, 1, std::move(data));
}

// Central finite difference of a scalar function along coordinate i of x.
template <class F>
double central_difference(F&& f, std::vector<double>& x, std::size_t i, double step) {
  const double keep = x[i];
  x[i] = keep + step;
  const double hi = f();
  x[i] = keep - step;
  const double lo = f();
  x[i] = keep;
  return (hi - lo) / (2.0 * step);
}

// Relative error between vectors, normalized by the larger norm.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  if (scale == 0.0) return std::sqrt(diff);
  return std::sqrt(diff) / scale;
}

}  // namespace testutil
