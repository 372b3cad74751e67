#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "json.hpp"

#include "gridcrf/types.hpp"

namespace gridcrf {

namespace detail {

inline void check_metric_shapes(const Labeling& pred, const Labeling& gt) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw std::invalid_argument("metrics: prediction/ground-truth size mismatch");
  if (pred.num_labels != gt.num_labels)
    throw std::invalid_argument("metrics: label count mismatch");
}

}  // namespace detail

struct MiouResult {
  std::vector<double> per_class;  // NaN for classes absent from pred and gt
  double mean = 0.0;              // over classes present in gt
};

/// Intersection-over-union per class; the mean runs over classes present in
/// the ground truth (predicted-only classes get a per-class entry but do not
/// enter the mean).
inline MiouResult miou(const Labeling& pred, const Labeling& gt) {
  detail::check_metric_shapes(pred, gt);
  const int k = gt.num_labels;
  std::vector<long long> inter(k, 0), pred_count(k, 0), gt_count(k, 0);
  for (int p = 0; p < gt.num_pixels(); ++p) {
    ++pred_count[pred[p]];
    ++gt_count[gt[p]];
    if (pred[p] == gt[p]) ++inter[pred[p]];
  }
  MiouResult result;
  result.per_class.assign(k, std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < k; ++c) {
    const long long uni = pred_count[c] + gt_count[c] - inter[c];
    if (uni > 0) result.per_class[c] = static_cast<double>(inter[c]) / uni;
    if (gt_count[c] > 0) {
      sum += result.per_class[c];
      ++present;
    }
  }
  if (present == 0) throw std::logic_error("miou: no classes present in gt");
  result.mean = sum / present;
  return result;
}

inline double pixel_accuracy(const Labeling& pred, const Labeling& gt) {
  detail::check_metric_shapes(pred, gt);
  long long hits = 0;
  for (int p = 0; p < gt.num_pixels(); ++p) hits += (pred[p] == gt[p]);
  return static_cast<double>(hits) / gt.num_pixels();
}

/// Distance-to-boundary map: ground-truth boundary pixels (those with a
/// 4-neighbor of different label) get depth 1, everything else its 8-connected
/// BFS distance from them plus 1; 0 means unreachable (constant gt).
inline std::vector<int> boundary_depth(const Labeling& gt) {
  const int w = gt.width;
  const int h = gt.height;
  std::vector<int> depth(gt.num_pixels(), 0);
  std::vector<int> queue;
  queue.reserve(gt.num_pixels());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int p = y * w + x;
      const bool boundary = (x + 1 < w && gt[p] != gt[p + 1]) ||
                            (x > 0 && gt[p] != gt[p - 1]) ||
                            (y + 1 < h && gt[p] != gt[p + w]) ||
                            (y > 0 && gt[p] != gt[p - w]);
      if (boundary) {
        depth[p] = 1;
        queue.push_back(p);
      }
    }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int p = queue[head];
    const int x = p % w;
    const int y = p / w;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int nx = x + dx;
        const int ny = y + dy;
        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
        const int q = ny * w + nx;
        if (depth[q] == 0) {
          depth[q] = depth[p] + 1;
          queue.push_back(q);
        }
      }
  }
  return depth;
}

/// Accuracy restricted to pixels within `radius` of a ground-truth boundary;
/// nullopt when the ground truth is constant (empty band).
inline std::optional<double> trimap_accuracy(const Labeling& pred, const Labeling& gt,
                                             int radius) {
  detail::check_metric_shapes(pred, gt);
  if (radius < 1) throw std::invalid_argument("trimap_accuracy: radius must be >= 1");
  const std::vector<int> depth = boundary_depth(gt);
  long long band = 0, hits = 0;
  for (int p = 0; p < gt.num_pixels(); ++p) {
    if (depth[p] == 0 || depth[p] > radius) continue;
    ++band;
    hits += (pred[p] == gt[p]);
  }
  if (band == 0) return std::nullopt;
  return static_cast<double>(hits) / band;
}

struct EvalReport {
  std::vector<double> per_class_iou;
  double miou = 0.0;
  double pixel_accuracy = 0.0;
  std::optional<double> trimap_8;
  std::optional<double> trimap_16;
  long long band_8_pixels = 0;
  long long band_16_pixels = 0;
};

inline EvalReport evaluate(const Labeling& pred, const Labeling& gt) {
  EvalReport report;
  const MiouResult m = miou(pred, gt);
  report.per_class_iou = m.per_class;
  report.miou = m.mean;
  report.pixel_accuracy = pixel_accuracy(pred, gt);

  const std::vector<int> depth = boundary_depth(gt);
  long long band8 = 0, hit8 = 0, band16 = 0, hit16 = 0;
  for (int p = 0; p < gt.num_pixels(); ++p) {
    if (depth[p] == 0) continue;
    const bool hit = pred[p] == gt[p];
    if (depth[p] <= 8) {
      ++band8;
      hit8 += hit;
    }
    if (depth[p] <= 16) {
      ++band16;
      hit16 += hit;
    }
  }
  report.band_8_pixels = band8;
  report.band_16_pixels = band16;
  if (band8 > 0) report.trimap_8 = static_cast<double>(hit8) / band8;
  if (band16 > 0) report.trimap_16 = static_cast<double>(hit16) / band16;
  return report;
}

inline nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json j;
  nlohmann::json per_class = nlohmann::json::array();
  for (double v : report.per_class_iou) {
    if (std::isnan(v))
      per_class.push_back(nullptr);
    else
      per_class.push_back(v);
  }
  j["per_class_iou"] = std::move(per_class);
  j["miou"] = report.miou;
  j["pixel_accuracy"] = report.pixel_accuracy;
  j["trimap_8"] = report.trimap_8 ? nlohmann::json(*report.trimap_8) : nlohmann::json(nullptr);
  j["trimap_16"] = report.trimap_16 ? nlohmann::json(*report.trimap_16) : nlohmann::json(nullptr);
  j["band_8_pixels"] = report.band_8_pixels;
  j["band_16_pixels"] = report.band_16_pixels;
  return j;
}

}  // namespace gridcrf
