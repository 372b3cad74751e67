#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "gridcrf/energy.hpp"
#include "gridcrf/model.hpp"
#include "gridcrf/solvers.hpp"
#include "gridcrf/types.hpp"

namespace gridcrf {

struct PceResult {
  double loss = 0.0;
  std::vector<double> score_grad;  // w.r.t. pre-softmax scores, num_pixels*K
};

/// Cross entropy summed over scribbled pixels only:
/// sum_{p in labeled} -log(max(S_p^{Y_p}, eps)). The gradient uses the fused
/// softmax form S_p - onehot(Y_p) on labeled pixels and zero elsewhere.
inline PceResult partial_cross_entropy(const SoftSegmentation& seg,
                                       const ScribbleMask& mask) {
  if (seg.width != mask.width || seg.height != mask.height)
    throw std::invalid_argument("partial_cross_entropy: size mismatch");
  if (seg.num_labels != mask.num_labels)
    throw std::invalid_argument("partial_cross_entropy: label count mismatch");

  const int n = seg.num_pixels();
  const int k = seg.num_labels;
  PceResult result;
  result.score_grad.assign(static_cast<std::size_t>(n) * k, 0.0);
  for (int p = 0; p < n; ++p) {
    if (!mask.is_labeled(p)) continue;
    const int y = mask.label_at(p);
    const double* sp = seg.row(p);
    result.loss += -std::log(std::max(sp[y], kProbClamp));
    double* g = result.score_grad.data() + static_cast<std::size_t>(p) * k;
    for (int i = 0; i < k; ++i) g[i] = sp[i] - (i == y ? 1.0 : 0.0);
  }
  return result;
}

enum class TrainMode { gd, adm };

inline const char* to_string(TrainMode m) {
  return m == TrainMode::gd ? "gd" : "adm";
}

inline TrainMode train_mode_from_string(const std::string& s) {
  if (s == "gd") return TrainMode::gd;
  if (s == "adm") return TrainMode::adm;
  throw std::invalid_argument("unknown train mode: " + s);
}

enum class LatentSolver { alpha_expansion, maxflow_binary, icm };

inline const char* to_string(LatentSolver s) {
  switch (s) {
    case LatentSolver::alpha_expansion: return "alpha_expansion";
    case LatentSolver::maxflow_binary: return "maxflow_binary";
    case LatentSolver::icm: return "icm";
  }
  return "?";
}

inline LatentSolver latent_solver_from_string(const std::string& s) {
  if (s == "alpha_expansion") return LatentSolver::alpha_expansion;
  if (s == "maxflow_binary") return LatentSolver::maxflow_binary;
  if (s == "icm") return LatentSolver::icm;
  throw std::invalid_argument("unknown latent solver: " + s);
}

struct TrainConfig {
  TrainMode mode = TrainMode::gd;
  double lambda = 1.0;
  double gamma = 1.0;  // latent coupling strength (splitting trainer only)
  SgdConfig sgd;
  LatentSolver solver = LatentSolver::alpha_expansion;
  int solver_sweeps = 5;
  Connectivity connectivity = Connectivity::grid4;
  int eval_cadence = 10;

  void validate() const {
    if (!(lambda >= 0.0)) throw std::invalid_argument("TrainConfig: lambda must be >= 0");
    if (mode == TrainMode::adm && !(gamma >= 0.0))
      throw std::invalid_argument("TrainConfig: gamma must be >= 0");
    if (solver_sweeps < 1)
      throw std::invalid_argument("TrainConfig: solver_sweeps must be >= 1");
    if (eval_cadence < 1)
      throw std::invalid_argument("TrainConfig: eval_cadence must be >= 1");
    sgd.validate();
  }
};

struct TraceRecord {
  int iter = 0;
  double pce = 0.0;
  double grid_crf_discrete = 0.0;
  double relaxed_crf = 0.0;
  double latent_energy = std::numeric_limits<double>::quiet_NaN();  // NaN = n/a
  double wall_ms = 0.0;
};

namespace detail {

// Shortest round-trip decimal; NaN renders as the empty CSV field.
inline std::string csv_double(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

struct TrainTrace {
  static constexpr const char* kCsvHeader =
      "iter,pce,grid_crf_discrete,relaxed_crf,latent_energy,wall_ms";

  std::vector<TraceRecord> records;

  void write_csv(std::ostream& out) const {
    out << kCsvHeader << '\n';
    for (const TraceRecord& r : records)
      out << r.iter << ',' << detail::csv_double(r.pce) << ','
          << detail::csv_double(r.grid_crf_discrete) << ','
          << detail::csv_double(r.relaxed_crf) << ','
          << detail::csv_double(r.latent_energy) << ','
          << detail::csv_double(r.wall_ms) << '\n';
  }
};

/// One training image: fixed features, partial labels, and the two pairwise
/// graphs — the training topology and the nearest-neighbor topology every
/// reported discrete loss is measured on. Regularizer strength is already
/// folded into both edge sets.
struct TrainSample {
  PixelFeatures features;
  ScribbleMask scribbles;
  PairwiseGraph graph;
  PairwiseGraph metric_graph;

  int num_pixels() const { return features.num_pixels(); }

  void validate() const {
    if (features.width != scribbles.width || features.height != scribbles.height)
      throw std::invalid_argument("TrainSample: feature/scribble size mismatch");
    if (graph.num_pixels != features.num_pixels() ||
        metric_graph.num_pixels != features.num_pixels())
      throw std::invalid_argument("TrainSample: graph size mismatch");
  }
};

/// Builds features and both graphs for one image. `train_params` selects the
/// training topology; the metric graph is always the nearest-neighbor one.
inline TrainSample make_train_sample(const GridImage& image, const ScribbleMask& mask,
                                     const EnergyParams& train_params,
                                     const EnergyParams& metric_params,
                                     const PixelFeatureConfig& feature_config = {}) {
  if (image.width != mask.width || image.height != mask.height)
    throw std::invalid_argument("make_train_sample: image/mask size mismatch");
  if (metric_params.connectivity == Connectivity::dense)
    throw std::invalid_argument("make_train_sample: metric graph must be grid4 or grid8");
  TrainSample sample;
  sample.features = make_pixel_features(image, feature_config);
  sample.scribbles = mask;
  sample.metric_graph = build_grid_weights(image, metric_params);
  sample.graph = train_params.connectivity == Connectivity::dense
                     ? build_dense_weights(image, train_params)
                     : build_grid_weights(image, train_params);
  sample.validate();
  return sample;
}

struct TrainResult {
  ModelParams params;
  TrainTrace trace;
  long long constraint_violations = 0;  // scribbled pixels a latent solve mislabeled
};

namespace detail {

struct DatasetLosses {
  double pce = 0.0;
  double grid_discrete = 0.0;
  double relaxed = 0.0;
};

// Full-dataset loss snapshot at the current parameters (logging only).
inline DatasetLosses dataset_losses(const ModelParams& params,
                                    const std::vector<TrainSample>& data) {
  DatasetLosses out;
  for (const TrainSample& sample : data) {
    const SoftSegmentation seg = forward(params, sample.features);
    out.pce += partial_cross_entropy(seg, sample.scribbles).loss;
    out.grid_discrete += potts_energy(seg.argmax(), sample.metric_graph);
    out.relaxed += relaxed_potts_energy(seg, sample.graph);
  }
  return out;
}

// Folds the softmax Jacobian into a gradient given w.r.t. probabilities:
// gz_k = S_k * (g_k - sum_j g_j S_j), accumulated into score_grad.
inline void add_through_softmax(const SoftSegmentation& seg,
                                const std::vector<double>& prob_grad,
                                std::vector<double>& score_grad) {
  const int n = seg.num_pixels();
  const int k = seg.num_labels;
  for (int p = 0; p < n; ++p) {
    const double* sp = seg.row(p);
    const double* g = prob_grad.data() + static_cast<std::size_t>(p) * k;
    double* out = score_grad.data() + static_cast<std::size_t>(p) * k;
    double dot = 0.0;
    for (int i = 0; i < k; ++i) dot += g[i] * sp[i];
    for (int i = 0; i < k; ++i) out[i] += sp[i] * (g[i] - dot);
  }
}

inline double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                   start).count();
}

// Observer invoked at every logged iteration with the current parameters;
// lets callers record their own per-scene statistics at trace cadence.
using LogObserver = std::function<void(int iter, const ModelParams&)>;

// Per-iteration gradient producer; returns the batch-summed parameter
// gradient for one sample and may update trainer state (latents).
// Shared driver for all three trainers: cycles minibatches, averages
// per-image gradients in image order, applies momentum steps, and logs at
// iteration 0, every eval_cadence-th iteration, and the final one.
template <class PerImageGrad, class LatentTotal>
TrainResult run_sgd_loop(const ModelParams& init, const std::vector<TrainSample>& data,
                         const TrainConfig& config, int num_iters,
                         PerImageGrad&& per_image_grad, LatentTotal&& latent_total,
                         const LogObserver& on_log = {}) {
  if (data.empty()) throw std::invalid_argument("training: empty dataset");
  for (const TrainSample& s : data) s.validate();
  config.validate();

  const auto start = std::chrono::steady_clock::now();
  const int num_images = static_cast<int>(data.size());
  const int batch = std::min(config.sgd.batch_size, num_images);

  TrainResult result;
  result.params = init;
  SgdState state;

  const auto log_record = [&](int iter) {
    const DatasetLosses losses = dataset_losses(result.params, data);
    TraceRecord rec;
    rec.iter = iter;
    rec.pce = losses.pce;
    rec.grid_crf_discrete = losses.grid_discrete;
    rec.relaxed_crf = losses.relaxed;
    rec.latent_energy = latent_total();
    rec.wall_ms = elapsed_ms(start);
    result.trace.records.push_back(rec);
    if (on_log) on_log(iter, result.params);
  };

  log_record(0);
  std::vector<double> grad_sum(init.theta.size());
  int cursor = 0;
  for (int iter = 1; iter <= num_iters; ++iter) {
    std::fill(grad_sum.begin(), grad_sum.end(), 0.0);
    for (int j = 0; j < batch; ++j) {
      const int idx = (cursor + j) % num_images;
      const std::vector<double> g = per_image_grad(result.params, idx, result);
      for (std::size_t i = 0; i < grad_sum.size(); ++i) grad_sum[i] += g[i];
    }
    cursor = (cursor + batch) % num_images;
    const double inv = 1.0 / batch;
    for (double& g : grad_sum) g *= inv;
    sgd_step(result.params, grad_sum, config.sgd, state);
    if (iter % config.eval_cadence == 0 || iter == num_iters) log_record(iter);
  }
  return result;
}

inline double no_latent() { return std::numeric_limits<double>::quiet_NaN(); }

// Phase-2 trainers step at the (possibly distinct) phase-2 learning rate.
inline TrainConfig with_phase2_lr(const TrainConfig& config) {
  TrainConfig c = config;
  c.sgd.learning_rate = config.sgd.effective_phase2_lr();
  return c;
}

}  // namespace detail

/// Pretraining on the partial cross entropy alone; the returned parameters
/// are the shared starting point for both phase-2 trainers.
inline TrainResult train_phase1(const ModelParams& init, const std::vector<TrainSample>& data,
                                const TrainConfig& config,
                                const detail::LogObserver& on_log = {}) {
  return detail::run_sgd_loop(
      init, data, config, config.sgd.phase1_iters,
      [&](const ModelParams& params, int idx, TrainResult&) {
        const TrainSample& sample = data[idx];
        const SoftSegmentation seg = forward(params, sample.features);
        return backward(params, sample.features,
                        partial_cross_entropy(seg, sample.scribbles).score_grad);
      },
      detail::no_latent, on_log);
}

/// Gradient descent on the relaxed regularized loss: pCE plus the quadratic
/// Potts relaxation of the training graph, differentiated through softmax.
inline TrainResult train_gd(const ModelParams& init, const std::vector<TrainSample>& data,
                            const TrainConfig& config,
                            const detail::LogObserver& on_log = {}) {
  const TrainConfig phase2 = detail::with_phase2_lr(config);
  return detail::run_sgd_loop(
      init, data, phase2, phase2.sgd.phase2_iters,
      [&](const ModelParams& params, int idx, TrainResult&) {
        const TrainSample& sample = data[idx];
        const SoftSegmentation seg = forward(params, sample.features);
        PceResult pce = partial_cross_entropy(seg, sample.scribbles);
        const std::vector<double> rg = relaxed_potts_gradient(seg, sample.graph);
        detail::add_through_softmax(seg, rg, pce.score_grad);
        return backward(params, sample.features, pce.score_grad);
      },
      detail::no_latent, on_log);
}

/// Alternating splitting trainer: every iteration re-solves the discrete
/// latent labeling X for each image in the minibatch (warm-started from the
/// previous X, first time from argmax S), then takes an SGD step on
/// pCE + gamma * cross-entropy(S, onehot(X)) over unlabeled pixels.
inline TrainResult train_adm(const ModelParams& init, const std::vector<TrainSample>& data,
                             const TrainConfig& config,
                             const detail::LogObserver& on_log = {}) {
  if (config.mode != TrainMode::adm)
    throw std::invalid_argument("train_adm: config.mode must be adm");
  const TrainConfig phase2 = detail::with_phase2_lr(config);

  struct LatentState {
    Labeling x;
    double energy = std::numeric_limits<double>::quiet_NaN();
    bool solved = false;
  };
  std::vector<LatentState> latents(data.size());

  const auto latent_total = [&latents]() {
    double total = 0.0;
    for (const LatentState& ls : latents) {
      if (!ls.solved) return std::numeric_limits<double>::quiet_NaN();
      total += ls.energy;
    }
    return total;
  };

  const auto per_image = [&](const ModelParams& params, int idx, TrainResult& result) {
    const TrainSample& sample = data[idx];
    const int k = sample.scribbles.num_labels;
    const SoftSegmentation seg = forward(params, sample.features);

    DiscreteProblem problem(adm_unary_from_prediction(seg, sample.scribbles, config.gamma),
                            sample.graph, k);
    LatentState& ls = latents[idx];
    const Labeling warm = ls.solved ? ls.x : seg.argmax();

    SolveReport report;
    switch (config.solver) {
      case LatentSolver::alpha_expansion:
        report = alpha_expansion(problem, warm, config.solver_sweeps);
        break;
      case LatentSolver::maxflow_binary:
        report = maxflow_binary(problem);
        break;
      case LatentSolver::icm:
        report = icm(problem, warm, config.solver_sweeps);
        break;
    }
    ls.x = Labeling(sample.scribbles.width, sample.scribbles.height, k,
                    std::move(report.labeling.labels));
    ls.energy = report.final_energy;
    ls.solved = true;

    PceResult pce = partial_cross_entropy(seg, sample.scribbles);
    const int n = sample.num_pixels();
    for (int p = 0; p < n; ++p) {
      if (sample.scribbles.is_labeled(p)) {
        if (ls.x[p] != sample.scribbles.label_at(p)) ++result.constraint_violations;
        continue;
      }
      const double* sp = seg.row(p);
      double* g = pce.score_grad.data() + static_cast<std::size_t>(p) * k;
      for (int i = 0; i < k; ++i)
        g[i] += config.gamma * (sp[i] - (i == ls.x[p] ? 1.0 : 0.0));
    }
    return backward(params, sample.features, pce.score_grad);
  };

  return detail::run_sgd_loop(init, data, phase2, phase2.sgd.phase2_iters, per_image,
                              latent_total, on_log);
}

}  // namespace gridcrf
