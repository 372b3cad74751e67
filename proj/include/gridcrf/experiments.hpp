#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gridcrf/energy.hpp"
#include "gridcrf/io.hpp"
#include "gridcrf/metrics.hpp"
#include "gridcrf/model.hpp"
#include "gridcrf/synthetic.hpp"
#include "gridcrf/training.hpp"
#include "gridcrf/types.hpp"

namespace gridcrf {

namespace detail {

inline void require_keys(const nlohmann::json& j,
                         std::initializer_list<const char*> allowed,
                         const std::string& where) {
  if (!j.is_object())
    throw std::invalid_argument("config: " + where + " must be an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) known = true;
    if (!known)
      throw std::invalid_argument("config: unknown key '" + item.key() + "' in " + where);
  }
}

}  // namespace detail

/// Everything a run needs, JSON-loadable with defaults; the resolved form is
/// echoed into the run directory.
struct ExperimentConfig {
  std::string out_dir = "runs/out";
  int threads = 1;

  // suite
  std::string suite_kind = "blobs";  // blobs | staircase
  int num_scenes = 20;
  int width = 64;
  int height = 64;
  int length = 96;  // staircase scenes are 1 x length
  int num_labels = 3;
  double noise = 0.06;
  double contrast = 0.8;
  std::uint64_t suite_seed = 20260814;

  // energy
  double lambda = 1.0;
  std::string connectivity = "grid4";  // training topology
  double sigma2 = 0.0;                 // <= 0: per-scene mean squared difference
  double delta = 3.0;
  int spatial_radius = 0;  // 0: 3 * delta

  // model
  int hidden_dim = 32;
  int num_fourier = 0;
  double fourier_scale = 3.0;

  SgdConfig sgd;

  // train
  double gamma = 0.2;
  std::string solver = "alpha_expansion";
  int solver_sweeps = 5;
  int eval_cadence = 10;

  void validate() const {
    if (out_dir.empty()) throw std::invalid_argument("config: out_dir must be set");
    if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
    if (suite_kind != "blobs" && suite_kind != "staircase")
      throw std::invalid_argument("config: suite kind must be blobs or staircase");
    if (num_scenes < 1) throw std::invalid_argument("config: num_scenes must be >= 1");
    if (num_labels < 2) throw std::invalid_argument("config: num_labels must be >= 2");
    if (!(lambda >= 0.0)) throw std::invalid_argument("config: lambda must be >= 0");
    if (!(gamma >= 0.0)) throw std::invalid_argument("config: gamma must be >= 0");
    if (hidden_dim < 0) throw std::invalid_argument("config: hidden_dim must be >= 0");
    connectivity_from_string(connectivity);
    latent_solver_from_string(solver);
    sgd.validate();
    if (solver_sweeps < 1 || eval_cadence < 1)
      throw std::invalid_argument("config: sweep/cadence counts must be >= 1");
  }

  TrainConfig train_config(TrainMode mode) const {
    TrainConfig tc;
    tc.mode = mode;
    tc.lambda = lambda;
    tc.gamma = gamma;
    tc.sgd = sgd;
    tc.solver = latent_solver_from_string(solver);
    tc.solver_sweeps = solver_sweeps;
    tc.connectivity = connectivity_from_string(connectivity);
    tc.eval_cadence = eval_cadence;
    return tc;
  }
};

// The serialized form documents the experiment, not where it landed: out_dir
// is accepted on input but never echoed, so a resolved config reruns anywhere
// and two runs of one setup differ only in their artifacts' location.
inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["threads"] = c.threads;
  j["suite"] = {{"kind", c.suite_kind},   {"num_scenes", c.num_scenes},
                {"width", c.width},       {"height", c.height},
                {"length", c.length},     {"num_labels", c.num_labels},
                {"noise", c.noise},       {"contrast", c.contrast},
                {"seed", c.suite_seed}};
  j["energy"] = {{"lambda", c.lambda},
                 {"connectivity", c.connectivity},
                 {"sigma2", c.sigma2},
                 {"delta", c.delta},
                 {"spatial_radius", c.spatial_radius}};
  j["model"] = {{"hidden_dim", c.hidden_dim},
                {"num_fourier", c.num_fourier},
                {"fourier_scale", c.fourier_scale}};
  j["sgd"] = {{"learning_rate", c.sgd.learning_rate},
              {"phase2_learning_rate", c.sgd.phase2_learning_rate},
              {"momentum", c.sgd.momentum},
              {"batch_size", c.sgd.batch_size},
              {"phase1_iters", c.sgd.phase1_iters},
              {"phase2_iters", c.sgd.phase2_iters},
              {"seed", c.sgd.seed}};
  j["train"] = {{"gamma", c.gamma},
                {"solver", c.solver},
                {"solver_sweeps", c.solver_sweeps},
                {"eval_cadence", c.eval_cadence}};
  return j;
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  detail::require_keys(j, {"out_dir", "threads", "suite", "energy", "model", "sgd", "train"},
                       "top level");
  ExperimentConfig c;
  c.out_dir = j.value("out_dir", c.out_dir);
  c.threads = j.value("threads", c.threads);
  if (j.contains("suite")) {
    const auto& s = j.at("suite");
    detail::require_keys(s, {"kind", "num_scenes", "width", "height", "length",
                             "num_labels", "noise", "contrast", "seed"}, "suite");
    c.suite_kind = s.value("kind", c.suite_kind);
    c.num_scenes = s.value("num_scenes", c.num_scenes);
    c.width = s.value("width", c.width);
    c.height = s.value("height", c.height);
    c.length = s.value("length", c.length);
    c.num_labels = s.value("num_labels", c.num_labels);
    c.noise = s.value("noise", c.noise);
    c.contrast = s.value("contrast", c.contrast);
    c.suite_seed = s.value("seed", c.suite_seed);
  }
  if (j.contains("energy")) {
    const auto& e = j.at("energy");
    detail::require_keys(e, {"lambda", "connectivity", "sigma2", "delta", "spatial_radius"},
                         "energy");
    c.lambda = e.value("lambda", c.lambda);
    c.connectivity = e.value("connectivity", c.connectivity);
    c.sigma2 = e.value("sigma2", c.sigma2);
    c.delta = e.value("delta", c.delta);
    c.spatial_radius = e.value("spatial_radius", c.spatial_radius);
  }
  if (j.contains("model")) {
    const auto& m = j.at("model");
    detail::require_keys(m, {"hidden_dim", "num_fourier", "fourier_scale"}, "model");
    c.hidden_dim = m.value("hidden_dim", c.hidden_dim);
    c.num_fourier = m.value("num_fourier", c.num_fourier);
    c.fourier_scale = m.value("fourier_scale", c.fourier_scale);
  }
  if (j.contains("sgd")) {
    const auto& s = j.at("sgd");
    detail::require_keys(s, {"learning_rate", "phase2_learning_rate", "momentum",
                             "batch_size", "phase1_iters", "phase2_iters", "seed"}, "sgd");
    c.sgd.learning_rate = s.value("learning_rate", c.sgd.learning_rate);
    c.sgd.phase2_learning_rate =
        s.value("phase2_learning_rate", c.sgd.phase2_learning_rate);
    c.sgd.momentum = s.value("momentum", c.sgd.momentum);
    c.sgd.batch_size = s.value("batch_size", c.sgd.batch_size);
    c.sgd.phase1_iters = s.value("phase1_iters", c.sgd.phase1_iters);
    c.sgd.phase2_iters = s.value("phase2_iters", c.sgd.phase2_iters);
    c.sgd.seed = s.value("seed", c.sgd.seed);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    detail::require_keys(t, {"gamma", "solver", "solver_sweeps", "eval_cadence"}, "train");
    c.gamma = t.value("gamma", c.gamma);
    c.solver = t.value("solver", c.solver);
    c.solver_sweeps = t.value("solver_sweeps", c.solver_sweeps);
    c.eval_cadence = t.value("eval_cadence", c.eval_cadence);
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  nlohmann::json j;
  in >> j;
  return experiment_config_from_json(j);
}

inline std::vector<SyntheticScene> generate_suite(const ExperimentConfig& c) {
  c.validate();
  if (c.suite_kind == "staircase")
    return gen_staircase_suite(c.num_scenes, c.length, c.noise, c.suite_seed);
  return gen_blob_suite(c.num_scenes, c.width, c.height, c.num_labels, c.noise,
                        c.contrast, c.suite_seed);
}

namespace detail {

inline std::string scene_dir_name(int index) {
  std::ostringstream os;
  os << "scene_" << std::setw(3) << std::setfill('0') << index;
  return os.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

inline void write_trace_file(const std::filesystem::path& path, const TrainTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  trace.write_csv(out);
}

// Runs fn(0..n-1); scene work is independent, so any interleaving yields the
// same files. Caps in-flight tasks at `threads`.
template <class Fn>
void for_each_index(int n, int threads, Fn&& fn) {
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::future<void>> inflight;
  for (int i = 0; i < n; ++i) {
    inflight.push_back(std::async(std::launch::async, fn, i));
    if (static_cast<int>(inflight.size()) >= threads) {
      for (auto& f : inflight) f.get();
      inflight.clear();
    }
  }
  for (auto& f : inflight) f.get();
}

// Training topology parameters for one scene; sigma2 <= 0 selects the mean
// squared neighbor difference of that topology.
inline EnergyParams resolve_energy(const ExperimentConfig& c, const GridImage& image,
                                   Connectivity conn) {
  EnergyParams p;
  p.lambda = c.lambda;
  p.delta = c.delta;
  p.spatial_radius = c.spatial_radius;
  p.connectivity = conn;
  if (c.sigma2 > 0.0) {
    p.sigma2 = c.sigma2;
  } else {
    NeighborhoodSpec spec{conn, conn == Connectivity::dense ? p.resolved_spatial_radius() : 0};
    p.sigma2 = estimate_sigma2(image, spec);
  }
  p.validate();
  return p;
}

}  // namespace detail

inline void write_scene_files(const std::filesystem::path& dir, const SyntheticScene& scene) {
  std::filesystem::create_directories(dir);
  write_image(dir / "image.pgm", scene.image);
  write_label_raster(dir / "gt.pgm", scene.gt);
  write_scribble_raster(dir / "scribbles.pgm", scene.scribbles);
  write_chains(dir / "chains.txt", scene.scribbles.chains);
}

/// `synth`: materialize the suite on disk, one directory per scene.
inline void run_synth(const ExperimentConfig& config) {
  const std::vector<SyntheticScene> scenes = generate_suite(config);
  const std::filesystem::path out(config.out_dir);
  std::filesystem::create_directories(out);
  detail::write_json_file(out / "resolved_config.json", to_json(config));
  for (int i = 0; i < static_cast<int>(scenes.size()); ++i)
    write_scene_files(out / detail::scene_dir_name(i), scenes[i]);
}

struct LandscapeSceneResult {
  int scene_index = 0;
  int dominant_t = 0;
  int grid_argmin_t = 0;
  int grid_local_minima = 0;
  int dense_local_minima = 0;
};

struct LandscapeSummary {
  std::vector<LandscapeSceneResult> scenes;
  int argmin_at_dominant = 0;    // scenes whose grid argmin hits the dominant step
  int dense_not_rougher = 0;     // scenes with dense minima count <= grid's
};

/// `landscape`: two-segment cost curves per staircase scene plus a summary of
/// argmin placement and local-minima counts.
inline LandscapeSummary run_landscape(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.suite_kind = "staircase";
  const std::vector<SyntheticScene> scenes = generate_suite(c);
  const std::filesystem::path out(c.out_dir);
  std::filesystem::create_directories(out);
  detail::write_json_file(out / "resolved_config.json", to_json(c));

  LandscapeSummary summary;
  summary.scenes.resize(scenes.size());
  std::ostringstream table;
  table << "scene,dominant_t,grid_argmin_t,grid_local_minima,dense_local_minima\n";
  for (int i = 0; i < static_cast<int>(scenes.size()); ++i) {
    const SyntheticScene& scene = scenes[i];
    const EnergyParams grid_params =
        detail::resolve_energy(c, scene.image, Connectivity::grid4);
    const EnergyParams dense_params =
        detail::resolve_energy(c, scene.image, Connectivity::dense);
    const LandscapeCurves curves = landscape_1d(scene, grid_params, dense_params);

    const std::filesystem::path dir = out / detail::scene_dir_name(i);
    write_scene_files(dir, scene);
    std::ostringstream csv;
    csv << "t,grid_cost,dense_cost\n";
    for (std::size_t r = 0; r < curves.t.size(); ++r)
      csv << curves.t[r] << ',' << detail::csv_double(curves.grid_cost[r]) << ','
          << detail::csv_double(curves.dense_cost[r]) << '\n';
    detail::write_text_file(dir / "curve.csv", csv.str());

    LandscapeSceneResult& r = summary.scenes[i];
    r.scene_index = i;
    r.dominant_t = scene.dominant_t;
    const auto argmin = std::min_element(curves.grid_cost.begin(), curves.grid_cost.end());
    r.grid_argmin_t = curves.t[argmin - curves.grid_cost.begin()];
    r.grid_local_minima = count_strict_local_minima(curves.grid_cost);
    r.dense_local_minima = count_strict_local_minima(curves.dense_cost);
    summary.argmin_at_dominant += (r.grid_argmin_t == r.dominant_t);
    summary.dense_not_rougher += (r.dense_local_minima <= r.grid_local_minima);
    table << i << ',' << r.dominant_t << ',' << r.grid_argmin_t << ','
          << r.grid_local_minima << ',' << r.dense_local_minima << '\n';
  }
  detail::write_text_file(out / "landscape_summary.csv", table.str());

  nlohmann::json j;
  j["argmin_at_dominant"] = summary.argmin_at_dominant;
  j["dense_not_rougher"] = summary.dense_not_rougher;
  j["num_scenes"] = static_cast<int>(scenes.size());
  detail::write_json_file(out / "landscape_summary.json", j);
  return summary;
}

struct SceneComparison {
  int scene_index = 0;
  double gd_final_grid = 0.0;
  double adm_final_grid = 0.0;
  // First logged iteration from which each trainer's per-scene discrete loss
  // stays at or below the GD final value; -1 when the curve ends above it.
  int gd_iters_to_target = -1;
  int adm_iters_to_target = -1;
  EvalReport gd_eval;
  EvalReport adm_eval;
};

struct ComparisonSummary {
  std::vector<SceneComparison> scenes;
  double mean_gd_final = 0.0;
  double mean_adm_final = 0.0;
  int adm_faster_scenes = 0;
  long long total_violations = 0;
};

namespace detail {

// First logged iteration from which `values` stays at or below `target`
// through the end of the curve; -1 when it ends above. Stochastic traces dip
// under a level transiently long before they settle there, so "reaches" is
// scored on the settled crossing, not the first touch.
inline int sustained_reach_iter(const std::vector<int>& iters,
                                const std::vector<double>& values, double target) {
  if (iters.size() != values.size())
    throw std::invalid_argument("sustained_reach_iter: iters/values size mismatch");
  int reached = -1;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] <= target) {
      if (reached < 0) reached = iters[i];
    } else {
      reached = -1;
    }
  }
  return reached;
}

// Per-scene discrete grid losses sampled at every logged iteration.
struct SceneCurves {
  std::vector<int> iters;
  std::vector<std::vector<double>> grid;  // [scene][log index]
};

inline LogObserver curve_observer(SceneCurves& curves,
                                  const std::vector<TrainSample>& data) {
  curves.iters.clear();
  curves.grid.assign(data.size(), {});
  return [&curves, &data](int iter, const ModelParams& params) {
    curves.iters.push_back(iter);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const SoftSegmentation seg = forward(params, data[i].features);
      curves.grid[i].push_back(potts_energy(seg.argmax(), data[i].metric_graph));
    }
  };
}

inline void write_curves_file(const std::filesystem::path& path,
                              const SceneCurves& curves) {
  std::ostringstream csv;
  csv << "iter";
  for (std::size_t i = 0; i < curves.grid.size(); ++i)
    csv << ",scene_" << std::setw(3) << std::setfill('0') << i;
  csv << '\n';
  for (std::size_t r = 0; r < curves.iters.size(); ++r) {
    csv << curves.iters[r];
    for (const std::vector<double>& scene : curves.grid)
      csv << ',' << csv_double(scene[r]);
    csv << '\n';
  }
  write_text_file(path, csv.str());
}

// One model for the whole suite: per-scene samples share the feature map and
// the training batch cycles through the scenes.
inline std::vector<TrainSample> make_suite_samples(const ExperimentConfig& config,
                                                   const std::vector<SyntheticScene>& scenes) {
  const Connectivity train_conn = connectivity_from_string(config.connectivity);
  PixelFeatureConfig fc;
  fc.num_fourier = config.num_fourier;
  fc.fourier_scale = config.fourier_scale;
  fc.seed = config.sgd.seed ^ 0xF0F0F0F0F0F0F0F0ull;

  std::vector<TrainSample> data;
  data.reserve(scenes.size());
  for (const SyntheticScene& scene : scenes) {
    const EnergyParams train_params = resolve_energy(config, scene.image, train_conn);
    const EnergyParams metric_params =
        resolve_energy(config, scene.image, Connectivity::grid4);
    data.push_back(make_train_sample(scene.image, scene.scribbles, train_params,
                                     metric_params, fc));
  }
  return data;
}

}  // namespace detail

/// `compare`: the head-to-head run. One shared model per trainer: phase 1
/// once over the whole suite, then GD and ADM from the same parameters on the
/// same data. Emits suite traces, per-scene loss curves, per-scene
/// evaluations, and a verdict table.
inline ComparisonSummary run_comparison(const ExperimentConfig& config,
                                        const std::vector<SyntheticScene>& scenes) {
  config.validate();
  const std::filesystem::path out(config.out_dir);
  std::filesystem::create_directories(out);
  detail::write_json_file(out / "resolved_config.json", to_json(config));

  const int n = static_cast<int>(scenes.size());
  detail::for_each_index(n, config.threads, [&](int i) {
    write_scene_files(out / detail::scene_dir_name(i), scenes[i]);
  });

  const std::vector<TrainSample> data = detail::make_suite_samples(config, scenes);
  const ModelShape shape{data[0].features.dim, config.hidden_dim, config.num_labels};
  const ModelParams init = init_model_params(shape, config.sgd.seed);

  const TrainConfig gd_config = config.train_config(TrainMode::gd);
  const TrainConfig adm_config = config.train_config(TrainMode::adm);

  const TrainResult phase1 = train_phase1(init, data, gd_config);
  save_checkpoint((out / "checkpoint_phase1.bin").string(), phase1.params);
  detail::write_trace_file(out / "trace_phase1.csv", phase1.trace);

  detail::SceneCurves gd_curves;
  detail::SceneCurves adm_curves;
  const TrainResult gd =
      train_gd(phase1.params, data, gd_config, detail::curve_observer(gd_curves, data));
  const TrainResult adm =
      train_adm(phase1.params, data, adm_config, detail::curve_observer(adm_curves, data));
  save_checkpoint((out / "checkpoint_gd.bin").string(), gd.params);
  save_checkpoint((out / "checkpoint_adm.bin").string(), adm.params);
  detail::write_trace_file(out / "trace_gd.csv", gd.trace);
  detail::write_trace_file(out / "trace_adm.csv", adm.trace);
  detail::write_curves_file(out / "per_scene_grid_gd.csv", gd_curves);
  detail::write_curves_file(out / "per_scene_grid_adm.csv", adm_curves);

  ComparisonSummary summary;
  std::ostringstream verdict;
  verdict << "scene,gd_final_grid,adm_final_grid,gd_iters_to_target,adm_iters_to_target,"
             "gd_miou,adm_miou\n";
  for (int i = 0; i < n; ++i) {
    SceneComparison cmp;
    cmp.scene_index = i;
    cmp.gd_final_grid = gd_curves.grid[i].back();
    cmp.adm_final_grid = adm_curves.grid[i].back();
    cmp.gd_iters_to_target =
        detail::sustained_reach_iter(gd_curves.iters, gd_curves.grid[i], cmp.gd_final_grid);
    cmp.adm_iters_to_target =
        detail::sustained_reach_iter(adm_curves.iters, adm_curves.grid[i], cmp.gd_final_grid);

    const Labeling gd_pred = forward(gd.params, data[i].features).argmax();
    const Labeling adm_pred = forward(adm.params, data[i].features).argmax();
    cmp.gd_eval = evaluate(gd_pred, scenes[i].gt);
    cmp.adm_eval = evaluate(adm_pred, scenes[i].gt);
    const std::filesystem::path dir = out / detail::scene_dir_name(i);
    detail::write_json_file(dir / "eval_gd.json", to_json(cmp.gd_eval));
    detail::write_json_file(dir / "eval_adm.json", to_json(cmp.adm_eval));
    write_label_raster(dir / "pred_gd.pgm", gd_pred);
    write_label_raster(dir / "pred_adm.pgm", adm_pred);

    summary.mean_gd_final += cmp.gd_final_grid;
    summary.mean_adm_final += cmp.adm_final_grid;
    if (cmp.adm_iters_to_target >= 0 &&
        (cmp.gd_iters_to_target < 0 || cmp.adm_iters_to_target < cmp.gd_iters_to_target))
      ++summary.adm_faster_scenes;
    verdict << i << ',' << detail::csv_double(cmp.gd_final_grid) << ','
            << detail::csv_double(cmp.adm_final_grid) << ',' << cmp.gd_iters_to_target
            << ',' << cmp.adm_iters_to_target << ','
            << detail::csv_double(cmp.gd_eval.miou) << ','
            << detail::csv_double(cmp.adm_eval.miou) << '\n';
    summary.scenes.push_back(std::move(cmp));
  }
  summary.mean_gd_final /= n;
  summary.mean_adm_final /= n;
  summary.total_violations = adm.constraint_violations;
  detail::write_text_file(out / "verdict.csv", verdict.str());

  nlohmann::json j;
  j["mean_gd_final_grid"] = summary.mean_gd_final;
  j["mean_adm_final_grid"] = summary.mean_adm_final;
  j["adm_faster_scenes"] = summary.adm_faster_scenes;
  j["num_scenes"] = n;
  j["total_latent_violations"] = summary.total_violations;
  detail::write_json_file(out / "verdict.json", j);
  return summary;
}

inline ComparisonSummary run_comparison(const ExperimentConfig& config) {
  return run_comparison(config, generate_suite(config));
}

/// `train`: one trainer, one shared model over the suite; emits only the
/// requested mode's artifacts.
inline void run_single_training(const ExperimentConfig& config, TrainMode mode) {
  config.validate();
  const std::vector<SyntheticScene> scenes = generate_suite(config);
  const std::filesystem::path out(config.out_dir);
  std::filesystem::create_directories(out);
  detail::write_json_file(out / "resolved_config.json", to_json(config));
  detail::for_each_index(static_cast<int>(scenes.size()), config.threads, [&](int i) {
    write_scene_files(out / detail::scene_dir_name(i), scenes[i]);
  });

  const std::vector<TrainSample> data = detail::make_suite_samples(config, scenes);
  const ModelShape shape{data[0].features.dim, config.hidden_dim, config.num_labels};
  const ModelParams init = init_model_params(shape, config.sgd.seed);

  const TrainResult phase1 = train_phase1(init, data, config.train_config(TrainMode::gd));
  detail::SceneCurves curves;
  const TrainResult result =
      mode == TrainMode::adm
          ? train_adm(phase1.params, data, config.train_config(TrainMode::adm),
                      detail::curve_observer(curves, data))
          : train_gd(phase1.params, data, config.train_config(TrainMode::gd),
                     detail::curve_observer(curves, data));

  const std::string tag = to_string(mode);
  save_checkpoint((out / "checkpoint_phase1.bin").string(), phase1.params);
  save_checkpoint((out / ("checkpoint_" + tag + ".bin")).string(), result.params);
  detail::write_trace_file(out / "trace_phase1.csv", phase1.trace);
  detail::write_trace_file(out / ("trace_" + tag + ".csv"), result.trace);
  detail::write_curves_file(out / ("per_scene_grid_" + tag + ".csv"), curves);
  for (int i = 0; i < static_cast<int>(scenes.size()); ++i) {
    const std::filesystem::path dir = out / detail::scene_dir_name(i);
    const Labeling pred = forward(result.params, data[i].features).argmax();
    detail::write_json_file(dir / ("eval_" + tag + ".json"),
                            to_json(evaluate(pred, scenes[i].gt)));
    write_label_raster(dir / ("pred_" + tag + ".pgm"), pred);
  }
}

struct SweepRow {
  double ratio = 0.0;
  double mean_gd_miou = 0.0;
  double mean_adm_miou = 0.0;
  double mean_gd_final_grid = 0.0;
  double mean_adm_final_grid = 0.0;
};

/// `shorten-sweep`: the comparison repeated with scribbles kept at each ratio
/// (1.0 = full strokes, 0.0 = single clicks).
inline std::vector<SweepRow> run_shorten_sweep(const ExperimentConfig& config,
                                               const std::vector<double>& ratios) {
  config.validate();
  if (ratios.empty()) throw std::invalid_argument("shorten sweep: no ratios");
  const std::vector<SyntheticScene> scenes = generate_suite(config);
  const std::filesystem::path out(config.out_dir);
  std::filesystem::create_directories(out);
  detail::write_json_file(out / "resolved_config.json", to_json(config));

  std::vector<SweepRow> rows;
  std::ostringstream csv;
  csv << "ratio,mean_gd_miou,mean_adm_miou,mean_gd_final_grid,mean_adm_final_grid\n";
  for (double ratio : ratios) {
    std::vector<SyntheticScene> cut = scenes;
    for (SyntheticScene& scene : cut) {
      scene.scribbles = shorten_scribbles(scene.scribbles, ratio);
      scene.validate();
    }
    std::ostringstream dir_name;
    dir_name << "ratio_" << std::setw(3) << std::setfill('0')
             << static_cast<int>(std::lround(ratio * 100));
    ExperimentConfig sub = config;
    sub.out_dir = (out / dir_name.str()).string();
    const ComparisonSummary summary = run_comparison(sub, cut);

    SweepRow row;
    row.ratio = ratio;
    for (const SceneComparison& cmp : summary.scenes) {
      row.mean_gd_miou += cmp.gd_eval.miou;
      row.mean_adm_miou += cmp.adm_eval.miou;
    }
    row.mean_gd_miou /= summary.scenes.size();
    row.mean_adm_miou /= summary.scenes.size();
    row.mean_gd_final_grid = summary.mean_gd_final;
    row.mean_adm_final_grid = summary.mean_adm_final;
    rows.push_back(row);
    csv << detail::csv_double(row.ratio) << ',' << detail::csv_double(row.mean_gd_miou)
        << ',' << detail::csv_double(row.mean_adm_miou) << ','
        << detail::csv_double(row.mean_gd_final_grid) << ','
        << detail::csv_double(row.mean_adm_final_grid) << '\n';
  }
  detail::write_text_file(out / "sweep.csv", csv.str());
  return rows;
}

}  // namespace gridcrf
