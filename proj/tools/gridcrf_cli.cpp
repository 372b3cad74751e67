// Command-line front end: synthetic suites, landscape curves, training runs,
// trainer comparisons, scribble-shortening sweeps, and metric evaluation.

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gridcrf/experiments.hpp"

namespace {

struct Overrides {
  std::optional<std::string> out_dir, kind, connectivity, solver;
  std::optional<int> scenes, width, height, length, labels, threads;
  std::optional<int> phase1_iters, phase2_iters, hidden_dim, num_fourier;
  std::optional<int> eval_cadence, solver_sweeps, batch_size, spatial_radius;
  std::optional<double> noise, contrast, lambda, gamma, learning_rate, momentum;
  std::optional<double> phase2_learning_rate, delta, sigma2, fourier_scale;
  std::optional<std::uint64_t> suite_seed, sgd_seed;
};

void add_common_options(CLI::App* cmd, std::string& config_path, Overrides& o) {
  cmd->add_option("--config", config_path, "JSON config file");
  cmd->add_option("--out-dir", o.out_dir, "run directory for all outputs");
  cmd->add_option("--scenes", o.scenes, "number of scenes in the suite");
  cmd->add_option("--kind", o.kind, "suite kind: blobs or staircase");
  cmd->add_option("--width", o.width, "scene width (blobs)");
  cmd->add_option("--height", o.height, "scene height (blobs)");
  cmd->add_option("--length", o.length, "scene length (staircase)");
  cmd->add_option("--labels", o.labels, "number of classes");
  cmd->add_option("--noise", o.noise, "additive noise level");
  cmd->add_option("--contrast", o.contrast, "intensity separation of regions");
  cmd->add_option("--seed", o.suite_seed, "suite seed");
  cmd->add_option("--lambda", o.lambda, "pairwise strength");
  cmd->add_option("--connectivity", o.connectivity, "training topology: grid4|grid8|dense");
  cmd->add_option("--sigma2", o.sigma2, "contrast bandwidth; <=0 estimates per scene");
  cmd->add_option("--delta", o.delta, "spatial bandwidth of the dense topology");
  cmd->add_option("--spatial-radius", o.spatial_radius, "dense truncation radius; 0 = auto");
  cmd->add_option("--hidden-dim", o.hidden_dim, "classifier hidden width; 0 = linear");
  cmd->add_option("--num-fourier", o.num_fourier, "extra random cosine features");
  cmd->add_option("--fourier-scale", o.fourier_scale, "frequency scale of cosine features");
  cmd->add_option("--learning-rate", o.learning_rate, "SGD learning rate");
  cmd->add_option("--phase2-learning-rate", o.phase2_learning_rate,
                  "phase-2 learning rate; 0 inherits --learning-rate");
  cmd->add_option("--momentum", o.momentum, "SGD momentum");
  cmd->add_option("--batch-size", o.batch_size, "images per SGD step");
  cmd->add_option("--phase1-iters", o.phase1_iters, "pretraining iterations");
  cmd->add_option("--phase2-iters", o.phase2_iters, "main training iterations");
  cmd->add_option("--sgd-seed", o.sgd_seed, "parameter init seed");
  cmd->add_option("--gamma", o.gamma, "latent coupling strength");
  cmd->add_option("--solver", o.solver, "latent solver: alpha_expansion|maxflow_binary|icm");
  cmd->add_option("--solver-sweeps", o.solver_sweeps, "sweeps per latent solve");
  cmd->add_option("--eval-cadence", o.eval_cadence, "iterations between trace records");
  cmd->add_option("--threads", o.threads, "concurrent scenes");
}

gridcrf::ExperimentConfig resolve_config(const std::string& config_path, const Overrides& o) {
  gridcrf::ExperimentConfig c = config_path.empty()
                                    ? gridcrf::ExperimentConfig{}
                                    : gridcrf::load_experiment_config(config_path);
  if (o.out_dir) c.out_dir = *o.out_dir;
  if (o.kind) c.suite_kind = *o.kind;
  if (o.scenes) c.num_scenes = *o.scenes;
  if (o.width) c.width = *o.width;
  if (o.height) c.height = *o.height;
  if (o.length) c.length = *o.length;
  if (o.labels) c.num_labels = *o.labels;
  if (o.noise) c.noise = *o.noise;
  if (o.contrast) c.contrast = *o.contrast;
  if (o.suite_seed) c.suite_seed = *o.suite_seed;
  if (o.lambda) c.lambda = *o.lambda;
  if (o.connectivity) c.connectivity = *o.connectivity;
  if (o.sigma2) c.sigma2 = *o.sigma2;
  if (o.delta) c.delta = *o.delta;
  if (o.spatial_radius) c.spatial_radius = *o.spatial_radius;
  if (o.hidden_dim) c.hidden_dim = *o.hidden_dim;
  if (o.num_fourier) c.num_fourier = *o.num_fourier;
  if (o.fourier_scale) c.fourier_scale = *o.fourier_scale;
  if (o.learning_rate) c.sgd.learning_rate = *o.learning_rate;
  if (o.phase2_learning_rate) c.sgd.phase2_learning_rate = *o.phase2_learning_rate;
  if (o.momentum) c.sgd.momentum = *o.momentum;
  if (o.batch_size) c.sgd.batch_size = *o.batch_size;
  if (o.phase1_iters) c.sgd.phase1_iters = *o.phase1_iters;
  if (o.phase2_iters) c.sgd.phase2_iters = *o.phase2_iters;
  if (o.sgd_seed) c.sgd.seed = *o.sgd_seed;
  if (o.gamma) c.gamma = *o.gamma;
  if (o.solver) c.solver = *o.solver;
  if (o.solver_sweeps) c.solver_sweeps = *o.solver_sweeps;
  if (o.eval_cadence) c.eval_cadence = *o.eval_cadence;
  if (o.threads) c.threads = *o.threads;
  c.validate();
  return c;
}

std::vector<double> parse_ratios(const std::string& spec) {
  std::vector<double> ratios;
  std::istringstream in(spec);
  std::string token;
  while (std::getline(in, token, ',')) {
    if (token.empty()) continue;
    ratios.push_back(std::stod(token));
  }
  if (ratios.empty()) throw std::invalid_argument("--ratios: no values given");
  return ratios;
}

int run_eval(const std::string& pred_path, const std::string& gt_path,
             int labels, const std::string& out_path) {
  // Auto label count: smallest K covering both rasters.
  gridcrf::Labeling pred = gridcrf::read_label_raster(pred_path, 256);
  gridcrf::Labeling gt = gridcrf::read_label_raster(gt_path, 256);
  int k = labels;
  if (k <= 0) {
    int max_label = 1;
    for (int v : pred.labels) max_label = std::max(max_label, v);
    for (int v : gt.labels) max_label = std::max(max_label, v);
    k = max_label + 1;
  }
  pred = gridcrf::Labeling(pred.width, pred.height, k, std::move(pred.labels));
  gt = gridcrf::Labeling(gt.width, gt.height, k, std::move(gt.labels));

  const nlohmann::json j = gridcrf::to_json(gridcrf::evaluate(pred, gt));
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    gridcrf::detail::write_json_file(out_path, j);
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pairwise CRF segmentation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides o;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic scene suite");
  CLI::App* landscape =
      app.add_subcommand("landscape", "two-segment cost curves on staircase scenes");
  CLI::App* train = app.add_subcommand("train", "run one trainer on the suite");
  CLI::App* compare = app.add_subcommand("compare", "head-to-head GD vs ADM run");
  CLI::App* sweep =
      app.add_subcommand("shorten-sweep", "comparison across scribble lengths");
  CLI::App* eval = app.add_subcommand("eval", "score a prediction against ground truth");

  for (CLI::App* cmd : {synth, landscape, train, compare, sweep})
    add_common_options(cmd, config_path, o);

  std::string train_mode = "gd";
  train->add_option("--mode", train_mode, "gd or adm")->required();

  std::string ratios_spec = "1.0,0.5,0.3,0.0";
  sweep->add_option("--ratios", ratios_spec, "comma-separated keep ratios");

  std::string pred_path, gt_path, eval_out;
  int eval_labels = 0;
  eval->add_option("--pred", pred_path, "predicted label raster (PGM)")->required();
  eval->add_option("--gt", gt_path, "ground-truth label raster (PGM)")->required();
  eval->add_option("--labels", eval_labels, "class count; 0 = infer from rasters");
  eval->add_option("--out", eval_out, "write the report here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(eval)) return run_eval(pred_path, gt_path, eval_labels, eval_out);

    const gridcrf::ExperimentConfig config = resolve_config(config_path, o);
    if (app.got_subcommand(synth)) {
      gridcrf::run_synth(config);
      std::cout << "wrote " << config.num_scenes << " scenes to " << config.out_dir << "\n";
    } else if (app.got_subcommand(landscape)) {
      const gridcrf::LandscapeSummary summary = gridcrf::run_landscape(config);
      std::cout << "argmin_at_dominant=" << summary.argmin_at_dominant << "/"
                << summary.scenes.size() << "\n"
                << "dense_not_rougher=" << summary.dense_not_rougher << "/"
                << summary.scenes.size() << "\n";
    } else if (app.got_subcommand(train)) {
      gridcrf::run_single_training(config, gridcrf::train_mode_from_string(train_mode));
      std::cout << "trained " << train_mode << " on " << config.num_scenes
                << " scenes; outputs in " << config.out_dir << "\n";
    } else if (app.got_subcommand(compare)) {
      const gridcrf::ComparisonSummary summary = gridcrf::run_comparison(config);
      std::cout << "mean_gd_final_grid=" << summary.mean_gd_final << "\n"
                << "mean_adm_final_grid=" << summary.mean_adm_final << "\n"
                << "adm_faster_scenes=" << summary.adm_faster_scenes << "/"
                << summary.scenes.size() << "\n"
                << "latent_violations=" << summary.total_violations << "\n";
    } else if (app.got_subcommand(sweep)) {
      const auto rows = gridcrf::run_shorten_sweep(config, parse_ratios(ratios_spec));
      for (const gridcrf::SweepRow& row : rows)
        std::cout << "ratio=" << row.ratio << " gd_miou=" << row.mean_gd_miou
                  << " adm_miou=" << row.mean_adm_miou << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
