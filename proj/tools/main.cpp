// Experiment driver: multiscale parabolic solves on high-contrast media with
// config-driven sweeps, fracture networks and the residual error estimator.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "cem/experiment.hpp"
#include "cem/parallel.hpp"

namespace {

cem::ExperimentConfig load(const std::string& path, const std::string& out_dir) {
  cem::ExperimentConfig cfg = cem::load_config(path);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  return cfg;
}

void print_result(const cem::RunResult& r) {
  std::printf("n_ms=%d  lambda=%.4e  eps=%.6e  eps_a=%.6e\n", r.n_ms,
              r.spectral_gap, r.report.eps, r.report.eps_a);
  if (r.report.has_estimator)
    std::printf("eps_l=%.6e  eps_r=%.6e  ratio=%.4f  reliable=%s\n",
                r.report.eps_l, r.report.eps_r, r.report.ratio,
                r.report.reliable ? "yes" : "no");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CEM-GMsFEM experiment driver for parabolic problems"};
  app.require_subcommand(1);

  int threads = 1;
  std::string out_dir;
  app.add_option("--threads", threads, "Worker cap (results are identical)")
      ->capture_default_str();
  app.add_option("--out", out_dir, "Override the config's output directory");

  std::string config_path;
  auto* solve = app.add_subcommand("solve", "One end-to-end run");
  solve->add_option("config", config_path, "JSON config")->required();
  auto* sweep = app.add_subcommand("sweep", "Run the config's study rows");
  sweep->add_option("config", config_path, "JSON config")->required();
  auto* estimate =
      app.add_subcommand("estimate", "Run plus the residual estimator");
  estimate->add_option("config", config_path, "JSON config")->required();
  auto* make_field =
      app.add_subcommand("make-field", "Write the synthetic field to a file");
  make_field->add_option("config", config_path, "JSON config")->required();
  std::string field_out = "field.txt";
  make_field->add_option("--field-out", field_out, "Destination path")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  cem::set_thread_count(threads);

  try {
    if (solve->parsed()) {
      cem::ExperimentConfig cfg = load(config_path, out_dir);
      print_result(cem::run_single(cfg));
    } else if (sweep->parsed()) {
      cem::ExperimentConfig cfg = load(config_path, out_dir);
      std::vector<cem::RunResult> rows;
      if (cfg.study == "h_sweep")
        rows = cem::run_h_sweep(cfg);
      else if (cfg.study == "basis_sweep")
        rows = cem::run_basis_sweep(cfg);
      else if (cfg.study == "layer_sweep")
        rows = cem::run_layer_sweep(cfg);
      else if (cfg.study == "fracture")
        rows = cem::run_fracture(cfg);
      else
        throw std::runtime_error("config study '" + cfg.study +
                                 "' is not a sweep (use solve or estimate)");
      for (const auto& r : rows) print_result(r);
      std::printf("wrote %s/sweep.csv\n", cfg.output_dir.c_str());
    } else if (estimate->parsed()) {
      cem::ExperimentConfig cfg = load(config_path, out_dir);
      print_result(cem::run_estimator(cfg));
    } else if (make_field->parsed()) {
      cem::ExperimentConfig cfg = load(config_path, out_dir);
      cem::write_field_file(cfg, field_out);
      std::printf("wrote %s\n", field_out.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
