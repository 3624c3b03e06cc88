#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cem/basis.hpp"
#include "cem/error_analysis.hpp"
#include "cem/time_march.hpp"

namespace cem {

struct FieldConfig {
  enum class Source { file, synthetic };
  Source source = Source::synthetic;
  std::string path;           // file source
  std::uint64_t seed = 0;     // synthetic source
  double contrast = 1.0;
  int channels = 0;
  int inclusions = 0;
};

struct CoarseLevel {
  int ncx = 0, ncy = 0;
  int layers = 0;  // oversampling m for this level
};

struct ExperimentConfig {
  int nfx = 0, nfy = 0;
  CoarseLevel coarse;
  FieldConfig field;
  std::string fracture_file;  // empty = no fractures
  Flavor flavor = Flavor::constrained;
  int basis_per_element = 0;       // uniform L (> 0)
  double basis_threshold = -1;     // alternative: every eigenvalue below
  int basis_max = 0;               // cap for threshold mode
  std::string dt_text = "0.01";    // exact decimal strings keep n_steps integral
  std::string t_end_text = "1";
  double dt = 0.01;
  double t_end = 1.0;
  int n_steps = 100;
  Scheme scheme = Scheme::backward;
  std::string problem = "paper_sinsin";  // |paper_posteriori|zero|file
  std::string u0_file, f_file;           // for problem = file
  std::string output_dir = "out";
  std::string study = "single";  // |basis_sweep|layer_sweep|h_sweep|fracture|estimator
  std::vector<CoarseLevel> h_levels;  // h_sweep / fracture rows
  std::vector<int> basis_counts;      // basis_sweep
  std::vector<int> layer_counts;      // layer_sweep
  std::string basis_cache;            // optional column cache path
};

/// Strict JSON: unknown keys are errors, dt/t_end accept numbers or decimal
/// strings, n_steps must come out integral to 1e-9 relative.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text, const std::string& label);
/// Canonical serialization; parse(serialize(c)) == c.
std::string serialize_config(const ExperimentConfig& config);
std::uint64_t config_hash(const ExperimentConfig& config);

struct RunResult {
  ErrorReport report;
  double fine_l2_norm = 0;   // ||u_h(T)||_M
  double spectral_gap = 0;   // Lambda of the aux space used
  int n_ms = 0;              // reduced dimension
};

/// Full pipeline for one configuration; writes report.txt, final-time
/// snapshots of both solutions and the run manifest into output_dir.
RunResult run_single(const ExperimentConfig& config);

/// Rows over (H, m) with everything else fixed; writes sweep.csv
/// (columns l,h,m,eps,eps_a). Row failures are recorded in sweep_errors.txt
/// and the sweep continues.
std::vector<RunResult> run_h_sweep(const ExperimentConfig& config);
std::vector<RunResult> run_basis_sweep(const ExperimentConfig& config);
std::vector<RunResult> run_layer_sweep(const ExperimentConfig& config);
/// The h-sweep with fracture-augmented operators plus per-row snapshots.
std::vector<RunResult> run_fracture(const ExperimentConfig& config);
/// Pipeline plus residual estimator; writes report.txt and residuals.csv.
RunResult run_estimator(const ExperimentConfig& config);

/// `make-field`: write the configured synthetic field as a permeability file.
void write_field_file(const ExperimentConfig& config, const std::string& path);

}  // namespace cem
