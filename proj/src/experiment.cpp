#include "cem/experiment.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cem/parallel.hpp"

#ifndef CEMGMS_VERSION
#define CEMGMS_VERSION "0.0.0"
#endif

namespace cem {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kPi = 3.14159265358979323846;

void reject_unknown(const json& obj, std::initializer_list<const char*> keys,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : keys)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw std::runtime_error("config: unknown key '" + it.key() + "' in " +
                               where);
  }
}

double number_or_decimal_string(const json& v, std::string& text,
                                const std::string& what) {
  if (v.is_string()) {
    text = v.get<std::string>();
  } else if (v.is_number()) {
    text = v.dump();
  } else {
    throw std::runtime_error("config: " + what +
                             " must be a number or a decimal string");
  }
  std::size_t used = 0;
  double parsed = std::stod(text, &used);
  if (used != text.size() || !(parsed > 0))
    throw std::runtime_error("config: bad value '" + text + "' for " + what);
  return parsed;
}

CoarseLevel parse_level(const json& j, const std::string& where) {
  reject_unknown(j, {"nx", "ny", "m"}, where);
  CoarseLevel lvl;
  lvl.ncx = j.at("nx").get<int>();
  lvl.ncy = j.at("ny").get<int>();
  lvl.layers = j.at("m").get<int>();
  return lvl;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& label) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(label + ": " + e.what());
  }
  reject_unknown(j,
                 {"grid", "oversampling", "field", "fractures", "flavor",
                  "basis_per_element", "basis_threshold", "dt", "t_end",
                  "scheme", "problem", "u0_file", "f_file", "output", "study",
                  "h_levels", "basis_counts", "layer_counts", "basis_cache"},
                 "top level");
  ExperimentConfig c;

  const json& g = j.at("grid");
  reject_unknown(g, {"nfx", "nfy", "nx", "ny"}, "grid");
  c.nfx = g.at("nfx").get<int>();
  c.nfy = g.at("nfy").get<int>();
  c.coarse.ncx = g.at("nx").get<int>();
  c.coarse.ncy = g.at("ny").get<int>();
  c.coarse.layers = j.at("oversampling").get<int>();

  const json& f = j.at("field");
  reject_unknown(f, {"type", "path", "seed", "contrast", "channels", "inclusions"},
                 "field");
  std::string ftype = f.at("type").get<std::string>();
  if (ftype == "file") {
    c.field.source = FieldConfig::Source::file;
    c.field.path = f.at("path").get<std::string>();
  } else if (ftype == "synthetic") {
    c.field.source = FieldConfig::Source::synthetic;
    c.field.seed = f.value("seed", 0ull);
    c.field.contrast = f.value("contrast", 1.0);
    c.field.channels = f.value("channels", 0);
    c.field.inclusions = f.value("inclusions", 0);
  } else {
    throw std::runtime_error("config: field.type must be 'file' or 'synthetic'");
  }

  c.fracture_file = j.value("fractures", std::string());

  std::string flavor = j.value("flavor", std::string("constrained"));
  if (flavor == "constrained")
    c.flavor = Flavor::constrained;
  else if (flavor == "relaxed")
    c.flavor = Flavor::relaxed;
  else
    throw std::runtime_error("config: flavor must be constrained or relaxed");

  if (j.contains("basis_threshold")) {
    if (j.contains("basis_per_element"))
      throw std::runtime_error(
          "config: give basis_per_element or basis_threshold, not both");
    const json& bt = j.at("basis_threshold");
    reject_unknown(bt, {"tol", "max"}, "basis_threshold");
    c.basis_threshold = bt.at("tol").get<double>();
    c.basis_max = bt.at("max").get<int>();
    c.basis_per_element = 0;
  } else {
    c.basis_per_element = j.at("basis_per_element").get<int>();
    if (c.basis_per_element < 1)
      throw std::runtime_error("config: basis_per_element must be >= 1");
  }

  c.dt = number_or_decimal_string(j.at("dt"), c.dt_text, "dt");
  c.t_end = number_or_decimal_string(j.at("t_end"), c.t_end_text, "t_end");
  double steps = c.t_end / c.dt;
  c.n_steps = static_cast<int>(std::llround(steps));
  if (c.n_steps < 1 ||
      std::abs(c.n_steps * c.dt - c.t_end) > 1e-9 * std::max(1.0, c.t_end))
    throw std::runtime_error("config: t_end = " + c.t_end_text +
                             " is not an integral number of dt = " + c.dt_text +
                             " steps");

  c.scheme = scheme_from_string(j.value("scheme", std::string("backward")));
  c.problem = j.value("problem", std::string("paper_sinsin"));
  if (c.problem != "paper_sinsin" && c.problem != "paper_posteriori" &&
      c.problem != "zero" && c.problem != "file")
    throw std::runtime_error("config: unknown problem '" + c.problem + "'");
  c.u0_file = j.value("u0_file", std::string());
  c.f_file = j.value("f_file", std::string());
  c.output_dir = j.value("output", std::string("out"));
  c.study = j.value("study", std::string("single"));
  static const char* studies[] = {"single",  "basis_sweep", "layer_sweep",
                                  "h_sweep", "fracture",    "estimator"};
  bool ok = false;
  for (const char* s : studies) ok = ok || c.study == s;
  if (!ok) throw std::runtime_error("config: unknown study '" + c.study + "'");

  if (j.contains("h_levels"))
    for (const auto& lvl : j.at("h_levels"))
      c.h_levels.push_back(parse_level(lvl, "h_levels"));
  if (j.contains("basis_counts"))
    c.basis_counts = j.at("basis_counts").get<std::vector<int>>();
  if (j.contains("layer_counts"))
    c.layer_counts = j.at("layer_counts").get<std::vector<int>>();
  c.basis_cache = j.value("basis_cache", std::string());
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string serialize_config(const ExperimentConfig& c) {
  json j;
  j["grid"] = {{"nfx", c.nfx}, {"nfy", c.nfy}, {"nx", c.coarse.ncx},
               {"ny", c.coarse.ncy}};
  j["oversampling"] = c.coarse.layers;
  if (c.field.source == FieldConfig::Source::file) {
    j["field"] = {{"type", "file"}, {"path", c.field.path}};
  } else {
    j["field"] = {{"type", "synthetic"},
                  {"seed", c.field.seed},
                  {"contrast", c.field.contrast},
                  {"channels", c.field.channels},
                  {"inclusions", c.field.inclusions}};
  }
  if (!c.fracture_file.empty()) j["fractures"] = c.fracture_file;
  j["flavor"] = to_string(c.flavor);
  if (c.basis_per_element > 0)
    j["basis_per_element"] = c.basis_per_element;
  else
    j["basis_threshold"] = {{"tol", c.basis_threshold}, {"max", c.basis_max}};
  j["dt"] = c.dt_text;
  j["t_end"] = c.t_end_text;
  j["scheme"] = c.scheme == Scheme::backward ? "backward" : "forward";
  j["problem"] = c.problem;
  if (!c.u0_file.empty()) j["u0_file"] = c.u0_file;
  if (!c.f_file.empty()) j["f_file"] = c.f_file;
  j["output"] = c.output_dir;
  j["study"] = c.study;
  if (!c.h_levels.empty()) {
    json rows = json::array();
    for (const auto& l : c.h_levels)
      rows.push_back({{"nx", l.ncx}, {"ny", l.ncy}, {"m", l.layers}});
    j["h_levels"] = rows;
  }
  if (!c.basis_counts.empty()) j["basis_counts"] = c.basis_counts;
  if (!c.layer_counts.empty()) j["layer_counts"] = c.layer_counts;
  if (!c.basis_cache.empty()) j["basis_cache"] = c.basis_cache;
  return j.dump(2) + "\n";
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  std::string text = serialize_config(config);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace {

struct ProblemFns {
  SpaceTimeFn f;
  std::function<double(double, double)> u0;
};

// Bilinear interpolation of a nodal file on the fine mesh (the `file`
// problem's source is constant in time).
struct NodalInterp {
  Grid grid;
  Vec values;
  double operator()(double x, double y) const {
    double fx = std::clamp(x / grid.hx(), 0.0, static_cast<double>(grid.nfx()));
    double fy = std::clamp(y / grid.hy(), 0.0, static_cast<double>(grid.nfy()));
    int i = std::min(static_cast<int>(fx), grid.nfx() - 1);
    int j = std::min(static_cast<int>(fy), grid.nfy() - 1);
    double sx = fx - i, sy = fy - j;
    double v00 = values[grid.node_id(i, j)], v10 = values[grid.node_id(i + 1, j)];
    double v01 = values[grid.node_id(i, j + 1)],
           v11 = values[grid.node_id(i + 1, j + 1)];
    return (1 - sx) * (1 - sy) * v00 + sx * (1 - sy) * v10 +
           (1 - sx) * sy * v01 + sx * sy * v11;
  }
};

ProblemFns make_problem(const ExperimentConfig& cfg, const Grid& grid) {
  ProblemFns p;
  if (cfg.problem == "paper_sinsin") {
    p.f = [](double x, double y, double t) {
      return 3 * kPi * kPi * std::exp(kPi * kPi * t) * std::sin(kPi * x) *
             std::sin(kPi * y);
    };
    p.u0 = [](double x, double y) {
      return std::sin(kPi * x) * std::sin(kPi * y);
    };
  } else if (cfg.problem == "paper_posteriori") {
    p.f = [](double x, double y, double t) {
      return t * t + (x + y) * (x + y);
    };
    p.u0 = [](double, double) { return 0.0; };
  } else if (cfg.problem == "zero") {
    p.f = [](double, double, double) { return 0.0; };
    p.u0 = [](double, double) { return 0.0; };
  } else {  // file
    if (!cfg.u0_file.empty()) {
      std::ifstream in(cfg.u0_file);
      if (!in) throw std::runtime_error("cannot open u0 file " + cfg.u0_file);
      Vec v = read_snapshot(in, grid, cfg.u0_file);
      NodalInterp interp{grid, std::move(v)};
      p.u0 = [interp](double x, double y) { return interp(x, y); };
    } else {
      p.u0 = [](double, double) { return 0.0; };
    }
    if (!cfg.f_file.empty()) {
      std::ifstream in(cfg.f_file);
      if (!in) throw std::runtime_error("cannot open source file " + cfg.f_file);
      Vec v = read_snapshot(in, grid, cfg.f_file);
      NodalInterp interp{grid, std::move(v)};
      p.f = [interp](double x, double y, double) { return interp(x, y); };
    } else {
      p.f = [](double, double, double) { return 0.0; };
    }
  }
  return p;
}

// Everything one (fine grid, coarse level) pair needs, built stage by stage;
// errors are re-thrown with the stage name attached.
struct Pipeline {
  Grid grid;
  PermeabilityField field;
  FractureSet fractures;
  FemMatrix A, M, S;
  std::uint64_t checksum = 0;
  AuxiliarySpace aux;
  MultiscaleSpace space;
  ProblemFns problem;
  Vec u0_fine;
};

template <class Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(name) + ": " + e.what());
  }
}

PermeabilityField make_field(const ExperimentConfig& cfg, const Grid& grid) {
  if (cfg.field.source == FieldConfig::Source::file)
    return load_permeability(cfg.field.path, grid);
  return synth_channel_field(grid, cfg.field.seed, cfg.field.contrast,
                             cfg.field.channels, cfg.field.inclusions);
}

ModeSchedule make_schedule(const ExperimentConfig& cfg) {
  if (cfg.basis_per_element > 0) return ModeSchedule::fixed(cfg.basis_per_element);
  return ModeSchedule::below(cfg.basis_threshold, cfg.basis_max);
}

Pipeline build_pipeline(const ExperimentConfig& cfg,
                        const PermeabilityField* shared_field) {
  Pipeline p;
  p.grid = stage("grid", [&] {
    return build_grid(cfg.nfx, cfg.nfy, cfg.coarse.ncx, cfg.coarse.ncy);
  });
  p.field = stage("media", [&] {
    return shared_field ? *shared_field : make_field(cfg, p.grid);
  });
  p.checksum = field_checksum(p.field);
  stage("assembly", [&] {
    p.A = assemble_stiffness(p.grid, p.field);
    p.M = assemble_mass(p.grid);
    if (!cfg.fracture_file.empty()) {
      p.fractures = load_fractures(cfg.fracture_file, p.grid);
      std::tie(p.A, p.M) = add_fracture_terms(p.A, p.M, p.fractures, p.grid);
    }
    PartitionOfUnity pou = partition_of_unity(p.grid);
    p.S = assemble_s_mass(p.grid, kappa_tilde(p.field, pou));
    return 0;
  });
  p.aux = stage("spectral", [&] {
    return build_aux_space(p.A, p.S, p.grid, make_schedule(cfg));
  });
  p.space = stage("basis", [&] {
    if (!cfg.basis_cache.empty() && fs::exists(cfg.basis_cache))
      return load_basis_cache(cfg.basis_cache, p.grid, cfg.flavor,
                              cfg.coarse.layers, p.checksum, p.A, p.M);
    MultiscaleSpace space = build_ms_space(p.A, p.S, p.aux, p.grid, cfg.flavor,
                                           cfg.coarse.layers, p.M);
    if (!cfg.basis_cache.empty())
      save_basis_cache(cfg.basis_cache, p.grid, space, p.checksum);
    return space;
  });
  p.problem = make_problem(cfg, p.grid);
  p.u0_fine = Vec::Zero(p.grid.node_count());
  for (int n = 0; n < p.grid.node_count(); ++n)
    p.u0_fine[n] = p.problem.u0(p.grid.node_x(n), p.grid.node_y(n));
  // the global space carries homogeneous Dirichlet data
  for (int n = 0; n < p.grid.node_count(); ++n)
    if (p.grid.node_on_domain_boundary(n)) p.u0_fine[n] = 0.0;
  return p;
}

struct MarchOutcome {
  Trajectory fine;     // full fine vectors
  Trajectory reduced;  // coefficient vectors
};

MarchOutcome march_both(const ExperimentConfig& cfg, const Pipeline& p) {
  MarchOutcome out;
  out.fine = stage("time_march(fine)", [&] {
    return fine_reference(p.A, p.M, p.problem.f, p.u0_fine, cfg.dt, cfg.n_steps,
                          cfg.scheme, p.grid);
  });
  out.reduced = stage("time_march(reduced)", [&] {
    LoadFn load = [&](int n) {
      return Vec(p.space.P.transpose() *
                 assemble_load(p.grid, p.problem.f, n * cfg.dt));
    };
    Vec c0 = project_initial(p.space, p.M.mat(), p.u0_fine);
    return cfg.scheme == Scheme::backward
               ? backward_euler(p.space.A_ms, p.space.M_ms, load, c0, cfg.dt,
                                cfg.n_steps)
               : forward_euler(p.space.A_ms, p.space.M_ms, load, c0, cfg.dt,
                               cfg.n_steps, true);
  });
  if (!out.fine.stability_ok || !out.reduced.stability_ok)
    throw std::runtime_error("time_march: backward Euler stability audit "
                             "failed (this should be impossible)");
  return out;
}

RunResult evaluate(const Pipeline& p, const MarchOutcome& m) {
  RunResult r;
  Vec ms_fine = p.space.prolong(m.reduced.final_state());
  auto [eps, eps_a] = stage("error_analysis", [&] {
    return error_norms(m.fine.final_state(), ms_fine, p.A.mat(), p.M.mat());
  });
  r.report.eps = eps;
  r.report.eps_a = eps_a;
  r.fine_l2_norm = std::sqrt(
      m.fine.final_state().dot(p.M.mat() * m.fine.final_state()));
  r.spectral_gap = p.aux.spectral_gap;
  r.n_ms = p.space.count();
  return r;
}

void write_manifest(const ExperimentConfig& cfg, const Pipeline& p) {
  fs::create_directories(cfg.output_dir);
  std::ofstream out(fs::path(cfg.output_dir) / "manifest.txt");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  out << "config_hash: " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(p.checksum));
  out << "field_checksum: " << buf << "\n";
  out << "version: " << CEMGMS_VERSION << "\n";
  out << "eigen: " << EIGEN_WORLD_VERSION << "." << EIGEN_MAJOR_VERSION << "."
      << EIGEN_MINOR_VERSION << "\n";
}

void write_report(const ExperimentConfig& cfg, const ErrorReport& report) {
  fs::create_directories(cfg.output_dir);
  std::ofstream out(fs::path(cfg.output_dir) / "report.txt");
  report.write(out);
}

void write_solution_snapshots(const ExperimentConfig& cfg, const Pipeline& p,
                              const MarchOutcome& m, const std::string& suffix) {
  fs::create_directories(cfg.output_dir);
  {
    std::ofstream out(fs::path(cfg.output_dir) /
                      ("solution_fine" + suffix + ".txt"));
    write_snapshot(out, p.grid, m.fine.final_state(), cfg.t_end);
  }
  {
    std::ofstream out(fs::path(cfg.output_dir) /
                      ("solution_ms" + suffix + ".txt"));
    write_snapshot(out, p.grid, p.space.prolong(m.reduced.final_state()),
                   cfg.t_end);
  }
}

std::string format_sci(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}
std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// One sweep row = run_single with the coarse level (and L) overridden.
ExperimentConfig row_config(const ExperimentConfig& base, CoarseLevel lvl,
                            int basis_count) {
  ExperimentConfig cfg = base;
  cfg.coarse = lvl;
  if (basis_count > 0) {
    cfg.basis_per_element = basis_count;
    cfg.basis_threshold = -1;
  }
  cfg.basis_cache.clear();  // caches are keyed to a single level
  return cfg;
}

std::vector<RunResult> sweep_rows(const ExperimentConfig& cfg,
                                  const std::vector<ExperimentConfig>& rows,
                                  const std::vector<std::string>& row_tags,
                                  const std::string& header, bool include_eps,
                                  bool fracture_snapshots) {
  fs::create_directories(cfg.output_dir);
  std::ofstream csv(fs::path(cfg.output_dir) / "sweep.csv");
  std::ofstream errs;
  csv << header << "\n";
  std::vector<RunResult> results;

  // the fine field is level-independent: synthesize/load it once
  Grid fine_probe = build_grid(cfg.nfx, cfg.nfy, rows.front().coarse.ncx,
                               rows.front().coarse.ncy);
  PermeabilityField field = make_field(cfg, fine_probe);

  for (std::size_t r = 0; r < rows.size(); ++r) {
    try {
      Pipeline p = build_pipeline(rows[r], &field);
      MarchOutcome m = march_both(rows[r], p);
      RunResult res = evaluate(p, m);
      results.push_back(res);
      csv << row_tags[r];
      if (include_eps) csv << format_sci(res.report.eps) << ",";
      csv << format_sci(res.report.eps_a) << "\n";
      if (fracture_snapshots)
        write_solution_snapshots(cfg, p, m,
                                 "_nc" + std::to_string(rows[r].coarse.ncx));
      if (r == 0) write_manifest(cfg, p);
    } catch (const std::exception& e) {
      if (!errs.is_open())
        errs.open(fs::path(cfg.output_dir) / "sweep_errors.txt");
      errs << "row " << r << ": " << e.what() << "\n";
    }
  }
  return results;
}

}  // namespace

RunResult run_single(const ExperimentConfig& cfg) {
  Pipeline p = build_pipeline(cfg, nullptr);
  MarchOutcome m = march_both(cfg, p);
  RunResult r = evaluate(p, m);
  write_report(cfg, r.report);
  write_solution_snapshots(cfg, p, m, "");
  write_manifest(cfg, p);
  return r;
}

std::vector<RunResult> run_h_sweep(const ExperimentConfig& cfg) {
  if (cfg.h_levels.empty())
    throw std::runtime_error("h_sweep needs h_levels rows in the config");
  std::vector<ExperimentConfig> rows;
  std::vector<std::string> tags;
  for (const auto& lvl : cfg.h_levels) {
    rows.push_back(row_config(cfg, lvl, 0));
    tags.push_back(std::to_string(cfg.basis_per_element) + "," +
                   format_g(1.0 / lvl.ncx) + "," + std::to_string(lvl.layers) +
                   ",");
  }
  return sweep_rows(cfg, rows, tags, "l,h,m,eps,eps_a", true, false);
}

std::vector<RunResult> run_basis_sweep(const ExperimentConfig& cfg) {
  if (cfg.basis_counts.empty())
    throw std::runtime_error("basis_sweep needs basis_counts in the config");
  std::vector<ExperimentConfig> rows;
  std::vector<std::string> tags;
  for (int L : cfg.basis_counts) {
    rows.push_back(row_config(cfg, cfg.coarse, L));
    tags.push_back(std::to_string(L) + ",");
  }
  return sweep_rows(cfg, rows, tags, "l,eps,eps_a", true, false);
}

std::vector<RunResult> run_layer_sweep(const ExperimentConfig& cfg) {
  if (cfg.layer_counts.empty())
    throw std::runtime_error("layer_sweep needs layer_counts in the config");
  std::vector<ExperimentConfig> rows;
  std::vector<std::string> tags;
  for (int m : cfg.layer_counts) {
    CoarseLevel lvl = cfg.coarse;
    lvl.layers = m;
    rows.push_back(row_config(cfg, lvl, 0));
    tags.push_back(std::to_string(m) + ",");
  }
  return sweep_rows(cfg, rows, tags, "m,eps_a", false, false);
}

std::vector<RunResult> run_fracture(const ExperimentConfig& cfg) {
  if (cfg.h_levels.empty())
    throw std::runtime_error("fracture study needs h_levels rows in the config");
  std::vector<ExperimentConfig> rows;
  std::vector<std::string> tags;
  for (const auto& lvl : cfg.h_levels) {
    rows.push_back(row_config(cfg, lvl, 0));
    tags.push_back(std::to_string(cfg.basis_per_element) + "," +
                   format_g(1.0 / lvl.ncx) + "," + std::to_string(lvl.layers) +
                   ",");
  }
  return sweep_rows(cfg, rows, tags, "l,h,m,eps,eps_a", true, true);
}

RunResult run_estimator(const ExperimentConfig& cfg) {
  if (cfg.scheme != Scheme::backward)
    throw std::runtime_error("estimator runs require the backward scheme");
  Pipeline p = build_pipeline(cfg, nullptr);
  MarchOutcome m = march_both(cfg, p);
  RunResult r = evaluate(p, m);

  double eps_l = space_time_error(m.fine, m.reduced, p.space.P, p.A.mat(),
                                  p.M.mat(), cfg.dt);
  LoadFn fine_load = [&](int n) {
    return assemble_load(p.grid, p.problem.f, n * cfg.dt);
  };
  ResidualEstimator estimator(p.grid, p.A, p.M, fine_load, cfg.dt);
  Eigen::MatrixXd residual_sq = estimator.compute_all(m.reduced, p.space.P);

  Vec e0 = m.fine.at(0) - p.space.prolong(m.reduced.at(0));
  double e0_sq = e0.dot(p.M.mat() * e0);
  ErrorReport rep =
      posterior_report(residual_sq, e0_sq, p.aux.spectral_gap,
                       max_neighborhood_overlap(p.grid), eps_l);
  rep.eps = r.report.eps;
  rep.eps_a = r.report.eps_a;
  r.report = rep;

  write_report(cfg, r.report);
  {
    std::ofstream csv(fs::path(cfg.output_dir) / "residuals.csv");
    r.report.write_residual_csv(csv);
  }
  write_manifest(cfg, p);
  if (!r.report.reliable)
    throw std::runtime_error(
        "estimator: the reliability bound failed (eps_l = " +
        format_sci(r.report.eps_l) + " > bound = " + format_sci(r.report.bound) +
        ")");
  return r;
}

void write_field_file(const ExperimentConfig& cfg, const std::string& path) {
  Grid grid = build_grid(cfg.nfx, cfg.nfy, cfg.coarse.ncx, cfg.coarse.ncy);
  PermeabilityField field = make_field(cfg, grid);
  write_permeability(path, field);
}

}  // namespace cem
