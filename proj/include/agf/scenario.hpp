#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "agf/fvm.hpp"
#include "agf/grid.hpp"
#include "agf/model.hpp"
#include "agf/particles.hpp"
#include "agf/stationary.hpp"

namespace agf {

struct ParticleSpec {
  bool enabled = false;
  long realizations = 1000;
  long mh_realizations = 100;
  long mh_moves = 100000;
  int bins = 50;
  bool redraw_obstacles = true;
  bool blue_overlap_check = true;
};

struct StudySpec {
  bool enabled = false;
  std::vector<double> eps_values;  // default: one decade down from 1 in 6 log steps
};

struct Scenario {
  std::string name = "scenario";
  std::string b_kind = "convex";  // convex | nonconvex | expr
  std::string b_expr;

  int n_red = 100;
  int n_blue = 500;
  double diam_red = 0.01;
  double diam_blue = 0.015;
  int dim = 2;
  std::optional<std::array<double, 2>> direct_eps;  // {eps1, eps2} bypassing the micro inputs

  std::vector<std::string> modes = {"agf", "gf1", "gf2"};
  std::vector<double> output_times;

  FvmConfig solver;  // n_cells, dt, t_end, positivity_floor, override_dt
  std::string scheme = "explicit_rk";
  double tau = 1e-3;  // implicit_regularized step size

  ParticleSpec particles;
  StudySpec study;
  std::uint64_t seed = 1234;
};

struct ValidatedConfig {
  Scenario scenario;
  std::vector<std::string> notices;
};

// Plain-text key=value configuration with [scenario], [solver], [particles]
// sections; unknown keys are rejected with their line number.
ValidatedConfig validate_config(const std::filesystem::path& path);

// figure1 (convex porosity), figure2 (nonconvex porosity), figure3 (eps sweep).
Scenario preset_scenario(const std::string& name);

// Paper-scale switches: 1000 cells, 1e5 realizations, 2e4 Metropolis chains.
void apply_paper_scale(Scenario& s);

Field build_b_field(const Scenario& s, const Grid1D& grid, double* factor = nullptr);
ModelParams scenario_params(const Scenario& s);
std::uint64_t scenario_hash(const Scenario& s);
Mode mode_from_label(const std::string& label);

struct RunOptions {
  std::filesystem::path out_dir;  // empty: ./out_<name>
  int threads = 1;
  bool paper_scale = false;
  bool override_dt = false;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

// Runs every requested piece of the scenario and writes the artifact
// directory; returns its path.
std::filesystem::path run_scenario(Scenario s, const RunOptions& opts);

struct FileDiff {
  std::string file;
  double max_abs = 0.0;
  double l2 = 0.0;
};

struct CompareReport {
  std::vector<FileDiff> files;
  std::vector<std::string> problems;  // schema mismatches, missing files
  double tolerance = 0.0;
  bool ok = false;
};

CompareReport compare_outputs(const std::filesystem::path& dir_a,
                              const std::filesystem::path& dir_b, double tolerance);

}  // namespace agf
