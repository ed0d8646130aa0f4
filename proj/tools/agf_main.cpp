#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "agf/csv.hpp"
#include "agf/scenario.hpp"

namespace {

void add_run_flags(CLI::App* cmd, agf::RunOptions& opts, std::string& out_dir,
                   long long& seed, bool& has_seed) {
  cmd->add_option("--out", out_dir, "output directory (default: ./out_<name>)");
  cmd->add_option("--threads", opts.threads, "worker threads for independent sub-runs")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--paper-scale", opts.paper_scale,
                "paper-scale resolution and realization counts (hours of runtime)");
  cmd->add_flag("--override-dt", opts.override_dt,
                "keep the configured dt even when it exceeds the stable step");
  cmd->add_option("--seed", seed, "master RNG seed")->each([&has_seed](const std::string&) {
    has_seed = true;
  });
  cmd->add_flag("--quiet", opts.quiet, "suppress progress output");
}

int run_with(agf::Scenario scenario, const agf::RunOptions& opts) {
  const auto dir = agf::run_scenario(std::move(scenario), opts);
  std::cout << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear Fokker-Planck laboratory: finite-volume dynamics, gradient-flow "
               "equilibria, entropy diagnostics and hard-sphere particle validation"};
  app.require_subcommand(1);

  std::string config_path, preset_name, out_dir;
  long long seed = 0;
  bool has_seed = false;
  agf::RunOptions opts;

  auto* run = app.add_subcommand("run", "run a scenario from a configuration file");
  run->add_option("config", config_path, "key=value configuration file")->required();
  add_run_flags(run, opts, out_dir, seed, has_seed);

  auto* preset = app.add_subcommand("preset", "run a built-in scenario");
  preset->add_option("name", preset_name, "figure1 | figure2 | figure3")->required();
  add_run_flags(preset, opts, out_dir, seed, has_seed);

  std::string cmp_a, cmp_b;
  double tol = 0.0;
  auto* compare = app.add_subcommand("compare", "compare two artifact directories");
  compare->add_option("a", cmp_a)->required();
  compare->add_option("b", cmp_b)->required();
  compare->add_option("--tol", tol, "max-abs tolerance per file")->required();

  int n_red = 100, n_blue = 500, dim = 2;
  double diam_red = 0.01, diam_blue = 0.015;
  auto* params = app.add_subcommand("params", "echo the derived interaction strengths");
  params->add_option("--n-red", n_red);
  params->add_option("--n-blue", n_blue);
  params->add_option("--diam-red", diam_red);
  params->add_option("--diam-blue", diam_blue);
  params->add_option("--dim", dim);

  CLI11_PARSE(app, argc, argv);

  try {
    if (!out_dir.empty()) opts.out_dir = out_dir;
    if (has_seed) opts.seed = static_cast<std::uint64_t>(seed);

    if (run->parsed()) {
      auto validated = agf::validate_config(config_path);
      for (const auto& note : validated.notices) std::cerr << "notice: " << note << "\n";
      return run_with(std::move(validated.scenario), opts);
    }
    if (preset->parsed()) return run_with(agf::preset_scenario(preset_name), opts);
    if (compare->parsed()) {
      const auto report = agf::compare_outputs(cmp_a, cmp_b, tol);
      for (const auto& p : report.problems) std::cout << "problem: " << p << "\n";
      for (const auto& f : report.files)
        std::cout << f.file << "  max_abs=" << agf::format_double(f.max_abs)
                  << "  l2=" << agf::format_double(f.l2) << "\n";
      std::cout << (report.ok ? "OK" : "DIFFER") << " (tol " << agf::format_double(tol) << ")\n";
      return report.problems.empty() ? (report.ok ? 0 : 1) : 2;
    }
    if (params->parsed()) {
      const auto p = agf::derive_params(n_red, n_blue, diam_red, diam_blue, dim);
      std::cout << "eps1 = " << agf::format_double(p.eps1) << "\n"
                << "eps2 = " << agf::format_double(p.eps2) << "\n"
                << "eps3 = " << agf::format_double(p.eps3) << "\n"
                << "volume_fraction = " << agf::format_double(agf::volume_fraction(p, 1.0))
                << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
