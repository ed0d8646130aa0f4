#include "agf/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "agf/csv.hpp"
#include "agf/diagnostics.hpp"
#include "agf/expr.hpp"
#include "json.hpp"

namespace agf {

namespace {

using nlohmann::json;

std::string format_time(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", t);
  return buf;
}

std::vector<double> default_output_times() {
  std::vector<double> t;
  for (int k = 0; k <= 8; ++k) t.push_back(0.025 * k);
  return t;
}

std::vector<double> default_study_eps() {
  std::vector<double> eps;
  for (int k = 0; k < 6; ++k) eps.push_back(std::pow(10.0, -k / 5.0));
  return eps;  // 1 down to 0.1
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string canonical_serialization(const Scenario& s) {
  std::ostringstream os;
  os << "name=" << s.name << ";b=" << s.b_kind << ";expr=" << s.b_expr << ";nr=" << s.n_red
     << ";nb=" << s.n_blue << ";dr=" << format_double(s.diam_red)
     << ";db=" << format_double(s.diam_blue) << ";dim=" << s.dim;
  if (s.direct_eps)
    os << ";eps1=" << format_double((*s.direct_eps)[0])
       << ";eps2=" << format_double((*s.direct_eps)[1]);
  os << ";modes=";
  for (const auto& m : s.modes) os << m << ",";
  os << ";times=";
  for (double t : s.output_times) os << format_double(t) << ",";
  os << ";n_cells=" << s.solver.n_cells << ";dt=" << format_double(s.solver.dt)
     << ";t_end=" << format_double(s.solver.t_end) << ";floor="
     << format_double(s.solver.positivity_floor) << ";override=" << s.solver.override_dt
     << ";scheme=" << s.scheme << ";tau=" << format_double(s.tau)
     << ";particles=" << s.particles.enabled << ";real=" << s.particles.realizations
     << ";mhreal=" << s.particles.mh_realizations << ";mhmoves=" << s.particles.mh_moves
     << ";bins=" << s.particles.bins << ";redraw=" << s.particles.redraw_obstacles
     << ";bbcheck=" << s.particles.blue_overlap_check << ";study=" << s.study.enabled;
  for (double e : s.study.eps_values) os << format_double(e) << ",";
  os << ";seed=" << s.seed;
  return os.str();
}

}  // namespace

std::uint64_t scenario_hash(const Scenario& s) { return fnv1a(canonical_serialization(s)); }

Mode mode_from_label(const std::string& label) {
  if (label == "agf") return Mode::agf();
  if (label == "gf1") return Mode::gf(EntropyPair::pair1());
  if (label == "gf2") return Mode::gf(EntropyPair::pair2());
  if (label == "gf3") return Mode::gf(EntropyPair::pair3(0.5, 0.0));
  throw std::invalid_argument("unknown mode '" + label + "' (use agf, gf1, gf2, gf3)");
}

Field build_b_field(const Scenario& s, const Grid1D& grid, double* factor) {
  Field b;
  if (s.b_kind == "convex") {
    b = Field::sample(grid, [](double x) { return 0.3 * (4.0 * x * x + 3.0); });
  } else if (s.b_kind == "nonconvex") {
    b = Field::sample(grid, [](double x) {
      return 1.2 * (1.0 + 0.1 * std::sin(20.0 * x)) * (x * x + 0.75);
    });
  } else if (s.b_kind == "expr") {
    const Expression expr = Expression::parse(s.b_expr);
    b = Field::sample(grid, [&](double x) { return expr(x); });
  } else {
    throw std::invalid_argument("unknown b spec '" + s.b_kind + "'");
  }
  if (b.v.minCoeff() < 0.0)
    throw std::domain_error("porosity density must be nonnegative on the domain");
  const double f = b.normalize();
  if (factor) *factor = f;
  return b;
}

ModelParams scenario_params(const Scenario& s) {
  if (s.direct_eps) return params_from_eps((*s.direct_eps)[0], (*s.direct_eps)[1], s.dim);
  return derive_params(s.n_red, s.n_blue, s.diam_red, s.diam_blue, s.dim);
}

Scenario preset_scenario(const std::string& name) {
  Scenario s;
  s.name = name;
  s.output_times = default_output_times();
  s.solver.n_cells = 200;  // desk scale; --paper-scale restores 1000
  s.solver.dt = 1e-6;
  s.solver.t_end = 0.2;
  s.seed = 20170719;
  if (name == "figure1") {
    s.b_kind = "convex";
    s.particles.enabled = true;
  } else if (name == "figure2") {
    s.b_kind = "nonconvex";
    s.particles.enabled = true;
  } else if (name == "figure3") {
    s.b_kind = "convex";
    s.modes.clear();
    s.particles.enabled = false;
    s.study.enabled = true;
    s.study.eps_values = default_study_eps();
  } else {
    throw std::invalid_argument("unknown preset '" + name + "' (figure1|figure2|figure3)");
  }
  return s;
}

void apply_paper_scale(Scenario& s) {
  s.solver.n_cells = 1000;
  s.particles.realizations = 100000;
  s.particles.mh_realizations = 20000;
  s.particles.mh_moves = 100000;
}

// ---- configuration files ----

namespace {

struct KeyValue {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;
};

[[noreturn]] void config_fail(int line, const std::string& msg) {
  throw std::runtime_error("config error (line " + std::to_string(line) + "): " + msg);
}

bool parse_bool(const KeyValue& kv) {
  if (kv.value == "true" || kv.value == "1" || kv.value == "yes") return true;
  if (kv.value == "false" || kv.value == "0" || kv.value == "no") return false;
  config_fail(kv.line, kv.section + "." + kv.key + ": expected a boolean, got '" + kv.value + "'");
}

double parse_num(const KeyValue& kv) {
  try {
    std::size_t used = 0;
    const double v = std::stod(kv.value, &used);
    if (used != kv.value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    config_fail(kv.line, kv.section + "." + kv.key + ": expected a number, got '" + kv.value + "'");
  }
}

long parse_int(const KeyValue& kv) {
  const double v = parse_num(kv);
  if (v != std::floor(v)) config_fail(kv.line, kv.section + "." + kv.key + ": expected an integer");
  return static_cast<long>(v);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    const auto b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

std::vector<double> parse_times(const KeyValue& kv) {
  // either "start:step:stop" or a comma list
  if (kv.value.find(':') != std::string::npos) {
    const auto parts = [&] {
      std::vector<std::string> p;
      std::stringstream ss(kv.value);
      std::string item;
      while (std::getline(ss, item, ':')) p.push_back(item);
      return p;
    }();
    if (parts.size() != 3) config_fail(kv.line, "times range must be start:step:stop");
    const double start = std::stod(parts[0]);
    const double step = std::stod(parts[1]);
    const double stop = std::stod(parts[2]);
    if (!(step > 0) || stop < start) config_fail(kv.line, "bad times range");
    std::vector<double> t;
    for (double x = start; x <= stop + 1e-12; x += step) t.push_back(x);
    return t;
  }
  std::vector<double> t;
  for (const auto& item : split_list(kv.value)) t.push_back(std::stod(item));
  return t;
}

}  // namespace

ValidatedConfig validate_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());

  std::vector<KeyValue> entries;
  std::string line;
  std::string section = "scenario";
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    const auto b = line.find_last_not_of(" \t\r");
    line = line.substr(a, b - a + 1);
    if (line.front() == '[') {
      if (line.back() != ']') config_fail(lineno, "unterminated section header");
      section = line.substr(1, line.size() - 2);
      if (section != "scenario" && section != "solver" && section != "particles" &&
          section != "study")
        config_fail(lineno, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) config_fail(lineno, "expected key = value");
    auto trim = [](std::string s) {
      const auto x = s.find_first_not_of(" \t");
      const auto y = s.find_last_not_of(" \t");
      return x == std::string::npos ? std::string{} : s.substr(x, y - x + 1);
    };
    entries.push_back({section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno});
  }

  ValidatedConfig out;
  Scenario& s = out.scenario;
  s.output_times.clear();
  bool have_n_cells = false, have_t_end = false, have_times = false;

  for (const auto& kv : entries) {
    const std::string full = kv.section + "." + kv.key;
    if (kv.section == "scenario") {
      if (kv.key == "name") s.name = kv.value;
      else if (kv.key == "b") s.b_kind = kv.value;
      else if (kv.key == "b_expr") { s.b_kind = "expr"; s.b_expr = kv.value; }
      else if (kv.key == "modes") s.modes = split_list(kv.value);
      else if (kv.key == "times") { s.output_times = parse_times(kv); have_times = true; }
      else if (kv.key == "n_red") s.n_red = static_cast<int>(parse_int(kv));
      else if (kv.key == "n_blue") s.n_blue = static_cast<int>(parse_int(kv));
      else if (kv.key == "diam_red") s.diam_red = parse_num(kv);
      else if (kv.key == "diam_blue") s.diam_blue = parse_num(kv);
      else if (kv.key == "dim") s.dim = static_cast<int>(parse_int(kv));
      else if (kv.key == "eps1" || kv.key == "eps2") {
        auto eps = s.direct_eps.value_or(std::array<double, 2>{0.0, 0.0});
        eps[kv.key == "eps1" ? 0 : 1] = parse_num(kv);
        s.direct_eps = eps;
      }
      else if (kv.key == "seed") s.seed = static_cast<std::uint64_t>(parse_int(kv));
      else config_fail(kv.line, "unknown key '" + full + "'");
    } else if (kv.section == "solver") {
      if (kv.key == "n_cells") { s.solver.n_cells = static_cast<int>(parse_int(kv)); have_n_cells = true; }
      else if (kv.key == "dt") s.solver.dt = parse_num(kv);
      else if (kv.key == "t_end") { s.solver.t_end = parse_num(kv); have_t_end = true; }
      else if (kv.key == "scheme") s.scheme = kv.value;
      else if (kv.key == "tau") s.tau = parse_num(kv);
      else if (kv.key == "positivity_floor") s.solver.positivity_floor = parse_num(kv);
      else if (kv.key == "override_dt") s.solver.override_dt = parse_bool(kv);
      else config_fail(kv.line, "unknown key '" + full + "'");
    } else if (kv.section == "particles") {
      if (kv.key == "enabled") s.particles.enabled = parse_bool(kv);
      else if (kv.key == "realizations") s.particles.realizations = parse_int(kv);
      else if (kv.key == "mh_realizations") s.particles.mh_realizations = parse_int(kv);
      else if (kv.key == "mh_moves") s.particles.mh_moves = parse_int(kv);
      else if (kv.key == "bins") s.particles.bins = static_cast<int>(parse_int(kv));
      else if (kv.key == "redraw_obstacles") s.particles.redraw_obstacles = parse_bool(kv);
      else if (kv.key == "blue_overlap_check") s.particles.blue_overlap_check = parse_bool(kv);
      else config_fail(kv.line, "unknown key '" + full + "'");
    } else {  // study
      if (kv.key == "enabled") s.study.enabled = parse_bool(kv);
      else if (kv.key == "eps_values") {
        s.study.eps_values.clear();
        for (const auto& item : split_list(kv.value)) s.study.eps_values.push_back(std::stod(item));
      }
      else config_fail(kv.line, "unknown key '" + full + "'");
    }
  }

  // semantic checks and defaults
  if (!have_n_cells)
    out.notices.push_back("solver.n_cells missing, defaulting to 1000");
  if (!(s.solver.dt > 0.0))
    throw std::runtime_error("config error: solver.dt must be positive");
  if (s.solver.n_cells < 4) throw std::runtime_error("config error: solver.n_cells must be >= 4");
  if (s.dim != 2 && s.dim != 3) throw std::runtime_error("config error: scenario.dim must be 2 or 3");
  if (s.scheme != "explicit_rk" && s.scheme != "implicit_regularized")
    throw std::runtime_error("config error: solver.scheme must be explicit_rk or implicit_regularized");
  if (!(s.tau > 0.0)) throw std::runtime_error("config error: solver.tau must be positive");
  if (!(s.solver.positivity_floor > 0.0))
    throw std::runtime_error("config error: solver.positivity_floor must be positive");
  for (const auto& m : s.modes) mode_from_label(m);

  if (!have_times) s.output_times = default_output_times();
  std::sort(s.output_times.begin(), s.output_times.end());
  if (!s.output_times.empty() && s.output_times.front() < 0.0)
    throw std::runtime_error("config error: scenario.times must be nonnegative");
  if (!have_t_end && !s.output_times.empty()) s.solver.t_end = s.output_times.back();
  if (!s.output_times.empty() && s.output_times.back() > s.solver.t_end + 1e-12)
    throw std::runtime_error("config error: scenario.times exceed solver.t_end");
  if (s.study.enabled && s.study.eps_values.empty()) s.study.eps_values = default_study_eps();

  // b must evaluate to a nonnegative density; report the normalization factor
  double factor = 1.0;
  build_b_field(s, Grid1D(s.solver.n_cells), &factor);
  if (std::abs(factor - 1.0) > 1e-9)
    out.notices.push_back("b normalized to unit mass (factor " + format_double(factor) + ")");
  return out;
}

// ---- run_scenario ----

namespace {

struct Writer {
  std::filesystem::path dir;
  std::string hash_comment;

  void table(const std::string& file, CsvTable t) const {
    t.comments.insert(t.comments.begin(), hash_comment);
    write_csv(dir / file, t);
  }
};

CsvTable field_table(const std::vector<std::string>& header,
                     const std::vector<const Eigen::ArrayXd*>& cols, const Eigen::ArrayXd& x) {
  CsvTable t;
  t.header = header;
  for (int i = 0; i < x.size(); ++i) {
    std::vector<double> row{x(i)};
    for (const auto* c : cols) row.push_back((*c)(i));
    t.add_numeric(row);
  }
  return t;
}

}  // namespace

std::filesystem::path run_scenario(Scenario s, const RunOptions& opts) {
  if (opts.seed) s.seed = *opts.seed;
  if (opts.paper_scale) apply_paper_scale(s);
  if (opts.override_dt) s.solver.override_dt = true;

  const std::uint64_t hash = scenario_hash(s);
  const std::filesystem::path dir =
      opts.out_dir.empty() ? std::filesystem::path("out_" + s.name) : opts.out_dir;
  std::filesystem::create_directories(dir);
  Writer w{dir, "scenario=" + s.name + " hash=" + hash_hex(hash)};
  auto log = [&](const std::string& msg) {
    if (!opts.quiet) std::cout << "[" << s.name << "] " << msg << "\n";
  };

  const Grid1D grid(s.solver.n_cells);
  double b_factor = 1.0;
  const Field b = build_b_field(s, grid, &b_factor);
  const ModelParams params = scenario_params(s);
  const Eigen::ArrayXd x = grid.centers();

  json meta;
  meta["name"] = s.name;
  meta["hash"] = hash_hex(hash);
  meta["seed"] = s.seed;
  meta["b_kind"] = s.b_kind;
  meta["b_normalization_factor"] = b_factor;
  meta["params"] = {{"n_red", params.n_red},       {"n_blue", params.n_blue},
                    {"diam_red", params.diam_red}, {"diam_blue", params.diam_blue},
                    {"dim", params.dim},           {"eps1", params.eps1},
                    {"eps2", params.eps2},         {"eps3", params.eps3}};
  meta["solver"] = {{"n_cells", s.solver.n_cells},
                    {"dt", s.solver.dt},
                    {"t_end", s.solver.t_end},
                    {"scheme", s.scheme},
                    {"override_dt", s.solver.override_dt}};

  w.table("b.csv", field_table({"x", "b"}, {&b.v}, x));

  const Field uniform = Field::constant(grid, 1.0);
  const double dt_stable = suggest_dt(uniform, b, params);
  if (s.solver.dt > dt_stable && !s.solver.override_dt)
    log("requested dt " + format_double(s.solver.dt) + " exceeds the stable step " +
        format_double(dt_stable) + "; using the stable step (pass --override-dt to keep it)");
  meta["suggested_dt"] = dt_stable;

  if (s.study.enabled) {
    for (RatioMode mode : {RatioMode::self_weak, RatioMode::balanced, RatioMode::self_strong}) {
      const std::string label = ratio_mode_label(mode);
      log("scaling study " + label);
      const ScalingStudy study = error_scaling_study(mode, s.study.eps_values, b, opts.threads);
      CsvTable t;
      t.header = {"eps", "err_pair1", "err_pair2", "err_pair3"};
      for (const auto& row : study.rows) {
        t.add_numeric({row.eps, row.ok[0] ? row.err[0] : std::nan(""),
                       row.ok[1] ? row.err[1] : std::nan(""),
                       row.ok[2] ? row.err[2] : std::nan("")});
        if (!row.stationary_ok)
          meta["study_errors"][label].push_back("eps=" + format_double(row.eps) + ": " + row.error);
      }
      w.table(s.name + "_" + label + ".csv", std::move(t));
      CsvTable slopes;
      slopes.header = {"pair", "slope", "fitted_rows"};
      for (int k = 0; k < 3; ++k)
        slopes.add_numeric({double(k + 1), study.slopes[k], double(study.fitted_rows[k])});
      w.table(s.name + "_" + label + "_slopes.csv", std::move(slopes));
    }
  }

  if (!s.modes.empty()) {
    log("equilibria (Newton) and long-time stationary state");
    const EquilibriumResult eq1 = equilibrium_newton(EntropyPair::pair1(), b, params);
    const EquilibriumResult eq2 = equilibrium_newton(EntropyPair::pair2(), b, params);
    const EquilibriumResult eq3 = equilibrium_newton(EntropyPair::pair3(0.5, 0.0), b, params);
    const Field r_star = stationary_longtime(b, params);
    const Field r_asym = asymptotic_equilibrium(b, params);
    w.table(s.name + "_equilibria.csv",
            field_table({"x", "r_star", "r_inf_1", "r_inf_2", "r_inf_3", "r_first_order"},
                        {&r_star.v, &eq1.r_inf.v, &eq2.r_inf.v, &eq3.r_inf.v, &r_asym.v}, x));
    meta["equilibria"] = {{"chi1", eq1.chi},
                          {"chi2", eq2.chi},
                          {"chi3", eq3.chi},
                          {"newton_iters", {eq1.newton_iters, eq2.newton_iters, eq3.newton_iters}}};

    CsvTable rates;
    rates.header = {"scenario", "pair", "lambda_fit", "r2"};

    for (const auto& label : s.modes) {
      log("solving " + label);
      const Mode mode = mode_from_label(label);
      FvmConfig cfg = s.solver;
      cfg.output_times = s.output_times;
      cfg.track_pairs = {EntropyPair::pair1(), EntropyPair::pair2()};
      cfg.gamma_refs = mode.is_gf() ? std::vector<Field>{eq1.r_inf, eq2.r_inf}
                                    : std::vector<Field>{r_star, r_star};
      const double est_dt = s.solver.override_dt ? s.solver.dt : std::min(s.solver.dt, dt_stable);
      cfg.diag_stride = std::max(1, static_cast<int>(s.solver.t_end / est_dt / 5000));

      Trajectory traj;
      if (s.scheme == "implicit_regularized") {
        // validation stepper: fixed tau steps, snapshots at the output times
        Field r = uniform;
        double t = 0.0;
        traj.times.push_back(0.0);
        traj.states.push_back(r);
        std::size_t next = s.output_times.empty() ? 0 : (s.output_times.front() == 0.0 ? 1 : 0);
        while (t < s.solver.t_end - 1e-12) {
          r = step_implicit_regularized(r, b, params, s.tau).r;
          t += s.tau;
          if (next < s.output_times.size() && t >= s.output_times[next] - 1e-12) {
            traj.times.push_back(t);
            traj.states.push_back(r);
            ++next;
          }
        }
      } else {
        traj = solve(uniform, b, params, mode, cfg);
      }

      for (std::size_t k = 0; k < traj.times.size(); ++k)
        w.table(s.name + "_" + label + "_t" + format_time(traj.times[k]) + ".csv",
                field_table({"x", "r"}, {&traj.states[k].v}, x));

      if (!traj.diag_times.empty() && traj.entropy.size() == 2 && traj.gamma.size() == 2) {
        const double e1_ref = entropy_of(EntropyPair::pair1(),
                                         mode.is_gf() ? eq1.r_inf : r_star, b, params);
        const double e2_ref = entropy_of(EntropyPair::pair2(),
                                         mode.is_gf() ? eq2.r_inf : r_star, b, params);
        CsvTable series;
        series.header = {"t", "E1", "E2", "E_star_1", "E_star_2", "mass", "min_r"};
        std::vector<double> ts = traj.diag_times, es1, es2;
        for (std::size_t i = 0; i < traj.diag_times.size(); ++i) {
          const double est1 = traj.entropy[0][i] - e1_ref - traj.gamma[0][i];
          const double est2 = traj.entropy[1][i] - e2_ref - traj.gamma[1][i];
          es1.push_back(est1);
          es2.push_back(est2);
          series.add_numeric({traj.diag_times[i], traj.entropy[0][i], traj.entropy[1][i], est1,
                              est2, traj.mass[i], traj.min_value[i]});
        }
        w.table(s.name + "_" + label + "_series.csv", std::move(series));
        for (int pair_idx : {0, 1}) {
          try {
            const RateFit fit = fit_decay_rate(ts, pair_idx == 0 ? es1 : es2);
            rates.rows.push_back({s.name + "_" + label, std::to_string(pair_idx + 1),
                                  format_double(fit.rate), format_double(fit.r_squared)});
          } catch (const std::exception&) {
            // no usable fit window for this pair along this mode
          }
        }
      }
      meta["runs"][label] = {{"floor_events", traj.floor_events},
                             {"snapshots", traj.times.size()}};
    }

    if (!rates.rows.empty()) w.table(s.name + "_rates.csv", std::move(rates));

    if (s.particles.enabled) {
      log("stochastic layer: obstacle draws, ensemble, Metropolis");
      Histogram obst = obstacle_histogram(b, params, s.particles.bins,
                                          std::min<long>(s.particles.realizations, 20000),
                                          s.seed ^ 0x0b5'7ac1e5ULL,
                                          s.particles.blue_overlap_check, opts.threads);
      w.table(s.name + "_obstacles_hist.csv",
              field_table({"x", "mean_density", "stderr"}, {&obst.mean, &obst.std_err},
                          obst.centers));

      HistogramSpec hs;
      hs.n_bins = s.particles.bins;
      hs.realizations = s.particles.realizations;
      hs.output_times = s.output_times;
      hs.redraw_obstacles = s.particles.redraw_obstacles;
      hs.blue_overlap_check = s.particles.blue_overlap_check;
      hs.seed = s.seed;
      hs.threads = opts.threads;
      const auto hists = simulate_ensemble(params, b, hs);
      for (std::size_t i = 0; i < hists.size(); ++i)
        w.table(s.name + "_sde_hist_t" + format_time(s.output_times[i]) + ".csv",
                field_table({"x", "mean_density", "stderr"},
                            {&hists[i].mean, &hists[i].std_err}, hists[i].centers));

      MhSpec mh;
      mh.n_bins = s.particles.bins;
      mh.realizations = s.particles.mh_realizations;
      mh.moves = s.particles.mh_moves;
      mh.burn_in = std::min<long>(20000, mh.moves / 2);
      mh.blue_overlap_check = s.particles.blue_overlap_check;
      mh.seed = s.seed ^ 0x9e37'79b9ULL;
      mh.threads = opts.threads;
      const MhResult mhr = metropolis_stationary(params, b, mh);
      w.table(s.name + "_mh_hist.csv",
              field_table({"x", "mean_density", "stderr"},
                          {&mhr.histogram.mean, &mhr.histogram.std_err}, mhr.histogram.centers));

      CsvTable dist;
      dist.header = {"reference", "l2_distance", "stderr"};
      const std::vector<std::pair<std::string, const Field*>> refs = {
          {"r_star", &r_star}, {"r_inf_1", &eq1.r_inf}, {"r_inf_2", &eq2.r_inf}};
      for (const auto& [label, ref] : refs)
        dist.rows.push_back({label, format_double(histogram_l2_distance(mhr.histogram, *ref)),
                             format_double(histogram_l2_distance_err(mhr.histogram, *ref))});
      w.table(s.name + "_mh_distances.csv", std::move(dist));

      json pmeta;
      pmeta["scenario_hash"] = hash_hex(hash);
      pmeta["master_seed"] = s.seed;
      pmeta["realizations"] = s.particles.realizations;
      pmeta["mh_realizations"] = s.particles.mh_realizations;
      pmeta["mh_moves"] = s.particles.mh_moves;
      pmeta["mh_acceptance"] = mhr.acceptance;
      pmeta["mh_tuned_step_std"] = mhr.step_std;
      pmeta["bins"] = s.particles.bins;
      pmeta["dt"] = (0.5 * params.diam_red) * (0.5 * params.diam_red) / 2.0;
      pmeta["redraw_obstacles"] = s.particles.redraw_obstacles;
      pmeta["blue_overlap_check"] = s.particles.blue_overlap_check;
      std::ofstream pm(dir / (s.name + "_particles_meta.json"));
      pm << pmeta.dump(2) << "\n";
      meta["particles"] = pmeta;
    }
  }

  std::ofstream mf(dir / "metadata.json");
  mf << meta.dump(2) << "\n";
  log("artifacts written to " + dir.string());
  return dir;
}

CompareReport compare_outputs(const std::filesystem::path& dir_a,
                              const std::filesystem::path& dir_b, double tolerance) {
  CompareReport report;
  report.tolerance = tolerance;
  auto list_csv = [](const std::filesystem::path& d) {
    std::set<std::string> names;
    if (!std::filesystem::is_directory(d))
      throw std::runtime_error("compare: " + d.string() + " is not a directory");
    for (const auto& e : std::filesystem::directory_iterator(d))
      if (e.is_regular_file() && e.path().extension() == ".csv")
        names.insert(e.path().filename().string());
    return names;
  };
  const auto a_names = list_csv(dir_a);
  const auto b_names = list_csv(dir_b);
  for (const auto& n : a_names)
    if (!b_names.count(n)) report.problems.push_back("missing in " + dir_b.string() + ": " + n);
  for (const auto& n : b_names)
    if (!a_names.count(n)) report.problems.push_back("missing in " + dir_a.string() + ": " + n);

  for (const auto& n : a_names) {
    if (!b_names.count(n)) continue;
    CsvTable ta, tb;
    try {
      ta = read_csv(dir_a / n);
      tb = read_csv(dir_b / n);
    } catch (const std::exception& e) {
      report.problems.push_back(std::string("unreadable: ") + e.what());
      continue;
    }
    if (ta.header != tb.header) {
      report.problems.push_back("schema mismatch (header) in " + n);
      continue;
    }
    if (ta.rows.size() != tb.rows.size()) {
      report.problems.push_back("schema mismatch (row count) in " + n);
      continue;
    }
    FileDiff d;
    d.file = n;
    double sq = 0.0;
    bool text_mismatch = false;
    for (std::size_t i = 0; i < ta.rows.size() && !text_mismatch; ++i)
      for (std::size_t j = 0; j < ta.rows[i].size(); ++j) {
        const auto va = parse_cell(ta.rows[i][j]);
        const auto vb = parse_cell(tb.rows[i][j]);
        if (!va || !vb) {
          // text cells (labels) must agree exactly
          if (ta.rows[i][j] != tb.rows[i][j]) {
            report.problems.push_back("schema mismatch (label cell) in " + n);
            text_mismatch = true;
            break;
          }
          continue;
        }
        if (std::isnan(*va) && std::isnan(*vb)) continue;
        const double diff = std::abs(*va - *vb);
        d.max_abs = std::max(d.max_abs, diff);
        sq += diff * diff;
      }
    if (text_mismatch) continue;
    d.l2 = std::sqrt(sq);
    report.files.push_back(d);
  }
  report.ok = report.problems.empty() &&
              std::all_of(report.files.begin(), report.files.end(),
                          [&](const FileDiff& d) { return d.max_abs <= tolerance; });
  return report;
}

}  // namespace agf
