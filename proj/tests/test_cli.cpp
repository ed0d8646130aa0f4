#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "agf/csv.hpp"
#include "agf/expr.hpp"
#include "agf/scenario.hpp"

using namespace agf;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("agf_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& body) {
  const fs::path p = dir / "scenario.cfg";
  std::ofstream out(p);
  out << body;
  return p;
}

Scenario small_scenario() {
  Scenario s;
  s.name = "smoke";
  s.b_kind = "convex";
  s.modes = {"agf", "gf1"};
  s.output_times = {0.0, 0.01};
  s.solver.n_cells = 64;
  s.solver.dt = 1.0;
  s.solver.t_end = 0.01;
  s.particles.enabled = false;
  s.seed = 7;
  return s;
}

}  // namespace

TEST_CASE("expression parser evaluates the grammar") {
  CHECK(Expression::parse("0.3*(4*x^2+3)")(0.5) == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(Expression::parse("1.2*(1+0.1*sin(20*x))*(x^2+0.75)")(0.0) ==
        doctest::Approx(0.9).epsilon(1e-15));
  CHECK(Expression::parse("exp(-x)")(1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(Expression::parse("2^3^2")(0.0) == doctest::Approx(512.0));  // right-associative
  CHECK(Expression::parse("-x+1")(0.25) == doctest::Approx(0.75));
  CHECK_THROWS_AS(Expression::parse("cos(x)"), std::invalid_argument);
  CHECK_THROWS_AS(Expression::parse("1+*2"), std::invalid_argument);
  CHECK_THROWS_AS(Expression::parse("(1+2"), std::invalid_argument);
  CHECK_THROWS_AS(Expression::parse("1 2"), std::invalid_argument);
}

TEST_CASE("the convex preset porosity integrates to one") {
  // closed form: 0.3 * (4/12 + 3) = 1
  CHECK(0.3 * (4.0 / 12.0 + 3.0) == doctest::Approx(1.0).epsilon(1e-15));
  Scenario s;
  s.b_kind = "convex";
  double factor = 1.0;
  const Field b = build_b_field(s, Grid1D(200), &factor);
  CHECK(std::abs(factor - 1.0) < 1e-4);     // midpoint-rule deviation only
  CHECK(b.mass() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("the nonconvex preset porosity also has unit mass") {
  Scenario s;
  s.b_kind = "nonconvex";
  double factor = 1.0;
  build_b_field(s, Grid1D(1000), &factor);
  // the sin term is odd against the even polynomial, so the printed constant
  // is already the normalizing one
  CHECK(std::abs(factor - 1.0) < 1e-4);
}

TEST_CASE("validate_config: defaults, notices and rejections") {
  const fs::path dir = temp_dir("cfg");

  const auto ok = validate_config(write_config(dir, "[scenario]\n"
                                                    "name = demo\n"
                                                    "times = 0:0.01:0.02\n"
                                                    "[solver]\n"
                                                    "dt = 1e-5\n"));
  CHECK(ok.scenario.solver.n_cells == 1000);
  bool noticed = false;
  for (const auto& n : ok.notices)
    if (n.find("n_cells") != std::string::npos && n.find("1000") != std::string::npos)
      noticed = true;
  CHECK(noticed);
  CHECK(ok.scenario.output_times.size() == 3);
  CHECK(ok.scenario.solver.t_end == doctest::Approx(0.02));

  try {
    validate_config(write_config(dir, "[solver]\ndt = -1e-6\n"));
    FAIL("negative dt must be rejected");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("solver.dt") != std::string::npos);
  }

  try {
    validate_config(write_config(dir, "[scenario]\nwhatever = 3\n"));
    FAIL("unknown keys must be rejected");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("whatever") != std::string::npos);
    CHECK(msg.find("line 2") != std::string::npos);
  }

  const auto norm = validate_config(write_config(dir, "[scenario]\n"
                                                      "b_expr = 2*x+2\n"
                                                      "[solver]\n"
                                                      "n_cells = 128\n"));
  bool warned = false;
  for (const auto& n : norm.notices)
    if (n.find("normalized") != std::string::npos && n.find("0.5") != std::string::npos)
      warned = true;
  CHECK(warned);
}

TEST_CASE("scenario hash tracks semantic fields only") {
  const Scenario a = small_scenario();
  Scenario b = a;
  CHECK(scenario_hash(a) == scenario_hash(b));
  b.seed = 8;
  CHECK(scenario_hash(a) != scenario_hash(b));
  b = a;
  b.solver.n_cells = 128;
  CHECK(scenario_hash(a) != scenario_hash(b));
  b = a;
  b.name = "other";
  CHECK(scenario_hash(a) != scenario_hash(b));
  b = a;
  b.modes = {"agf"};
  CHECK(scenario_hash(a) != scenario_hash(b));
}

TEST_CASE("run_scenario writes a complete, re-parseable artifact directory") {
  const fs::path dir = temp_dir("run");
  RunOptions opts;
  opts.out_dir = dir / "a";
  opts.threads = 2;
  opts.quiet = true;
  const fs::path out = run_scenario(small_scenario(), opts);
  CHECK(fs::exists(out / "metadata.json"));
  CHECK(fs::exists(out / "b.csv"));
  CHECK(fs::exists(out / "smoke_equilibria.csv"));
  CHECK(fs::exists(out / "smoke_agf_t0.csv"));
  CHECK(fs::exists(out / "smoke_agf_t0.01.csv"));
  CHECK(fs::exists(out / "smoke_gf1_series.csv"));
}

TEST_CASE("emitted csv files re-parse and carry the scenario hash") {
  const fs::path dir = temp_dir("reparse");
  RunOptions opts;
  opts.out_dir = dir / "a";
  opts.quiet = true;
  const Scenario s = small_scenario();
  const fs::path out = run_scenario(s, opts);
  int csv_count = 0;
  for (const auto& e : fs::directory_iterator(out)) {
    if (e.path().extension() != ".csv") continue;
    ++csv_count;
    const CsvTable t = read_csv(e.path());
    REQUIRE(!t.header.empty());
    REQUIRE(!t.rows.empty());
    bool has_hash = false;
    for (const auto& c : t.comments)
      if (c.find("hash=") != std::string::npos) has_hash = true;
    CHECK(has_hash);
  }
  CHECK(csv_count >= 8);
}

TEST_CASE("identical scenarios produce bit-identical artifacts") {
  const fs::path dir = temp_dir("det");
  RunOptions opts;
  opts.quiet = true;
  opts.threads = 2;
  opts.out_dir = dir / "a";
  run_scenario(small_scenario(), opts);
  opts.out_dir = dir / "b";
  run_scenario(small_scenario(), opts);
  const CompareReport rep = compare_outputs(dir / "a", dir / "b", 0.0);
  CHECK(rep.problems.empty());
  CHECK(rep.ok);
  for (const auto& f : rep.files) CHECK(f.max_abs == 0.0);
}

TEST_CASE("compare_outputs flags differences and schema mismatches") {
  const fs::path dir = temp_dir("cmp");
  RunOptions opts;
  opts.quiet = true;
  opts.out_dir = dir / "a";
  run_scenario(small_scenario(), opts);
  opts.out_dir = dir / "b";
  Scenario other = small_scenario();
  other.seed = 99;  // seed is semantic: hash comment changes, numbers stay equal
  run_scenario(other, opts);
  const CompareReport same = compare_outputs(dir / "a", dir / "b", 1e-12);
  CHECK(same.problems.empty());

  // perturb one value
  {
    CsvTable t = read_csv(dir / "b" / "b.csv");
    t.rows[3][1] = format_double(*parse_cell(t.rows[3][1]) + 1e-3);
    write_csv(dir / "b" / "b.csv", t);
  }
  const CompareReport diff = compare_outputs(dir / "a", dir / "b", 1e-12);
  CHECK(!diff.ok);

  // break the schema
  {
    CsvTable t = read_csv(dir / "b" / "b.csv");
    t.header = {"x", "wrong"};
    write_csv(dir / "b" / "b.csv", t);
  }
  const CompareReport bad = compare_outputs(dir / "a", dir / "b", 1e-12);
  CHECK(!bad.problems.empty());
  CHECK(!bad.ok);
}

TEST_CASE("grid refinement halves the error ratio consistent with second order") {
  // same scenario at n = 250, 500, 1000; successive differences shrink ~4x
  std::vector<Field> finals;
  for (int n : {250, 500, 1000}) {
    Scenario s = small_scenario();
    s.modes = {"agf"};
    s.output_times = {0.05};
    s.solver.t_end = 0.05;
    s.solver.n_cells = n;
    const Grid1D grid(n);
    const Field b = build_b_field(s, grid);
    FvmConfig cfg = s.solver;
    cfg.output_times = {0.05};
    cfg.diag_stride = 1 << 20;
    const Trajectory traj =
        solve(Field::constant(grid, 1.0), b, scenario_params(s), Mode::agf(), cfg);
    finals.push_back(traj.states.back());
  }
  const Grid1D coarse(250);
  const double d1 = l2_distance(finals[0], cell_average_to(finals[1], coarse));
  const double d2 = l2_distance(cell_average_to(finals[1], coarse),
                                cell_average_to(finals[2], coarse));
  CHECK(d1 / d2 > 3.0);
  CHECK(d1 / d2 < 5.0);
}

TEST_CASE("preset scenarios are well-formed") {
  const Scenario f1 = preset_scenario("figure1");
  CHECK(f1.b_kind == "convex");
  CHECK(f1.particles.enabled);
  const Scenario f2 = preset_scenario("figure2");
  CHECK(f2.b_kind == "nonconvex");
  const Scenario f3 = preset_scenario("figure3");
  CHECK(f3.study.enabled);
  CHECK(f3.study.eps_values.size() == 6);
  CHECK(f3.study.eps_values.front() == doctest::Approx(1.0));
  CHECK(f3.study.eps_values.back() == doctest::Approx(0.1));
  CHECK_THROWS_AS(preset_scenario("figure9"), std::invalid_argument);

  Scenario paper = f1;
  apply_paper_scale(paper);
  CHECK(paper.solver.n_cells == 1000);
  CHECK(paper.particles.realizations == 100000);
}
