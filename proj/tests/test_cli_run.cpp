#include "m2ch/csv.hpp"
#include "m2ch/run.hpp"
#include "m2ch/scenario.hpp"
#include "m2ch/verify.hpp"

#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

using namespace m2ch;
namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir = fs::temp_directory_path() / ("m2ch-test-" + std::to_string(::getpid()));
  Scratch() { fs::create_directories(dir); }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    if (!line.empty() && line.back() == ',') row.emplace_back();
    rows.push_back(row);
  }
  return rows;
}

std::string header(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line;
  std::getline(in, line);
  return line;
}

}  // namespace

TEST_CASE("number formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(INFINITY) == "inf");
  CHECK(format_double(-INFINITY) == "-inf");
  CHECK(format_double(NAN) == "nan");
  CHECK(time_tag(0.5) == "0.5");
  CHECK(time_tag(-0.0) == "0");
  CHECK(time_tag(-1.0) == "-1");
}

TEST_CASE("csv writer quoting and column count") {
  Scratch s;
  {
    CsvWriter w(s.dir / "x.csv", {"a", "b"});
    w << 1.0 << std::string("x,\"y\"");
    w.end_row();
    w << 2.0;
    CHECK_THROWS(w.end_row());
  }
  CHECK(slurp(s.dir / "x.csv").rfind("a,b\n1,\"x,\"\"y\"\"\"\n", 0) == 0);
}

TEST_CASE("free single peakon run") {
  Scratch s;
  const auto res = run(load_scenario(fs::path(M2CH_SCENARIO_DIR) / "free_peakon.ini"), s.dir);
  CHECK(!res.aborted);
  CHECK(header(s.dir / "trajectory.csv") == "t,q_1,p_1,s_1,E");
  CHECK(header(s.dir / "invariants.csv") == "t,energy_drift,constraint_residual,max_r_drift,invariant_drift");
  CHECK(header(s.dir / "events.csv") == "t,kind,left,right,gap,reason");
  const auto rows = read_csv(s.dir / "trajectory.csv");
  CHECK(rows.size() == 22);
  CHECK(std::stod(rows.back()[0]) == 2.0);
  CHECK(std::abs(std::stod(rows.back()[1]) - 2.0) < 1e-8);
  CHECK(read_csv(s.dir / "events.csv").size() == 1);
  CHECK(!fs::exists(s.dir / "circle.csv"));
}

TEST_CASE("antisymmetric peakon run records the collision and continues") {
  Scratch s;
  const auto sc = load_scenario(fs::path(M2CH_SCENARIO_DIR) / "antisym_s05_peakons.ini");
  const auto res = run(sc, s.dir);
  CHECK(!res.aborted);
  const auto ev = read_csv(s.dir / "events.csv");
  REQUIRE(ev.size() >= 2);
  CHECK(ev[1][1] == "collision");
  CHECK(std::abs(std::stod(ev[1][0])) < 1e-6);
  CHECK(ev[1][2] == "1");
  CHECK(ev[1][3] == "2");
  CHECK(ev[2][1] == "handoff");
  CHECK(header(s.dir / "circle.csv") == "t,u_dagger,rho_bar_dagger");
  CHECK(header(s.dir / "eulerian_-1.csv") == "x,u,rho_bar,rho_bar_x");
  CHECK(read_csv(s.dir / "eulerian_-1.csv").size() == 402);
  CHECK(fs::exists(s.dir / "continuation" / "eulerian_0.5.csv"));
  const auto cont = read_csv(s.dir / "continuation" / "events.csv");
  REQUIRE(cont.size() == 2);
  CHECK(std::abs(std::stod(cont[1][0])) < 1e-3);
  const auto traj = read_csv(s.dir / "continuation" / "trajectory.csv");
  CHECK(traj[0][1] == "y_1");
  CHECK(std::stod(traj.back()[0]) == 1.0);
}

TEST_CASE("closed-form run") {
  Scratch s;
  const auto res = run(load_scenario(fs::path(M2CH_SCENARIO_DIR) / "antisym_s15_closed_form.ini"), s.dir);
  CHECK(!res.aborted);
  const auto circ = read_csv(s.dir / "circle.csv");
  double worst = 0.0;
  for (std::size_t k = 1; k < circ.size(); ++k) {
    const double u = std::stod(circ[k][1]), r = std::stod(circ[k][2]);
    worst = std::max(worst, std::abs(std::hypot(u, r - 1.0 / 6.0) - 1.0 / 6.0));
  }
  CHECK(worst < 1e-12);
  const auto ev = read_csv(s.dir / "events.csv");
  CHECK(ev.size() == 4);
}

TEST_CASE("gaussian lagrangian run and determinism") {
  Scratch s;
  const auto sc = load_scenario(fs::path(M2CH_SCENARIO_DIR) / "gaussian.ini");
  const auto a = run(sc, s.dir / "a");
  const auto b = run(sc, s.dir / "b");
  CHECK(!a.aborted);
  REQUIRE(a.files.size() == b.files.size());
  for (const auto& f : a.files) CHECK(slurp(f) == slurp(s.dir / "b" / f.filename()));
  const auto inv = read_csv(s.dir / "a" / "invariants.csv");
  CHECK(inv.size() == 12);
  CHECK(std::stod(inv.back()[2]) < 1e-6);
  CHECK(fs::exists(s.dir / "a" / "eulerian_1.csv"));
}

TEST_CASE("solver abort is recorded") {
  Scratch s;
  const auto sc = parse_scenario(
      "[scenario]\nkind = lagrangian\nt0 = -3\nt1 = 30\n[antisym]\ns = 0.5\n[solver]\nn = 64\ndt = 10\n"
      "[output]\nsample_dt = 10\n");
  const auto res = run(sc, s.dir);
  CHECK(res.aborted);
  const auto ev = read_csv(s.dir / "events.csv");
  REQUIRE(ev.size() == 2);
  CHECK(ev[1][1] == "abort");
}

TEST_CASE("verify reports") {
  const auto empty = verify(std::vector<std::string>{});
  CHECK(empty.entries.empty());
  CHECK(empty.ok());
  CHECK_THROWS_AS(verify("nonsense"), std::invalid_argument);
  const auto cf = verify("closed-form");
  CHECK(cf.ok());
  CHECK(cf.to_text().find("circle residual <= 1e-12\t") != std::string::npos);
  const auto core = verify("core");
  CHECK(core.to_text().find("n=2 energy matches the two-peakon Hamiltonian") != std::string::npos);
}

TEST_CASE("verify all lists every operation") {
  const auto all = verify("all");
  CHECK(all.ok());
  const std::string text = all.to_text();
  for (const char* op : {"eval_u", "eval_rho_bar", "eval_derivatives", "total_energy", "\trhs\t", "integrate",
                         "detect_collision", "energy_drift", "classify", "eval_collision_centered", "eval_general",
                         "period", "asymptotics", "circle_residual", "init_from_peakons", "kernel_convolve",
                         "compute_integrals", "step", "constraint_residual", "compute_r", "pointwise_invariant",
                         "to_eulerian", "parse_scenario", "\trun\t", "\tverify\t"})
    CHECK_MESSAGE(text.find(op) != std::string::npos, op);
}
