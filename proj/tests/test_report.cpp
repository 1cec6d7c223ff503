#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ccm/report.hpp"
#include "ccm/sim.hpp"

using namespace ccm;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  const fs::path p = fs::temp_directory_path() / "ccm_test_report";
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string write_trace(const fs::path& dir, const std::string& name, double noise) {
  const SystemModel mg = SystemModel::moore_greitzer();
  SimConfig c;
  c.T = 0.05;
  c.x0 = Eigen::Vector2d(0.5, -0.5);
  c.noise_std = noise;
  const fs::path p = dir / name;
  std::ofstream out(p);
  write_csv(out, mg, run_open_loop(mg, c));
  return p.string();
}

}  // namespace

TEST_CASE("read a trace and emit per-trace scripts") {
  const fs::path dir = scratch();
  const TraceTable t = read_trace_csv(write_trace(dir, "a.csv", 0.0));
  CHECK(t.rows() == 51);
  CHECK(t.header.size() == 11);
  CHECK(std::isnan(t.column("d_bound").front()));
  CHECK(t.column("phi").front() == 0.5);
  CHECK_THROWS_AS(t.column("nope"), ReportError);

  const auto files = write_report({t}, (dir / "out").string());
  REQUIRE(files.size() == 2);
  CHECK(fs::path(files[0]).filename() == "a_states.py");
  CHECK(fs::path(files[1]).filename() == "a_distance.py");
}

TEST_CASE("noisy and comparative reports") {
  const fs::path dir = scratch();
  const TraceTable clean = read_trace_csv(write_trace(dir, "clean.csv", 0.0));
  const TraceTable noisy = read_trace_csv(write_trace(dir, "noisy.csv", 0.3));
  const auto files = write_report({clean, noisy}, (dir / "out").string());
  CHECK(files.size() == 6);
  CHECK(fs::exists(dir / "out" / "noisy_noise.py"));
  CHECK_FALSE(fs::exists(dir / "out" / "clean_noise.py"));
  CHECK(fs::exists(dir / "out" / "peaking.py"));
}

TEST_CASE("bad traces are rejected") {
  const fs::path dir = scratch();
  std::ofstream(dir / "other.csv") << "t,x\n0,1\n";
  std::ofstream(dir / "ragged.csv") << "t,x\n0,1,2\n";
  const TraceTable a = read_trace_csv(write_trace(dir, "a.csv", 0.0));
  const TraceTable b = read_trace_csv((dir / "other.csv").string());
  CHECK_THROWS_AS(write_report({a, b}, (dir / "out").string()), ReportError);
  CHECK_THROWS_AS(read_trace_csv((dir / "ragged.csv").string()), ReportError);
  CHECK_THROWS_AS(read_trace_csv((dir / "missing.csv").string()), ReportError);
  CHECK_THROWS_AS(write_report({}, (dir / "out").string()), ReportError);
}
