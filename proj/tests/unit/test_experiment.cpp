#include "malab/experiment.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace malab;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("malab_test_" + name);
  fs::remove_all(p);
  return p;
}

RunOutcome run_in(const json& config, const fs::path& dir) {
  RunOptions o;
  o.out_dir = dir.string();
  return run_experiment(config, o);
}

}  // namespace

TEST_CASE("minimal solve config") {
  const auto dir = fresh_dir("solve");
  const json cfg = {{"task", "solve"}, {"domain", "unit_disc"}, {"rhs", "const:1"}, {"h", "1/32"}};
  const RunOutcome r = run_in(cfg, dir);
  REQUIRE(r.exit_code == kExitOk);
  CHECK(fs::exists(dir / "u.csv"));
  CHECK(fs::exists(dir / "report.json"));
  CHECK_FALSE(fs::exists(dir / ".malab.lock"));
  const json rep = json::parse(read_file((dir / "report.json").string()));
  CHECK(rep["provenance"]["config_hash"] == config_hash(cfg));
  CHECK(rep["provenance"].contains("modules"));
  CHECK(rep["result"]["u_center"].get<double>() == doctest::Approx(-0.5).epsilon(1e-6));
}

TEST_CASE("reruns are byte-identical") {
  const json cfg = {{"task", "power"}, {"domain", "unit_square"}, {"p", 1}, {"M", 1}, {"h", "1/16"}};
  const auto a = fresh_dir("rerun_a"), b = fresh_dir("rerun_b");
  REQUIRE(run_in(cfg, a).exit_code == kExitOk);
  RunOptions four;
  four.out_dir = b.string();
  four.threads = 4;
  REQUIRE(run_experiment(cfg, four).exit_code == kExitOk);
  for (const char* f : {"u.csv", "report.json"}) CHECK(read_file((a / f).string()) == read_file((b / f).string()));
}

TEST_CASE("clockwise polygon is a schema error") {
  const auto dir = fresh_dir("clockwise");
  const json cfg = {{"task", "solve"},
                    {"domain", {{"kind", "polygon"}, {"vertices", {{0, 0}, {0, 1}, {1, 1}, {1, 0}}}}},
                    {"rhs", "const:1"},
                    {"h", 0.1}};
  const RunOutcome r = run_in(cfg, dir);
  CHECK(r.exit_code == kExitInvalid);
  CHECK(r.report["error"]["type"] == "SchemaError");
  CHECK(fs::exists(dir / "error.json"));
}

TEST_CASE("invalid configs") {
  const auto dir = fresh_dir("invalid");
  CHECK(run_in({{"task", "solve"}, {"domain", "unit_disc"}, {"rhs", "const:1"}, {"h", 0.1}, {"bogus", 1}}, dir)
            .exit_code == kExitInvalid);
  CHECK(run_in({{"task", "fly"}}, dir).exit_code == kExitInvalid);
  CHECK(run_in({{"task", "power"}, {"domain", "unit_disc"}, {"p", 2}, {"h", 0.1}}, dir).exit_code == kExitInvalid);
  CHECK(run_in({{"task", "convergence"}, {"domain", "unit_disc"}, {"rhs", "const:1"}, {"h", {0.1, 0.2}}}, dir)
            .exit_code == kExitInvalid);
}

TEST_CASE("a held lock makes the run busy") {
  const auto dir = fresh_dir("busy");
  fs::create_directories(dir);
  std::ofstream(dir / ".malab.lock") << "held\n";
  CHECK(run_in({{"task", "solve"}, {"domain", "unit_disc"}, {"rhs", "const:1"}, {"h", 0.1}}, dir).exit_code ==
        kExitBusy);
}

TEST_CASE("convergence study table") {
  const auto dir = fresh_dir("convergence");
  const json cfg = {{"task", "convergence"}, {"domain", "unit_square"}, {"rhs", "const:1"},
                    {"h", {"1/16", "1/32", "1/64"}}};
  REQUIRE(run_in(cfg, dir).exit_code == kExitOk);
  const CsvTable t = read_csv((dir / "convergence.csv").string());
  CHECK(t.header == std::vector<std::string>{"h", "u_center", "cauchy_ratio"});
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[0][0] == 1.0 / 16);
  CHECK(std::isnan(t.rows[1][2]));
  CHECK(std::isfinite(t.rows[2][2]));
  for (const auto& row : t.rows) CHECK(row[1] == doctest::Approx(-0.173).epsilon(0.01));
  CHECK(fs::exists(dir / "convergence.svg"));
}

TEST_CASE("barrier check, eigen and profile tasks") {
  const auto bdir = fresh_dir("barrier");
  const json bcfg = {{"task", "barrier-check"}, {"variant", "LipschitzSub"},
                     {"params", {{"n", 2}, {"a", 2}, {"D", 1}}}, {"p", 2}, {"c", 0.16}, {"samples", 500}};
  REQUIRE(run_in(bcfg, bdir).exit_code == kExitOk);
  const CsvTable b = read_csv((bdir / "report.csv").string());
  CHECK(b.header == std::vector<std::string>{"sample_index", "x1", "x2", "value", "det_closed", "det_fd",
                                             "margin_sub", "min_minor"});
  CHECK(b.rows.size() == 500);

  const auto edir = fresh_dir("eigen");
  REQUIRE(run_in({{"task", "eigen"}, {"domain", "unit_disc"}, {"h", "1/16"}, {"u0", "quadratic"}}, edir).exit_code ==
          kExitOk);
  CHECK(fs::exists(edir / "history.svg"));

  const auto sdir = fresh_dir("profile_source");
  REQUIRE(run_in({{"task", "solve"}, {"domain", "unit_disc"}, {"h", "1/64"}, {"rhs", "const:1"}}, sdir).exit_code ==
          kExitOk);
  const auto pdir = fresh_dir("profile");
  const json pcfg = {{"task", "profile"}, {"domain", "unit_disc"}, {"h", "1/64"},
                     {"u", (sdir / "u.csv").string()}, {"angle", 0}};
  REQUIRE(run_in(pcfg, pdir).exit_code == kExitOk);
  const CsvTable p = read_csv((pdir / "profile.csv").string());
  CHECK(p.header == std::vector<std::string>{"d", "abs_u", "model_fit"});
  const std::string svg = read_file((pdir / "profile.svg").string());
  CHECK(svg.find("<svg") != std::string::npos);
}
