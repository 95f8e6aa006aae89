#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "liveload/report_io.hpp"

using namespace liveload;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("liveload_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write_config(const std::string& name, const json& j) const {
    std::ofstream(path(name)) << j.dump(2);
    return path(name);
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  CliRun run(const std::string& args) const {
    const std::string err = path("stderr.txt");
    const std::string cmd = std::string(LIVELOAD_BINARY) + " " + args + " 2>" + err;
    CliRun r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err);
    return r;
  }

  static json small_disk() {
    return {{"domain", {{"kind", "disk"}, {"resolution", 8}}},
            {"material", {{"c1", 1.0}, {"c2", 1.0}, {"p", 2.0}, {"q", 2.0}}},
            {"pressure", {{"name", "constant"}, {"params", {{"p0", 0.1}}}}},
            {"solver", {{"grad_tol", 1e-12}}},
            {"eps_list", {0.04, 0.02}},
            {"multistart", {0.0, 3.0}},
            {"study", {{"resolutions", {8}}}}};
  }

  static json small_lobes() {
    json j = small_disk();
    j["domain"] = {{"kind", "four_lobe"}, {"resolution", 16}};
    j["pressure"] = {{"name", "example52"}, {"variant", "strict"}};
    j["multistart"] = {0.0, 3.141592653589793};
    return j;
  }

  static json without_metadata(json doc) {
    doc.erase("metadata");
    return doc;
  }

  fs::path dir_;
};

TEST_F(Cli, SelftestPasses) {
  const CliRun r = run("selftest --out " + path("self.json"));
  EXPECT_EQ(r.code, 0) << r.err;
  const json doc = json::parse(slurp(path("self.json")));
  EXPECT_NO_THROW(validate_output_json(doc));
  for (const auto& c : doc.at("checks")) EXPECT_TRUE(c.at("passed").get<bool>()) << c.dump();
}

TEST_F(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("transmogrify").code, 2);
  EXPECT_EQ(run("scan-rotations").code, 2);  // --config is required
  const std::string cfg = write_config("c.json", small_disk());
  EXPECT_EQ(run("solve-nonlinear --config " + cfg).code, 2);  // --eps is required
  EXPECT_EQ(run("solve-nonlinear --config " + cfg + " --eps -1").code, 2);
  EXPECT_EQ(run("solve-linear --config " + cfg + " --alpha0 north").code, 2);
  EXPECT_EQ(run("scan-rotations --config " + cfg + " --grid 16").code, 2);
  EXPECT_EQ(run("scan-rotations --config " + cfg + " --threads -2").code, 2);
  EXPECT_EQ(run("scan-rotations --config " + path("missing.json")).code, 2);
}

TEST_F(Cli, MissingMaterialKeyIsNamed) {
  json j = small_disk();
  j["material"].erase("p");
  const CliRun r = run("solve-linear --config " + write_config("c.json", j));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("material.p"), std::string::npos) << r.err;
  // one diagnostic line
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << r.err;
}

TEST_F(Cli, SolverFailureExitsWithThree) {
  json j = small_disk();
  j["domain"]["resolution"] = 16;
  j["solver"] = {{"linear_method", "cg"}, {"linear_max_iter", 1}, {"linear_tol", 1e-14}};
  const CliRun r = run("solve-linear --config " + write_config("c.json", j) + " --alpha0 0");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("solver error"), std::string::npos) << r.err;
}

TEST_F(Cli, ScanRotationsFindsBothMinima) {
  const std::string cfg = write_config("c.json", small_lobes());
  const CliRun r = run("scan-rotations --config " + cfg + " --grid 256 --out " + path("scan.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_TRUE(fs::exists(path("scan.csv")));
  ASSERT_TRUE(fs::exists(path("scan.json")));
  ASSERT_TRUE(fs::exists(path("scan.svg")));
  const std::string csv = slurp(path("scan.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 257);

  const json doc = json::parse(slurp(path("scan.json")));
  EXPECT_NO_THROW(validate_output_json(doc));
  EXPECT_EQ(doc.at("grid").get<int>(), 256);
  const auto iso = doc.at("optimal_set").at("isolated").get<std::vector<double>>();
  ASSERT_EQ(iso.size(), 2u);
  const double tol = doc.at("optimal_set").at("grid_tolerance").get<double>();
  for (double target : {0.0, kPi}) {
    EXPECT_LE(std::min(angular_distance(iso[0], target), angular_distance(iso[1], target)), tol) << target;
  }
  // the smallest tabulated values sit at the grid points nearest 0 and pi
  double best = kInfinity, best_alpha = -1.0;
  for (const auto& row : doc.at("rows")) {
    if (row.at("functional_value").get<double>() < best) {
      best = row.at("functional_value").get<double>();
      best_alpha = row.at("alpha").get<double>();
    }
  }
  EXPECT_TRUE(angular_distance(best_alpha, 0.0) <= tol || angular_distance(best_alpha, kPi) <= tol) << best_alpha;
}

TEST_F(Cli, OutputIsDeterministic) {
  const std::string cfg = write_config("c.json", small_lobes());
  for (const std::string cmd : {"solve-linear", "solve-nonlinear --eps 0.02", "scan-rotations --grid 128"}) {
    const CliRun a = run(cmd + " --config " + cfg + " --threads 1");
    const CliRun again = run(cmd + " --config " + cfg + " --threads 1");
    const CliRun b = run(cmd + " --config " + cfg + " --threads 2");
    ASSERT_EQ(a.code, 0) << a.err;
    ASSERT_EQ(b.code, 0) << b.err;
    const json ja = json::parse(a.out), jagain = json::parse(again.out), jb = json::parse(b.out);
    EXPECT_EQ(without_metadata(ja), without_metadata(jagain)) << cmd;
    // the thread count is echoed in the config but is not part of the hash
    json ta = without_metadata(ja), tb = without_metadata(jb);
    ta["config"].erase("threads");
    tb["config"].erase("threads");
    EXPECT_EQ(ta, tb) << cmd;
    EXPECT_EQ(ja.at("config_hash"), jb.at("config_hash"));
    EXPECT_EQ(ja.at("metadata").at("threads").get<int>(), 1);
  }
}

TEST_F(Cli, SolveCommandsRoundTrip) {
  const std::string cfg = write_config("c.json", small_disk());
  const CliRun lin = run("solve-linear --config " + cfg + " --out " + path("lin.json"));
  ASSERT_EQ(lin.code, 0) << lin.err;
  const json jl = json::parse(slurp(path("lin.json")));
  EXPECT_NO_THROW(validate_output_json(jl));
  EXPECT_LT(jl.at("energy").get<double>(), 0.0);
  EXPECT_NO_THROW(parse_config(jl.at("config")));

  const CliRun nl = run("solve-nonlinear --config " + cfg + " --eps 0.01 --out " + path("nl.json"));
  ASSERT_EQ(nl.code, 0) << nl.err;
  const json jn = json::parse(slurp(path("nl.json")));
  EXPECT_NO_THROW(validate_output_json(jn));
  EXPECT_TRUE(jn.at("diagnostics").at("converged").get<bool>());
  const double ratio = jn.at("diagnostics").at("energy_over_eps2").get<double>();
  EXPECT_NEAR(ratio, jl.at("energy").get<double>(), 0.02 * std::abs(jl.at("energy").get<double>()));
}

TEST_F(Cli, StudyWritesJsonCsvAndSvg) {
  const std::string cfg = write_config("c.json", small_disk());
  const CliRun r = run("gamma-study --config " + cfg + " --out " + path("g.json") + " --csv " + path("g.csv") +
                    " --svg " + path("g.svg") + " --seed 5");
  ASSERT_EQ(r.code, 0) << r.err;
  const json doc = json::parse(slurp(path("g.json")));
  EXPECT_NO_THROW(validate_output_json(doc));
  EXPECT_EQ(doc.at("config").at("seed").get<std::uint64_t>(), 5u);
  EXPECT_EQ(doc.at("resolutions")[0].at("records").size(), 2u);
  const std::string csv = slurp(path("g.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kStudyCsvHeader);
  EXPECT_NE(slurp(path("g.svg")).find("<svg"), std::string::npos);

  // refined and lambda studies reject configurations they cannot run
  json hyd = small_disk();
  hyd["pressure"] = {{"name", "hydrostatic"}, {"params", {{"g_rho", 1.0}}}};
  EXPECT_EQ(run("refined-study --config " + write_config("h.json", hyd)).code, 2);
  EXPECT_EQ(run("lambda-study --config " + cfg).code, 2);
}

TEST_F(Cli, ShippedConfigsParse) {
  for (const char* name : {"disk_constant.json", "annulus_constant.json", "four_lobe_strict.json",
                           "four_lobe_flat.json"}) {
    const CliRun r = run(std::string("scan-rotations --grid 64 --config ") + LIVELOAD_CONFIG_DIR + "/" + name);
    EXPECT_EQ(r.code, 0) << name << ": " << r.err;
  }
}

}  // namespace
