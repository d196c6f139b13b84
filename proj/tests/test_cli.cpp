#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "test_support.hpp"

using namespace curvlab;
using namespace curvlab::testing;

namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("curvlab_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

CliRun cli(const std::string& args) {
  static int counter = 0;
  const fs::path out = scratch_dir() / ("out" + std::to_string(counter) + ".txt");
  const fs::path err = scratch_dir() / ("err" + std::to_string(counter++) + ".txt");
  const std::string cmd = std::string("CURVLAB_THREADS=1 '") + CURVLAB_CLI + "' " + args + " >'" + out.string() +
                          "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string fixture_path(const std::string& name) { return std::string(CURVLAB_FIXTURES) + "/" + name + ".json"; }

fs::path write_temp(const std::string& name, const std::string& text) {
  const fs::path p = scratch_dir() / name;
  std::ofstream(p) << text;
  return p;
}

nlohmann::json json_of(const CliRun& r) { return nlohmann::json::parse(r.out); }

const nlohmann::json& check_named(const nlohmann::json& report, const std::string& name) {
  for (const auto& c : report["checks"])
    if (c["name"] == name) return c;
  throw std::runtime_error("no check " + name);
}

}  // namespace

TEST(CliExamples, InvariantsVeronese) {
  const CliRun r = cli("invariants " + fixture_path("veronese") + " --max-degree 8 --output json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json_of(r);
  EXPECT_EQ(j["profile"]["chi"], "0");
  EXPECT_EQ(j["profile"]["mu"], "4");
  // The consistent c-vector convention gives deg 3 here (see README, known red items).
  EXPECT_EQ(j["profile"]["degree"], 3);
  EXPECT_EQ(j["generating_function"]["text"], "-3/(1-t)^3 + 4/(1-t)^4");
  const auto& H = j["dims"]["dims_H"];
  for (int n = 0; n <= 8; ++n) EXPECT_EQ(H[static_cast<std::size_t>(n)].get<long>(), (2 * n + 1) * (2 * n + 2) / 2);
}

TEST(CliExamples, InvariantsFreeAndGraph) {
  for (const char* name : {"free_d2", "graph_d2_N2"}) {
    const CliRun r = cli(std::string("invariants ") + fixture_path(name) + " --output json");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(json_of(r)["profile"]["chi"], "1") << name;
  }
}

TEST(CliExamples, CurvatureFreeBoth) {
  const CliRun r = cli("curvature " + fixture_path("free_d2") + " --method both --output json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json_of(r);
  ASSERT_EQ(j["curvature"].size(), 2u);
  EXPECT_EQ(j["curvature"][0]["method"], "asymptotic");
  EXPECT_NEAR(j["curvature"][0]["value"].get<double>(), 1.0, 1e-9);
  EXPECT_EQ(j["curvature"][1]["method"], "boundary-mc");
  EXPECT_NEAR(j["curvature"][1]["value"].get<double>(), 1.0, 1e-6);
  EXPECT_TRUE(check_named(j, "gauss-bonnet")["passed"].get<bool>());
}

TEST(CliExamples, CurvatureEvenAndGraph) {
  const CliRun e = cli("curvature " + fixture_path("even_d2") + " --output json");
  ASSERT_EQ(e.code, 0) << e.err;
  const auto je = json_of(e);
  EXPECT_NEAR(je["curvature"][0]["value"].get<double>(), 0.0, 1e-6);
  EXPECT_TRUE(check_named(je, "gauss-bonnet")["passed"].get<bool>());
  const CliRun g = cli("curvature " + fixture_path("graph_d2_N2") + " --output json");
  ASSERT_EQ(g.code, 0) << g.err;
  EXPECT_NEAR(json_of(g)["curvature"][0]["value"].get<double>(), 1.0, 1e-6);
}

TEST(CliExamples, CurvatureTextShowsResidual) {
  const CliRun r = cli("curvature @free_d2");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("gauss-bonnet"), std::string::npos);
  EXPECT_NE(r.out.find("curvature [asymptotic]"), std::string::npos);
}

TEST(CliExamples, MetricBasisMaximalIdeal) {
  const CliRun r = cli("metric-basis " + fixture_path("maximal_ideal_d3") + " --output json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto mb = json_of(r)["metric_basis"];
  ASSERT_EQ(mb["elements"].size(), 3u);
  std::set<std::string> monos;
  for (const auto& el : mb["elements"]) {
    ASSERT_EQ(el["terms"].size(), 1u);
    monos.insert(el["terms"][0]["monomial"].get<std::string>());
  }
  EXPECT_EQ(monos, (std::set<std::string>{"z1", "z2", "z3"}));
  EXPECT_TRUE(mb["codimension"]["finite"].get<bool>());
  EXPECT_EQ(mb["codimension"]["codimension"], 1);
}

TEST(CliExamples, MetricBasisPrincipal) {
  const CliRun r = cli("metric-basis " + fixture_path("z1_d2") + " --max-degree 10 --output json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json_of(r);
  const auto& mb = j["metric_basis"];
  ASSERT_EQ(mb["elements"].size(), 10u);
  for (std::size_t k = 0; k < 10; ++k) {
    const auto& el = mb["elements"][k];
    ASSERT_EQ(el["terms"].size(), 1u);
    EXPECT_EQ(el["terms"][0]["exponents"], (std::vector<int>{1, static_cast<int>(k)}));
  }
  for (const auto& fr : mb["frame_residuals"]) EXPECT_LE(fr.get<double>(), 1e-10);
  EXPECT_TRUE(check_named(j, "frame-identity")["passed"].get<bool>());
}

TEST(CliExamples, MetricBasisVeroneseGrowth) {
  const CliRun r = cli("metric-basis " + fixture_path("veronese") + " --output json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto cr = json_of(r)["metric_basis"]["codimension"];
  EXPECT_TRUE(cr["conclusive"].get<bool>());
  EXPECT_FALSE(cr["finite"].get<bool>());
}

TEST(CliExamples, VerifyPasses) {
  for (const char* name : {"veronese", "free_d3"}) {
    const CliRun r = cli(std::string("verify ") + fixture_path(name) + " --output json");
    EXPECT_EQ(r.code, 0) << name << r.err;
    const auto j = json_of(r);
    for (const auto& c : j["checks"]) EXPECT_TRUE(c["passed"].get<bool>()) << name << " " << c["name"];
  }
}

TEST(CliExitCodes, InputErrors) {
  const CliRun missing = cli("invariants " + (scratch_dir() / "missing.json").string());
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("cannot open"), std::string::npos);

  const auto bad = write_temp("corrupt.json", "{\"d\": 2, \"rank\": 1,\n \"shifts\": [0 \"generators\": []}");
  const CliRun corrupt = cli("verify " + bad.string());
  EXPECT_EQ(corrupt.code, 1);
  EXPECT_NE(corrupt.err.find("byte"), std::string::npos);
  EXPECT_NE(corrupt.err.find("line 2"), std::string::npos);

  EXPECT_EQ(cli("metric-basis " + fixture_path("graph_d2_N1")).code, 1);
  EXPECT_EQ(cli("curvature @free_d2 --r-schedule 0.99,0.9").code, 1);
  EXPECT_EQ(cli("curvature @free_d2 --r-schedule 0.5,x").code, 1);
  EXPECT_EQ(cli("curvature @free_d2 --method sideways").code, 1);
  EXPECT_EQ(cli("examples show nope").code, 1);
  EXPECT_EQ(cli("invariants").code, 1);
  EXPECT_EQ(cli("curvature @even_d2 --method boundary").code, 1);
}

TEST(CliExitCodes, NotStabilized) {
  const CliRun r = cli("invariants @veronese --max-degree 4");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("raise --max-degree"), std::string::npos);
}

TEST(CliExitCodes, PropertyFailureNamesTheProperty) {
  const CliRun r = cli("verify @graph_d2_N2 --max-degree 8");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("gauss-bonnet"), std::string::npos);
}

TEST(CliDeterminism, ByteIdenticalJson) {
  const std::string args = "curvature @graph_d2_N1 --method both --samples 20 --r-schedule 0.5,0.6 --seed 7 --output json";
  const CliRun a = cli(args), b = cli(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const CliRun c = cli(args + " --threads 3");
  EXPECT_EQ(a.out, c.out);
  const CliRun d = cli("curvature @graph_d2_N1 --method both --samples 20 --r-schedule 0.5,0.6 --seed 8 --output json");
  EXPECT_NE(a.out, d.out);
}

TEST(CliReport, JsonRoundTrip) {
  for (const char* args : {"invariants @even_d2 --output json", "curvature @free_d2 --method both --output json",
                           "metric-basis @z1_d2 --max-degree 6 --output json", "verify @maximal_ideal_d2 --output json"}) {
    const CliRun r = cli(args);
    ASSERT_EQ(r.code, 0) << args << r.err;
    const Report rep = report_from_json(nlohmann::json::parse(r.out));
    EXPECT_EQ(report_json_text(rep), r.out) << args;
    EXPECT_EQ(report_from_json(report_to_json(rep)), rep) << args;
  }
}

TEST(CliReport, LibraryRunMatchesCli) {
  RunConfig cfg;
  cfg.command = "invariants";
  cfg.input = "@graph_d2_N1";
  const Report rep = run_invariants(cfg);
  const CliRun r = cli("invariants @graph_d2_N1 --output json");
  EXPECT_EQ(report_json_text(rep), r.out);
}

TEST(CliRegistry, ListsEveryFixture) {
  const CliRun r = cli("examples list --output json");
  ASSERT_EQ(r.code, 0);
  const auto j = json_of(r);
  std::vector<std::string> names;
  for (const auto& f : j) names.push_back(f["name"]);
  EXPECT_EQ(names, (std::vector<std::string>{"free_d1", "free_d2", "free_d3", "free_d4", "maximal_ideal_d2",
                                             "maximal_ideal_d3", "z1_d2", "even_d2", "veronese", "graph_d2_N1",
                                             "graph_d2_N2"}));
}

TEST(CliRegistry, ShowVeronese) {
  const CliRun r = cli("examples show veronese");
  ASSERT_EQ(r.code, 0);
  const auto j = json_of(r);
  EXPECT_EQ(j["d"], 6);
  ASSERT_EQ(j["generators"].size(), 6u);
  for (const auto& g : j["generators"]) {
    const auto& terms = g["components"][0];
    ASSERT_EQ(terms.size(), 2u);
    for (const auto& t : terms) {
      int deg = 0;
      for (int e : t["exponents"]) deg += e;
      EXPECT_EQ(deg, 2);
    }
  }
}

TEST(CliRegistry, ShowGraphN2) {
  const CliRun r = cli("examples show graph_d2_N2");
  ASSERT_EQ(r.code, 0);
  const auto j = json_of(r);
  EXPECT_EQ(j["shifts"], (std::vector<int>{0, -2}));
  ASSERT_EQ(j["generators"].size(), 1u);
  const auto& comps = j["generators"][0]["components"];
  EXPECT_EQ(comps[0][0]["exponents"], (std::vector<int>{0, 0}));
  EXPECT_EQ(comps[0][0]["coeff"], "1");
  EXPECT_EQ(comps[1][0]["exponents"], (std::vector<int>{2, 0}));
  EXPECT_EQ(comps[1][0]["coeff"], "1");
}

TEST(CliRegistry, FixtureFilesMatchRegistry) {
  std::size_t seen = 0;
  for (const auto& f : fixture_registry()) {
    const auto loaded = load_presentation(fixture_path(f.name));
    ASSERT_TRUE(std::holds_alternative<ExactPresentation>(loaded)) << f.name;
    EXPECT_EQ(std::get<ExactPresentation>(loaded), f.presentation) << f.name;
    ++seen;
  }
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(CURVLAB_FIXTURES))
    if (e.path().extension() == ".json") ++files;
  EXPECT_EQ(files, seen);
}

TEST(CliRegistry, AtNameEqualsFile) {
  const CliRun a = cli("invariants @z1_d2 --output json");
  const CliRun b = cli("invariants " + fixture_path("z1_d2") + " --output json");
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  auto ja = json_of(a), jb = json_of(b);
  ja["input"].erase("source");
  jb["input"].erase("source");
  EXPECT_EQ(ja, jb);
}
