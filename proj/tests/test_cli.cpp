#include <pam/cli.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "pam");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  Result r;
  r.code = pam::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "pam_cli_tests";
  fs::create_directories(dir);
  const auto p = dir / name;
  fs::remove(p);
  fs::remove(p.string() + ".manifest.json");
  fs::remove(p.string() + ".cursor");
  return p;
}

TEST(Cli, MuClosedForm) {
  const auto r = run({"mu", "--d", "1", "--kappa", "0.75", "--tol", "1e-10"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_NEAR(j["mu"].get<double>(), (std::sqrt(13.0) - 3.0) / 2.0, 1e-9);
  EXPECT_NE(r.out.find("0.302775637"), std::string::npos);
  EXPECT_EQ(j["config"]["command"], "mu");
  EXPECT_EQ(j["config"]["version"], pam::cli::version);
}

TEST(Cli, MuCsvList) {
  const auto r = run({"mu", "--d", "1", "--kappas", "0,0.5", "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string header;
  std::string row0;
  std::string row1;
  std::getline(in, header);
  std::getline(in, row0);
  std::getline(in, row1);
  EXPECT_EQ(header, "d,kappa,mu");
  EXPECT_EQ(row0, "1,0,1");
  EXPECT_EQ(row1.rfind("1,0.5,0.41421356", 0), 0u);
}

TEST(Cli, GreenThreeDimensional) {
  const auto r = run({"green", "--d", "3", "--tol", "1e-8"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_NEAR(j["green_zero"]["value"].get<double>(), 0.2527310, 1e-7);
  EXPECT_EQ(j["green_zero"]["divergent"], false);
  EXPECT_EQ(j["green_l2sq"]["value"], "inf");
  EXPECT_EQ(j["green_l2sq"]["divergent"], true);
}

TEST(Cli, GreenDivergentAndCsv) {
  auto r = run({"green", "--d", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["green_zero"]["value"], "inf");
  EXPECT_EQ(j["green_zero"]["divergent"], true);
  r = run({"green", "--d", "5", "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("d,quantity,value,abs_error,method\n", 0), 0u);
  EXPECT_NE(r.out.find("5,alpha_d,0.597"), std::string::npos);
}

TEST(Cli, LambdaSpectralColumnIsNondecreasing) {
  const auto r = run({"lambda-spectral", "--d", "1", "--n", "1", "--p", "1", "--kappa", "0.2", "--rho", "0.3",
                      "--radii", "2,4,8,16"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "d,n,p,kappa,rho,R,lambda_box,residual");
  double prev = -1.0;
  int rows = 0;
  while (std::getline(in, line)) {
    // lambda_box is the 7th field
    std::istringstream ls(line);
    std::string field;
    for (int i = 0; i < 7; ++i) std::getline(ls, field, ',');
    const double v = std::stod(field);
    EXPECT_GE(v, prev);
    prev = v;
    ++rows;
  }
  EXPECT_EQ(rows, 4);
  EXPECT_NEAR(prev, std::sqrt(2.0) - 1.0, 5e-3);
  EXPECT_LE(prev, std::sqrt(2.0) - 1.0 + 1e-9);
}

TEST(Cli, RandomizedCommandsNeedASeed) {
  auto r = run({"lambda-mc", "--d", "1", "--kappa", "0.1", "--rho", "0.1", "--t", "1", "--samples", "10"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--seed"), std::string::npos);
  r = run({"check-gn", "--d", "1"});
  EXPECT_EQ(r.code, 2);
  r = run({"check-gn", "--d", "2", "--seed", "3", "--samples", "50", "--radius", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["all_hold"], true);
}

TEST(Cli, LambdaMcWorkersDoNotChangeOutput) {
  const std::vector<std::string> base{"lambda-mc", "--d",       "1",   "--kappa", "0.2",  "--rho",
                                      "0.3",       "--t",       "3",   "--samples", "500", "--seed",
                                      "17",        "--format", "csv"};
  auto a = base;
  a.insert(a.end(), {"--workers", "1"});
  auto b = base;
  b.insert(b.end(), {"--workers", "4"});
  const auto ra = run(a);
  const auto rb = run(b);
  ASSERT_EQ(ra.code, 0) << ra.err;
  EXPECT_EQ(ra.out, rb.out);
  EXPECT_EQ(ra.out.rfind("d,n,p,kappa,rho,t,samples,seed,lambda_t,stderr,ess\n", 0), 0u);
}

TEST(Cli, ParameterErrorsExitTwo) {
  EXPECT_EQ(run({"mu", "--d", "1"}).code, 2);                       // missing kappa
  EXPECT_EQ(run({"mu", "--d", "1", "--kappa", "-1"}).code, 2);      // out of range
  EXPECT_EQ(run({"mu", "--d", "x", "--kappa", "1"}).code, 2);       // not a number
  EXPECT_EQ(run({"mu", "--d", "1", "--bogus", "1"}).code, 2);       // unknown flag
  EXPECT_EQ(run({"frobnicate"}).code, 2);                           // unknown command
  EXPECT_EQ(run({"green", "--d", "3", "--format", "xml"}).code, 2);
  EXPECT_EQ(run({"tensor-gap", "--d", "1", "--p", "2", "--radius", "2"}).code, 2);
}

TEST(Cli, NonConvergenceExitsThreeWithBestIterate) {
  const auto r = run({"lambda-spectral", "--d", "1", "--kappa", "0.2", "--rho", "0.3", "--radius", "3", "--tol",
                      "1e-300"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("best value"), std::string::npos);
  EXPECT_NE(r.err.find("residual"), std::string::npos);
}

TEST(Cli, HelpAndVersion) {
  auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("lambda-spectral"), std::string::npos);
  r = run({"--version"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find(pam::cli::version), std::string::npos);
}

TEST(Cli, OutWritesFileAndManifest) {
  const auto out = scratch("mu.json");
  const auto r = run({"mu", "--d", "1", "--kappa", "0.5", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  const auto manifest = json::parse(slurp(out.string() + ".manifest.json"));
  EXPECT_EQ(manifest["command"], "mu");
  EXPECT_EQ(manifest["options"]["kappa"], "0.5");
  EXPECT_EQ(manifest["version"], pam::cli::version);
  EXPECT_TRUE(manifest.contains("seed"));
}

TEST(Cli, UnwritableOutPath) {
  const auto r = run({"mu", "--d", "1", "--kappa", "0.5", "--out", "/nonexistent-dir/x/mu.json"});
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, ConfigRoundTripIsByteIdentical) {
  const auto first = scratch("mc.json");
  auto r = run({"lambda-mc", "--d", "1", "--n", "2", "--kappa", "0.2", "--rho", "0.1", "--t", "2", "--samples",
                "300", "--seed", "5", "--out", first.string()});
  ASSERT_EQ(r.code, 0) << r.err;

  // the result file itself carries its config
  const auto second = scratch("mc2.json");
  r = run({"--config", first.string(), "--out", second.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto a = json::parse(slurp(first));
  auto b = json::parse(slurp(second));
  EXPECT_EQ(a["lambda_t"], b["lambda_t"]);
  EXPECT_EQ(a["stderr"], b["stderr"]);

  // the manifest replays too, including its --out; everything but the config is byte-identical
  fs::remove(first);
  r = run({"--config", first.string() + ".manifest.json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  auto c = json::parse(slurp(first));
  a.erase("config");
  c.erase("config");
  EXPECT_EQ(a.dump(), c.dump());

  // explicit flags override the replayed ones
  const auto third = scratch("mc3.json");
  r = run({"--config", first.string() + ".manifest.json", "--seed", "6", "--out", third.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto d = json::parse(slurp(third));
  EXPECT_EQ(d["config"]["seed"], "6");
  EXPECT_NE(d["lambda_t"], a["lambda_t"]);
}

TEST(Cli, PhaseCsvAndRestartableOut) {
  auto r = run({"phase", "--d", "3", "--ps", "1,2", "--rho", "0.05", "--kappas", "0.05,0.3", "--radius", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, pam::phase_csv_header());
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 4);

  const auto out = scratch("phase.csv");
  r = run({"phase", "--d", "3", "--ps", "1,2", "--rho", "0.05", "--kappas", "0.05,0.3", "--radius", "1", "--out",
           out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(out), [&] {
    std::string s;
    std::istringstream again(run({"phase", "--d", "3", "--ps", "1,2", "--rho", "0.05", "--kappas", "0.05,0.3",
                                  "--radius", "1"})
                                 .out);
    for (std::string line; std::getline(again, line);) s += line + "\n";
    return s;
  }());
  EXPECT_TRUE(fs::exists(out.string() + ".manifest.json"));
  EXPECT_TRUE(fs::exists(out.string() + ".cursor"));
}

TEST(Cli, TensorGapJson) {
  const auto r = run({"tensor-gap", "--d", "1", "--kappa", "0.25", "--rho", "0.25", "--radius", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_GT(j["gap"].get<double>(), 0.0);
  EXPECT_LT(j["identity_error"].get<double>(), 1e-8);
}

}  // namespace
