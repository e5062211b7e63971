#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "blockfwer/baselines.hpp"
#include "blockfwer/io.hpp"
#include "blockfwer_cli/cli.hpp"

using namespace bfwer;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("blockfwer_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // 10 blocks of three; a few strong signals
  std::string pvalue_file() const {
    std::ostringstream s;
    s << "hypothesis_id,block_id,p_value\n";
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0, 1);
    for (int i = 0; i < 30; ++i) {
      const double p = i < 4 ? 1e-5 * (i + 1) : U(rng);
      s << "h" << i << ",b" << i / 3 << "," << p << "\n";
    }
    const auto f = path("p.csv");
    write_text_file(f, s.str());
    return f;
  }

  std::filesystem::path dir_;
};

}  // namespace

TEST_F(CliTest, SolveTruncnorm) {
  const auto r = run({"solve", "--alpha", "0.005", "--family", "truncnorm", "--theta", "-2"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j.at("diagnostics").at("flag"), "success");
  EXPECT_LE(std::abs(j.at("residuals")[1].get<double>()), 2e-4);
  EXPECT_LE(std::abs(j.at("residuals")[2].get<double>()), 2e-4);
  EXPECT_LE(j.at("residuals")[0].get<double>(), 2e-4);
  EXPECT_EQ(j.at("mu").size(), 3u);
}

TEST_F(CliTest, SolveUsageErrors) {
  EXPECT_EQ(run({"solve", "--alpha", "1.5"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"solve"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"solve", "--alpha", "0.01", "--family", "cauchy"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"solve", "--alpha", "0.01", "--theta", "1"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"bogus"}).code, cli::kExitUsage);
  EXPECT_EQ(run({}).code, cli::kExitUsage);
}

TEST_F(CliTest, HelpExitsZero) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, cli::kExitOk);
  EXPECT_NE(r.out.find("simulate"), std::string::npos);
}

TEST_F(CliTest, SolveUniformSucceeds) {
  const auto r = run({"solve", "--alpha", "0.005", "--family", "uniform", "--n-per-axis", "30"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(json::parse(r.out).at("diagnostics").at("flag"), "success");
}

TEST_F(CliTest, StrictSolveReportsFlagMessage) {
  const auto r = run({"solve", "--alpha", "0.005", "--theta", "-2", "--strict", "--n-per-axis", "40"});
  EXPECT_EQ(r.code, cli::kExitFailure);
  EXPECT_NE(r.err.find("Consider decreasing FWER level \xCE\xB1."), std::string::npos) << r.err;
}

TEST_F(CliTest, SolveWritesFile) {
  const auto out = path("solve.json");
  ASSERT_EQ(run({"solve", "--alpha", "0.01", "--theta", "-2", "--n-per-axis", "30", "--trajectory", "--out", out}).code, 0);
  const auto j = read_json_file(out);
  EXPECT_TRUE(j.contains("trajectory"));
}

TEST_F(CliTest, RunSidakLevels) {
  const auto r = run({"run", "--pvalues", pvalue_file(), "--alpha", "0.05", "--budget", "sidak", "--theta", "-2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  ASSERT_EQ(j.at("levels").size(), 10u);
  for (const auto& [k, v] : j.at("levels").items()) EXPECT_NEAR(v.get<double>(), 0.0051162, 5e-8) << k;
  EXPECT_GE(j.at("rejected").size(), 1u);
}

TEST_F(CliTest, RunKktHomogeneousIsBonferroni) {
  const auto r = run({"run", "--pvalues", pvalue_file(), "--alpha", "0.05", "--budget", "kkt", "--theta", "-2", "--n-per-axis", "30",
                      "--curve-points", "6"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& [k, v] : json::parse(r.out).at("levels").items()) EXPECT_NEAR(v.get<double>(), 0.005, 1e-9);
}

TEST_F(CliTest, RunParseErrorHasLineNumber) {
  const auto f = path("bad.csv");
  write_text_file(f, "hypothesis_id,block_id,p_value\nh1,a,0.1\nh2,a,zz\nh3,a,0.3\n");
  const auto r = run({"run", "--pvalues", f, "--alpha", "0.05"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("bad.csv:3: p_value 'zz' is not a number"), std::string::npos) << r.err;
}

TEST_F(CliTest, RunMissingFile) {
  EXPECT_NE(run({"run", "--pvalues", path("none.csv"), "--alpha", "0.05"}).code, 0);
}

TEST_F(CliTest, BaselineMatchesLibrary) {
  const auto f = pvalue_file();
  const auto t = read_pvalue_csv_file(f);
  const auto lib = hommel(t.p, 0.05);
  const auto r = run({"baseline", "--method", "hommel", "--alpha", "0.05", "--pvalues", f});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  std::vector<std::string> expect;
  for (std::size_t i : lib) expect.push_back(t.hypothesis_ids[i]);
  EXPECT_EQ(j.at("rejected").get<std::vector<std::string>>(), expect);
  EXPECT_EQ(j.at("method"), "hommel");
  EXPECT_EQ(j.at("strong_fwer_valid"), true);
}

TEST_F(CliTest, BaselineMinpNeedsSeed) {
  const auto f = pvalue_file();
  EXPECT_EQ(run({"baseline", "--method", "minp_resampling", "--alpha", "0.05", "--pvalues", f}).code,
            cli::kExitUsage);
  const auto a = run({"baseline", "--method", "minp_resampling", "--alpha", "0.05", "--pvalues", f, "--seed", "4",
                      "--resamples", "2000"});
  const auto b = run({"baseline", "--method", "minp_resampling", "--alpha", "0.05", "--pvalues", f, "--seed", "4",
                      "--resamples", "2000"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
}

TEST_F(CliTest, SimulateDeterministicAcrossThreads) {
  const auto cfg = path("sim.json");
  write_text_file(cfg, R"({"family": "truncnorm", "theta": -1.5, "K": 30, "B": 10, "alpha": 0.05,
    "configuration": "full_alternative", "n_rep": 200, "methods": ["boost", "bonferroni", "hommel"]})");
  const auto a = run({"simulate", "--config", cfg, "--seed", "7"});
  const auto b = run({"simulate", "--config", cfg, "--seed", "7", "--threads", "4"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out.substr(0, a.out.find('\n')), "family,theta,K,B,alpha,method,metric,value,mc_se,n_rep,seed,config");
  const auto c = run({"simulate", "--config", cfg, "--seed", "8"});
  EXPECT_NE(a.out, c.out);
}

TEST_F(CliTest, SimulateRequiresSeed) {
  const auto cfg = path("sim.json");
  write_text_file(cfg, R"({"family": "truncnorm", "theta": -1.5, "n_rep": 100})");
  EXPECT_EQ(run({"simulate", "--config", cfg}).code, cli::kExitUsage);
}

TEST_F(CliTest, SimulateBadConfigLine) {
  const auto cfg = path("bad.json");
  write_text_file(cfg, "{\n\"K\": 30,\n\"B\": oops\n}\n");
  const auto r = run({"simulate", "--config", cfg, "--seed", "1"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("bad.json:3:"), std::string::npos) << r.err;
}

TEST_F(CliTest, AllocateHomogeneousBlocks) {
  const auto blocks = path("blocks.json");
  write_text_file(blocks, R"({"b0": {"kind": "truncnorm", "params": {"theta": -2.0}},
                              "b1": {"kind": "truncnorm", "params": {"theta": -2.0}}})");
  const auto r = run({"allocate", "--alpha", "0.05", "--blocks", blocks, "--n-per-axis", "30", "--curve-points", "6"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lv = json::parse(r.out).at("levels");
  EXPECT_NEAR(lv.at("b0").get<double>(), 0.025, 1e-9);
  EXPECT_NEAR(lv.at("b1").get<double>(), 0.025, 1e-9);
}

TEST_F(CliTest, PluginRestrictsToTestingFold) {
  const auto r = run({"plugin", "--pvalues", pvalue_file(), "--alpha", "0.05", "--estimation-blocks", "b0,b1,b2,b3,b4",
                      "--n-per-axis", "40"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  for (const auto& id : j.at("rejected")) {
    const int i = std::stoi(id.get<std::string>().substr(1));
    EXPECT_GE(i, 15);
  }
}

TEST_F(CliTest, CurvesTabulates) {
  const auto r = run({"curves", "--alpha", "0.05", "--theta", "-2", "--blocks", "10", "--points", "4", "--n-per-axis", "30"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j.at("alphas").size(), 4u);
}
