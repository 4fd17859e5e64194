#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <map>

#include <json.hpp>

#include "cli.hpp"
#include "crisk/backtest.hpp"
#include "crisk/csv.hpp"
#include "support.hpp"

using namespace crisk;
namespace fs = std::filesystem;

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

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = crisk::testing::read_file(e.path());
  }
  return files;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = crisk::testing::scratch_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    prices_ = crisk::testing::fixture("prices.csv");
    portfolios_ = crisk::testing::write_file(dir_ / "portfolios.csv",
                                      "portfolio,symbol,weight\n"
                                      "DAI,WBTC,0.3\nDAI,ETH,0.5\nDAI,LINK,0.2\n"
                                      "EVEN,WBTC,0.5\nEVEN,ETH,0.5\n");
  }
  fs::path dir_;
  std::string prices_;
  std::string portfolios_;
};

}  // namespace

TEST_F(CliTest, HelpAndUsageErrors) {
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"optimize", "--bogus"}).code, 2);
  EXPECT_EQ(run({"optimize", "--objective", "sharpe", "--prices", prices_}).code, 2);
  EXPECT_EQ(run({"launch"}).code, 2);
  const Result missing = run({"optimize", "--out", (dir_ / "o").string()});
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("usage_error"), std::string::npos);
  EXPECT_EQ(run({"simulate", "--prices", prices_, "--portfolios", portfolios_, "--start", "2023-02-30",
                 "--out", (dir_ / "o").string()})
                .code,
            2);
}

TEST_F(CliTest, DataErrorsAreStructuredJson) {
  const auto bad = crisk::testing::write_file(dir_ / "bad.csv", "date,symbol,close_usd\n2023-01-01,A,1\n2023-01-02,A,oops\n");
  const Result r = run({"optimize", "--prices", bad, "--out", (dir_ / "o").string()});
  EXPECT_EQ(r.code, 1);
  const auto j = nlohmann::json::parse(r.err);
  EXPECT_EQ(j["error"]["kind"], "parse_error");
  EXPECT_EQ(j["error"]["file"], bad);
  EXPECT_EQ(j["error"]["line"], 3);

  const Result infeasible = run({"optimize", "--prices", prices_, "--symbols", "WBTC,ETH", "--caps", "0.2",
                                 "--out", (dir_ / "o").string()});
  EXPECT_EQ(infeasible.code, 1);
  EXPECT_EQ(nlohmann::json::parse(infeasible.err)["error"]["kind"], "infeasible");
}

TEST_F(CliTest, EverySubcommandIsByteIdenticalOnRerun) {
  const std::vector<std::vector<std::string>> commands = {
      {"optimize", "--prices", prices_, "--window", "120", "--objective", "semivariance", "--caps", "0.4"},
      {"optimize", "--prices", prices_, "--window", "120", "--objective", "variance", "--caps", "0.4", "--label", "v"},
      {"frontier", "--prices", prices_, "--window", "120", "--caps", "0.5", "--points", "6"},
      {"simulate", "--prices", prices_, "--portfolios", portfolios_, "--mode", "gbm", "--runs", "300", "--seed", "7",
       "--horizon", "60", "--threads", "3"},
      {"simulate", "--prices", prices_, "--portfolios", portfolios_, "--portfolio", "EVEN", "--mode", "historical",
       "--runs", "300", "--horizon", "60", "--label", "hist"},
      {"rolling", "--prices", prices_, "--window", "30", "--step", "25", "--caps", "0.5"},
      {"ledger", "--events", crisk::testing::fixture("ledger_events.csv"), "--pips", crisk::testing::fixture("ledger_pips.csv"),
       "--prices", crisk::testing::fixture("ledger_prices.csv")},
      {"compare", "--prices", prices_, "--portfolios", portfolios_, "--runs", "200", "--horizon", "60"},
  };
  for (const auto& cmd : commands) {
    SCOPED_TRACE(cmd[0]);
    for (const char* root : {"a", "b"}) {
      auto args = cmd;
      args.insert(args.end(), {"--out", (dir_ / root).string()});
      const Result r = run(args);
      ASSERT_EQ(r.code, 0) << r.err;
      EXPECT_NE(r.out.find(cmd[0] + ":"), std::string::npos);
    }
  }
  const auto a = snapshot(dir_ / "a");
  const auto b = snapshot(dir_ / "b");
  EXPECT_EQ(a.size(), b.size());
  EXPECT_GT(a.size(), 20u);
  for (const auto& [name, content] : a) {
    ASSERT_TRUE(b.count(name)) << name;
    EXPECT_EQ(content, b.at(name)) << name;
  }
  EXPECT_TRUE(a.count("optimize/latest/manifest.json"));
  const auto manifest = nlohmann::json::parse(a.at("simulate/latest/manifest.json"));
  EXPECT_EQ(manifest["params"]["seed"], 7);
  EXPECT_EQ(manifest["subcommand"], "simulate");
}

TEST_F(CliTest, CompareMatchesLibrary) {
  const Result r = run({"compare", "--prices", prices_, "--portfolios", portfolios_, "--runs", "200", "--horizon",
                        "60", "--seed", "4", "--out", (dir_ / "o").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = nlohmann::json::parse(crisk::testing::read_file(dir_ / "o/compare/latest/report.json"));

  SimConfig cfg;
  cfg.n_runs = 200;
  cfg.horizon_days = 60;
  cfg.seed = 4;
  const auto rows = compare_portfolios(
      {{"DAI", {"WBTC", "ETH", "LINK"}, (Eigen::VectorXd(3) << 0.3, 0.5, 0.2).finished()}},
      read_price_panel(prices_), CompareOptions{cfg, {}, 0.9});
  ASSERT_TRUE(rows[0].ok());
  EXPECT_EQ(report["rows"][0]["annual_volatility"].get<double>(), rows[0].annual_volatility);
  EXPECT_EQ(report["rows"][0]["gbm_failure_prob"].get<double>(), rows[0].gbm_failure_prob);
  EXPECT_EQ(report["rows"][0]["historical_failure_prob"].get<double>(), rows[0].historical_failure_prob);
}

TEST_F(CliTest, DataDirFromEnvironment) {
  fs::copy_file(prices_, dir_ / "prices.csv");
  ::setenv("CRISK_DATA_DIR", dir_.c_str(), 1);
  const Result r = run({"optimize", "--window", "60", "--caps", "0.5", "--out", (dir_ / "o").string()});
  ::unsetenv("CRISK_DATA_DIR");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "o/optimize/latest/weights.csv"));
}

TEST_F(CliTest, RollingLogsExclusions) {
  const Result r = run({"rolling", "--prices", prices_, "--window", "30", "--step", "10", "--caps", "0.5",
                        "--out", (dir_ / "o").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string log = crisk::testing::read_file(dir_ / "o/rolling/latest/log.csv");
  EXPECT_NE(log.find("excluded,MATIC"), std::string::npos);
  const std::string weights = crisk::testing::read_file(dir_ / "o/rolling/latest/weights.csv");
  EXPECT_EQ(weights.substr(0, weights.find('\n')), "date,status,WBTC,ETH,LINK,UNI,AAVE,MATIC");
}

TEST_F(CliTest, LedgerWritesHistoricalPortfolio) {
  const Result r = run({"ledger", "--events", crisk::testing::fixture("ledger_events.csv"), "--pips",
                        crisk::testing::fixture("ledger_pips.csv"), "--prices", crisk::testing::fixture("ledger_prices.csv"),
                        "--out", (dir_ / "o").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(crisk::testing::read_file(dir_ / "o/ledger/latest/portfolio.csv"), "portfolio,symbol,weight\nDAI,WETH,1\n");
}
