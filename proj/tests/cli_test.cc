#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "cli.h"

namespace dragon::tools {
namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dragon");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path Temp(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("dragon_cli_test_" + name);
}

TEST(ParseTokenList, Forms) {
  EXPECT_EQ(ParseTokenList("3 4,5"), (std::vector<TokenId>{3, 4, 5}));
  EXPECT_TRUE(ParseTokenList("  ").empty());
  EXPECT_THROW(ParseTokenList("3 x"), std::invalid_argument);
  EXPECT_THROW(ParseTokenList("-1"), std::invalid_argument);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(Cli({}).code, kExitUsage);
  EXPECT_EQ(Cli({"simulate", "--nope"}).code, kExitUsage);
  EXPECT_EQ(Cli({"simulate"}).code, kExitUsage);
  EXPECT_EQ(Cli({"simulate", "--bernoulli", "1.5"}).code, kExitUsage);
  EXPECT_EQ(Cli({"--log-level", "loud", "simulate", "--bernoulli", "0.5"}).code, kExitUsage);
  EXPECT_EQ(Cli({"verify", "--suite", "nonsense"}).code, kExitUsage);
  EXPECT_EQ(Cli({"--help"}).code, kExitOk);
}

TEST(Cli, SimulateAllRejectReportsVanilla) {
  const auto r = Cli({"simulate", "--bernoulli", "0.0", "--tokens", "200"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::istringstream in(r.out);
  std::string header;
  std::string row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "strategy,tokens,total_ms,steady_ms,mean_ms,switches,vanilla_ms");
  std::vector<std::string> f;
  std::istringstream cells(row);
  for (std::string c; std::getline(cells, c, ',');) f.push_back(c);
  ASSERT_EQ(f.size(), 7u);
  EXPECT_NEAR(std::stod(f[3]), std::stod(f[6]), 1e-9);
  EXPECT_NEAR(std::stod(f[6]), 3.0, 1e-12);
}

TEST(Cli, SimulateWritesPerTokenCsv) {
  const auto csv = Temp("sim.csv");
  const auto r = Cli({"--csv", csv.string(), "simulate", "--bernoulli", "0.5", "--strategy", "dragon", "--tokens", "30"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "step,time_ms,latency_ms,aggregator");
  std::size_t rows = 0;
  for (std::string l; std::getline(in, l);) rows += !l.empty();
  EXPECT_EQ(rows, 30u);
}

TEST(Cli, CorpusTraceAndBench) {
  const auto corpus = Temp("corpus.txt");
  ASSERT_EQ(Cli({"--seed", "4", "make-corpus", "--docs", "8", "--out", corpus.string()}).code, kExitOk);
  const auto a = Cli({"--seed", "4", "make-corpus", "--docs", "8"});
  std::ifstream in(corpus);
  std::stringstream buf;
  buf << in.rdbuf();
  EXPECT_EQ(a.out, buf.str());

  const auto trace = Cli({"--seed", "4", "record-trace", "--corpus", corpus.string(), "--max-new-tokens", "12"});
  ASSERT_EQ(trace.code, kExitOk) << trace.err;
  EXPECT_EQ(trace.out.substr(0, 22), "step,accept_l,accept_r");

  const auto prompts = Temp("prompts.txt");
  std::ofstream(prompts) << "1 2 3\n5 6\n";
  const auto b = Cli({"bench", "--corpus", corpus.string(), "--prompts", prompts.string(), "--max-new-tokens", "6"});
  ASSERT_EQ(b.code, kExitOk) << b.err;
  EXPECT_EQ(std::count(b.out.begin(), b.out.end(), '\n'), 3);

  EXPECT_NE(Cli({"record-trace", "--corpus", Temp("missing").string()}).code, kExitOk);
}

TEST(Cli, FitProfileFromSamples) {
  const auto samples = Temp("samples.csv");
  std::ofstream(samples) << "t,c_dec\n1,7\n2,9\n3,11\n";
  const auto r = Cli({"fit-profile", "--samples", samples.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out, "k_a,k_b,k_c\n2,1,5\n");
}

TEST(Cli, NodeArgumentValidation) {
  NodeArgs a;
  a.role = "device";
  EXPECT_THROW(Validate(a), std::invalid_argument);
  a.connect = "127.0.0.1:1";
  EXPECT_NO_THROW(Validate(a));
  a.static_side = "moon";
  EXPECT_THROW(Validate(a), std::invalid_argument);
  a.static_side = "auto";
  a.jitter_ms = 5;
  EXPECT_THROW(Validate(a), std::invalid_argument);
}

TEST(Cli, VerifyTransportSuite) {
  const auto r = Cli({"verify", "--suite", "transport"});
  EXPECT_EQ(r.code, kExitOk) << r.out;
  EXPECT_NE(r.out.find("PASS transport/round_trip"), std::string::npos);
}

}  // namespace
}  // namespace dragon::tools
