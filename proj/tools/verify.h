#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace dragon::tools {

struct CheckLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckLine> checks;
  double seconds = 0.0;

  bool passed() const;
  void Add(std::string name, bool pass, std::string detail);
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  std::size_t trials = 1'000'000;  // Monte-Carlo draws per instance
  std::size_t instances = 25;
  /// Optional CSV with one row per measured quantity.
  std::ostream* csv = nullptr;
};

SuiteReport VerifyAggregation(const VerifyOptions& opt);   // sampled target law vs the interpolated target
SuiteReport VerifyAcceptance(const VerifyOptions& opt);    // empirical acceptance vs the closed form
SuiteReport VerifyMonotonicity(const VerifyOptions& opt);  // acceptance increases with gamma
SuiteReport VerifyScheduling(const VerifyOptions& opt);    // delta-Z sign vs direct latency comparison
SuiteReport VerifyPipelines(const VerifyOptions& opt);     // the four repeated-acceptance pipelines
SuiteReport VerifySpeedup(const VerifyOptions& opt);      // simulated speedup vs closed form
SuiteReport VerifyStrategies(const VerifyOptions& opt);    // dragon vs static/random placement
SuiteReport VerifyTransport(const VerifyOptions& opt);     // random message round trips

/// In-process two-node runs over TCP loopback.
SuiteReport VerifyDistributed(const VerifyOptions& opt);
SuiteReport VerifyVanilla(const VerifyOptions& opt);

std::vector<std::string> SuiteNames();
/// Throws std::invalid_argument for an unknown name.
SuiteReport RunSuite(const std::string& name, const VerifyOptions& opt);

/// One "PASS|FAIL suite/check: detail" line per check.
void PrintReport(std::ostream& out, const SuiteReport& report);

}  // namespace dragon::tools
