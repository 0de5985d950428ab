#ifndef RELEX_CLI_HPP_
#define RELEX_CLI_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace relex::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kVerifyFailed = 1,
  kUsage = 2,
  kAssumption = 3,  // assumption or general-position failure
  kBudget = 4,
};

/// Parsed command line. Unset sizes are 0; per-command defaults apply.
struct RunConfig {
  std::string command;
  int depth = 2;
  long d = 0;
  long d1 = 0;
  long d2 = 0;
  double delta = 1e-4;
  std::uint64_t seed = 0;
  double tau = 1e-6;
  /// Budgets: neurons per depth-2 extraction, critical points per probe
  /// line, sign-recovery base points per row.
  int d1_max = 4096;
  int m_max = 4096;
  int retries = 32;
  std::size_t samples = 10000;
  std::uint64_t trials = 100000;
  std::uint64_t seeds = 8;
  unsigned workers = 0;
  std::string input;
  std::string reference;
  std::string candidate;
  std::string output;
};

/// Runs one command. `args` excludes the program name.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);
int run(int argc, char **argv);

}  // namespace relex::cli

#endif  // RELEX_CLI_HPP_
