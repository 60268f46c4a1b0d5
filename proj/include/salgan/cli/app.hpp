#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "salgan/cli/checkpoint.hpp"
#include "salgan/cli/experiment.hpp"

SALGAN_NAMESPACE_BEGIN
namespace cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

/// Exclusive ownership of a run directory through a lock file created with
/// O_EXCL; StateError if another process holds it. Released on destruction.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path path_;
};

/// `salgan: error[Kind]: message` on one line.
std::string error_line(const std::string& kind, const std::string& message);

/// Parses argv (argv[0] is the program name) and runs one subcommand.
/// Returns 0 on success, 2 on configuration or usage errors, 1 otherwise.
int run(const std::vector<std::string>& args);

struct SummaryRow {
  std::string metric;
  double value = 0.0;
};
std::vector<SummaryRow> read_summary(const std::filesystem::path& path);

/// Mean and sample standard deviation per metric over the summaries of
/// `runs`; the deviation column is omitted with fewer than two runs.
std::string aggregate_report(const std::vector<std::filesystem::path>& runs);

/// Builds the experiment for the run directory, materializing corpus-mode
/// artifacts (vocabulary, encoded splits, evaluator) when absent.
Experiment open_experiment(const ExperimentConfig& config, const std::filesystem::path& dir);

}  // namespace cli
SALGAN_NAMESPACE_END
