#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "umaml/harness/config.hpp"
#include "umaml/harness/plot.hpp"

namespace umaml::harness {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitUsage = 2,
  kExitDiverged = 3,
  kExitIo = 4,
};

struct RunOutcome {
  std::optional<TrainResult> result;  // empty when the run diverged
  std::string diagnostic;
};

// Trains under cfg and writes config.toml, metrics.csv, checkpoint.bin, plus
// pool/ (pool enabled) and uncertainty.csv (uncertainty mode) into `dir`.
RunOutcome run_training(const RunConfig& cfg, const std::filesystem::path& dir);

int cmd_train(const RunConfig& cfg, std::ostream& log);

// One run per (mode, alpha) for mode in {maml, uncertainty}. Writes
// summary.csv (mode, alpha, final_eval_loss, status) and spread.csv
// (mode, spread) with spread = max - min final loss, inf if any cell diverged.
int cmd_sweep_lr(const RunConfig& cfg, std::ostream& log);

// Trains once per mode, then evaluates at each n_query. Writes summary.csv
// (mode, n_query, accuracy, ci95), ci95 = 1.96 * standard error over tasks.
int cmd_sweep_query(const RunConfig& cfg, std::ostream& log);

int cmd_gradcheck(std::uint64_t seed, bool force_first_order,
                  const std::optional<std::filesystem::path>& out_dir, std::ostream& report);

int cmd_plot(const std::filesystem::path& csv, PlotKind kind, const std::filesystem::path& out,
             std::ostream& log);

// Mean and 1.96 * sample standard error.
std::pair<double, double> mean_ci95(const std::vector<double>& xs);

}  // namespace umaml::harness
