#pragma once

#include "oed/app/config.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace oed::app {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalError = 3;

struct CommandOptions
{
  std::filesystem::path config;
  Overrides overrides;
  /// 0 uses every available core.
  unsigned workers = 0;
};

struct TaskResult
{
  std::filesystem::path output_dir;
  /// Files written, relative to output_dir, in write order.
  std::vector<std::string> files;
  /// Task-specific summary, also embedded in the manifest.
  nlohmann::json summary;
};

/// Field Jacobians for the configured sampling block, reusing the batch cache
/// when it matches model, seed, step and sample points.
FieldJacobianBatch acquire_batch(const RunConfig& config, const ForwardModel& model,
                                 unsigned workers, std::ostream& log);

/// Runs one task and writes its outputs plus manifest.json into
/// config.output_dir (created if missing). Exceptions propagate.
TaskResult run_task(Task task, const RunConfig& config, unsigned workers, std::ostream& log);

/// Loads the config, runs the task and maps failures to exit codes:
/// configuration and input errors give kExitConfigError, numerical failures
/// kExitNumericalError. Messages go to `err`.
int run_command(Task task, const CommandOptions& options, std::ostream& log, std::ostream& err);

} // namespace oed::app
