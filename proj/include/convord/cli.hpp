#pragma once

#include "convord/config.hpp"
#include "convord/report.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace convord {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitViolated = 2;

enum class Command { Constants, Simulate, Compare, Propagate, Converge, Counterexample };

std::string_view command_id(Command command);
Command parse_command(std::string_view id);
const std::vector<std::string>& command_ids();

/// Command-line values that replace config entries.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<std::size_t> steps;
  /// "auto" or a number.
  std::optional<std::string> threshold;
  bool override_hypotheses = false;
  std::optional<std::string> out;
  std::optional<std::vector<std::string>> formats;
};

void apply_overrides(ExperimentConfig& config, const Overrides& overrides);

struct CommandResult {
  Json report;
  CsvTable csv;
  /// False when any verdict is violated or any check fails.
  bool passed = true;
};

/// Runs one command; throws on configuration or runtime errors.
CommandResult execute(Command command, const ExperimentConfig& config);

/// 0 when passed, 2 otherwise.
int exit_code(const CommandResult& result);

/// execute + write_reports with error reporting to err; returns the exit status.
int run(Command command, const ExperimentConfig& config, std::ostream& out, std::ostream& err);

}  // namespace convord
