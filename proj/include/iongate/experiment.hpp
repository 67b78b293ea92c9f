#pragma once

// Batch experiment front end: parses experiment configs, runs
// gates/sweeps/spectra and emits CSV results plus a JSON run manifest.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "iongate/hilbert.hpp"

namespace iongate {
namespace experiment {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

// Exit codes of the CLI contract.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kSchemaViolation = 2,
  kPhysicsViolation = 3,
  kNumericFailure = 4,
};

struct RunOptions {
  std::filesystem::path output_dir = ".";
  std::uint64_t seed = 0;         // overrides the config seed when set
  bool seed_overridden = false;
  int workers = 1;
};

struct RunResult {
  std::vector<std::filesystem::path> artifacts;
  std::string summary;  // one-line outcome for the terminal
};

// Loads, validates and executes a config. Throws SchemaError, PhysicsError
// or ConvergenceError; the CLI maps those onto exit codes.
RunResult run_config(const std::filesystem::path& config_path,
                     const RunOptions& options);

struct CatalogEntry {
  std::string name;
  std::filesystem::path path;
  std::string experiment;
  std::string description;
};

// Bundled configs from the config directory (IONGATE_CONFIG_DIR or the
// build-time default), stable ordering.
std::vector<CatalogEntry> list_experiments();
std::filesystem::path config_directory();

// Deterministic CSV number formatting shared by all writers.
std::string format_number(double v);

}  // namespace experiment
}  // namespace iongate
