#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rducb/engine.hpp"

namespace rducb {

inline constexpr int kConfigFormatVersion = 1;
inline constexpr std::string_view kSoftwareVersion = "0.1.0";

// Experiment file, one `key = value` per line, `#` starts a comment:
//
//   version = 1
//   output_dir = out
//   seeds = 1..5
//   budget = 60            # top-level run keys are defaults for every run
//   [run stybtang20]
//   benchmark = stybtang
//   dim = 20
//
// Every run section yields one RunConfig per seed.
struct ExperimentFile {
  int version = kConfigFormatVersion;
  std::string output_dir = "out";
  std::vector<std::uint64_t> seeds{0};
  std::vector<RunConfig> runs;
};

// Throws kParseError with the offending line and key.
ExperimentFile parse_experiment(std::string_view text);
ExperimentFile load_experiment(const std::filesystem::path& path);

// "1..5", "3" or "1,4,9".
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

// Sets one run key on a config; false when the key is unknown.
bool apply_run_key(RunConfig& config, std::string_view key, std::string_view value);

// Every key of a run with its resolved value, in a fixed order.
std::vector<std::pair<std::string, std::string>> run_keys(const RunConfig& config);

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::size_t failed_round = 0;
  std::size_t rounds = 0;
};

struct RunOutcome {
  std::string name;
  std::vector<SeedOutcome> seeds;
  bool ok() const;
};

struct ExperimentOutcome {
  std::vector<RunOutcome> runs;
  std::filesystem::path manifest;
  bool ok() const;
};

// Executes every (run, seed) pair on `jobs` worker threads and writes
// <out>/<run>/trace_seed<k>.csv, <out>/<run>/summary.csv and
// <out>/manifest.json.
ExperimentOutcome run_experiment(const ExperimentFile& experiment, std::size_t jobs);

// Manifest JSON text for an experiment and its outcome.
std::string manifest_json(const ExperimentFile& experiment, const ExperimentOutcome& outcome);

// Rebuilds the experiment recorded in a manifest.
ExperimentFile parse_manifest(std::string_view json_text);

}  // namespace rducb
