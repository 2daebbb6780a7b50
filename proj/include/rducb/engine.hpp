#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rducb/acquisition.hpp"
#include "rducb/benchmarks.hpp"
#include "rducb/decomposition.hpp"
#include "rducb/error.hpp"

namespace rducb {

enum class Strategy { kRducb, kRandomSearch, kFixedTree, kMlTree };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);

// One search-space dimension of an external black box: an interval, or a
// finite value set when `values` is non-empty.
struct DomainEntry {
  Bounds bounds;
  std::vector<double> values;
};

struct RunConfig {
  std::string name = "run";
  std::string benchmark = "stybtang";
  std::size_t dim = 10;
  std::size_t budget = 100;      // N
  std::size_t init_budget = 10;  // N_init
  std::optional<std::size_t> edges;  // E; default max(floor(d/5), 1)
  Strategy strategy = Strategy::kRducb;
  AcquisitionFamily acquisition = AcquisitionFamily::kAddUcb;
  std::optional<double> beta;  // constant override of the schedule
  std::size_t grid_size = 100;
  bool refine = false;
  double memory_cap_mb = 1024.0;
  std::size_t fit_restarts = 3;
  std::size_t fit_max_steps = 200;
  // Box for the initial design; empty means the whole domain.
  std::vector<Bounds> init_region;
  std::size_t learn_interval = 15;        // ml-tree
  std::size_t structure_proposals = 100;  // ml-tree
  // External black box (benchmark = "external").
  std::string command;
  std::vector<DomainEntry> domain;
  Sense sense = Sense::kMinimize;
  double timeout_s = 60.0;
  // Wall-clock per round is left at 0 unless enabled, keeping traces
  // byte-identical across repeated runs.
  bool record_wall_time = false;

  std::uint64_t seed = 0;
};

// Edge count max(floor(d/5), 1), capped at d - 1.
std::size_t default_tree_edges(std::size_t d);
std::size_t resolved_edges(const RunConfig& config, std::size_t d);

// Throws kInvalidParameter on inconsistent settings.
void validate(const RunConfig& config);

Benchmark make_run_benchmark(const RunConfig& config);

enum class Phase { kInit, kBo };

struct TraceRow {
  std::size_t round = 0;
  Phase phase = Phase::kInit;
  std::string decomposition;  // serialize_inline form; empty when unused
  std::size_t n_edges = 0;
  double beta = 0.0;  // NaN when no bonus applies
  std::vector<double> x;
  double y = 0.0;
  double best_y = 0.0;
  double inst_regret = 0.0;  // NaN without a known optimum
  double best_regret = 0.0;
  double wall_ms = 0.0;

  bool operator==(const TraceRow&) const;
};

struct RegretTrace {
  std::uint64_t seed = 0;
  std::size_t dim = 0;
  std::vector<TraceRow> rows;

  bool operator==(const RegretTrace&) const = default;
};

// Raised when a round fails; carries the rounds completed before it.
class RunError : public Error {
 public:
  RunError(ErrorCode code, const std::string& what, RegretTrace partial,
           std::size_t failed_round)
      : Error(code, what), partial_(std::move(partial)), round_(failed_round) {}
  const RegretTrace& partial() const { return partial_; }
  std::size_t failed_round() const { return round_; }

 private:
  RegretTrace partial_;
  std::size_t round_;
};

// Random-tree UCB loop: a random initial design, then per round a fresh
// random tree, a refitted additive GP, and the message-passing maximizer of
// the additive acquisition.
RegretTrace rducb(const RunConfig& config);

// random-search, fixed-tree or ml-tree.
RegretTrace baseline(const RunConfig& config);

// Dispatches on config.strategy. `benchmark` overrides the one built from
// the config (used to share an external process or inject a test double).
RegretTrace run_strategy(const RunConfig& config);
RegretTrace run_strategy(const RunConfig& config, const Benchmark& benchmark);

struct SummaryRow {
  std::size_t round = 0;
  double mean_best_regret = 0.0;
  double stderr_best_regret = 0.0;
  std::size_t n_seeds = 0;
};

std::vector<SummaryRow> aggregate(const std::vector<RegretTrace>& traces);

}  // namespace rducb
