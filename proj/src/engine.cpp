#include "rducb/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>

#include "rducb/gp.hpp"
#include "rducb/optimizer.hpp"
#include "rducb/rng.hpp"

namespace rducb {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kRducb: return "rducb";
    case Strategy::kRandomSearch: return "random-search";
    case Strategy::kFixedTree: return "fixed-tree";
    case Strategy::kMlTree: return "ml-tree";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "rducb") return Strategy::kRducb;
  if (name == "random-search") return Strategy::kRandomSearch;
  if (name == "fixed-tree") return Strategy::kFixedTree;
  if (name == "ml-tree") return Strategy::kMlTree;
  throw Error(ErrorCode::kInvalidParameter,
              "unknown strategy '" + std::string(name) + "'");
}

std::size_t default_tree_edges(std::size_t d) {
  if (d <= 1) return 0;
  return std::min(std::max<std::size_t>(d / 5, 1), d - 1);
}

std::size_t resolved_edges(const RunConfig& config, std::size_t d) {
  return config.edges ? *config.edges : default_tree_edges(d);
}

namespace {

bool same_double(double a, double b) {
  return a == b || (std::isnan(a) && std::isnan(b));
}

}  // namespace

bool TraceRow::operator==(const TraceRow& o) const {
  if (round != o.round || phase != o.phase || decomposition != o.decomposition ||
      n_edges != o.n_edges || x.size() != o.x.size()) {
    return false;
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!same_double(x[i], o.x[i])) return false;
  }
  return same_double(beta, o.beta) && same_double(y, o.y) &&
         same_double(best_y, o.best_y) && same_double(inst_regret, o.inst_regret) &&
         same_double(best_regret, o.best_regret) && same_double(wall_ms, o.wall_ms);
}

Benchmark make_run_benchmark(const RunConfig& config) {
  if (config.benchmark != "external") {
    return make_benchmark(config.benchmark, config.dim);
  }
  std::vector<Bounds> box;
  for (const auto& e : config.domain) {
    if (e.values.empty()) {
      box.push_back(e.bounds);
    } else {
      box.push_back({*std::min_element(e.values.begin(), e.values.end()),
                     *std::max_element(e.values.begin(), e.values.end())});
    }
  }
  return make_external_benchmark(
      config.command, std::move(box), config.sense,
      std::chrono::milliseconds(static_cast<long long>(config.timeout_s * 1000.0)));
}

void validate(const RunConfig& c) {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::kInvalidParameter, m); };
  if (c.init_budget < 1) bad("init_budget must be >= 1");
  if (c.budget < c.init_budget) bad("budget must be >= init_budget");
  if (c.grid_size < 2) bad("grid_size must be >= 2");
  if (c.fit_restarts < 1) bad("fit_restarts must be >= 1");
  if (c.learn_interval < 1) bad("learn_interval must be >= 1");
  if (c.memory_cap_mb <= 0.0) bad("memory_cap_mb must be positive");
  if (c.beta && *c.beta < 0.0) bad("beta must be >= 0");
  const std::size_t d = c.benchmark == "external" ? c.domain.size() : c.dim;
  if (d == 0) bad("dimension must be >= 1");
  if (c.benchmark == "external") {
    if (c.command.empty()) bad("external benchmark needs a command");
    if (c.timeout_s <= 0.0) bad("timeout_s must be positive");
    for (const auto& e : c.domain) {
      if (e.values.empty() && !(e.bounds.lo < e.bounds.hi)) bad("domain interval needs lo < hi");
    }
  }
  if (c.edges && d >= 1 && *c.edges > d - 1) {
    bad("edges=" + std::to_string(*c.edges) + " exceeds d-1=" + std::to_string(d - 1));
  }
  if (!c.init_region.empty() && c.init_region.size() != d) {
    bad("init_region must list one interval per dimension");
  }
}

namespace {

using Clock = std::chrono::steady_clock;

struct ModelSpace {
  std::vector<DomainEntry> entries;  // per dimension, in benchmark units
  DomainSpec grid;                   // normalized coordinates

  double lo(std::size_t i) const { return entries[i].bounds.lo; }
  double hi(std::size_t i) const { return entries[i].bounds.hi; }

  double to_unit(std::size_t i, double v) const {
    return hi(i) > lo(i) ? (v - lo(i)) / (hi(i) - lo(i)) : 0.0;
  }
  double from_unit(std::size_t i, double u) const {
    if (!entries[i].values.empty()) {
      // Snap to the closest listed value.
      double best = entries[i].values.front();
      for (double v : entries[i].values) {
        if (std::abs(to_unit(i, v) - u) < std::abs(to_unit(i, best) - u)) best = v;
      }
      return best;
    }
    if (u <= 0.0) return lo(i);
    if (u >= 1.0) return hi(i);
    return lo(i) + u * (hi(i) - lo(i));
  }
};

ModelSpace make_space(const RunConfig& config, const Benchmark& bm) {
  ModelSpace s;
  for (std::size_t i = 0; i < bm.dim; ++i) {
    DomainEntry e;
    e.bounds = bm.box[i];
    if (config.benchmark == "external" && i < config.domain.size()) {
      e.values = config.domain[i].values;
    }
    s.entries.push_back(e);
  }
  for (std::size_t i = 0; i < bm.dim; ++i) {
    const auto& e = s.entries[i];
    if (e.values.empty()) {
      s.grid.dims.push_back(DimensionDomain::continuous(0.0, 1.0, config.grid_size));
    } else {
      std::vector<double> u;
      for (double v : e.values) u.push_back(s.to_unit(i, v));
      s.grid.dims.push_back(DimensionDomain::finite(std::move(u)));
    }
  }
  return s;
}

class Runner {
 public:
  Runner(const RunConfig& config, const Benchmark& bm)
      : config_(config), bm_(bm), space_(make_space(config, bm)),
        d_(bm.dim), data_(bm.dim) {
    trace_.seed = config.seed;
    trace_.dim = d_;
    edges_ = resolved_edges(config, d_);
    if (edges_ > d_ - 1) {
      throw Error(ErrorCode::kInvalidParameter, "edges exceed d-1");
    }
  }

  RegretTrace run() {
    std::size_t round = 0;
    try {
      Rng init = stream_rng(config_.seed, Stream::kInitialDesign, 0);
      for (round = 1; round <= config_.init_budget; ++round) {
        const auto start = Clock::now();
        const std::vector<double> u = random_unit_point(init, true);
        TraceRow row;
        row.phase = Phase::kInit;
        row.beta = std::numeric_limits<double>::quiet_NaN();
        observe(round, u, row, start);
      }
      for (round = config_.init_budget + 1; round <= config_.budget; ++round) {
        bo_round(round);
      }
    } catch (const Error& e) {
      throw RunError(e.code(),
                     "round " + std::to_string(round) + ": " + e.what(), trace_, round);
    } catch (const std::exception& e) {
      throw RunError(ErrorCode::kNumericalError,
                     "round " + std::to_string(round) + ": " + e.what(), trace_, round);
    }
    return trace_;
  }

 private:
  std::vector<double> random_unit_point(Rng& rng, bool initial) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> u(d_);
    for (std::size_t i = 0; i < d_; ++i) {
      const auto& e = space_.entries[i];
      if (!e.values.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, e.values.size() - 1);
        u[i] = space_.to_unit(i, e.values[pick(rng)]);
        continue;
      }
      double lo = 0.0, hi = 1.0;
      if (initial && !config_.init_region.empty()) {
        lo = std::clamp(space_.to_unit(i, config_.init_region[i].lo), 0.0, 1.0);
        hi = std::clamp(space_.to_unit(i, config_.init_region[i].hi), 0.0, 1.0);
      }
      u[i] = lo + (hi - lo) * unif(rng);
    }
    return u;
  }

  void observe(std::size_t round, const std::vector<double>& u, TraceRow& row,
               Clock::time_point start) {
    std::vector<double> x(d_);
    for (std::size_t i = 0; i < d_; ++i) x[i] = space_.from_unit(i, u[i]);
    const double y = bm_(x);
    if (!std::isfinite(y)) {
      throw Error(ErrorCode::kBlackboxError, "objective returned a non-finite value");
    }
    const bool minimize = bm_.sense == Sense::kMinimize;
    const bool improved = data_.empty() || (minimize ? y < best_y_ : y > best_y_);
    data_.add(u, y);
    visited_.insert(u);
    if (improved) {
      best_y_ = y;
      best_index_ = data_.size() - 1;
    }
    row.round = round;
    row.x = std::move(x);
    row.y = y;
    row.best_y = best_y_;
    if (bm_.known_optimum) {
      const double opt = *bm_.known_optimum;
      row.inst_regret = minimize ? y - opt : opt - y;
      row.best_regret = minimize ? best_y_ - opt : opt - best_y_;
    } else {
      row.inst_regret = row.best_regret = std::numeric_limits<double>::quiet_NaN();
    }
    row.wall_ms = config_.record_wall_time
                      ? std::chrono::duration<double, std::milli>(Clock::now() - start).count()
                      : 0.0;
    trace_.rows.push_back(std::move(row));
  }

  // Targets oriented for maximization and standardized on the current data.
  Dataset model_data() const {
    const double s = bm_.sense == Sense::kMinimize ? -1.0 : 1.0;
    Eigen::VectorXd y = s * data_.y();
    const double mean = y.mean();
    double sd = 1.0;
    if (y.size() > 1) {
      sd = std::sqrt((y.array() - mean).square().sum() / static_cast<double>(y.size() - 1));
      if (!(sd > 1e-12)) sd = 1.0;
    }
    return Dataset(data_.X(), (y.array() - mean) / sd);
  }

  Decomposition choose_decomposition(std::size_t round, const Dataset& data) {
    switch (config_.strategy) {
      case Strategy::kRducb: {
        Rng rng = stream_rng(config_.seed, Stream::kTree, round);
        return sample_random_tree(d_, edges_, rng);
      }
      case Strategy::kFixedTree: {
        if (!fixed_) {
          Rng rng = stream_rng(config_.seed, Stream::kTree, round);
          fixed_ = sample_random_tree(d_, edges_, rng);
        }
        return *fixed_;
      }
      case Strategy::kMlTree: {
        const std::size_t since = round - config_.init_budget - 1;
        if (since % config_.learn_interval == 0) learn_structure(round, data);
        return tree_from_edges(d_, structure_);
      }
      case Strategy::kRandomSearch:
        break;
    }
    throw Error(ErrorCode::kInvalidParameter, "strategy has no decomposition");
  }

  FitOptions fit_options(std::size_t round, std::uint64_t salt = 0) const {
    FitOptions fo;
    fo.restarts = config_.fit_restarts;
    fo.max_steps = config_.fit_max_steps;
    fo.warm_start = params_;
    fo.seed = derive_seed(config_.seed, Stream::kFit, round) ^ salt;
    return fo;
  }

  // Edge-toggle search over forests, accepting proposals that raise the
  // log marginal likelihood at the current hyperparameters.
  void learn_structure(std::size_t round, const Dataset& data) {
    if (d_ < 2) return;
    const GpModel current =
        fit(data, tree_from_edges(d_, structure_), fit_options(round, 0x5eed));
    params_ = current.params();
    double best = log_marginal_likelihood_value(data, current.decomposition(), *params_);
    Rng rng = stream_rng(config_.seed, Stream::kStructure, round);
    std::uniform_int_distribution<int> dim(1, static_cast<int>(d_));
    for (std::size_t k = 0; k < config_.structure_proposals; ++k) {
      int a = dim(rng);
      int b = dim(rng);
      while (b == a) b = dim(rng);
      const Edge e = make_edge(a, b);
      std::vector<Edge> proposal = structure_;
      const auto it = std::find(proposal.begin(), proposal.end(), e);
      if (it != proposal.end()) {
        proposal.erase(it);
      } else {
        proposal.push_back(e);
        UnionFind uf(d_ + 1);
        bool cyclic = false;
        for (const auto& [p, q] : proposal) cyclic |= !uf.unite(p, q);
        if (cyclic) continue;
      }
      double value = -std::numeric_limits<double>::infinity();
      try {
        value = log_marginal_likelihood_value(data, tree_from_edges(d_, proposal), *params_);
      } catch (const Error& err) {
        if (err.code() != ErrorCode::kNumericalError) throw;
      }
      if (value > best) {
        best = value;
        structure_ = std::move(proposal);
        std::sort(structure_.begin(), structure_.end());
      }
    }
  }

  std::vector<double> nearest_unvisited(const AcquisitionMax& best) const {
    std::size_t max_size = 0;
    for (const auto& dd : space_.grid.dims) max_size = std::max(max_size, dd.size());
    for (std::size_t r = 1; r < max_size; ++r) {
      for (std::size_t i = 0; i < d_; ++i) {
        const auto& dd = space_.grid.dims[i];
        for (int sign : {-1, 1}) {
          const long idx = static_cast<long>(best.index[i]) + sign * static_cast<long>(r);
          if (idx < 0 || idx >= static_cast<long>(dd.size())) continue;
          std::vector<double> u = best.x;
          u[i] = dd.value(static_cast<std::size_t>(idx));
          if (!visited_.contains(u)) return u;
        }
      }
    }
    return best.x;
  }

  void bo_round(std::size_t round) {
    const auto start = Clock::now();
    TraceRow row;
    row.phase = Phase::kBo;
    row.beta = std::numeric_limits<double>::quiet_NaN();
    if (config_.strategy == Strategy::kRandomSearch) {
      Rng rng = stream_rng(config_.seed, Stream::kRandomSearch, round);
      observe(round, random_unit_point(rng, false), row, start);
      return;
    }
    const Dataset data = model_data();
    const Decomposition g = choose_decomposition(round, data);
    const GpModel model = fit(data, g, fit_options(round));
    params_ = model.params();

    AcquisitionSpec spec;
    spec.family = config_.acquisition;
    spec.beta_override = config_.beta;
    spec.incumbent.assign(data_.input(best_index_).begin(), data_.input(best_index_).end());
    OptimizerOptions opt;
    opt.refine = config_.refine;
    opt.memory_cap_mb = config_.memory_cap_mb;
    const AcquisitionMax best = maximize_additive(model, spec, round, space_.grid, opt);

    std::vector<double> u = best.x;
    if (visited_.contains(u)) u = nearest_unvisited(best);

    row.decomposition = serialize_inline(g);
    row.n_edges = g.edge_count();
    if (spec.family == AcquisitionFamily::kAddUcb) row.beta = spec.beta_at(round);
    observe(round, u, row, start);
  }

  const RunConfig& config_;
  const Benchmark& bm_;
  ModelSpace space_;
  std::size_t d_;
  std::size_t edges_ = 0;
  Dataset data_;  // normalized inputs, raw observations
  std::set<std::vector<double>> visited_;
  double best_y_ = 0.0;
  std::size_t best_index_ = 0;
  std::optional<KernelParams> params_;
  std::optional<Decomposition> fixed_;
  std::vector<Edge> structure_;
  RegretTrace trace_;
};

}  // namespace

RegretTrace run_strategy(const RunConfig& config, const Benchmark& benchmark) {
  validate(config);
  if (benchmark.dim == 0 || benchmark.box.size() != benchmark.dim) {
    throw Error(ErrorCode::kInvalidParameter, "benchmark has no domain");
  }
  return Runner(config, benchmark).run();
}

RegretTrace run_strategy(const RunConfig& config) {
  validate(config);
  const Benchmark bm = make_run_benchmark(config);
  return run_strategy(config, bm);
}

RegretTrace rducb(const RunConfig& config) {
  RunConfig c = config;
  c.strategy = Strategy::kRducb;
  return run_strategy(c);
}

RegretTrace baseline(const RunConfig& config) {
  if (config.strategy == Strategy::kRducb) {
    throw Error(ErrorCode::kInvalidParameter,
                "baseline expects random-search, fixed-tree or ml-tree");
  }
  return run_strategy(config);
}

std::vector<SummaryRow> aggregate(const std::vector<RegretTrace>& traces) {
  if (traces.empty()) {
    throw Error(ErrorCode::kInvalidParameter, "aggregate needs at least one trace");
  }
  const std::size_t len = traces.front().rows.size();
  for (const auto& t : traces) {
    if (t.rows.size() != len) {
      throw Error(ErrorCode::kInvalidParameter, "traces have different lengths");
    }
  }
  const auto n = static_cast<double>(traces.size());
  std::vector<SummaryRow> out;
  for (std::size_t r = 0; r < len; ++r) {
    double sum = 0.0;
    for (const auto& t : traces) sum += t.rows[r].best_regret;
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& t : traces) {
      const double dv = t.rows[r].best_regret - mean;
      ss += dv * dv;
    }
    const double sd = traces.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    out.push_back({traces.front().rows[r].round, mean, sd / std::sqrt(n), traces.size()});
  }
  return out;
}

}  // namespace rducb
