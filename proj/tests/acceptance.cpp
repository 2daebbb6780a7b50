// Acceptance checks. Each prints one PASS/FAIL line; the exit status is
// nonzero when any check fails.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rducb/acquisition.hpp"
#include "rducb/engine.hpp"
#include "rducb/experiment.hpp"
#include "rducb/gp.hpp"
#include "rducb/optimizer.hpp"
#include "rducb/rng.hpp"
#include "rducb/trace_io.hpp"

using namespace rducb;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Dataset random_data(std::size_t d, std::size_t n, Rng& rng, bool smooth_y) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  Dataset data(d);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(d);
    for (auto& v : x) v = u(rng);
    double y = z(rng);
    if (smooth_y) {
      y = 0.1 * y;
      for (std::size_t k = 0; k < d; ++k) y += std::sin(3.0 * x[k] + static_cast<double>(k));
    }
    data.add(x, y);
  }
  return data;
}

KernelParams random_params(std::size_t d, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  KernelParams p;
  for (std::size_t i = 0; i < d; ++i) p.lengthscales.push_back(0.1 + 0.9 * u(rng));
  p.noise_variance = std::exp(std::log(1e-4) + u(rng) * std::log(1e3));
  return p;
}

// Squared-exponential sub-kernel over the given 1-based dimensions.
double se(const std::vector<int>& dims, const std::vector<double>& theta,
          std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (int k : dims) {
    const double r = (a[k - 1] - b[k - 1]) / theta[k - 1];
    s += r * r;
  }
  return std::exp(-0.5 * s);
}

Eigen::MatrixXd gram(const std::vector<std::vector<int>>& comps, const std::vector<double>& theta,
                     const Dataset& data) {
  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (const auto& c : comps) {
        K(i, j) += se(c, theta, data.input(static_cast<std::size_t>(i)), data.input(static_cast<std::size_t>(j)));
      }
    }
  }
  return K;
}

std::vector<std::vector<int>> components_of(const Decomposition& g) {
  std::vector<std::vector<int>> out;
  for (const auto& c : g.components()) out.push_back(c.dims());
  return out;
}

// Lexicographic enumeration of the grid; the first cell within the tie
// tolerance of the maximum wins.
AcquisitionMax enumerate(const GpModel& m, const AcquisitionSpec& s, std::size_t t,
                         const DomainSpec& dom) {
  const std::size_t d = dom.dim();
  std::vector<std::size_t> idx(d, 0);
  std::vector<AcquisitionMax> all;
  for (bool more = true; more;) {
    std::vector<double> x(d);
    for (std::size_t i = 0; i < d; ++i) x[i] = dom.dims[i].value(idx[i]);
    all.push_back({x, idx, total_acquisition(m, x, s, t)});
    more = false;
    for (std::size_t i = d; i-- > 0;) {
      if (++idx[i] < dom.dims[i].size()) {
        more = true;
        break;
      }
      idx[i] = 0;
    }
  }
  double best = -INFINITY;
  for (const auto& a : all) best = std::max(best, a.value);
  const double thr = best - kTieTolerance * std::max(1.0, std::abs(best));
  for (const auto& a : all) {
    if (a.value >= thr) return a;
  }
  return all.front();
}

Outcome mp_exactness() {
  const auto t0 = Clock::now();
  Rng rng(derive_seed(101, Stream::kFit, 0));
  std::uniform_int_distribution<std::size_t> dim(1, 4), grid(2, 15), npts(0, 20);
  std::size_t ok = 0, total = 0;
  double worst = 0.0;
  for (; total < 240; ++total) {
    const std::size_t d = dim(rng);
    const std::size_t G = grid(rng);
    std::uniform_int_distribution<std::size_t> ne(0, d - 1);
    const auto g = sample_random_tree(d, ne(rng), rng);
    const auto data = random_data(d, npts(rng), rng, total % 3 == 0);
    GpModel m = total % 2 == 0 || data.empty() ? GpModel::condition(data, g, random_params(d, rng))
                               : fit(data, g, FitOptions{.restarts = 1, .max_steps = 40, .seed = total});
    AcquisitionSpec s;
    if (total % 4 == 1 && !data.empty()) {
      s.family = AcquisitionFamily::kAddEi;
      s.incumbent.assign(data.input(0).begin(), data.input(0).end());
    }
    const std::size_t t = 1 + total;
    const auto dom = DomainSpec::unit_cube(d, G);
    const auto mp = maximize_additive(m, s, t, dom);
    const auto oracle = enumerate(m, s, t, dom);
    const double diff = std::abs(mp.value - oracle.value);
    worst = std::max(worst, diff);
    if (diff <= 1e-10 && mp.index == oracle.index) ++ok;
  }
  const double secs = seconds_since(t0);
  return {ok == total && secs < 120.0,
          fmt("%zu/%zu instances exact, max |diff| %.3g, %.1f s", ok, total, worst, secs)};
}

Outcome mean_additivity() {
  Rng rng(derive_seed(202, Stream::kFit, 0));
  std::uniform_int_distribution<std::size_t> dim(2, 12), npts(1, 30);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t ok = 0, total = 0;
  double worst = 0.0;
  for (; total < 150; ++total) {
    const std::size_t d = dim(rng);
    std::uniform_int_distribution<std::size_t> ne(0, d - 1);
    const auto g = sample_random_tree(d, ne(rng), rng);
    const auto data = random_data(d, npts(rng), rng, false);
    const auto p = random_params(d, rng);
    const auto m = GpModel::condition(data, g, p);
    // Oracle weights from an independent dense solve.
    const auto comps = components_of(g);
    Eigen::MatrixXd K = gram(comps, p.lengthscales, data);
    K.diagonal().array() += p.noise_variance + m.jitter();
    const Eigen::VectorXd alpha = K.ldlt().solve(data.y());
    bool good = true;
    for (int q = 0; q < 5; ++q) {
      std::vector<double> x(d);
      for (auto& v : x) v = u(rng);
      double sum_components = 0.0, oracle = 0.0;
      for (std::size_t c = 0; c < comps.size(); ++c) {
        sum_components += posterior_component_at(m, g.components()[c], x).mean;
        for (std::size_t i = 0; i < data.size(); ++i) {
          oracle += alpha(static_cast<Eigen::Index>(i)) * se(comps[c], p.lengthscales, x, data.input(i));
        }
      }
      const double total_mean = posterior(m, x).mean;
      worst = std::max(worst, std::abs(total_mean - sum_components));
      if (std::abs(total_mean - sum_components) > 1e-8) good = false;
      if (std::abs(total_mean - oracle) > 1e-6 * std::max(1.0, std::abs(oracle))) good = false;
    }
    if (good) ++ok;
  }
  return {ok == total, fmt("%zu/%zu instances, max |mean - sum| %.3g", ok, total, worst)};
}

Outcome lml_gradient() {
  Rng rng(derive_seed(303, Stream::kFit, 0));
  std::uniform_int_distribution<std::size_t> dim(1, 8), npts(3, 25);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t ok = 0, total = 0;
  double worst = 0.0;
  for (; total < 60; ++total) {
    const std::size_t d = dim(rng);
    std::uniform_int_distribution<std::size_t> ne(0, d - 1);
    const auto g = sample_random_tree(d, ne(rng), rng);
    const auto data = random_data(d, npts(rng), rng, true);
    KernelParams p = random_params(d, rng);
    p.noise_variance = std::exp(std::log(1e-3) + u(rng) * std::log(1e2));
    const auto lml = log_marginal_likelihood(data, g, p);
    // Central differences in (log theta, log sigma_n^2).
    const double h = 1e-5;
    Eigen::VectorXd fd(static_cast<Eigen::Index>(d + 1));
    for (std::size_t k = 0; k <= d; ++k) {
      KernelParams a = p, b = p;
      if (k < d) {
        a.lengthscales[k] *= std::exp(h);
        b.lengthscales[k] *= std::exp(-h);
      } else {
        a.noise_variance *= std::exp(h);
        b.noise_variance *= std::exp(-h);
      }
      fd(static_cast<Eigen::Index>(k)) =
          (log_marginal_likelihood_value(data, g, a) - log_marginal_likelihood_value(data, g, b)) / (2 * h);
    }
    const double rel = (lml.gradient - fd).norm() / std::max(fd.norm(), 1e-8);
    worst = std::max(worst, rel);
    if (rel < 1e-4) ++ok;
  }
  return {ok == total, fmt("%zu/%zu instances, max relative error %.3g", ok, total, worst)};
}

double info_gain(const Eigen::MatrixXd& K, double noise_variance) {
  Eigen::MatrixXd A = K / noise_variance;
  A.diagonal().array() += 1.0;
  const Eigen::LLT<Eigen::MatrixXd> llt(A);
  return llt.matrixLLT().diagonal().array().log().sum();
}

Outcome infogain_ordering() {
  std::string detail;
  bool passed = true;
  for (std::size_t d : {3, 4, 5}) {
    Rng rng(derive_seed(404, Stream::kTree, d));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<int>> full;
    for (int a = 1; a <= static_cast<int>(d); ++a) {
      full.push_back({a});
      for (int b = a + 1; b <= static_cast<int>(d); ++b) full.push_back({a, b});
    }
    const std::size_t trials = 60;
    std::size_t ordered = 0, strict = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      std::uniform_int_distribution<std::size_t> ne(0, d - 1);
      const auto g = sample_random_tree(d, ne(rng), rng);
      const auto data = random_data(d, 15, rng, false);
      std::vector<double> theta(d);
      for (auto& v : theta) v = 0.2 + 0.8 * u(rng);
      const double noise = 0.01;
      const double ig_tree = info_gain(gram(components_of(g), theta, data), noise);
      const double ig_full = info_gain(gram(full, theta, data), noise);
      if (ig_tree <= ig_full + 1e-9) ++ordered;
      if (ig_tree < ig_full) ++strict;
    }
    const bool ok = ordered == trials && strict * 100 >= 95 * trials;
    passed = passed && ok;
    detail += fmt("d=%zu: %zu/%zu ordered, %zu strict; ", d, ordered, trials, strict);
  }
  return {passed, detail};
}

Outcome edge_frequency() {
  const std::size_t d = 6, E = 2, draws = 100000;
  Rng rng(derive_seed(505, Stream::kTree, 0));
  std::map<Edge, std::size_t> counts;
  for (std::size_t s = 0; s < draws; ++s) {
    for (const auto& e : sample_random_tree(d, E, rng).edges()) ++counts[e];
  }
  const double p = 2.0 * E / static_cast<double>(d * (d - 1));
  const double band = 4.0 * std::sqrt(p * (1 - p) / static_cast<double>(draws));
  double worst = 0.0;
  bool ok = true;
  for (int a = 1; a <= static_cast<int>(d); ++a) {
    for (int b = a + 1; b <= static_cast<int>(d); ++b) {
      const double f = static_cast<double>(counts[{a, b}]) / static_cast<double>(draws);
      worst = std::max(worst, std::abs(f - p));
      if (std::abs(f - p) > band) ok = false;
    }
  }
  return {ok, fmt("p=%.6f, max |freq - p| %.5f, band %.5f", p, worst, band)};
}

Outcome toy_recovery() {
  const auto t0 = Clock::now();
  const double opt = 0.6000014907422904;
  const double target = 0.95 * opt;
  std::size_t hits_rducb = 0, hits_ml = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RunConfig c;
    c.benchmark = "toy_gmm_figure";
    c.dim = 3;
    c.budget = 100;
    c.init_budget = 10;
    c.init_region = {{0, 600}, {0, 600}, {0, 1000}};
    c.seed = seed;
    c.strategy = Strategy::kRducb;
    if (run_strategy(c).rows.back().best_y >= target) ++hits_rducb;
    c.strategy = Strategy::kMlTree;
    if (run_strategy(c).rows.back().best_y >= target) ++hits_ml;
  }
  const double secs = seconds_since(t0);
  return {hits_rducb >= 15 && hits_ml < hits_rducb && secs < 600.0,
          fmt("rducb %zu/20, ml-tree %zu/20 reach %.4f, %.0f s", hits_rducb, hits_ml, target, secs)};
}

Outcome stybtang_vs_random() {
  const auto t0 = Clock::now();
  std::vector<double> rd, rs;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RunConfig c;
    c.benchmark = "stybtang";
    c.dim = 20;
    c.budget = 200;
    c.init_budget = 10;
    c.seed = seed;
    c.strategy = Strategy::kRducb;
    rd.push_back(run_strategy(c).rows.back().best_regret);
    c.strategy = Strategy::kRandomSearch;
    rs.push_back(run_strategy(c).rows.back().best_regret);
  }
  const double secs = seconds_since(t0);
  const double m_rd = std::accumulate(rd.begin(), rd.end(), 0.0) / 10.0;
  const double m_rs = std::accumulate(rs.begin(), rs.end(), 0.0) / 10.0;
  return {m_rd <= 0.8 * m_rs && secs < 900.0,
          fmt("mean final regret rducb %.2f vs random search %.2f (ratio %.3f), %.0f s", m_rd, m_rs,
              m_rd / m_rs, secs)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome reproducibility() {
  namespace fs = std::filesystem;
  const auto root = fs::temp_directory_path() / "rducb_acceptance_repro";
  fs::remove_all(root);
  const auto exp_text = std::string(
      "seeds = 3,4\n"
      "budget = 30\n"
      "[run sty]\nbenchmark = stybtang\ndim = 10\n"
      "[run ml]\nbenchmark = hartmann6\ndim = 6\nstrategy = ml-tree\nlearn_interval = 5\n"
      "[run ft]\nbenchmark = rosenbrock\ndim = 5\nstrategy = fixed-tree\nacquisition = add-ei\n");
  std::size_t files = 0, same = 0;
  std::vector<fs::path> dirs{root / "a", root / "b"};
  for (std::size_t i = 0; i < 2; ++i) {
    auto exp = parse_experiment(exp_text);
    exp.output_dir = dirs[i].string();
    run_experiment(exp, 1 + i);
  }
  for (const char* run : {"sty", "ml", "ft"}) {
    for (const char* f : {"trace_seed3.csv", "trace_seed4.csv"}) {
      ++files;
      const auto a = slurp(dirs[0] / run / f), b = slurp(dirs[1] / run / f);
      if (!a.empty() && a == b) ++same;
    }
  }
  fs::remove_all(root);
  return {files == same, fmt("%zu/%zu trace files byte-identical", same, files)};
}

Outcome schedule_in_traces() {
  bool ok = true;
  std::string detail;
  for (std::size_t t : {1, 8, 100}) {
    const double expect = 0.5 * std::log(2.0 * static_cast<double>(t));
    if (std::abs(beta(t) - expect) > 1e-12) ok = false;
    detail += fmt("beta(%zu)=%.4f ", t, beta(t));
  }
  RunConfig c;
  c.benchmark = "stybtang";
  c.dim = 3;
  c.budget = 100;
  c.init_budget = 5;
  c.grid_size = 30;
  const auto t3 = parse_trace(trace_to_csv(run_strategy(c)));
  for (std::size_t t : {8, 100}) {
    const auto& row = t3.rows[t - 1];
    if (row.round != t || std::abs(row.beta - 0.5 * std::log(2.0 * static_cast<double>(t))) > 1e-12) ok = false;
  }
  const std::map<std::size_t, std::size_t> expect_edges{{3, 1}, {20, 4}, {250, 50}};
  for (const auto& [d, e] : expect_edges) {
    RunConfig r;
    r.benchmark = "stybtang";
    r.dim = d;
    r.init_budget = 3;
    r.budget = 5;
    r.grid_size = d > 20 ? 10 : 30;
    r.fit_restarts = 1;
    r.fit_max_steps = 20;
    const auto trace = parse_trace(trace_to_csv(run_strategy(r)));
    for (std::size_t k = r.init_budget; k < r.budget; ++k) {
      const auto& row = trace.rows[k];
      if (row.n_edges != e || parse_decomposition(d, row.decomposition).edge_count() != e) ok = false;
    }
    detail += fmt("E(d=%zu)=%zu ", d, trace.rows.back().n_edges);
  }
  return {ok, detail};
}

}  // namespace

// Optional arguments restrict the run to the named checks.
int main(int argc, char** argv) {
  const std::vector<std::string> only(argv + 1, argv + argc);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks{
      {"mp_exactness", mp_exactness},
      {"mean_additivity", mean_additivity},
      {"lml_gradient", lml_gradient},
      {"infogain_ordering", infogain_ordering},
      {"edge_frequency", edge_frequency},
      {"toy_mode_recovery", toy_recovery},
      {"stybtang_vs_random_search", stybtang_vs_random},
      {"trace_reproducibility", reproducibility},
      {"beta_and_edges_in_traces", schedule_in_traces},
  };
  int failed = 0;
  std::size_t ran = 0;
  for (const auto& [name, check] : checks) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    ++ran;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.passed) ++failed;
    std::cout << (o.passed ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (ran - static_cast<std::size_t>(failed)) << "/" << ran
            << " acceptance checks passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
