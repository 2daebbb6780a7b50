// Command-line front end: run experiments, property checks, tree sampling
// and one-shot benchmark evaluation.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rducb/benchmarks.hpp"
#include "rducb/checks.hpp"
#include "rducb/decomposition.hpp"
#include "rducb/engine.hpp"
#include "rducb/experiment.hpp"
#include "rducb/rng.hpp"
#include "rducb/trace_io.hpp"

namespace {

int report(const std::string& name, const rducb::CheckReport& rep) {
  for (const auto& line : rep.lines) std::cout << "  " << line << '\n';
  std::cout << (rep.passed ? "PASS " : "FAIL ") << name << '\n';
  return rep.passed ? 0 : 1;
}

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-tree additive Bayesian optimization toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string seeds_override;
  std::size_t jobs = 1;
  std::string out_override;
  auto* run = app.add_subcommand("run", "Run an experiment file or replay a manifest.json");
  run->add_option("config", config_path, "Experiment file or manifest.json")->required();
  run->add_option("--seeds", seeds_override, "Seed list, e.g. 1..5 or 1,3,7");
  run->add_option("--jobs", jobs, "Worker threads (env RDUCB_JOBS)");
  run->add_option("--out", out_override, "Output directory (env RDUCB_OUT_DIR)");

  auto* check = app.add_subcommand("check", "Property checks");
  check->require_subcommand(1);
  std::size_t d = 6, edges = 2, samples = 100000, points = 10, trials = 50;
  std::uint64_t check_seed = 0;
  auto* uni = check->add_subcommand("edge-uniformity", "Random-tree edge frequencies");
  uni->add_option("--d", d, "Dimension");
  uni->add_option("--edges", edges, "Edges per tree");
  uni->add_option("--samples", samples, "Number of trees");
  uni->add_option("--seed", check_seed, "Seed");
  auto* ig = check->add_subcommand("infogain", "Tree vs all-pairs information gain");
  ig->add_option("--d", d, "Dimension");
  ig->add_option("--points", points, "Points per set");
  ig->add_option("--trials", trials, "Number of point sets");
  ig->add_option("--seed", check_seed, "Seed");
  std::size_t mp_trials = 100;
  auto* mp = check->add_subcommand("mp-exactness", "Message passing vs brute force");
  mp->add_option("--trials", mp_trials, "Number of instances");
  mp->add_option("--seed", check_seed, "Seed");

  std::size_t tree_d = 10;
  std::optional<std::size_t> tree_edges;
  std::uint64_t tree_seed = 0;
  std::size_t tree_round = 0;
  bool tree_inline = false;
  auto* st = app.add_subcommand("sample-tree", "Print a sampled tree decomposition");
  st->add_option("--d", tree_d, "Dimension")->required();
  st->add_option("--edges", tree_edges, "Edges (default max(floor(d/5),1))");
  st->add_option("--seed", tree_seed, "Master seed");
  st->add_option("--round", tree_round, "Round counter of the tree stream");
  st->add_flag("--inline", tree_inline, "Single-line output");

  std::string bench_name;
  std::vector<double> x;
  auto* ev = app.add_subcommand("eval", "Evaluate a benchmark at one point");
  ev->add_option("--benchmark", bench_name, "Benchmark name")->required();
  ev->add_option("--x", x, "Coordinates")->required()->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      rducb::ExperimentFile exp = rducb::load_experiment(config_path);
      if (!seeds_override.empty()) exp.seeds = rducb::parse_seed_list(seeds_override);
      if (!out_override.empty()) {
        exp.output_dir = out_override;
      } else if (auto e = env("RDUCB_OUT_DIR")) {
        exp.output_dir = *e;
      }
      if (run->count("--jobs") == 0) {
        if (auto e = env("RDUCB_JOBS")) jobs = rducb::parse_size(*e);
      }
      const auto outcome = rducb::run_experiment(exp, jobs);
      for (const auto& r : outcome.runs) {
        for (const auto& s : r.seeds) {
          std::cout << r.name << " seed " << s.seed << ": "
                    << (s.ok ? "ok" : "failed: " + s.error) << '\n';
        }
      }
      std::cout << "manifest " << outcome.manifest.string() << '\n';
      return outcome.ok() ? 0 : 1;
    }
    if (*uni) return report("edge-uniformity", rducb::check_edge_uniformity(d, edges, samples, check_seed));
    if (*ig) return report("infogain", rducb::check_infogain(d, points, trials, check_seed));
    if (*mp) return report("mp-exactness", rducb::check_mp_exactness(mp_trials, check_seed));
    if (*st) {
      const std::size_t e = tree_edges ? *tree_edges : rducb::default_tree_edges(tree_d);
      rducb::Rng rng = rducb::stream_rng(tree_seed, rducb::Stream::kTree, tree_round);
      const auto g = rducb::sample_random_tree(tree_d, e, rng);
      std::cout << (tree_inline ? rducb::serialize_inline(g) + "\n" : rducb::serialize(g));
      return 0;
    }
    if (*ev) {
      const auto bm = rducb::make_benchmark(bench_name, x.size());
      std::cout << rducb::format_double(bm(x)) << '\n';
      return 0;
    }
  } catch (const rducb::Error& e) {
    std::cerr << "error (" << rducb::to_string(e.code()) << "): " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
