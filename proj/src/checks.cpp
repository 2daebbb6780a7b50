#include "rducb/checks.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "rducb/acquisition.hpp"
#include "rducb/decomposition.hpp"
#include "rducb/gp.hpp"
#include "rducb/kernel.hpp"
#include "rducb/optimizer.hpp"
#include "rducb/rng.hpp"

namespace rducb {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

InputMatrix random_points(std::size_t n, std::size_t d, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  InputMatrix X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = u(rng);
  }
  return X;
}

}  // namespace

CheckReport check_edge_uniformity(std::size_t d, std::size_t edges,
                                  std::size_t samples, std::uint64_t seed) {
  CheckReport rep;
  if (d < 2 || samples == 0) {
    rep.lines.push_back("edge-uniformity needs d >= 2 and samples >= 1");
    return rep;
  }
  Rng rng = stream_rng(seed, Stream::kTree, 0);
  const auto freq = edge_frequencies(d, edges, samples, rng);
  const double p = 2.0 * static_cast<double>(edges) / static_cast<double>(d * (d - 1));
  const double band = 4.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
  double worst = 0.0;
  Edge worst_edge{0, 0};
  for (const auto& [e, f] : freq) {
    if (std::abs(f - p) >= worst) {
      worst = std::abs(f - p);
      worst_edge = e;
    }
  }
  rep.passed = worst <= band;
  rep.lines.push_back("expected frequency " + fmt(p) + " over " + std::to_string(freq.size()) +
                      " edges, " + std::to_string(samples) + " draws");
  rep.lines.push_back("max |freq - p| = " + fmt(worst) + " at (" +
                      std::to_string(worst_edge.first) + "," +
                      std::to_string(worst_edge.second) + "), 4-sigma band " + fmt(band));
  return rep;
}

CheckReport check_infogain(std::size_t d, std::size_t points, std::size_t trials,
                           std::uint64_t seed) {
  CheckReport rep;
  if (d < 2 || points == 0 || trials == 0) {
    rep.lines.push_back("infogain needs d >= 2, points >= 1, trials >= 1");
    return rep;
  }
  const Decomposition full = full_pairwise(d);
  std::uniform_real_distribution<double> ls(0.2, 1.0);
  std::uniform_int_distribution<std::size_t> ne(0, d - 1);
  std::size_t held = 0;
  std::size_t omitting = 0;
  std::size_t strict = 0;
  double worst = -INFINITY;
  for (std::size_t k = 0; k < trials; ++k) {
    Rng rng = stream_rng(seed, Stream::kStructure, k);
    const InputMatrix X = random_points(points, d, rng);
    KernelParams params;
    for (std::size_t i = 0; i < d; ++i) params.lengthscales.push_back(ls(rng));
    params.noise_variance = 0.01;
    const Decomposition tree = sample_random_tree(d, ne(rng), rng);
    const double sn = std::sqrt(params.noise_variance);
    const double gt = information_gain(gram_matrix(tree, params, X), sn);
    const double gf = information_gain(gram_matrix(full, params, X), sn);
    worst = std::max(worst, gt - gf);
    if (gt <= gf + 1e-9) ++held;
    if (tree.edge_count() < d * (d - 1) / 2) {
      ++omitting;
      if (gt < gf - 1e-9) ++strict;
    }
  }
  const bool strict_ok = omitting == 0 || static_cast<double>(strict) >= 0.95 * static_cast<double>(omitting);
  rep.passed = held == trials && strict_ok;
  rep.lines.push_back(std::to_string(held) + "/" + std::to_string(trials) +
                      " orderings hold (tolerance 1e-9), max gain(tree) - gain(full) = " +
                      fmt(worst));
  rep.lines.push_back(std::to_string(strict) + "/" + std::to_string(omitting) +
                      " strict where the tree omits an edge (need >= 95%)");
  return rep;
}

CheckReport check_mp_exactness(std::size_t trials, std::uint64_t seed, std::size_t max_d,
                               std::size_t max_grid) {
  CheckReport rep;
  if (max_d < 1 || max_grid < 2) {
    rep.lines.push_back("mp-exactness needs max_d >= 1 and max_grid >= 2");
    return rep;
  }
  std::size_t value_ok = 0;
  std::size_t argmax_ok = 0;
  double worst = 0.0;
  for (std::size_t k = 0; k < trials; ++k) {
    Rng rng = stream_rng(seed, Stream::kOptimizer, k);
    const std::size_t d = std::uniform_int_distribution<std::size_t>(1, max_d)(rng);
    const std::size_t G = std::uniform_int_distribution<std::size_t>(2, max_grid)(rng);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 12)(rng);
    const std::size_t e = std::uniform_int_distribution<std::size_t>(0, d - 1)(rng);
    const Decomposition g = sample_random_tree(d, e, rng);
    const InputMatrix X = random_points(n, d, rng);
    std::normal_distribution<double> noise(0.0, 1.0);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (auto& v : y) v = noise(rng);
    Dataset data(X, y);
    FitOptions fo;
    fo.restarts = 2;
    fo.max_steps = 50;
    fo.seed = derive_seed(seed, Stream::kFit, k);
    const GpModel model = fit(data, g, fo);

    AcquisitionSpec spec;
    if (k % 2 == 1) {
      spec.family = AcquisitionFamily::kAddEi;
      Eigen::Index best = 0;
      y.maxCoeff(&best);
      spec.incumbent.assign(X.row(best).data(), X.row(best).data() + d);
    }
    const std::size_t t = n + 1;
    const DomainSpec domain = DomainSpec::unit_cube(d, G);
    const AcquisitionMax mp = maximize_additive(model, spec, t, domain);
    const AcquisitionMax bf = brute_force_max(model, spec, t, domain);
    const double diff = std::abs(mp.value - bf.value);
    worst = std::max(worst, diff);
    if (diff <= 1e-10) ++value_ok;
    if (mp.index == bf.index) ++argmax_ok;
  }
  rep.passed = value_ok == trials && argmax_ok == trials;
  rep.lines.push_back(std::to_string(value_ok) + "/" + std::to_string(trials) +
                      " values within 1e-10 of brute force, max difference " + fmt(worst));
  rep.lines.push_back(std::to_string(argmax_ok) + "/" + std::to_string(trials) +
                      " argmax indices identical");
  return rep;
}

}  // namespace rducb
