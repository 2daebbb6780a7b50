#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "rducb/error.hpp"
#include "rducb/gp.hpp"
#include "rducb/rng.hpp"

using namespace rducb;

namespace {

Dataset random_dataset(std::size_t n, std::size_t d, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  InputMatrix X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = u(rng);
    y[i] = std::sin(3.0 * X(i, 0)) + z(rng) * 0.1;
  }
  return Dataset(X, y);
}

KernelParams random_params(std::size_t d, Rng& rng) {
  std::uniform_real_distribution<double> ls(0.15, 1.5);
  std::uniform_real_distribution<double> ln(std::log(1e-4), std::log(0.3));
  KernelParams p;
  for (std::size_t i = 0; i < d; ++i) p.lengthscales.push_back(ls(rng));
  p.noise_variance = std::exp(ln(rng));
  return p;
}

// Textbook Gaussian log-likelihood with an explicit inverse and an LU
// determinant.
double direct_lml(const Dataset& data, const Decomposition& g, const KernelParams& p) {
  Eigen::MatrixXd K = gram_matrix(g, p, data.X());
  K.diagonal().array() += p.noise_variance;
  const Eigen::MatrixXd Kinv = K.inverse();
  const double logdet = std::log(K.determinant());
  const auto t = static_cast<double>(data.size());
  return -0.5 * data.y().dot(Kinv * data.y()) - 0.5 * logdet -
         0.5 * t * std::log(2.0 * std::numbers::pi);
}

Posterior direct_posterior(const GpModel& m, std::span<const double> x) {
  const auto& data = m.dataset();
  const auto& g = m.decomposition();
  Eigen::MatrixXd K = gram_matrix(g, m.params(), data.X());
  K.diagonal().array() += m.params().noise_variance + m.jitter();
  Eigen::VectorXd k(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    k[static_cast<Eigen::Index>(i)] = additive_kernel(g, m.params(), x, data.input(i));
  }
  const Eigen::MatrixXd Kinv = K.inverse();
  return {k.dot(Kinv * data.y()),
          additive_kernel(g, m.params(), x, x) - k.dot(Kinv * k)};
}

std::vector<double> random_point(std::size_t d, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(d);
  for (auto& v : x) v = u(rng);
  return x;
}

}  // namespace

TEST_CASE("single-observation likelihood closed form") {
  Dataset data(3);
  data.add(std::vector<double>{0.2, 0.4, 0.6}, 0.0);
  const auto g = tree_from_edges(3, {{1, 2}});
  const KernelParams p{{0.3, 0.5, 0.7}, 0.04};
  const double m = static_cast<double>(g.size());
  CHECK(log_marginal_likelihood_value(data, g, p) ==
        doctest::Approx(-0.5 * std::log(m + 0.04) - 0.5 * std::log(2.0 * std::numbers::pi))
            .epsilon(1e-13));
}

TEST_CASE("likelihood matches the textbook formula") {
  Rng rng(1);
  for (int k = 0; k < 40; ++k) {
    const std::size_t d = 2 + static_cast<std::size_t>(k % 4);
    const auto data = random_dataset(4 + static_cast<std::size_t>(k % 9), d, rng);
    const auto g = sample_random_tree(d, static_cast<std::size_t>(k) % d, rng);
    const auto p = random_params(d, rng);
    CHECK(log_marginal_likelihood_value(data, g, p) ==
          doctest::Approx(direct_lml(data, g, p)).epsilon(1e-8));
  }
}

TEST_CASE("zero observations leave only the determinant term") {
  Rng rng(2);
  auto base = random_dataset(6, 3, rng);
  const Dataset zeros(base.X(), Eigen::VectorXd::Zero(6));
  const auto g = tree_from_edges(3, {{2, 3}});
  for (int k = 0; k < 5; ++k) {
    const auto p = random_params(3, rng);
    Eigen::MatrixXd K = gram_matrix(g, p, zeros.X());
    K.diagonal().array() += p.noise_variance;
    const double expect = -0.5 * std::log(K.determinant()) - 3.0 * std::log(2.0 * std::numbers::pi);
    CHECK(log_marginal_likelihood_value(zeros, g, p) == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("analytic gradient matches central differences") {
  Rng rng(3);
  const double h = 1e-5;
  for (int k = 0; k < 50; ++k) {
    const auto data = random_dataset(5, 3, rng);
    const auto g = sample_random_tree(3, static_cast<std::size_t>(k % 3), rng);
    const auto p = random_params(3, rng);
    const auto lml = log_marginal_likelihood(data, g, p);
    Eigen::VectorXd fd(4);
    for (int i = 0; i < 4; ++i) {
      KernelParams up = p, dn = p;
      if (i < 3) {
        up.lengthscales[i] *= std::exp(h);
        dn.lengthscales[i] *= std::exp(-h);
      } else {
        up.noise_variance *= std::exp(h);
        dn.noise_variance *= std::exp(-h);
      }
      fd[i] = (log_marginal_likelihood_value(data, g, up) -
               log_marginal_likelihood_value(data, g, dn)) / (2.0 * h);
    }
    const double rel = (lml.gradient - fd).norm() / std::max(fd.norm(), 1e-8);
    CHECK(rel < 1e-4);
  }
}

TEST_CASE("fit improves on every start and stops at a stationary point") {
  Rng rng(4);
  for (int k = 0; k < 8; ++k) {
    const auto data = random_dataset(25, 3, rng);
    const auto g = sample_random_tree(3, 1, rng);
    FitOptions fo;
    fo.seed = 100 + static_cast<std::uint64_t>(k);
    const auto model = fit(data, g, fo);
    const auto& rep = model.fit_report();
    REQUIRE(!rep.start_values.empty());
    const double best = log_marginal_likelihood_value(data, g, model.params());
    CHECK(best == doctest::Approx(rep.best_value).epsilon(1e-10));
    for (double v : rep.start_values) CHECK(best >= v - 1e-12);
    const auto grad = log_marginal_likelihood(data, g, model.params()).gradient;
    for (int i = 0; i < 3; ++i) {
      const double ll = std::log(model.params().lengthscales[static_cast<std::size_t>(i)]);
      if (ll > fo.log_lengthscale_min + 1e-6 && ll < fo.log_lengthscale_max - 1e-6) {
        CHECK(std::abs(grad[i]) < 1e-3);
      }
    }
  }
}

TEST_CASE("constant observations hit the noise floor") {
  Rng rng(5);
  auto base = random_dataset(12, 2, rng);
  const Dataset data(base.X(), Eigen::VectorXd::Constant(12, 0.7));
  const auto model = fit(data, tree_from_edges(2, {}), FitOptions{});
  CHECK(model.params().noise_variance >= 1e-6 * (1.0 - 1e-12));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto post = posterior(model, data.input(i));
    CHECK(post.mean == doctest::Approx(direct_posterior(model, data.input(i)).mean).epsilon(1e-6));
    CHECK(post.mean <= 0.7 + 1e-9);
  }
}

TEST_CASE("single observation fit terminates") {
  Dataset data(2);
  data.add(std::vector<double>{0.5, 0.5}, 1.3);
  const auto model = fit(data, tree_from_edges(2, {{1, 2}}), FitOptions{});
  model.params().check(2);
  CHECK(model.fit_report().steps.size() == 3);
}

TEST_CASE("lengthscales are recovered from an additive GP draw") {
  const std::vector<double> theta{0.2, 0.5, 0.3, 0.8};
  const auto g = tree_from_edges(4, {{1, 2}});
  int recovered = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    Rng rng(1000 + s);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t t = 60;
    InputMatrix X(t, 4);
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      for (Eigen::Index j = 0; j < 4; ++j) X(i, j) = u(rng);
    const KernelParams truth{theta, 1e-4};
    Eigen::MatrixXd K = gram_matrix(g, truth, X);
    K.diagonal().array() += truth.noise_variance;
    const Eigen::MatrixXd L = K.llt().matrixL();
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::VectorXd w(t);
    for (auto& v : w) v = z(rng);
    const Dataset data(X, L * w);
    FitOptions fo;
    fo.seed = s;
    const auto model = fit(data, g, fo);
    bool ok = true;
    for (std::size_t i = 0; i < 4; ++i) {
      ok = ok && std::abs(std::log(model.params().lengthscales[i]) - std::log(theta[i])) < 0.5;
    }
    recovered += ok ? 1 : 0;
  }
  CHECK(recovered >= 7);
}

TEST_CASE("posterior of the prior") {
  const Dataset empty(3);
  const auto g = tree_from_edges(3, {{1, 3}});
  const auto m = GpModel::condition(empty, g, KernelParams{{0.5, 0.5, 0.5}, 0.01});
  const std::vector<double> x{0.1, 0.2, 0.3};
  const auto p = posterior(m, x);
  CHECK(p.mean == 0.0);
  CHECK(p.variance == static_cast<double>(g.size()));
  for (const auto& c : g.components()) {
    const auto pc = posterior_component_at(m, c, x);
    CHECK(pc.mean == 0.0);
    CHECK(pc.variance == 1.0);
  }
}

TEST_CASE("posterior interpolates and reverts to the prior far away") {
  Rng rng(6);
  const auto data = random_dataset(10, 2, rng);
  const auto g = tree_from_edges(2, {{1, 2}});
  const auto m = GpModel::condition(data, g, KernelParams{{0.2, 0.2}, 1e-8});
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(std::abs(posterior(m, data.input(i)).mean - data.y()[static_cast<Eigen::Index>(i)]) < 1e-3);
  }
  const std::vector<double> far{50.0, 50.0};
  const auto p = posterior(m, far);
  CHECK(std::abs(p.mean) < 1e-12);
  CHECK(p.variance == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("posterior matches direct formulas and respects the prior bound") {
  Rng rng(7);
  for (int k = 0; k < 30; ++k) {
    const std::size_t d = 2 + static_cast<std::size_t>(k % 3);
    const auto data = random_dataset(8, d, rng);
    const auto g = sample_random_tree(d, static_cast<std::size_t>(k) % d, rng);
    const auto m = GpModel::condition(data, g, random_params(d, rng));
    const auto x = random_point(d, rng);
    const auto p = posterior(m, x);
    const auto q = direct_posterior(m, x);
    CHECK(p.mean == doctest::Approx(q.mean).epsilon(1e-8).scale(1.0));
    CHECK(p.variance == doctest::Approx(std::max(q.variance, 0.0)).epsilon(1e-8).scale(1.0));
    CHECK(p.variance >= 0.0);
    CHECK(p.variance <= static_cast<double>(g.size()) + 1e-9);
  }
}

TEST_CASE("component posteriors add up in the mean") {
  Rng rng(8);
  for (int k = 0; k < 100; ++k) {
    const std::size_t d = 2 + static_cast<std::size_t>(k % 5);
    const auto data = random_dataset(10, d, rng);
    const auto g = sample_random_tree(d, static_cast<std::size_t>(k) % d, rng);
    const auto m = GpModel::condition(data, g, random_params(d, rng));
    const auto x = random_point(d, rng);
    double mean_sum = 0.0, var_sum = 0.0;
    for (const auto& c : g.components()) {
      const auto pc = posterior_component_at(m, c, x);
      CHECK(pc.variance >= 0.0);
      CHECK(pc.variance <= 1.0);
      mean_sum += pc.mean;
      var_sum += pc.variance;
    }
    const auto p = posterior(m, x);
    CHECK(std::abs(mean_sum - p.mean) < 1e-8);
    CHECK(var_sum >= p.variance - 1e-9);
  }
}

TEST_CASE("component posterior rejects foreign components") {
  Rng rng(9);
  const auto data = random_dataset(5, 3, rng);
  const auto m = GpModel::condition(data, tree_from_edges(3, {{1, 2}}), KernelParams{{0.5, 0.5, 0.5}, 0.01});
  try {
    posterior_component(m, Component({1, 3}), std::vector<double>{0.1, 0.2});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidParameter);
  }
}

TEST_CASE("row order does not change the posterior") {
  Rng rng(10);
  const auto data = random_dataset(12, 3, rng);
  std::vector<Eigen::Index> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  InputMatrix X2(12, 3);
  Eigen::VectorXd y2(12);
  for (Eigen::Index i = 0; i < 12; ++i) {
    X2.row(i) = data.X().row(perm[static_cast<std::size_t>(i)]);
    y2[i] = data.y()[perm[static_cast<std::size_t>(i)]];
  }
  const auto g = tree_from_edges(3, {{1, 3}});
  const KernelParams p{{0.3, 0.6, 0.4}, 1e-3};
  const auto a = GpModel::condition(data, g, p);
  const auto b = GpModel::condition(Dataset(X2, y2), g, p);
  for (int k = 0; k < 20; ++k) {
    const auto x = random_point(3, rng);
    CHECK(std::abs(posterior(a, x).mean - posterior(b, x).mean) < 1e-8);
    CHECK(std::abs(posterior(a, x).variance - posterior(b, x).variance) < 1e-8);
  }
}

TEST_CASE("cached factor and weights reproduce the system") {
  Rng rng(11);
  for (int k = 0; k < 10; ++k) {
    const auto data = random_dataset(15, 4, rng);
    const auto m = GpModel::condition(data, sample_random_tree(4, 2, rng), random_params(4, rng));
    const auto r = model_residuals(m);
    CHECK(r.factor < 1e-8);
    CHECK(r.weights < 1e-8);
  }
}

TEST_CASE("dataset and fit argument errors") {
  Dataset data(2);
  CHECK_THROWS_AS(data.add(std::vector<double>{1.0}, 0.0), Error);
  CHECK_THROWS_AS(fit(Dataset(2), tree_from_edges(2, {}), FitOptions{}), Error);
  CHECK_THROWS_AS(log_marginal_likelihood(Dataset(2), tree_from_edges(2, {}), KernelParams{{1, 1}, 0.1}),
                  Error);
}
