#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rducb/decomposition.hpp"
#include "rducb/kernel.hpp"

namespace rducb {

// Observations D_t: one input per row of X, matching entries of y.
class Dataset {
 public:
  explicit Dataset(std::size_t d = 0) : X_(0, static_cast<Eigen::Index>(d)) {}
  Dataset(InputMatrix X, Eigen::VectorXd y);

  std::size_t size() const { return static_cast<std::size_t>(y_.size()); }
  std::size_t dim() const { return static_cast<std::size_t>(X_.cols()); }
  bool empty() const { return y_.size() == 0; }

  const InputMatrix& X() const { return X_; }
  const Eigen::VectorXd& y() const { return y_; }
  std::span<const double> input(std::size_t i) const {
    return row_span(X_, static_cast<Eigen::Index>(i));
  }

  void add(std::span<const double> x, double y);

 private:
  InputMatrix X_;
  Eigen::VectorXd y_;
};

struct LogMarginalLikelihood {
  double value = 0.0;
  // d entries for log-lengthscales followed by one for log-noise-variance.
  Eigen::VectorXd gradient;
};

LogMarginalLikelihood log_marginal_likelihood(const Dataset& data,
                                              const Decomposition& g,
                                              const KernelParams& params);

double log_marginal_likelihood_value(const Dataset& data,
                                     const Decomposition& g,
                                     const KernelParams& params);

struct FitOptions {
  std::size_t restarts = 3;  // total starts: one warm, the rest random
  std::size_t max_steps = 200;
  double grad_tol = 1e-5;
  double log_lengthscale_min = std::log(1e-3);
  double log_lengthscale_max = std::log(1e3);
  double log_noise_min = std::log(1e-6);
  double log_noise_max = 0.0;
  // Start for the first restart; a default is used when absent.
  std::optional<KernelParams> warm_start;
  std::uint64_t seed = 0;
};

struct FitReport {
  std::vector<double> start_values;  // LML at each successful start point
  std::vector<double> final_values;
  std::vector<std::size_t> steps;
  std::size_t failed_starts = 0;
  double best_value = -INFINITY;
};

// Additive GP conditioned on a dataset. Immutable once built.
class GpModel {
 public:
  // Conditions on the data with fixed hyperparameters. An empty dataset
  // yields the prior.
  static GpModel condition(Dataset data, Decomposition g, KernelParams params);

  const Dataset& dataset() const { return data_; }
  const Decomposition& decomposition() const { return g_; }
  const KernelParams& params() const { return params_; }
  // Lower Cholesky factor of K_t + sigma_n^2 I (+ jitter when applied).
  const Eigen::MatrixXd& cholesky_lower() const { return L_; }
  // (K_t + sigma_n^2 I)^-1 y_t.
  const Eigen::VectorXd& weights() const { return weights_; }
  double jitter() const { return jitter_; }
  const FitReport& fit_report() const { return report_; }

 private:
  friend GpModel fit(const Dataset&, const Decomposition&, const FitOptions&);

  Dataset data_;
  Decomposition g_;
  KernelParams params_;
  Eigen::MatrixXd L_;
  Eigen::VectorXd weights_;
  double jitter_ = 0.0;
  FitReport report_;
};

// Maximizes the log marginal likelihood over log-lengthscales and
// log-noise-variance, then conditions on the data.
GpModel fit(const Dataset& data, const Decomposition& g,
            const FitOptions& options);

struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
};

Posterior posterior(const GpModel& model, std::span<const double> x);

// Posterior of the sub-function of component c; xc holds only the
// component's coordinates, in the component's dimension order.
Posterior posterior_component(const GpModel& model, const Component& c,
                              std::span<const double> xc);

// Convenience overload reading the component's coordinates from a full input.
Posterior posterior_component_at(const GpModel& model, const Component& c,
                                 std::span<const double> x);

// Factor-reproduction and weight residuals, relative to the norm of
// K_t + sigma_n^2 I and y respectively.
struct ModelResiduals {
  double factor = 0.0;
  double weights = 0.0;
};
ModelResiduals model_residuals(const GpModel& model);

KernelParams default_kernel_params(std::size_t d);

}  // namespace rducb
