#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "rducb/decomposition.hpp"

namespace rducb {

// Inputs are stored one point per row so a row can be viewed as a span.
using InputMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::span<const double> row_span(const InputMatrix& X, Eigen::Index i) {
  return {X.row(i).data(), static_cast<std::size_t>(X.cols())};
}

// One lengthscale per input dimension, shared by every component that
// touches that dimension. Sub-kernels have unit amplitude.
struct KernelParams {
  std::vector<double> lengthscales;
  double noise_variance = 1e-6;

  std::size_t dim() const { return lengthscales.size(); }
  // Throws kInvalidParameter unless d lengthscales > 0 and noise > 0.
  void check(std::size_t d) const;
};

// exp(-1/2 sum_i ((x_i - x'_i) / theta_i)^2) over matching sub-vectors.
double se_component(std::span<const double> xc, std::span<const double> xc2,
                    std::span<const double> theta_c);

// Sub-kernel of component c evaluated on full d-dimensional inputs.
double component_kernel(const Component& c, const KernelParams& params,
                        std::span<const double> x, std::span<const double> x2);

// Sum of sub-kernels over the components of g; lies in (0, |g|].
double additive_kernel(const Decomposition& g, const KernelParams& params,
                       std::span<const double> x, std::span<const double> x2);

Eigen::MatrixXd component_gram(const Component& c, const KernelParams& params,
                               const InputMatrix& X);

Eigen::MatrixXd gram_matrix(const Decomposition& g, const KernelParams& params,
                            const InputMatrix& X);

// 1/2 ln det(I + K / sigma_n^2), the Gaussian mutual information between
// latent values with covariance K and their noisy observations.
double information_gain(const Eigen::MatrixXd& K, double sigma_n);

}  // namespace rducb
