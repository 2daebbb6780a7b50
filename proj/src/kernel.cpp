#include "rducb/kernel.hpp"

#include <cmath>
#include <string>

#include "rducb/error.hpp"

namespace rducb {

void KernelParams::check(std::size_t d) const {
  if (lengthscales.size() != d) {
    throw Error(ErrorCode::kInvalidParameter,
                "expected " + std::to_string(d) + " lengthscales, got " +
                    std::to_string(lengthscales.size()));
  }
  for (double l : lengthscales) {
    if (!(l > 0.0) || !std::isfinite(l)) {
      throw Error(ErrorCode::kInvalidParameter, "lengthscale must be > 0");
    }
  }
  if (!(noise_variance > 0.0) || !std::isfinite(noise_variance)) {
    throw Error(ErrorCode::kInvalidParameter, "noise variance must be > 0");
  }
}

double se_component(std::span<const double> xc, std::span<const double> xc2,
                    std::span<const double> theta_c) {
  if (xc.size() != xc2.size() || xc.size() != theta_c.size() || xc.empty()) {
    throw Error(ErrorCode::kInvalidParameter,
                "se_component: argument lengths differ or are empty");
  }
  double r2 = 0.0;
  for (std::size_t i = 0; i < xc.size(); ++i) {
    const double z = (xc[i] - xc2[i]) / theta_c[i];
    r2 += z * z;
  }
  return std::exp(-0.5 * r2);
}

double component_kernel(const Component& c, const KernelParams& params,
                        std::span<const double> x, std::span<const double> x2) {
  double r2 = 0.0;
  for (int dim : c.dims()) {
    const auto i = static_cast<std::size_t>(dim - 1);
    if (i >= x.size() || i >= x2.size() || i >= params.lengthscales.size()) {
      throw Error(ErrorCode::kInvalidParameter,
                  "component dimension " + std::to_string(dim) +
                      " exceeds input length");
    }
    const double z = (x[i] - x2[i]) / params.lengthscales[i];
    r2 += z * z;
  }
  return std::exp(-0.5 * r2);
}

double additive_kernel(const Decomposition& g, const KernelParams& params,
                       std::span<const double> x, std::span<const double> x2) {
  if (x.size() != g.dim() || x2.size() != g.dim()) {
    throw Error(ErrorCode::kInvalidParameter,
                "additive_kernel: inputs must have length d");
  }
  double k = 0.0;
  for (const auto& c : g.components()) k += component_kernel(c, params, x, x2);
  return k;
}

Eigen::MatrixXd component_gram(const Component& c, const KernelParams& params,
                               const InputMatrix& X) {
  const Eigen::Index t = X.rows();
  Eigen::MatrixXd K(t, t);
  for (Eigen::Index i = 0; i < t; ++i) {
    K(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      K(i, j) = K(j, i) =
          component_kernel(c, params, row_span(X, i), row_span(X, j));
    }
  }
  return K;
}

Eigen::MatrixXd gram_matrix(const Decomposition& g, const KernelParams& params,
                            const InputMatrix& X) {
  const Eigen::Index t = X.rows();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(t, t);
  for (const auto& c : g.components()) K += component_gram(c, params, X);
  return K;
}

double information_gain(const Eigen::MatrixXd& K, double sigma_n) {
  if (!(sigma_n > 0.0)) {
    throw Error(ErrorCode::kInvalidParameter, "sigma_n must be positive");
  }
  if (K.rows() != K.cols()) {
    throw Error(ErrorCode::kInvalidMatrix, "matrix is not square");
  }
  if (K.rows() == 0) return 0.0;
  const double scale = std::max(1.0, K.cwiseAbs().maxCoeff());
  if ((K - K.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw Error(ErrorCode::kInvalidMatrix, "matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K,
                                                     Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::kNumericalError, "eigendecomposition failed");
  }
  const auto& lambda = eig.eigenvalues();
  if (lambda.minCoeff() < -1e-8 * scale) {
    throw Error(ErrorCode::kInvalidMatrix,
                "matrix is not positive semi-definite (min eigenvalue " +
                    std::to_string(lambda.minCoeff()) + ")");
  }
  const double inv_var = 1.0 / (sigma_n * sigma_n);
  double gain = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    gain += std::log1p(std::max(lambda[i], 0.0) * inv_var);
  }
  return 0.5 * gain;
}

}  // namespace rducb
