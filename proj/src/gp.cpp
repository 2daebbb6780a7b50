#include "rducb/gp.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <limits>
#include <numbers>
#include <string>

#include "rducb/error.hpp"
#include "rducb/rng.hpp"

namespace rducb {

Dataset::Dataset(InputMatrix X, Eigen::VectorXd y)
    : X_(std::move(X)), y_(std::move(y)) {
  if (X_.rows() != y_.size()) {
    throw Error(ErrorCode::kInvalidParameter,
                "dataset: X has " + std::to_string(X_.rows()) +
                    " rows but y has " + std::to_string(y_.size()));
  }
}

void Dataset::add(std::span<const double> x, double y) {
  if (x.size() != dim()) {
    throw Error(ErrorCode::kInvalidParameter,
                "dataset: input of length " + std::to_string(x.size()) +
                    ", expected " + std::to_string(dim()));
  }
  const Eigen::Index t = X_.rows();
  X_.conservativeResize(t + 1, Eigen::NoChange);
  for (std::size_t i = 0; i < x.size(); ++i) {
    X_(t, static_cast<Eigen::Index>(i)) = x[i];
  }
  y_.conservativeResize(t + 1);
  y_[t] = y;
}

KernelParams default_kernel_params(std::size_t d) {
  return KernelParams{std::vector<double>(d, 0.5), 1e-2};
}

namespace {

constexpr double kJitter = 1e-8;

// Per-dimension squared distances over the dataset, reused across every
// likelihood evaluation of one fit. Symmetric matrices are kept as their
// strict upper triangles, packed column by column; diagonals are implied
// (distance 0, kernel value 1).
class LmlWorkspace {
 public:
  LmlWorkspace(const Dataset& data, const Decomposition& g)
      : data_(data), g_(g), sqdist_(data.dim()) {
    const Eigen::Index t = data.X().rows();
    const Eigen::Index m = t * (t - 1) / 2;
    std::vector<bool> used(data.dim(), false);
    for (const auto& c : g.components()) {
      for (int i : c.dims()) {
        if (i < 1 || static_cast<std::size_t>(i) > data.dim()) {
          throw Error(ErrorCode::kDimensionOutOfRange,
                      "component dimension " + std::to_string(i) +
                          " outside dataset dimension");
        }
        used[i - 1] = true;
      }
    }
    for (std::size_t i = 0; i < data.dim(); ++i) {
      if (!used[i]) continue;
      const auto col = data.X().col(static_cast<Eigen::Index>(i));
      Eigen::VectorXd D(m);
      Eigen::Index k = 0;
      for (Eigen::Index q = 1; q < t; ++q) {
        D.segment(k, q) = (col.head(q).array() - col[q]).square().matrix();
        k += q;
      }
      sqdist_[i] = std::move(D);
    }
  }

  // Per-dimension factors exp(-1/2 D_i / theta_i^2); empty for unused dims.
  std::vector<Eigen::VectorXd> factors(const KernelParams& p) const {
    std::vector<Eigen::VectorXd> E(data_.dim());
    for (std::size_t i = 0; i < data_.dim(); ++i) {
      const double s = -0.5 / (p.lengthscales[i] * p.lengthscales[i]);
      E[i] = (sqdist_[i].array() * s).exp().matrix();
    }
    return E;
  }

  Eigen::VectorXd component(const Component& c,
                            const std::vector<Eigen::VectorXd>& E) const {
    Eigen::VectorXd P = E[c.dims()[0] - 1];
    for (std::size_t k = 1; k < c.size(); ++k) {
      P.array() *= E[c.dims()[k] - 1].array();
    }
    return P;
  }

  // Sum of component Gram matrices.
  Eigen::MatrixXd kernel(const KernelParams& p) const {
    return kernel(factors(p));
  }

  Eigen::MatrixXd kernel(const std::vector<Eigen::VectorXd>& E) const {
    const Eigen::Index t = data_.X().rows();
    Eigen::VectorXd packed = Eigen::VectorXd::Zero(t * (t - 1) / 2);
    for (const auto& c : g_.components()) {
      if (c.size() == 1) {
        packed += E[c.dims()[0] - 1];
      } else {
        packed += component(c, E);
      }
    }
    Eigen::MatrixXd K(t, t);
    Eigen::Index k = 0;
    for (Eigen::Index q = 0; q < t; ++q) {
      K.col(q).head(q) = packed.segment(k, q);
      K.row(q).head(q) = packed.segment(k, q).transpose();
      K(q, q) = static_cast<double>(g_.size());
      k += q;
    }
    return K;
  }

  double evaluate(const KernelParams& p, Eigen::VectorXd* grad) const {
    const Eigen::Index t = data_.X().rows();
    const std::vector<Eigen::VectorXd> E = factors(p);
    Eigen::MatrixXd Ky = kernel(E);
    Ky.diagonal().array() += p.noise_variance;
    Eigen::LLT<Eigen::MatrixXd> llt(Ky);
    if (llt.info() != Eigen::Success) {
      Ky.diagonal().array() += kJitter;
      llt.compute(Ky);
      if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::kNumericalError,
                    "Cholesky factorization failed after jitter");
      }
    }
    const Eigen::VectorXd alpha = llt.solve(data_.y());
    const double log_det_half =
        llt.matrixLLT().diagonal().array().log().sum();
    const double value = -0.5 * data_.y().dot(alpha) - log_det_half -
                         0.5 * static_cast<double>(t) *
                             std::log(2.0 * std::numbers::pi);
    if (grad) {
      const std::size_t d = data_.dim();
      grad->setZero(static_cast<Eigen::Index>(d + 1));
      Eigen::MatrixXd W = -llt.solve(Eigen::MatrixXd::Identity(t, t));
      W.noalias() += alpha * alpha.transpose();
      Eigen::VectorXd Wp(t * (t - 1) / 2);
      Eigen::Index k = 0;
      for (Eigen::Index q = 1; q < t; ++q) {
        Wp.segment(k, q) = W.col(q).head(q);
        k += q;
      }
      // d K_c / d log theta_i = K_c .* D_i / theta_i^2 for every i in c;
      // off-diagonal entries appear twice in the full trace.
      Eigen::VectorXd WK;
      for (const auto& c : g_.components()) {
        if (c.size() == 1) {
          WK = Wp.cwiseProduct(E[c.dims()[0] - 1]);
        } else {
          WK = Wp.cwiseProduct(component(c, E));
        }
        for (int i : c.dims()) {
          const auto j = static_cast<std::size_t>(i - 1);
          const double inv_l2 = 1.0 / (p.lengthscales[j] * p.lengthscales[j]);
          (*grad)[i - 1] += inv_l2 * WK.dot(sqdist_[j]);
        }
      }
      (*grad)[static_cast<Eigen::Index>(d)] =
          0.5 * p.noise_variance * W.trace();
    }
    return value;
  }

 private:
  const Dataset& data_;
  const Decomposition& g_;
  std::vector<Eigen::VectorXd> sqdist_;
};

void check_inputs(const Dataset& data, const Decomposition& g,
                  const KernelParams& params) {
  if (data.dim() != g.dim()) {
    throw Error(ErrorCode::kInvalidParameter,
                "dataset dimension " + std::to_string(data.dim()) +
                    " differs from decomposition dimension " +
                    std::to_string(g.dim()));
  }
  params.check(g.dim());
}

KernelParams params_from_log(const Eigen::VectorXd& z) {
  KernelParams p;
  const Eigen::Index d = z.size() - 1;
  p.lengthscales.resize(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) {
    p.lengthscales[static_cast<std::size_t>(i)] = std::exp(z[i]);
  }
  p.noise_variance = std::exp(z[d]);
  return p;
}

Eigen::VectorXd log_from_params(const KernelParams& p) {
  const auto d = static_cast<Eigen::Index>(p.lengthscales.size());
  Eigen::VectorXd z(d + 1);
  for (Eigen::Index i = 0; i < d; ++i) {
    z[i] = std::log(p.lengthscales[static_cast<std::size_t>(i)]);
  }
  z[d] = std::log(p.noise_variance);
  return z;
}

struct BoxResult {
  Eigen::VectorXd x;
  double f = 0.0;
  std::size_t steps = 0;
};

using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

// Projected limited-memory quasi-Newton descent with Armijo backtracking on
// a box. Non-finite objective values are treated as infeasible trial points.
BoxResult minimize_box(const Objective& fg, Eigen::VectorXd x,
                       const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                       std::size_t max_steps, double grad_tol) {
  constexpr std::size_t kMemory = 10;
  const Eigen::Index n = x.size();
  x = x.cwiseMax(lo).cwiseMin(hi);
  Eigen::VectorXd g(n);
  double f = fg(x, &g);
  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> hist;

  auto projected = [&](const Eigen::VectorXd& grad) {
    Eigen::VectorXd pg = grad;
    for (Eigen::Index i = 0; i < n; ++i) {
      if ((x[i] <= lo[i] && grad[i] > 0.0) || (x[i] >= hi[i] && grad[i] < 0.0)) {
        pg[i] = 0.0;
      }
    }
    return pg;
  };

  std::size_t step = 0;
  for (; step < max_steps; ++step) {
    const Eigen::VectorXd pg = projected(g);
    if (pg.lpNorm<Eigen::Infinity>() < grad_tol) break;

    Eigen::VectorXd q = pg;
    std::vector<double> a(hist.size());
    for (std::size_t k = hist.size(); k-- > 0;) {
      const auto& [s, y] = hist[k];
      a[k] = s.dot(q) / y.dot(s);
      q -= a[k] * y;
    }
    if (!hist.empty()) {
      const auto& [s, y] = hist.back();
      q *= s.dot(y) / y.dot(y);
    }
    for (std::size_t k = 0; k < hist.size(); ++k) {
      const auto& [s, y] = hist[k];
      const double b = y.dot(q) / y.dot(s);
      q += (a[k] - b) * s;
    }
    Eigen::VectorXd dir = -q;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (pg[i] == 0.0) dir[i] = 0.0;
    }
    if (dir.dot(pg) >= 0.0) {
      dir = -pg;
      hist.clear();
    }

    double alpha = hist.empty() ? std::min(1.0, 1.0 / dir.lpNorm<Eigen::Infinity>())
                                : 1.0;
    bool accepted = false;
    Eigen::VectorXd xn, gn(n);
    double fn = 0.0;
    for (int ls = 0; ls < 40; ++ls) {
      xn = (x + alpha * dir).cwiseMax(lo).cwiseMin(hi);
      fn = fg(xn, &gn);
      if (std::isfinite(fn) && fn <= f + 1e-4 * g.dot(xn - x)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (hist.empty()) break;
      hist.clear();
      continue;
    }
    Eigen::VectorXd s = xn - x;
    Eigen::VectorXd y = gn - g;
    if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
      hist.emplace_back(std::move(s), std::move(y));
      if (hist.size() > kMemory) hist.pop_front();
    }
    const double decrease = f - fn;
    x = std::move(xn);
    g = gn;
    f = fn;
    if (decrease <= 1e-12 * std::max(1.0, std::abs(f))) {
      ++step;
      break;
    }
  }
  return {std::move(x), f, step};
}

}  // namespace

LogMarginalLikelihood log_marginal_likelihood(const Dataset& data,
                                              const Decomposition& g,
                                              const KernelParams& params) {
  check_inputs(data, g, params);
  if (data.empty()) {
    throw Error(ErrorCode::kInvalidParameter,
                "log marginal likelihood needs a non-empty dataset");
  }
  LmlWorkspace ws(data, g);
  LogMarginalLikelihood out;
  out.value = ws.evaluate(params, &out.gradient);
  return out;
}

double log_marginal_likelihood_value(const Dataset& data,
                                     const Decomposition& g,
                                     const KernelParams& params) {
  check_inputs(data, g, params);
  if (data.empty()) {
    throw Error(ErrorCode::kInvalidParameter,
                "log marginal likelihood needs a non-empty dataset");
  }
  return LmlWorkspace(data, g).evaluate(params, nullptr);
}

GpModel GpModel::condition(Dataset data, Decomposition g, KernelParams params) {
  check_inputs(data, g, params);
  GpModel m;
  const Eigen::Index t = data.X().rows();
  if (t > 0) {
    Eigen::MatrixXd Ky = LmlWorkspace(data, g).kernel(params);
    Ky.diagonal().array() += params.noise_variance;
    Eigen::LLT<Eigen::MatrixXd> llt(Ky);
    if (llt.info() != Eigen::Success) {
      Ky.diagonal().array() += kJitter;
      llt.compute(Ky);
      if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::kNumericalError,
                    "Cholesky factorization failed after jitter");
      }
      m.jitter_ = kJitter;
    }
    m.L_ = llt.matrixL();
    m.weights_ = llt.solve(data.y());
  } else {
    m.L_.resize(0, 0);
    m.weights_.resize(0);
  }
  m.data_ = std::move(data);
  m.g_ = std::move(g);
  m.params_ = std::move(params);
  return m;
}

GpModel fit(const Dataset& data, const Decomposition& g,
            const FitOptions& options) {
  if (data.empty()) {
    throw Error(ErrorCode::kInvalidParameter, "fit needs a non-empty dataset");
  }
  const std::size_t d = g.dim();
  if (data.dim() != d) {
    throw Error(ErrorCode::kInvalidParameter,
                "dataset dimension differs from decomposition dimension");
  }
  const auto n = static_cast<Eigen::Index>(d + 1);
  Eigen::VectorXd lo(n), hi(n);
  lo.head(n - 1).setConstant(options.log_lengthscale_min);
  hi.head(n - 1).setConstant(options.log_lengthscale_max);
  lo[n - 1] = options.log_noise_min;
  hi[n - 1] = options.log_noise_max;

  LmlWorkspace ws(data, g);
  const Objective negative_lml = [&](const Eigen::VectorXd& z,
                                     Eigen::VectorXd* grad) {
    try {
      const double v = ws.evaluate(params_from_log(z), grad);
      if (grad) *grad = -*grad;
      return -v;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNumericalError) throw;
      return std::numeric_limits<double>::infinity();
    }
  };

  std::vector<Eigen::VectorXd> starts;
  const KernelParams first =
      options.warm_start ? *options.warm_start : default_kernel_params(d);
  first.check(d);
  starts.push_back(log_from_params(first));
  Rng rng(options.seed);
  std::uniform_real_distribution<double> log_len(std::log(0.05), std::log(2.0));
  std::uniform_real_distribution<double> log_noise(options.log_noise_min,
                                                   std::log(1e-1));
  for (std::size_t r = 1; r < options.restarts; ++r) {
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n - 1; ++i) z[i] = log_len(rng);
    z[n - 1] = log_noise(rng);
    starts.push_back(std::move(z));
  }

  FitReport report;
  Eigen::VectorXd best;
  for (auto& z0 : starts) {
    z0 = z0.cwiseMax(lo).cwiseMin(hi);
    const double f0 = negative_lml(z0, nullptr);
    if (!std::isfinite(f0)) {
      ++report.failed_starts;
      continue;
    }
    BoxResult res =
        minimize_box(negative_lml, z0, lo, hi, options.max_steps, options.grad_tol);
    report.start_values.push_back(-f0);
    report.final_values.push_back(-res.f);
    report.steps.push_back(res.steps);
    if (-res.f > report.best_value) {
      report.best_value = -res.f;
      best = res.x;
    }
  }
  if (best.size() == 0) {
    throw Error(ErrorCode::kFitError,
                "all " + std::to_string(starts.size()) +
                    " likelihood restarts failed numerically");
  }
  GpModel model = GpModel::condition(data, g, params_from_log(best));
  model.report_ = std::move(report);
  return model;
}

namespace {

Eigen::VectorXd solve_lower(const GpModel& model, const Eigen::VectorXd& k) {
  return model.cholesky_lower().triangularView<Eigen::Lower>().solve(k);
}

}  // namespace

Posterior posterior(const GpModel& model, std::span<const double> x) {
  const auto& g = model.decomposition();
  if (x.size() != g.dim()) {
    throw Error(ErrorCode::kInvalidParameter, "posterior: input length != d");
  }
  const double prior = static_cast<double>(g.size());
  const std::size_t t = model.dataset().size();
  if (t == 0) return {0.0, prior};
  Eigen::VectorXd k(static_cast<Eigen::Index>(t));
  for (std::size_t p = 0; p < t; ++p) {
    k[static_cast<Eigen::Index>(p)] =
        additive_kernel(g, model.params(), x, model.dataset().input(p));
  }
  const Eigen::VectorXd v = solve_lower(model, k);
  return {k.dot(model.weights()), std::max(0.0, prior - v.squaredNorm())};
}

Posterior posterior_component(const GpModel& model, const Component& c,
                              std::span<const double> xc) {
  if (!model.decomposition().contains(c)) {
    throw Error(ErrorCode::kInvalidParameter,
                "component is not part of the model decomposition");
  }
  if (xc.size() != c.size()) {
    throw Error(ErrorCode::kInvalidParameter,
                "posterior_component: sub-vector length != component size");
  }
  const std::size_t t = model.dataset().size();
  if (t == 0) return {0.0, 1.0};
  const auto& X = model.dataset().X();
  const auto& theta = model.params().lengthscales;
  Eigen::VectorXd k(static_cast<Eigen::Index>(t));
  for (std::size_t p = 0; p < t; ++p) {
    double r2 = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
      const int dim = c.dims()[j] - 1;
      const double z = (xc[j] - X(static_cast<Eigen::Index>(p), dim)) / theta[dim];
      r2 += z * z;
    }
    k[static_cast<Eigen::Index>(p)] = std::exp(-0.5 * r2);
  }
  const Eigen::VectorXd v = solve_lower(model, k);
  return {k.dot(model.weights()), std::max(0.0, 1.0 - v.squaredNorm())};
}

Posterior posterior_component_at(const GpModel& model, const Component& c,
                                 std::span<const double> x) {
  std::vector<double> xc;
  xc.reserve(c.size());
  for (int dim : c.dims()) {
    if (dim < 1 || static_cast<std::size_t>(dim) > x.size()) {
      throw Error(ErrorCode::kDimensionOutOfRange,
                  "component dimension outside input");
    }
    xc.push_back(x[dim - 1]);
  }
  return posterior_component(model, c, xc);
}

ModelResiduals model_residuals(const GpModel& model) {
  const auto& data = model.dataset();
  if (data.empty()) return {};
  Eigen::MatrixXd Ky = gram_matrix(model.decomposition(), model.params(), data.X());
  Ky.diagonal().array() += model.params().noise_variance + model.jitter();
  const Eigen::MatrixXd& L = model.cholesky_lower();
  ModelResiduals r;
  r.factor = (L * L.transpose() - Ky).norm() / Ky.norm();
  r.weights = (Ky * model.weights() - data.y()).norm() /
              std::max(data.y().norm(), 1e-300);
  return r;
}

}  // namespace rducb
