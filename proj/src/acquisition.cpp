#include "rducb/acquisition.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "rducb/error.hpp"

namespace rducb {

std::string_view to_string(AcquisitionFamily family) {
  return family == AcquisitionFamily::kAddUcb ? "add-ucb" : "add-ei";
}

AcquisitionFamily parse_acquisition_family(std::string_view name) {
  if (name == "add-ucb") return AcquisitionFamily::kAddUcb;
  if (name == "add-ei") return AcquisitionFamily::kAddEi;
  throw Error(ErrorCode::kInvalidParameter,
              "unknown acquisition '" + std::string(name) + "'");
}

double beta(std::size_t t) {
  if (t < 1) {
    throw Error(ErrorCode::kInvalidParameter, "beta: round index must be >= 1");
  }
  return 0.5 * std::log(2.0 * static_cast<double>(t));
}

double AcquisitionSpec::beta_at(std::size_t t) const {
  if (beta_override) {
    if (*beta_override < 0.0) {
      throw Error(ErrorCode::kInvalidParameter, "beta override must be >= 0");
    }
    return *beta_override;
  }
  return beta(t);
}

double ucb_term(double mean, double variance, double beta_t) {
  return mean + beta_t * std::sqrt(variance);
}

double ei_term(double mean, double variance, double incumbent_mean) {
  const double sd = std::sqrt(variance);
  const double diff = mean - incumbent_mean;
  if (sd <= 0.0) return std::max(diff, 0.0);
  const double z = diff / sd;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return diff * cdf + sd * pdf;
}

double incumbent_mean(const GpModel& model, const Component& c,
                      const AcquisitionSpec& spec) {
  if (spec.incumbent.size() != model.decomposition().dim()) {
    throw Error(ErrorCode::kInvalidParameter,
                "add-ei needs an incumbent of length d");
  }
  return posterior_component_at(model, c, spec.incumbent).mean;
}

double component_term(const GpModel& model, const Component& c,
                      std::span<const double> xc, const AcquisitionSpec& spec,
                      std::size_t t) {
  const Posterior post = posterior_component(model, c, xc);
  if (spec.family == AcquisitionFamily::kAddUcb) {
    return ucb_term(post.mean, post.variance, spec.beta_at(t));
  }
  return ei_term(post.mean, post.variance, incumbent_mean(model, c, spec));
}

double total_acquisition(const GpModel& model, std::span<const double> x,
                         const AcquisitionSpec& spec, std::size_t t) {
  if (x.size() != model.decomposition().dim()) {
    throw Error(ErrorCode::kInvalidParameter,
                "total_acquisition: input length != d");
  }
  double total = 0.0;
  std::vector<double> xc;
  for (const auto& c : model.decomposition().components()) {
    xc.clear();
    for (int dim : c.dims()) xc.push_back(x[dim - 1]);
    total += component_term(model, c, xc, spec, t);
  }
  return total;
}

}  // namespace rducb
