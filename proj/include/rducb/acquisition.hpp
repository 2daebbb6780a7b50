#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rducb/gp.hpp"

namespace rducb {

enum class AcquisitionFamily { kAddUcb, kAddEi };

std::string_view to_string(AcquisitionFamily family);
AcquisitionFamily parse_acquisition_family(std::string_view name);

// Exploration bonus schedule 0.5 ln(2t), t >= 1.
double beta(std::size_t t);

struct AcquisitionSpec {
  AcquisitionFamily family = AcquisitionFamily::kAddUcb;
  // Constant bonus used instead of the schedule when set.
  std::optional<double> beta_override;
  // Best input found so far, in model input space. Required for add-ei.
  std::vector<double> incumbent;

  double beta_at(std::size_t t) const;
};

// Scalar transforms shared by every evaluation route so that grid tables
// and pointwise evaluation agree bit for bit given the same posterior.
double ucb_term(double mean, double variance, double beta_t);
double ei_term(double mean, double variance, double incumbent_mean);

// Acquisition contribution of one component; xc holds the component's
// coordinates only.
double component_term(const GpModel& model, const Component& c,
                      std::span<const double> xc, const AcquisitionSpec& spec,
                      std::size_t t);

// Component posterior mean at the incumbent (add-ei only).
double incumbent_mean(const GpModel& model, const Component& c,
                      const AcquisitionSpec& spec);

double total_acquisition(const GpModel& model, std::span<const double> x,
                         const AcquisitionSpec& spec, std::size_t t);

}  // namespace rducb
