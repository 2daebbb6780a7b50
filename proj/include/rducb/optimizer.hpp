#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <map>
#include <vector>

#include "rducb/acquisition.hpp"
#include "rducb/decomposition.hpp"
#include "rducb/gp.hpp"

namespace rducb {

// One input dimension of the search space: either an interval discretized
// into `grid_size` evenly spaced points, or an explicit finite value set.
class DimensionDomain {
 public:
  static DimensionDomain continuous(double lo, double hi, std::size_t grid_size);
  static DimensionDomain finite(std::vector<double> values);

  bool is_continuous() const { return continuous_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  std::size_t size() const;
  double value(std::size_t index) const;
  std::vector<double> grid() const;
  const std::vector<double>& values() const { return values_; }

 private:
  bool continuous_ = true;
  double lo_ = 0.0;
  double hi_ = 1.0;
  std::size_t grid_size_ = 2;
  std::vector<double> values_;
};

struct DomainSpec {
  std::vector<DimensionDomain> dims;

  std::size_t dim() const { return dims.size(); }
  static DomainSpec unit_cube(std::size_t d, std::size_t grid_size);
};

struct OptimizerOptions {
  bool refine = false;
  double memory_cap_mb = 1024.0;
};

struct AcquisitionMax {
  std::vector<double> x;
  std::vector<std::size_t> index;  // grid index per dimension
  double value = 0.0;
};

// Acquisition values of every component on the grid: a vector per
// singleton and a matrix per edge (rows follow the lower dimension).
struct GridTable {
  std::map<int, Eigen::VectorXd> unary;
  std::map<Edge, Eigen::MatrixXd> pairwise;
};

// Grid points whose value is within this relative distance of the maximum
// count as maximizers; the lexicographically lowest one is returned.
inline constexpr double kTieTolerance = 1e-12;

GridTable build_tables(const GpModel& model, const AcquisitionSpec& spec,
                       std::size_t t, const DomainSpec& domain,
                       const OptimizerOptions& options = {});

// Exact grid maximization of a tree-structured sum of tables by max-sum
// message passing, one tree of the forest at a time.
AcquisitionMax maximize_tables(const Decomposition& g, const GridTable& tables,
                               const DomainSpec& domain);

AcquisitionMax maximize_additive(const GpModel& model,
                                 const AcquisitionSpec& spec, std::size_t t,
                                 const DomainSpec& domain,
                                 const OptimizerOptions& options = {});

// Exhaustive enumeration of the grid through pointwise total_acquisition.
AcquisitionMax brute_force_max(const GpModel& model,
                               const AcquisitionSpec& spec, std::size_t t,
                               const DomainSpec& domain);

inline constexpr double kBruteForceLimit = 1e6;

}  // namespace rducb
