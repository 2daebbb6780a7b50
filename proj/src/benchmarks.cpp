#include "rducb/benchmarks.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <numbers>

#include "rducb/error.hpp"

namespace rducb {

std::string_view to_string(Sense sense) {
  return sense == Sense::kMinimize ? "minimize" : "maximize";
}

Sense parse_sense(std::string_view name) {
  if (name == "minimize") return Sense::kMinimize;
  if (name == "maximize") return Sense::kMaximize;
  throw Error(ErrorCode::kInvalidParameter,
              "sense must be minimize or maximize, got '" + std::string(name) + "'");
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

double Benchmark::operator()(std::span<const double> x) const {
  if (x.size() != dim) {
    throw Error(ErrorCode::kInvalidParameter,
                name + ": expected " + std::to_string(dim) + " inputs, got " +
                    std::to_string(x.size()));
  }
  for (std::size_t i = 0; i < dim; ++i) {
    if (!(x[i] >= box[i].lo && x[i] <= box[i].hi)) {
      throw Error(ErrorCode::kInvalidParameter,
                  name + ": input " + std::to_string(i + 1) + " = " +
                      format_double(x[i]) + " outside [" +
                      format_double(box[i].lo) + ", " + format_double(box[i].hi) +
                      "]");
    }
  }
  return evaluate(x);
}

double stybtang(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) {
    const double v2 = v * v;
    s += v2 * v2 - 16.0 * v2 + 5.0 * v;
  }
  return 0.5 * s;
}

double rosenbrock(std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i + 1] - x[i] * x[i];
    const double b = 1.0 - x[i];
    s += 100.0 * a * a + b * b;
  }
  return s;
}

double hartmann6(std::span<const double> x) {
  static constexpr double kAlpha[4] = {1.0, 1.2, 3.0, 3.2};
  static constexpr double kA[4][6] = {{10, 3, 17, 3.5, 1.7, 8},
                                      {0.05, 10, 17, 0.1, 8, 14},
                                      {3, 3.5, 1.7, 10, 17, 8},
                                      {17, 8, 0.05, 10, 0.1, 14}};
  static constexpr double kP[4][6] = {
      {0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
      {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
      {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
      {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}};
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    double inner = 0.0;
    for (int j = 0; j < 6; ++j) {
      const double dz = x[j] - kP[i][j];
      inner += kA[i][j] * dz * dz;
    }
    s += kAlpha[i] * std::exp(-inner);
  }
  return -s;
}

namespace {

// Correlated two-dimensional Gaussian shape at (800, 800) with covariance
// [[20000, 15000], [15000, 20000]]: returns the exponent -1/2 q.
double correlated_exponent(double x, double y) {
  constexpr double kDet = 20000.0 * 20000.0 - 15000.0 * 15000.0;
  const double dx = x - 800.0;
  const double dy = y - 800.0;
  const double q = (20000.0 * dx * dx - 2.0 * 15000.0 * dx * dy + 20000.0 * dy * dy) / kDet;
  return -0.5 * q;
}

double separable_exponent(double v) {
  const double dv = v - 300.0;
  return -0.5 * dv * dv / 10000.0;
}

}  // namespace

double toy_gmm_paper(std::span<const double> x) {
  constexpr double kDet = 20000.0 * 20000.0 - 15000.0 * 15000.0;
  const double norm2 = 1.0 / (2.0 * std::numbers::pi * std::sqrt(kDet));
  const double norm1 = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * 100.0);
  return (1.0 / 6.0) * norm2 * std::exp(correlated_exponent(x[0], x[1])) +
         (2.5 / 6.0) * norm1 * std::exp(separable_exponent(x[0])) +
         (2.5 / 6.0) * norm1 * std::exp(separable_exponent(x[1]));
}

double toy_gmm_figure(std::span<const double> x) {
  return 0.6 * std::exp(correlated_exponent(x[0], x[1])) +
         0.2 * std::exp(separable_exponent(x[0])) +
         0.2 * std::exp(separable_exponent(x[1]));
}

namespace {

constexpr double kToyPaperMax = 0.0033245205884109424;
constexpr double kToyFigureMax = 0.6000014907422904;

Benchmark synthetic(std::string name, std::size_t d, Bounds b, Sense sense,
                    std::optional<double> opt,
                    std::function<double(std::span<const double>)> f) {
  Benchmark bm;
  bm.name = std::move(name);
  bm.dim = d;
  bm.box.assign(d, b);
  bm.sense = sense;
  bm.known_optimum = opt;
  bm.evaluate = std::move(f);
  return bm;
}

void require_dim(std::string_view name, std::size_t d, std::size_t want) {
  if (d != want) {
    throw Error(ErrorCode::kInvalidParameter,
                std::string(name) + " is " + std::to_string(want) +
                    "-dimensional, got d=" + std::to_string(d));
  }
}

}  // namespace

Benchmark make_benchmark(std::string_view name, std::size_t d) {
  if (d == 0) throw Error(ErrorCode::kInvalidParameter, "benchmark needs d >= 1");
  if (name == "stybtang") {
    return synthetic("stybtang", d, {-5.0, 5.0}, Sense::kMinimize,
                     kStybtangMinPerDim * static_cast<double>(d), stybtang);
  }
  if (name == "rosenbrock") {
    if (d < 2) throw Error(ErrorCode::kInvalidParameter, "rosenbrock needs d >= 2");
    return synthetic("rosenbrock", d, {-5.0, 10.0}, Sense::kMinimize, 0.0, rosenbrock);
  }
  if (name.starts_with("hartmann6")) {
    std::size_t pad = 0;
    if (name.size() > 9) {
      const auto rest = name.substr(9);
      if (rest.front() != '+') {
        throw Error(ErrorCode::kInvalidParameter,
                    "unknown benchmark '" + std::string(name) + "'");
      }
      auto [p, ec] = std::from_chars(rest.data() + 1, rest.data() + rest.size(), pad);
      if (ec != std::errc() || p != rest.data() + rest.size()) {
        throw Error(ErrorCode::kInvalidParameter,
                    "bad padding in '" + std::string(name) + "'");
      }
    }
    require_dim(name, d, 6 + pad);
    return synthetic(std::string(name), d, {0.0, 1.0}, Sense::kMinimize,
                     kHartmann6Min, hartmann6);
  }
  if (name == "toy_gmm_paper") {
    require_dim(name, d, 3);
    return synthetic("toy_gmm_paper", 3, {0.0, 1000.0}, Sense::kMaximize,
                     kToyPaperMax, toy_gmm_paper);
  }
  if (name == "toy_gmm_figure") {
    require_dim(name, d, 3);
    return synthetic("toy_gmm_figure", 3, {0.0, 1000.0}, Sense::kMaximize,
                     kToyFigureMax, toy_gmm_figure);
  }
  throw Error(ErrorCode::kInvalidParameter,
              "unknown benchmark '" + std::string(name) + "'");
}

std::vector<std::string> benchmark_names() {
  return {"stybtang", "rosenbrock", "hartmann6", "hartmann6+14",
          "toy_gmm_paper", "toy_gmm_figure"};
}

double eval_benchmark(std::string_view name, std::span<const double> x) {
  return make_benchmark(name, x.size())(x);
}

double known_optimum(std::string_view name, std::size_t d) {
  if (name == "external") {
    throw Error(ErrorCode::kUnknownOptimum,
                "external black boxes have no known optimum");
  }
  const Benchmark bm = make_benchmark(name, d);
  if (!bm.known_optimum) {
    throw Error(ErrorCode::kUnknownOptimum,
                std::string(name) + " has no known optimum");
  }
  return *bm.known_optimum;
}

}  // namespace rducb
