#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rducb {

enum class Sense { kMinimize, kMaximize };

std::string_view to_string(Sense sense);
Sense parse_sense(std::string_view name);

struct Bounds {
  double lo = 0.0;
  double hi = 1.0;
};

// A black-box objective over a box. Synthetic benchmarks are pure functions;
// external ones hold a child process shared by copies of the Benchmark.
struct Benchmark {
  std::string name;
  std::size_t dim = 0;
  std::vector<Bounds> box;
  Sense sense = Sense::kMinimize;
  std::optional<double> known_optimum;
  std::function<double(std::span<const double>)> evaluate;

  // Checks that x lies in the box, then evaluates.
  double operator()(std::span<const double> x) const;
};

// Synthetic functions, unchecked.
double stybtang(std::span<const double> x);
double rosenbrock(std::span<const double> x);
double hartmann6(std::span<const double> x);
double toy_gmm_paper(std::span<const double> x);
double toy_gmm_figure(std::span<const double> x);

// Minimizer of 0.5 (x^4 - 16 x^2 + 5 x) and its value.
inline constexpr double kStybtangArgmin = -2.903534027771177;
inline constexpr double kStybtangMinPerDim = -39.16616570377142;
inline constexpr double kHartmann6Min = -3.322368011415515;

// Names: stybtang, rosenbrock, hartmann6, hartmann6+K (K inert padding
// dimensions), toy_gmm_paper, toy_gmm_figure.
Benchmark make_benchmark(std::string_view name, std::size_t d);
std::vector<std::string> benchmark_names();

double eval_benchmark(std::string_view name, std::span<const double> x);
// Throws kUnknownOptimum when the benchmark has none.
double known_optimum(std::string_view name, std::size_t d);

// Line protocol over a child's standard streams: one request line of
// space-separated decimals, one reply line holding a single decimal.
class ExternalBlackbox {
 public:
  explicit ExternalBlackbox(std::string command,
                            std::chrono::milliseconds timeout =
                                std::chrono::seconds(60));
  ~ExternalBlackbox();
  ExternalBlackbox(const ExternalBlackbox&) = delete;
  ExternalBlackbox& operator=(const ExternalBlackbox&) = delete;

  double evaluate(std::span<const double> x);
  const std::string& command() const { return command_; }

 private:
  void start();
  void stop();
  [[noreturn]] void fail(const std::string& why);
  void drain_stderr();

  std::string command_;
  std::chrono::milliseconds timeout_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  int err_child_ = -1;
  std::string stdout_buffer_;
  std::string stderr_tail_;
};

double external_blackbox(ExternalBlackbox& box, std::span<const double> x);

Benchmark make_external_benchmark(std::string command, std::vector<Bounds> box,
                                  Sense sense,
                                  std::chrono::milliseconds timeout =
                                      std::chrono::seconds(60));

// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace rducb
