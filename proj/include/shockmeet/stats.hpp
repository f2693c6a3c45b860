#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shockmeet/dynamics.hpp"
#include "shockmeet/profiles.hpp"

namespace shockmeet::stats {

/// Outcome of one statistical check.
struct TestReport {
  std::string name;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.01;
  double target = 0.0;
  std::optional<double> p_value;
  double tolerance = 0.0;
  bool passed = false;
};

/// Row-major sample matrix: `size()` draws of a `dim`-vector.
class Samples {
 public:
  explicit Samples(int dim = 0) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : values_.size() / static_cast<std::size_t>(dim_); }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values_).subspan(i * dim_, dim_);
  }
  void push_back(std::span<const double> row);
  /// Column `k` (0-based) as a vector.
  std::vector<double> column(int k) const;

 private:
  int dim_;
  std::vector<double> values_;
};

double mean(std::span<const double> xs);
/// Unbiased sample variance.
double variance(std::span<const double> xs);
double normal_quantile(double p);

/// P(K > lambda) for the Kolmogorov distribution.
double kolmogorov_survival(double lambda);
/// One-sample KS test against the N(0, variance) distribution function.
TestReport ks_normal(std::span<const double> samples, double variance, double level = 0.01);
/// Two-sample KS test.
TestReport ks_two_sample(std::span<const double> a, std::span<const double> b, double level = 0.01);

struct GaussianCheck {
  TestReport mean;       // t-test of mean 0
  TestReport variance;   // chi-squared confidence interval contains the target
  TestReport normality;  // KS against N(0, target)

  bool passed() const { return mean.passed && variance.passed && normality.passed; }
};

inline constexpr std::size_t kMinGaussianSamples = 200;

GaussianCheck gaussian_check(std::span<const double> samples, double variance_target, double level = 0.01);

/// Limiting law of the scaled shock positions at the meeting point:
/// independent centered Gaussians X_k with variances D_k, and Y = psi(X).
struct LimitLaw {
  std::vector<double> densities;
  double t_star = 0.0;
  std::vector<double> variances;

  static LimitLaw from_scenario(const MeetingScenario& scenario);
};

/// D_k = (rho_{k-1}(1-rho_{k-1}) + rho_k(1-rho_k)) / (rho_k - rho_{k-1}) * t_star.
std::vector<double> limit_variances(const std::vector<double>& densities, double t_star);

struct LimitDraws {
  Samples x;
  Samples y;
};

/// M independent draws of (X, psi(X)); deterministic given seed.
LimitDraws limit_draws(const LimitLaw& law, std::size_t count, std::uint64_t seed);
Samples pushforward_oracle(const LimitLaw& law, std::size_t count, std::uint64_t seed);

/// Band of a: number of coordinates y_k <= a. For nondecreasing y this is the
/// k with y_k <= a < y_{k+1}.
int band(std::span<const double> y, double a);

/// Empirical frequencies w_0..w_n of {Y_k <= a < Y_{k+1}}; sums to exactly 1.
std::vector<double> mixture_weights(const Samples& y, double a);

/// Bounded test function with compact support [lo, hi] and known integral.
struct TestFunction {
  std::string name;
  std::function<double(double)> phi;
  double lo = 0.0;
  double hi = 0.0;
  double integral = 0.0;
  /// Interior points where phi is not smooth; quadrature splits there.
  std::vector<double> kinks;

  double operator()(double a) const { return phi(a); }
};

TestFunction triangular_bump(double center, double half_width);
/// exp(-1 / (1 - u^2)) with u = (a - center) / radius.
TestFunction smooth_bump(double center, double radius);
/// Indicator of [lo, hi] convolved with a uniform kernel of width `ramp`
/// (trapezoid with linear ramps of width `ramp`).
TestFunction mollified_box(double lo, double hi, double ramp);
std::vector<TestFunction> test_function_library();

/// Integral of exp(-1/(1-u^2)) over (-1, 1).
inline constexpr double kSmoothBumpMass = 0.44399381616807943;

/// Adaptive Gauss-Kronrod integral of phi over [a, b] clipped to its support.
double integrate(const TestFunction& phi, double a, double b);

/// eps^{1/2} sum_x f(theta_{x + center} eta) phi(eps^{1/2} x).
double density_field_functional(const BinaryConfig& eta, std::int64_t center, double epsilon,
                                const CylinderFunction& f, const TestFunction& phi);

/// sum_k nu_{rho_k}(f) * integral of phi over [y_k, y_{k+1}).
double limit_field_functional(std::span<const double> y, const std::vector<double>& densities,
                              const CylinderFunction& f, const TestFunction& phi);

/// Mean and standard error of the mean.
struct MeanEstimate {
  double mean = 0.0;
  double stderr_mean = 0.0;
  std::size_t count = 0;
};
MeanEstimate estimate_mean(std::span<const double> xs);

/// Compares two independent sample means: passes when |a - b| is within the
/// joint (1 - level) normal confidence half-width.
TestReport compare_means(const std::string& name, const MeanEstimate& estimate, const MeanEstimate& target,
                         double level = 0.01);

}  // namespace shockmeet::stats
