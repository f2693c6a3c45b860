#include "shockmeet/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "shockmeet/burgers.hpp"
#include "shockmeet/error.hpp"
#include "shockmeet/rng.hpp"

namespace shockmeet::stats {

void Samples::push_back(std::span<const double> row) {
  if (static_cast<int>(row.size()) != dim_) throw Error(ErrorKind::kBadInput, "sample dimension mismatch");
  values_.insert(values_.end(), row.begin(), row.end());
}

std::vector<double> Samples::column(int k) const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = values_[i * dim_ + k];
  return out;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal(), p); }

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // Theta-function form converges fast for small lambda.
    const double pi2 = M_PI * M_PI;
    double sum = 0.0;
    for (int k = 1; k <= 20; ++k) {
      double odd = 2.0 * k - 1.0;
      sum += std::exp(-odd * odd * pi2 / (8.0 * lambda * lambda));
    }
    return std::clamp(1.0 - std::sqrt(2.0 * M_PI) / lambda * sum, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

namespace {

// Stephens' finite-sample correction of the asymptotic KS p-value.
double ks_pvalue(double d, double effective_n) {
  const double root = std::sqrt(effective_n);
  return kolmogorov_survival((root + 0.12 + 0.11 / root) * d);
}

}  // namespace

TestReport ks_normal(std::span<const double> samples, double variance, double level) {
  if (samples.empty()) throw Error(ErrorKind::kTooFewSamples, "KS test needs samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  const double sd = std::sqrt(variance);
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double cdf = 0.5 * std::erfc(-sorted[i] / (sd * M_SQRT2));
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - cdf, cdf - static_cast<double>(i) / n});
  }
  TestReport report;
  report.name = "ks_normal";
  report.estimate = d;
  report.level = level;
  report.target = 0.0;
  report.p_value = ks_pvalue(d, n);
  report.passed = *report.p_value > level;
  return report;
}

TestReport ks_two_sample(std::span<const double> a, std::span<const double> b, double level) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::kTooFewSamples, "KS test needs samples");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  TestReport report;
  report.name = "ks_two_sample";
  report.estimate = d;
  report.level = level;
  report.p_value = ks_pvalue(d, na * nb / (na + nb));
  report.passed = *report.p_value > level;
  return report;
}

GaussianCheck gaussian_check(std::span<const double> samples, double variance_target, double level) {
  if (samples.size() < kMinGaussianSamples) {
    throw Error(ErrorKind::kTooFewSamples,
                "gaussian_check needs at least 200 samples, got " + std::to_string(samples.size()));
  }
  if (!(variance_target > 0.0)) throw Error(ErrorKind::kBadInput, "variance target must be positive");
  const double n = static_cast<double>(samples.size());
  const double m = mean(samples);
  const double s2 = variance(samples);

  GaussianCheck check;

  boost::math::students_t t_dist(n - 1.0);
  const double se = std::sqrt(s2 / n);
  const double t_stat = se > 0.0 ? m / se : 0.0;
  const double t_crit = boost::math::quantile(t_dist, 1.0 - level / 2.0);
  check.mean.name = "mean";
  check.mean.estimate = m;
  check.mean.ci_low = m - t_crit * se;
  check.mean.ci_high = m + t_crit * se;
  check.mean.level = level;
  check.mean.target = 0.0;
  check.mean.p_value = 2.0 * boost::math::cdf(boost::math::complement(t_dist, std::abs(t_stat)));
  check.mean.passed = *check.mean.p_value > level;

  boost::math::chi_squared chi(n - 1.0);
  check.variance.name = "variance";
  check.variance.estimate = s2;
  check.variance.ci_low = (n - 1.0) * s2 / boost::math::quantile(chi, 1.0 - level / 2.0);
  check.variance.ci_high = (n - 1.0) * s2 / boost::math::quantile(chi, level / 2.0);
  check.variance.level = level;
  check.variance.target = variance_target;
  check.variance.passed = check.variance.ci_low <= variance_target && variance_target <= check.variance.ci_high;

  check.normality = ks_normal(samples, variance_target, level);
  check.normality.name = "normality";
  return check;
}

std::vector<double> limit_variances(const std::vector<double>& densities, double t_star) {
  std::vector<double> d(densities.size() - 1);
  for (std::size_t k = 1; k < densities.size(); ++k) {
    const double lo = densities[k - 1];
    const double hi = densities[k];
    d[k - 1] = (lo * (1.0 - lo) + hi * (1.0 - hi)) / (hi - lo) * t_star;
  }
  return d;
}

LimitLaw LimitLaw::from_scenario(const MeetingScenario& scenario) {
  LimitLaw law;
  law.densities = scenario.profile.densities();
  law.t_star = scenario.t_star;
  law.variances = limit_variances(law.densities, law.t_star);
  for (double d : law.variances) {
    if (!(d > 0.0)) throw Error(ErrorKind::kBadInput, "degenerate limit variance (densities 0 and 1 in one shock)");
  }
  return law;
}

LimitDraws limit_draws(const LimitLaw& law, std::size_t count, std::uint64_t seed) {
  const int n = static_cast<int>(law.variances.size());
  LimitDraws draws{Samples(n), Samples(n)};
  Rng rng(seed);
  std::vector<double> x(n);
  for (std::size_t m = 0; m < count; ++m) {
    for (int k = 0; k < n; ++k) x[k] = std::sqrt(law.variances[k]) * rng.normal();
    draws.x.push_back(x);
    draws.y.push_back(burgers::psi(x, law.densities));
  }
  return draws;
}

Samples pushforward_oracle(const LimitLaw& law, std::size_t count, std::uint64_t seed) {
  return limit_draws(law, count, seed).y;
}

int band(std::span<const double> y, double a) {
  return static_cast<int>(std::count_if(y.begin(), y.end(), [a](double v) { return v <= a; }));
}

std::vector<double> mixture_weights(const Samples& y, double a) {
  if (y.size() == 0) throw Error(ErrorKind::kBadInput, "mixture_weights needs samples");
  std::vector<std::size_t> counts(static_cast<std::size_t>(y.dim()) + 1, 0);
  for (std::size_t i = 0; i < y.size(); ++i) ++counts[band(y.row(i), a)];
  const double total = static_cast<double>(y.size());
  std::vector<double> w(counts.size(), 0.0);
  // The last occupied band takes 1 minus the index-order sum of the others,
  // which makes the index-order sum exactly one.
  std::size_t last = counts.size() - 1;
  while (counts[last] == 0) --last;
  double head = 0.0;
  for (std::size_t k = 0; k < last; ++k) {
    w[k] = static_cast<double>(counts[k]) / total;
    head += w[k];
  }
  w[last] = 1.0 - head;
  return w;
}

TestFunction triangular_bump(double center, double half_width) {
  return TestFunction{"triangle",
                      [=](double a) { return std::max(0.0, 1.0 - std::abs(a - center) / half_width); },
                      center - half_width, center + half_width, half_width, {center}};
}

TestFunction smooth_bump(double center, double radius) {
  return TestFunction{"smooth_bump",
                      [=](double a) {
                        const double u = (a - center) / radius;
                        return std::abs(u) < 1.0 ? std::exp(-1.0 / (1.0 - u * u)) : 0.0;
                      },
                      center - radius, center + radius, radius * kSmoothBumpMass, {}};
}

TestFunction mollified_box(double lo, double hi, double ramp) {
  const double half = ramp / 2.0;
  return TestFunction{"mollified_box",
                      [=](double a) {
                        if (a <= lo - half || a >= hi + half) return 0.0;
                        if (a < lo + half) return (a - (lo - half)) / ramp;
                        if (a > hi - half) return ((hi + half) - a) / ramp;
                        return 1.0;
                      },
                      lo - half, hi + half, hi - lo, {lo + half, hi - half}};
}

std::vector<TestFunction> test_function_library() {
  return {triangular_bump(0.0, 2.0), smooth_bump(0.5, 1.5), mollified_box(-1.0, 1.0, 0.5)};
}

double integrate(const TestFunction& phi, double a, double b) {
  const double lo = std::max(a, phi.lo);
  const double hi = std::min(b, phi.hi);
  if (!(lo < hi)) return 0.0;
  std::vector<double> cuts{lo};
  for (double k : phi.kinks) {
    if (lo < k && k < hi) cuts.push_back(k);
  }
  std::sort(cuts.begin() + 1, cuts.end());
  cuts.push_back(hi);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(phi.phi, cuts[i], cuts[i + 1], 15, 1e-10);
  }
  return total;
}

double density_field_functional(const BinaryConfig& eta, std::int64_t center, double epsilon,
                                const CylinderFunction& f, const TestFunction& phi) {
  const double scale = std::sqrt(epsilon);
  const auto first = static_cast<std::int64_t>(std::ceil(phi.lo / scale));
  const auto last = static_cast<std::int64_t>(std::floor(phi.hi / scale));
  if (!eta.window.contains(center + first - f.radius()) || !eta.window.contains(center + last + f.radius())) {
    throw Error(ErrorKind::kSupportTooWide, "test function support exceeds the simulated window");
  }
  auto occupied = [&eta](std::int64_t x) { return eta.at(x); };
  double total = 0.0;
  for (std::int64_t x = first; x <= last; ++x) {
    const double weight = phi(scale * static_cast<double>(x));
    if (weight != 0.0) total += f.evaluate(occupied, center + x) * weight;
  }
  return scale * total;
}

double limit_field_functional(std::span<const double> y, const std::vector<double>& densities,
                              const CylinderFunction& f, const TestFunction& phi) {
  if (y.size() + 1 != densities.size()) throw Error(ErrorKind::kBadInput, "need one more density than shocks");
  for (std::size_t k = 1; k < y.size(); ++k) {
    if (y[k - 1] > y[k]) throw Error(ErrorKind::kBadInput, "shock positions must be nondecreasing");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < densities.size(); ++k) {
    const double lo = k == 0 ? -std::numeric_limits<double>::infinity() : y[k - 1];
    const double hi = k == y.size() ? std::numeric_limits<double>::infinity() : y[k];
    if (lo < hi) total += nu_expectation(f, densities[k]) * integrate(phi, lo, hi);
  }
  return total;
}

MeanEstimate estimate_mean(std::span<const double> xs) {
  MeanEstimate e;
  e.count = xs.size();
  e.mean = mean(xs);
  e.stderr_mean = xs.size() > 1 ? std::sqrt(variance(xs) / static_cast<double>(xs.size())) : 0.0;
  return e;
}

TestReport compare_means(const std::string& name, const MeanEstimate& estimate, const MeanEstimate& target,
                         double level) {
  TestReport report;
  report.name = name;
  report.estimate = estimate.mean;
  report.target = target.mean;
  report.level = level;
  const double half = normal_quantile(1.0 - level / 2.0) *
                      std::hypot(estimate.stderr_mean, target.stderr_mean);
  report.ci_low = estimate.mean - half;
  report.ci_high = estimate.mean + half;
  report.tolerance = half;
  report.passed = std::abs(estimate.mean - target.mean) <= half;
  return report;
}

}  // namespace shockmeet::stats
