#include "shockmeet/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "shockmeet/dynamics.hpp"
#include "shockmeet/ensemble.hpp"
#include "shockmeet/error.hpp"
#include "shockmeet/format.hpp"
#include "shockmeet/rng.hpp"

namespace shockmeet::acceptance {

namespace {

stats::TestReport bound_check(const std::string& name, double estimate, double target, double tolerance) {
  stats::TestReport r;
  r.name = name;
  r.estimate = estimate;
  r.target = target;
  r.tolerance = tolerance;
  r.ci_low = target - tolerance;
  r.ci_high = target + tolerance;
  r.passed = std::abs(estimate - target) <= tolerance;
  return r;
}

stats::TestReport below_check(const std::string& name, double estimate, double bound) {
  stats::TestReport r;
  r.name = name;
  r.estimate = estimate;
  r.target = bound;
  r.ci_high = bound;
  r.passed = estimate < bound;
  return r;
}

stats::TestReport flag_check(const std::string& name, bool ok, double estimate = 0.0, double target = 0.0) {
  stats::TestReport r;
  r.name = name;
  r.estimate = estimate;
  r.target = target;
  r.passed = ok;
  return r;
}

stats::TestReport named(stats::TestReport r, const std::string& name) {
  r.name = name;
  return r;
}

// Scenario of the one-shock criteria: alpha = 0.2, beta = 0.8, t* = 1.
MeetingScenario one_shock() { return validate_meeting(StepProfile({0.0}, {0.2, 0.8}), 1.0); }

// Two shocks meeting at r* = 0, t* = 2 with D_1 = D_2 = 1.
MeetingScenario two_shock() { return validate_meeting(StepProfile({-1.0, 1.0}, {0.0, 0.5, 1.0})); }

constexpr std::size_t kReplicas = 2000;
constexpr double kLevel = 0.01;

Observables one_shock_observables() {
  Observables obs;
  obs.local.push_back(LocalProbe{0.0, CylinderFunction::occupancy()});
  return obs;
}

Observables two_shock_observables() {
  Observables obs;
  obs.local.push_back(LocalProbe{0.0, CylinderFunction::occupancy()});
  obs.local.push_back(LocalProbe{1.0, CylinderFunction::occupancy()});
  for (auto& phi : stats::test_function_library()) {
    obs.field.push_back(FieldProbe{CylinderFunction::occupancy(), phi});
  }
  return obs;
}

class Runner {
 public:
  explicit Runner(const AcceptanceConfig& config) : config_(config) {}

  CriterionResult run(const CriterionInfo& info) {
    CriterionResult result;
    result.id = info.id;
    result.key = info.key;
    result.title = info.title;
    const auto start = std::chrono::steady_clock::now();
    try {
      switch (info.id) {
        case 1: result.checks = oracle(); break;
        case 2: result.checks = one_shock_gaussian(); break;
        case 3: result.checks = one_shock_mixture(); break;
        case 4: result.checks = two_shock_law(); break;
        case 5: result.checks = local_mixture(); break;
        case 6: result.checks = density_field(); break;
        case 7: result.checks = psi_checks(); break;
        case 8: result.checks = coupling(); break;
        case 9: result.checks = predictor(); break;
        case 10: result.checks = determinism(); break;
        default: throw Error(ErrorKind::kBadInput, "unknown criterion");
      }
      result.passed = !result.checks.empty();
      for (const auto& c : result.checks) result.passed = result.passed && c.passed;
    } catch (const std::exception& e) {
      result.checks.push_back(flag_check(std::string("error: ") + e.what(), false));
      result.passed = false;
    }
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
  }

 private:
  EnsembleOptions options(int threads, bool invariants) const {
    EnsembleOptions o;
    o.threads = threads;
    o.check_invariants = invariants;
    return o;
  }

  const EnsembleResult& one_shock_run(double epsilon) {
    auto it = one_shock_.find(epsilon);
    if (it == one_shock_.end()) {
      it = one_shock_
               .emplace(epsilon, run_ensemble(one_shock(), epsilon, kReplicas, config_.seed + 2,
                                              one_shock_observables(), options(config_.threads, false)))
               .first;
    }
    return it->second;
  }

  const EnsembleResult& two_shock_run() {
    if (!two_shock_) {
      two_shock_ = run_ensemble(two_shock(), 1.0 / 200.0, kReplicas, config_.seed + 4, two_shock_observables(),
                                options(config_.threads, true));
    }
    return *two_shock_;
  }

  const stats::LimitDraws& two_shock_oracle() {
    if (!oracle_) oracle_ = stats::limit_draws(stats::LimitLaw::from_scenario(two_shock()), 1'000'000, config_.seed + 40);
    return *oracle_;
  }

  std::vector<stats::TestReport> oracle() {
    const std::vector<Priority> initial = {0, 0, kHole, kHole, kHole};
    const double t = 0.5;
    const std::size_t replicas = 100'000;
    const auto exact = exact_distribution(initial, t);
    std::vector<double> counts(exact.states.size(), 0.0);
    const MulticlassConfig start(Window{0, 4}, initial, {});
    for (std::size_t i = 0; i < replicas; ++i) {
      Simulation sim(start, ShockTracker(start), replica_seed(config_.seed + 1, i));
      sim.advance_to(t);
      const auto p = sim.config().priorities();
      counts[exact.index_of(std::vector<Priority>(p.begin(), p.end()))] += 1.0;
    }
    double tv = 0.0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
      tv += std::abs(counts[s] / static_cast<double>(replicas) - exact.probabilities[s]);
    }
    return {below_check("total_variation", 0.5 * tv, 0.01)};
  }

  std::vector<stats::TestReport> one_shock_gaussian() {
    const auto& run = one_shock_run(1.0 / 400.0);
    const double d = stats::limit_variances({0.2, 0.8}, 1.0)[0];
    const auto xs = run.x_column(1);
    const double var = stats::variance(xs);
    const double m = stats::mean(xs);
    const double sigma = std::sqrt(var / static_cast<double>(xs.size()));
    return {
        bound_check("variance_within_15pct", var, d, 0.15 * d),
        named(stats::ks_normal(xs, d, kLevel), "ks_normality"),
        bound_check("mean_within_3sigma", m, 0.0, 3.0 * sigma),
        flag_check("invalid_fraction_le_1pct", run.valid_count() >= run.size() * 99 / 100,
                   static_cast<double>(run.size() - run.valid_count()), 0.0),
    };
  }

  std::vector<stats::TestReport> one_shock_mixture() {
    const auto& run = one_shock_run(1.0 / 400.0);
    return {bound_check("occupancy_at_origin", stats::mean(run.local_column(0)), 0.5, 0.02)};
  }

  std::vector<stats::TestReport> two_shock_law() {
    const auto& run = two_shock_run();
    const auto& oracle = two_shock_oracle();
    const auto y = run.y_samples();
    const auto w = stats::mixture_weights(y, 0.0);
    const auto wo = stats::mixture_weights(oracle.y, 0.0);
    return {
        bound_check("P(Y1<=0<Y2)", w[1], 0.25, 0.03),
        bound_check("P(Y1>0)", w[0], 0.375, 0.03),
        bound_check("oracle_P(Y1<=0<Y2)", wo[1], 0.25, 0.002),
        bound_check("oracle_P(Y1>0)", wo[0], 0.375, 0.002),
        named(stats::ks_two_sample(y.column(0), oracle.y.column(0), kLevel), "ks_Y1_vs_oracle"),
        named(stats::ks_two_sample(y.column(1), oracle.y.column(1), kLevel), "ks_Y2_vs_oracle"),
    };
  }

  std::vector<stats::TestReport> local_mixture() {
    const auto& run = two_shock_run();
    const auto& oracle = two_shock_oracle();
    const auto obs = two_shock_observables();
    const auto f = CylinderFunction::occupancy();
    const auto at_zero = local_measure_estimate(run, obs, 0.0, f, oracle.y, kLevel);
    return {
        bound_check("occupancy_a0", at_zero.estimate, 0.5, 0.02),
        named(local_measure_estimate(run, obs, 1.0, f, oracle.y, kLevel), "occupancy_a1_vs_oracle"),
    };
  }

  std::vector<stats::TestReport> density_field() {
    const auto& run = two_shock_run();
    const auto& oracle = two_shock_oracle();
    const auto obs = two_shock_observables();
    const auto densities = two_shock().profile.densities();
    const std::size_t oracle_count = 200'000;
    std::vector<stats::TestReport> checks;
    for (std::size_t i = 0; i < obs.field.size(); ++i) {
      std::vector<double> limit(oracle_count);
      for (std::size_t m = 0; m < oracle_count; ++m) {
        limit[m] = stats::limit_field_functional(oracle.y.row(m), densities, obs.field[i].f, obs.field[i].phi);
      }
      checks.push_back(stats::compare_means("field_" + obs.field[i].phi.name,
                                            stats::estimate_mean(run.field_column(i)),
                                            stats::estimate_mean(limit), kLevel));
    }
    return checks;
  }

  std::vector<stats::TestReport> psi_checks() {
    Rng rng(config_.seed + 7);
    const std::size_t inputs = 10'000;
    double worst_wellposed = 0.0;
    double worst_closed_form = 0.0;
    double worst_marching = 0.0;
    auto random_densities = [&](int n) {
      // Strictly increasing with gaps of at least 0.15 so ordering times stay moderate.
      std::vector<double> rho(n + 1);
      const double slack = 1.0 - 0.15 * n;
      std::vector<double> cuts(n + 2);
      for (auto& c : cuts) c = rng.uniform() * slack;
      std::sort(cuts.begin(), cuts.end());
      for (int k = 0; k <= n; ++k) rho[k] = cuts[k + 1] + 0.15 * k;
      return rho;
    };
    for (std::size_t i = 0; i < inputs; ++i) {
      for (int n : {2, 3}) {
        const auto rho = random_densities(n);
        std::vector<double> x(n);
        for (auto& v : x) v = 2.0 * rng.normal();
        const double t = burgers::ordering_time(x, rho);
        const auto once = burgers::psi(x, rho, t);
        const auto twice = burgers::psi(x, rho, 2.0 * t);
        for (int k = 0; k < n; ++k) worst_wellposed = std::max(worst_wellposed, std::abs(once[k] - twice[k]));
        if (n == 2) {
          const double merged = x[0] * (rho[1] - rho[0]) / (rho[2] - rho[0]) + x[1] * (rho[2] - rho[1]) / (rho[2] - rho[0]);
          for (int k = 0; k < 2; ++k) {
            const double expected = x[0] <= x[1] ? x[k] : merged;
            worst_closed_form = std::max(worst_closed_form, std::abs(once[k] - expected));
          }
        } else {
          const auto marched = psi_by_marching(x, rho);
          for (int k = 0; k < n; ++k) worst_marching = std::max(worst_marching, std::abs(once[k] - marched[k]));
        }
      }
    }
    return {below_check("t_vs_2t_max_abs_diff", worst_wellposed, 1e-9),
            below_check("n2_closed_form_max_abs_diff", worst_closed_form, 1e-12),
            below_check("n3_time_marching_max_abs_diff", worst_marching, 1e-3)};
  }

  std::vector<stats::TestReport> coupling() {
    const auto& run = two_shock_run();
    std::uint64_t events = 0;
    for (const auto& r : run.records()) events += r.events;
    return {
        flag_check("violations_over_all_events", run.invariant_violations() == 0,
                   static_cast<double>(run.invariant_violations()), 0.0),
        flag_check("events_checked", events > 0, static_cast<double>(events)),
    };
  }

  std::vector<stats::TestReport> predictor() {
    const double d = stats::limit_variances({0.2, 0.8}, 1.0)[0];
    std::vector<double> variances;
    for (double eps : {1.0 / 100.0, 1.0 / 200.0, 1.0 / 400.0}) {
      variances.push_back(stats::variance(one_shock_run(eps).residual_column(1)));
    }
    return {
        below_check("residual_variance_eps_1/400", variances[2], 0.25 * d),
        flag_check("decreasing_1/100_to_1/200", variances[1] < variances[0], variances[1], variances[0]),
        flag_check("decreasing_1/200_to_1/400", variances[2] < variances[1], variances[2], variances[1]),
    };
  }

  std::vector<stats::TestReport> determinism() {
    const auto& first = two_shock_run();
    const int threads = config_.threads == 1 ? 3 : 1;
    const auto again = run_ensemble(two_shock(), 1.0 / 200.0, kReplicas, config_.seed + 4, two_shock_observables(),
                                    options(threads, true));
    const auto obs = two_shock_observables();
    const bool same = summarize(first, obs).dump(2) == summarize(again, obs).dump(2);
    return {flag_check("summary_json_byte_identical", same)};
  }

  AcceptanceConfig config_;
  std::map<double, EnsembleResult> one_shock_;
  std::optional<EnsembleResult> two_shock_;
  std::optional<stats::LimitDraws> oracle_;
};

bool selected(const AcceptanceConfig& config, const CriterionInfo& info) {
  if (config.only.empty()) return true;
  for (const auto& want : config.only) {
    if (want == info.key || want == std::to_string(info.id)) return true;
  }
  return false;
}

}  // namespace

const std::vector<CriterionInfo>& criteria() {
  static const std::vector<CriterionInfo> list = {
      {1, "oracle", "exact-generator oracle, TV < 0.01"},
      {2, "one-shock-gaussian", "one-shock Gaussian fluctuations"},
      {3, "one-shock-mixture", "one-shock fair mixture at the shock"},
      {4, "two-shock-law", "two-shock coalescence law vs psi pushforward"},
      {5, "local-mixture", "local mixture of product measures at the meeting point"},
      {6, "density-field", "density field functionals vs limit field"},
      {7, "psi", "psi well-posedness, closed form and time-marching oracle"},
      {8, "coupling", "coupling invariants over all two-shock replicas"},
      {9, "predictor", "initial-condition predictor residuals"},
      {10, "determinism", "byte-identical summary across worker counts"},
  };
  return list;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceConfig& config, std::ostream* progress) {
  for (const auto& want : config.only) {
    bool known = false;
    for (const auto& info : criteria()) known = known || want == info.key || want == std::to_string(info.id);
    if (!known) throw Error(ErrorKind::kBadInput, "unknown criterion '" + want + "'");
  }
  Runner runner(config);
  std::vector<CriterionResult> results;
  for (const auto& info : criteria()) {
    if (!selected(config, info)) continue;
    results.push_back(runner.run(info));
    if (progress) *progress << status_line(results.back()) << std::endl;
  }
  return results;
}

std::string status_line(const CriterionResult& r) {
  std::ostringstream out;
  out << (r.passed ? "[PASS] " : "[FAIL] ") << std::setw(2) << r.id << ' ' << r.key << " (" << std::fixed
      << std::setprecision(1) << r.seconds << "s)";
  for (const auto& c : r.checks) {
    out << "\n         " << (c.passed ? "ok   " : "FAIL ") << c.name << ": estimate=" << format_double(c.estimate)
        << " target=" << format_double(c.target);
    if (c.tolerance > 0.0) out << " tol=" << format_double(c.tolerance);
    if (c.p_value) out << " p=" << format_double(*c.p_value);
  }
  return out.str();
}

nlohmann::json to_json(const std::vector<CriterionResult>& results) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks) {
      nlohmann::json j{{"name", c.name},       {"estimate", c.estimate}, {"target", c.target},
                       {"tolerance", c.tolerance}, {"ci_low", c.ci_low}, {"ci_high", c.ci_high},
                       {"level", c.level},     {"passed", c.passed}};
      j["p_value"] = c.p_value ? nlohmann::json(*c.p_value) : nlohmann::json(nullptr);
      checks.push_back(j);
    }
    doc.push_back({{"id", r.id}, {"key", r.key}, {"title", r.title}, {"passed", r.passed}, {"checks", checks}});
  }
  return doc;
}

std::string to_table(const std::vector<CriterionResult>& results) {
  std::ostringstream out;
  out << std::left << std::setw(4) << "id" << std::setw(22) << "criterion" << std::setw(7) << "result"
      << "title\n";
  std::size_t passed = 0;
  for (const auto& r : results) {
    out << std::left << std::setw(4) << r.id << std::setw(22) << r.key << std::setw(7)
        << (r.passed ? "PASS" : "FAIL") << r.title << '\n';
    passed += r.passed;
  }
  out << passed << "/" << results.size() << " criteria passed\n";
  return out.str();
}

std::vector<double> march_fronts(const std::vector<double>& initial_positions, const std::vector<double>& densities,
                                 double t, double dt) {
  struct Front {
    double position;
    double left;
    double right;
    int low;
    int high;
  };
  std::vector<Front> fronts;
  for (std::size_t k = 0; k < initial_positions.size(); ++k) {
    int label = static_cast<int>(k) + 1;
    fronts.push_back(Front{initial_positions[k], densities[k], densities[k + 1], label, label});
  }
  const auto steps = static_cast<std::int64_t>(std::ceil(t / dt));
  for (std::int64_t s = 0; s < steps; ++s) {
    const double h = std::min(dt, t - static_cast<double>(s) * dt);
    for (auto& f : fronts) f.position += (1.0 - f.left - f.right) * h;
    for (std::size_t j = 0; j + 1 < fronts.size();) {
      if (fronts[j].position >= fronts[j + 1].position) {
        Front merged{0.5 * (fronts[j].position + fronts[j + 1].position), fronts[j].left, fronts[j + 1].right,
                     fronts[j].low, fronts[j + 1].high};
        fronts[j] = merged;
        fronts.erase(fronts.begin() + static_cast<std::ptrdiff_t>(j) + 1);
        j = j > 0 ? j - 1 : 0;
      } else {
        ++j;
      }
    }
  }
  std::vector<double> out;
  for (const auto& f : fronts) out.insert(out.end(), f.high - f.low + 1, f.position);
  return out;
}

std::vector<double> psi_by_marching(const std::vector<double>& x, const std::vector<double>& densities, double dt) {
  const double t = burgers::ordering_time(x, densities);
  std::vector<double> b(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) b[k] = x[k] - t * (1.0 - densities[k] - densities[k + 1]);
  return march_fronts(b, densities, t, dt);
}

}  // namespace shockmeet::acceptance
