#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "shockmeet/ensemble.hpp"
#include "shockmeet/rng.hpp"
#include "test_util.hpp"

namespace shockmeet {
namespace {

using testing::error_kind;

MeetingScenario one_shock() { return validate_meeting(StepProfile({0.0}, {0.2, 0.8}), 1.0); }
MeetingScenario two_shock() { return validate_meeting(StepProfile({-1.0, 1.0}, {0.0, 0.5, 1.0})); }

Observables probes() {
  Observables obs;
  obs.local.push_back(LocalProbe{0.0, CylinderFunction::occupancy()});
  obs.local.push_back(LocalProbe{1.0, CylinderFunction::from_pattern_indicator(1, 0b011)});
  obs.field.push_back(FieldProbe{CylinderFunction::occupancy(), stats::triangular_bump(0.0, 2.0)});
  return obs;
}

EnsembleOptions with_threads(int threads, std::uint64_t first = 0) {
  EnsembleOptions options;
  options.threads = threads;
  options.first_replica = first;
  return options;
}

TEST(Ensemble, ZeroReplicasIsMergeIdentity) {
  auto empty = run_ensemble(one_shock(), 0.01, 0, 1, {});
  EXPECT_EQ(empty.size(), 0u);
  auto some = run_ensemble(one_shock(), 0.01, 5, 1, {});
  EXPECT_EQ(EnsembleResult::merge(empty, some), some);
  EXPECT_EQ(EnsembleResult::merge(some, empty), some);
  EXPECT_EQ(EnsembleResult::merge(EnsembleResult(), some), some);
}

TEST(Ensemble, RecordsCarryReplicaSeeds) {
  auto result = run_ensemble(one_shock(), 0.01, 6, 77, {}, with_threads(1, 10));
  ASSERT_EQ(result.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(result.records()[i].replica, 10 + i);
    EXPECT_EQ(result.records()[i].seed, replica_seed(77, 10 + i));
  }
}

TEST(Ensemble, IndependentOfWorkerCount) {
  auto one = run_ensemble(two_shock(), 0.05, 30, 5, probes(), with_threads(1));
  auto three = run_ensemble(two_shock(), 0.05, 30, 5, probes(), with_threads(3));
  EXPECT_EQ(one, three);
  EXPECT_EQ(summarize(one, probes()).dump(), summarize(three, probes()).dump());
  auto other_seed = run_ensemble(two_shock(), 0.05, 30, 6, probes(), with_threads(1));
  EXPECT_NE(one, other_seed);
}

TEST(Ensemble, ShardsMergeAssociativelyAndCommutatively) {
  const auto scenario = two_shock();
  auto a = run_ensemble(scenario, 0.05, 7, 9, probes(), with_threads(1, 0));
  auto b = run_ensemble(scenario, 0.05, 5, 9, probes(), with_threads(1, 7));
  auto c = run_ensemble(scenario, 0.05, 8, 9, probes(), with_threads(1, 12));
  auto whole = run_ensemble(scenario, 0.05, 20, 9, probes(), with_threads(2));
  using R = EnsembleResult;
  EXPECT_EQ(R::merge(R::merge(a, b), c), R::merge(a, R::merge(b, c)));
  EXPECT_EQ(R::merge(a, b), R::merge(b, a));
  EXPECT_EQ(R::merge(c, R::merge(a, b)), whole);
  EXPECT_EQ(summarize(R::merge(R::merge(c, a), b), probes()).dump(), summarize(whole, probes()).dump());
  EXPECT_EQ(error_kind([&] { R::merge(a, a); }), ErrorKind::kBadInput);
  auto foreign = run_ensemble(one_shock(), 0.05, 2, 9, {});
  EXPECT_EQ(error_kind([&] { R::merge(a, foreign); }), ErrorKind::kBadInput);
}

TEST(Ensemble, CsvRoundTrip) {
  const auto scenario = two_shock();
  auto result = run_ensemble(scenario, 0.05, 12, 3, probes(), with_threads(1));
  const auto dir = std::filesystem::temp_directory_path() / "shockmeet_csv_roundtrip";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  write_ensemble_csv(dir, result);
  auto back = read_ensemble_csv(dir, scenario, 0.05);
  EXPECT_EQ(back, result);
  EXPECT_EQ(summarize(back, probes()).dump(), summarize(result, probes()).dump());
  std::filesystem::remove_all(dir);
  EXPECT_EQ(error_kind([&] { read_ensemble_csv(dir, scenario, 0.05); }), ErrorKind::kIo);
}

TEST(Ensemble, SummaryHasOneGaussianBlockPerShock) {
  auto result = run_ensemble(two_shock(), 0.05, 10, 3, probes(), with_threads(1));
  auto doc = summarize(result, probes());
  ASSERT_EQ(doc["gaussian_checks"].size(), 2u);
  EXPECT_EQ(doc["gaussian_checks"][0]["k"], 1);
  EXPECT_TRUE(doc["gaussian_checks"][0].contains("skipped"));
  EXPECT_EQ(doc["replicas"], 10);
  EXPECT_EQ(doc["local_probes"].size(), 2u);
  EXPECT_EQ(doc["field_probes"].size(), 1u);
  double total = 0.0;
  for (double w : doc["mixture_weights_at_0"]) total += w;
  EXPECT_EQ(total, 1.0);
}

TEST(Ensemble, OneShockMeanIsCentered) {
  auto result = run_ensemble(one_shock(), 0.01, 400, 21, {}, with_threads(0));
  const auto xs = result.x_column(1);
  ASSERT_EQ(xs.size(), 400u);
  const double sd = std::sqrt(stats::variance(xs) / xs.size());
  EXPECT_NEAR(stats::mean(xs), 0.0, 3.0 * sd);
  // Before any crossing is possible Y coincides with X.
  for (const auto& r : result.records()) EXPECT_EQ(r.x_scaled, r.y_scaled);
}

TEST(Ensemble, LawOfLargeNumbers) {
  const auto scenario = two_shock();
  const double epsilon = 1.0 / 400.0;
  auto result = run_ensemble(scenario, epsilon, 200, 22, {}, with_threads(0));
  const auto d = stats::limit_variances(scenario.profile.densities(), scenario.t_star);
  const double root = std::sqrt(epsilon);
  const auto center = lattice_site(scenario.r_star, epsilon);
  for (int k = 1; k <= 2; ++k) {
    int inside = 0;
    for (double x : result.x_column(k)) {
      const double site = x / root + static_cast<double>(center);
      inside += std::abs(epsilon * site - scenario.r_star) < 5.0 * root * std::sqrt(d[k - 1]);
    }
    EXPECT_GE(inside, 198) << "k=" << k;
  }
}

TEST(Ensemble, InvariantsCleanWithChecksOn) {
  EnsembleOptions options = with_threads(1);
  options.check_invariants = true;
  auto result = run_ensemble(two_shock(), 0.05, 10, 4, {}, options);
  EXPECT_EQ(result.invariant_violations(), 0u);
  EXPECT_EQ(result.valid_count(), 10u);
}

TEST(Ensemble, TinyWindowIsReportedNotDropped) {
  // The tagged particle drifts right at speed 0.9; the window reaches 20 sites.
  const auto fast = validate_meeting(StepProfile({0.0}, {0.0, 0.1}), 1.0);
  EnsembleOptions options = with_threads(1);
  options.kappa = 0.2;
  EXPECT_EQ(error_kind([&] { run_ensemble(fast, 0.01, 10, 4, {}, options); }), ErrorKind::kTooManyInvalid);
  auto record = run_replica(fast, 0.01, 0, 5, {}, options);
  EXPECT_FALSE(record.valid);
  EXPECT_NE(record.error.find("BoundaryReached"), std::string::npos);
}

TEST(LocalMeasure, MissingProbe) {
  auto result = run_ensemble(one_shock(), 0.01, 5, 1, probes(), with_threads(1));
  stats::Samples oracle(1);
  oracle.push_back(std::vector<double>{0.0});
  EXPECT_EQ(error_kind([&] { local_measure_estimate(result, probes(), 0.5, CylinderFunction::occupancy(), oracle); }),
            ErrorKind::kObservableMissing);
  EXPECT_EQ(error_kind([&] { local_measure_estimate(result, {}, 0.0, CylinderFunction::occupancy(), oracle); }),
            ErrorKind::kObservableMissing);
}

TEST(LocalMeasure, FarRightSeesTopDensity) {
  const auto scenario = one_shock();
  const auto law = stats::LimitLaw::from_scenario(scenario);
  const double a = 10.0 * std::sqrt(law.variances[0]);
  Observables obs;
  obs.local.push_back(LocalProbe{a, CylinderFunction::occupancy()});
  auto result = run_ensemble(scenario, 0.01, 200, 8, obs, with_threads(0));
  auto oracle = stats::pushforward_oracle(law, 100'000, 9);
  auto report = local_measure_estimate(result, obs, a, CylinderFunction::occupancy(), oracle);
  EXPECT_NEAR(report.target, 0.8, 1e-3);
  EXPECT_TRUE(report.passed);
}

TEST(LocalMeasure, OneShockFairMixtureTarget) {
  const auto scenario = one_shock();
  auto result = run_ensemble(scenario, 0.01, 50, 8, probes(), with_threads(0));
  auto oracle = stats::pushforward_oracle(stats::LimitLaw::from_scenario(scenario), 200'000, 9);
  auto report = local_measure_estimate(result, probes(), 0.0, CylinderFunction::occupancy(), oracle);
  EXPECT_NEAR(report.target, 0.5, 0.005);
}

}  // namespace
}  // namespace shockmeet
