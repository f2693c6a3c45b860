#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "shockmeet/dynamics.hpp"
#include "shockmeet/profiles.hpp"
#include "shockmeet/stats.hpp"

namespace shockmeet {

/// f evaluated around site [x_eps + a eps^{-1/2}] of the final configuration.
struct LocalProbe {
  double a;
  CylinderFunction f;
};

/// Density-field functional of the final configuration for (f, phi).
struct FieldProbe {
  CylinderFunction f;
  stats::TestFunction phi;
};

struct Observables {
  std::vector<LocalProbe> local;
  std::vector<FieldProbe> field;
};

/// One trajectory's scaled observations at time tau_eps = t_star / eps.
struct ReplicaRecord {
  std::uint64_t replica = 0;
  std::uint64_t seed = 0;
  bool valid = true;
  std::string error;
  std::vector<double> x_scaled;            // eps^{1/2} (X^k - [x_eps])
  std::vector<double> y_scaled;            // eps^{1/2} (Y^k - [x_eps])
  std::vector<double> predictor_residual;  // eps^{1/2} (X^k - predicted position)
  std::vector<double> crossing_times;      // macroscopic (eps * microscopic)
  std::vector<double> local_values;
  std::vector<double> field_values;
  std::uint64_t events = 0;
  std::uint64_t invariant_violations = 0;

  bool operator==(const ReplicaRecord&) const = default;
};

struct EnsembleOptions {
  int threads = 0;  // 0: hardware concurrency
  double kappa = 3.0;
  bool check_invariants = false;
  std::uint64_t first_replica = 0;
};

class EnsembleResult {
 public:
  EnsembleResult() = default;
  EnsembleResult(MeetingScenario scenario, double epsilon, std::vector<ReplicaRecord> records);

  const MeetingScenario& scenario() const { return *scenario_; }
  bool has_scenario() const { return scenario_.has_value(); }
  double epsilon() const { return epsilon_; }
  const std::vector<ReplicaRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  std::size_t valid_count() const;

  /// Concatenation ordered by replica index; the empty result is the identity.
  static EnsembleResult merge(const EnsembleResult& a, const EnsembleResult& b);

  /// Scaled X^k (or Y, residual) over valid replicas, k = 1..n.
  std::vector<double> x_column(int k) const;
  std::vector<double> residual_column(int k) const;
  stats::Samples y_samples() const;
  std::vector<double> local_column(std::size_t probe) const;
  std::vector<double> field_column(std::size_t probe) const;
  std::uint64_t invariant_violations() const;

  bool operator==(const EnsembleResult& other) const {
    return epsilon_ == other.epsilon_ && records_ == other.records_;
  }

 private:
  std::optional<MeetingScenario> scenario_;
  double epsilon_ = 0.0;
  std::vector<ReplicaRecord> records_;
};

/// Runs `replicas` independent trajectories to tau_eps. Replica i uses seed
/// replica_seed(base_seed, first_replica + i). Results do not depend on the
/// worker count. Throws TooManyInvalid when more than 1% of replicas hit the
/// window boundary.
EnsembleResult run_ensemble(const MeetingScenario& scenario, double epsilon, std::size_t replicas,
                            std::uint64_t base_seed, const Observables& observables,
                            const EnsembleOptions& options = {});

/// Runs one replica (exposed for tests and the simulate command).
ReplicaRecord run_replica(const MeetingScenario& scenario, double epsilon, std::uint64_t replica,
                          std::uint64_t seed, const Observables& observables, const EnsembleOptions& options);

inline constexpr double kMaxInvalidFraction = 0.01;

/// Mean of f at [x_eps + a eps^{-1/2}] against the mixture target built from
/// oracle draws of the limit law.
stats::TestReport local_measure_estimate(const EnsembleResult& result, const Observables& observables,
                                         double a, const CylinderFunction& f, const stats::Samples& oracle_y,
                                         double level = 0.01);

/// Summary document: gaussian checks per label, mixture weights at a = 0 and
/// probe means. Deterministic given the records.
nlohmann::json summarize(const EnsembleResult& result, const Observables& observables);

/// records.csv (replica,seed,k,x_scaled,y_scaled,residual,valid), replicas.csv
/// and probes.csv in `dir`.
void write_ensemble_csv(const std::filesystem::path& dir, const EnsembleResult& result);
EnsembleResult read_ensemble_csv(const std::filesystem::path& dir, const MeetingScenario& scenario,
                                 double epsilon);

}  // namespace shockmeet
