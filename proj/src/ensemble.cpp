#include "shockmeet/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <optional>
#include <cmath>
#include <exception>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "shockmeet/error.hpp"
#include "shockmeet/format.hpp"
#include "shockmeet/rng.hpp"

namespace shockmeet {

EnsembleResult::EnsembleResult(MeetingScenario scenario, double epsilon, std::vector<ReplicaRecord> records)
    : scenario_(std::move(scenario)), epsilon_(epsilon), records_(std::move(records)) {
  std::sort(records_.begin(), records_.end(),
            [](const ReplicaRecord& a, const ReplicaRecord& b) { return a.replica < b.replica; });
  for (std::size_t i = 1; i < records_.size(); ++i) {
    if (records_[i].replica == records_[i - 1].replica) {
      throw Error(ErrorKind::kBadInput, "duplicate replica " + std::to_string(records_[i].replica));
    }
  }
}

std::size_t EnsembleResult::valid_count() const {
  return static_cast<std::size_t>(std::count_if(records_.begin(), records_.end(),
                                                [](const ReplicaRecord& r) { return r.valid; }));
}

EnsembleResult EnsembleResult::merge(const EnsembleResult& a, const EnsembleResult& b) {
  if (!a.has_scenario()) return b;
  if (!b.has_scenario()) return a;
  if (a.epsilon_ != b.epsilon_ || a.scenario().profile.densities() != b.scenario().profile.densities() ||
      a.scenario().profile.breakpoints() != b.scenario().profile.breakpoints()) {
    throw Error(ErrorKind::kBadInput, "cannot merge ensembles of different scenarios");
  }
  std::vector<ReplicaRecord> records = a.records_;
  records.insert(records.end(), b.records_.begin(), b.records_.end());
  return EnsembleResult(a.scenario(), a.epsilon_, std::move(records));
}

namespace {

template <typename Pick>
std::vector<double> collect(const std::vector<ReplicaRecord>& records, Pick pick) {
  std::vector<double> out;
  for (const auto& r : records) {
    if (r.valid) out.push_back(pick(r));
  }
  return out;
}

}  // namespace

std::vector<double> EnsembleResult::x_column(int k) const {
  return collect(records_, [k](const ReplicaRecord& r) { return r.x_scaled.at(k - 1); });
}

std::vector<double> EnsembleResult::residual_column(int k) const {
  return collect(records_, [k](const ReplicaRecord& r) { return r.predictor_residual.at(k - 1); });
}

stats::Samples EnsembleResult::y_samples() const {
  stats::Samples out(has_scenario() ? scenario().profile.shocks() : 0);
  for (const auto& r : records_) {
    if (r.valid) out.push_back(r.y_scaled);
  }
  return out;
}

std::vector<double> EnsembleResult::local_column(std::size_t probe) const {
  return collect(records_, [probe](const ReplicaRecord& r) { return r.local_values.at(probe); });
}

std::vector<double> EnsembleResult::field_column(std::size_t probe) const {
  return collect(records_, [probe](const ReplicaRecord& r) { return r.field_values.at(probe); });
}

std::uint64_t EnsembleResult::invariant_violations() const {
  std::uint64_t total = 0;
  for (const auto& r : records_) total += r.invariant_violations;
  return total;
}

ReplicaRecord run_replica(const MeetingScenario& scenario, double epsilon, std::uint64_t replica,
                          std::uint64_t seed, const Observables& observables, const EnsembleOptions& options) {
  const auto& profile = scenario.profile;
  const int n = profile.shocks();
  const double horizon = scenario.t_star / epsilon;
  const Window window = simulation_window(scenario, epsilon, horizon, options.kappa);

  ReplicaRecord record;
  record.replica = replica;
  record.seed = seed;

  MulticlassConfig initial = sample_initial(scenario, epsilon, window, stream_seed(seed, 0));
  std::vector<double> predicted(n);
  for (int k = 1; k <= n; ++k) predicted[k - 1] = predicted_position(initial, profile, k, scenario.t_star, epsilon);

  EvolveOptions evolve_options;
  evolve_options.check_invariants = options.check_invariants;
  const bool observed = !observables.local.empty() || !observables.field.empty();
  std::optional<BinaryConfig> eta0;
  if (observed) eta0 = step_configuration(scenario, epsilon, initial, stream_seed(seed, 2));
  ShockTracker tracker(initial);
  Simulation sim(std::move(initial), std::move(tracker), stream_seed(seed, 1), evolve_options);
  if (eta0) sim.attach_companion(std::move(*eta0));
  try {
    sim.advance_to(horizon);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kBoundaryReached) throw;
    record.valid = false;
    record.error = e.what();
    record.events = sim.events();
    return record;
  }

  const double scale = std::sqrt(epsilon);
  const std::int64_t center = lattice_site(scenario.r_star, epsilon);
  for (int k = 1; k <= n; ++k) {
    const auto x = sim.config().tagged(k);
    record.x_scaled.push_back(scale * static_cast<double>(x - center));
    record.y_scaled.push_back(scale * static_cast<double>(sim.tracker().position(k) - center));
    record.predictor_residual.push_back(scale * (static_cast<double>(x) - predicted[k - 1]));
  }
  for (const auto& crossing : sim.tracker().crossings()) record.crossing_times.push_back(crossing.time * epsilon);

  if (observed) {
    const BinaryConfig& eta = *sim.companion();
    auto occupied = [&eta](std::int64_t x) { return eta.at(x); };
    for (const auto& probe : observables.local) {
      const std::int64_t site = lattice_site(scenario.r_star + probe.a * scale, epsilon);
      if (!window.contains(site - probe.f.radius()) || !window.contains(site + probe.f.radius())) {
        throw Error(ErrorKind::kSupportTooWide, "local probe outside the simulated window");
      }
      record.local_values.push_back(probe.f.evaluate(occupied, site));
    }
    for (const auto& probe : observables.field) {
      record.field_values.push_back(stats::density_field_functional(eta, center, epsilon, probe.f, probe.phi));
    }
  }
  record.events = sim.events();
  record.invariant_violations = sim.invariants().total();
  return record;
}

EnsembleResult run_ensemble(const MeetingScenario& scenario, double epsilon, std::size_t replicas,
                            std::uint64_t base_seed, const Observables& observables,
                            const EnsembleOptions& options) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw Error(ErrorKind::kBadInput, "epsilon must lie in (0, 1]");
  if (replicas == 0) return EnsembleResult(scenario, epsilon, {});

  std::vector<ReplicaRecord> records(replicas);
  std::vector<std::exception_ptr> failures(replicas);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < replicas; i = next++) {
      const std::uint64_t index = options.first_replica + i;
      try {
        records[i] = run_replica(scenario, epsilon, index, replica_seed(base_seed, index), observables, options);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };

  std::size_t threads = options.threads > 0 ? static_cast<std::size_t>(options.threads)
                                            : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, replicas);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }

  EnsembleResult result(scenario, epsilon, std::move(records));
  const std::size_t invalid = result.size() - result.valid_count();
  if (static_cast<double>(invalid) > kMaxInvalidFraction * static_cast<double>(result.size())) {
    throw Error(ErrorKind::kTooManyInvalid,
                std::to_string(invalid) + " of " + std::to_string(result.size()) +
                    " replicas reached the window boundary");
  }
  return result;
}

stats::TestReport local_measure_estimate(const EnsembleResult& result, const Observables& observables,
                                         double a, const CylinderFunction& f, const stats::Samples& oracle_y,
                                         double level) {
  std::optional<std::size_t> probe;
  for (std::size_t i = 0; i < observables.local.size(); ++i) {
    const auto& p = observables.local[i];
    if (p.a == a && p.f.radius() == f.radius() && p.f.table() == f.table()) probe = i;
  }
  if (!probe) throw Error(ErrorKind::kObservableMissing, "no local probe recorded for this (a, f)");
  const auto values = result.local_column(*probe);
  if (values.empty()) throw Error(ErrorKind::kObservableMissing, "no valid replicas");

  const auto& densities = result.scenario().profile.densities();
  std::vector<double> nu(densities.size());
  for (std::size_t k = 0; k < densities.size(); ++k) nu[k] = nu_expectation(f, densities[k]);
  std::vector<double> target_values(oracle_y.size());
  for (std::size_t i = 0; i < oracle_y.size(); ++i) target_values[i] = nu[stats::band(oracle_y.row(i), a)];

  auto report = stats::compare_means("local_measure", stats::estimate_mean(values),
                                     stats::estimate_mean(target_values), level);
  return report;
}

namespace {

nlohmann::json report_json(const stats::TestReport& r) {
  nlohmann::json j{{"name", r.name},     {"estimate", r.estimate}, {"ci_low", r.ci_low},
                   {"ci_high", r.ci_high}, {"level", r.level},     {"target", r.target},
                   {"tolerance", r.tolerance}, {"passed", r.passed}};
  j["p_value"] = r.p_value ? nlohmann::json(*r.p_value) : nlohmann::json(nullptr);
  return j;
}

}  // namespace

nlohmann::json summarize(const EnsembleResult& result, const Observables& observables) {
  const auto& scenario = result.scenario();
  const auto& profile = scenario.profile;
  const int n = profile.shocks();
  nlohmann::json doc;
  doc["scenario"] = {{"breakpoints", profile.breakpoints()},
                     {"densities", profile.densities()},
                     {"t_star", scenario.t_star},
                     {"r_star", scenario.r_star}};
  doc["epsilon"] = result.epsilon();
  doc["replicas"] = result.size();
  doc["valid"] = result.valid_count();
  doc["invalid"] = result.size() - result.valid_count();
  doc["invariant_violations"] = result.invariant_violations();

  const auto variances = stats::limit_variances(profile.densities(), scenario.t_star);
  doc["gaussian_checks"] = nlohmann::json::array();
  for (int k = 1; k <= n; ++k) {
    nlohmann::json block{{"k", k}, {"variance_target", variances[k - 1]}};
    const auto xs = result.x_column(k);
    if (xs.size() >= stats::kMinGaussianSamples && variances[k - 1] > 0.0) {
      const auto check = stats::gaussian_check(xs, variances[k - 1]);
      block["mean"] = report_json(check.mean);
      block["variance"] = report_json(check.variance);
      block["normality"] = report_json(check.normality);
      block["passed"] = check.passed();
    } else {
      block["skipped"] = "fewer than 200 valid replicas";
    }
    doc["gaussian_checks"].push_back(block);
  }
  if (result.valid_count() > 0) doc["mixture_weights_at_0"] = stats::mixture_weights(result.y_samples(), 0.0);

  doc["local_probes"] = nlohmann::json::array();
  for (std::size_t i = 0; i < observables.local.size(); ++i) {
    const auto e = stats::estimate_mean(result.local_column(i));
    doc["local_probes"].push_back({{"a", observables.local[i].a}, {"mean", e.mean}, {"stderr", e.stderr_mean}});
  }
  doc["field_probes"] = nlohmann::json::array();
  for (std::size_t i = 0; i < observables.field.size(); ++i) {
    const auto e = stats::estimate_mean(result.field_column(i));
    doc["field_probes"].push_back(
        {{"phi", observables.field[i].phi.name}, {"mean", e.mean}, {"stderr", e.stderr_mean}});
  }
  return doc;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  return out;
}

std::vector<std::string> split(const std::string& line, char sep, std::size_t max_fields = SIZE_MAX) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (fields.size() + 1 < max_fields) {
    auto pos = line.find(sep, start);
    if (pos == std::string::npos) break;
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  fields.push_back(line.substr(start));
  return fields;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw Error(ErrorKind::kIo, "bad number '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw Error(ErrorKind::kIo, "bad integer '" + s + "'");
  return v;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  std::string header;
  std::getline(in, header);
  return in;
}

}  // namespace

void write_ensemble_csv(const std::filesystem::path& dir, const EnsembleResult& result) {
  std::filesystem::create_directories(dir);
  auto records = open_out(dir / "records.csv");
  auto replicas = open_out(dir / "replicas.csv");
  auto probes = open_out(dir / "probes.csv");
  records << "replica,seed,k,x_scaled,y_scaled,residual,valid\n";
  replicas << "replica,seed,valid,events,invariant_violations,crossing_times,error\n";
  probes << "replica,kind,index,value\n";
  for (const auto& r : result.records()) {
    std::string crossings;
    for (std::size_t i = 0; i < r.crossing_times.size(); ++i) {
      crossings += (i ? ";" : "") + format_double(r.crossing_times[i]);
    }
    replicas << r.replica << ',' << r.seed << ',' << int(r.valid) << ',' << r.events << ','
             << r.invariant_violations << ',' << crossings << ',' << r.error << '\n';
    for (std::size_t k = 0; k < r.x_scaled.size(); ++k) {
      records << r.replica << ',' << r.seed << ',' << k + 1 << ',' << format_double(r.x_scaled[k]) << ','
              << format_double(r.y_scaled[k]) << ',' << format_double(r.predictor_residual[k]) << ','
              << int(r.valid) << '\n';
    }
    for (std::size_t i = 0; i < r.local_values.size(); ++i) {
      probes << r.replica << ",local," << i << ',' << format_double(r.local_values[i]) << '\n';
    }
    for (std::size_t i = 0; i < r.field_values.size(); ++i) {
      probes << r.replica << ",field," << i << ',' << format_double(r.field_values[i]) << '\n';
    }
  }
}

EnsembleResult read_ensemble_csv(const std::filesystem::path& dir, const MeetingScenario& scenario,
                                 double epsilon) {
  std::vector<ReplicaRecord> records;
  std::map<std::uint64_t, std::size_t> by_replica;
  std::string line;

  auto replicas = open_in(dir / "replicas.csv");
  while (std::getline(replicas, line)) {
    if (line.empty()) continue;
    auto f = split(line, ',', 7);
    if (f.size() != 7) throw Error(ErrorKind::kIo, "malformed replicas.csv line");
    ReplicaRecord r;
    r.replica = parse_u64(f[0]);
    r.seed = parse_u64(f[1]);
    r.valid = f[2] == "1";
    r.events = parse_u64(f[3]);
    r.invariant_violations = parse_u64(f[4]);
    if (!f[5].empty()) {
      for (const auto& t : split(f[5], ';')) r.crossing_times.push_back(parse_double(t));
    }
    r.error = f[6];
    by_replica[r.replica] = records.size();
    records.push_back(std::move(r));
  }
  auto lookup = [&](const std::string& field) -> ReplicaRecord& {
    auto it = by_replica.find(parse_u64(field));
    if (it == by_replica.end()) throw Error(ErrorKind::kIo, "record for unknown replica " + field);
    return records[it->second];
  };

  auto rows = open_in(dir / "records.csv");
  while (std::getline(rows, line)) {
    if (line.empty()) continue;
    auto f = split(line, ',');
    if (f.size() != 7) throw Error(ErrorKind::kIo, "malformed records.csv line");
    auto& r = lookup(f[0]);
    r.x_scaled.push_back(parse_double(f[3]));
    r.y_scaled.push_back(parse_double(f[4]));
    r.predictor_residual.push_back(parse_double(f[5]));
  }

  auto probes = open_in(dir / "probes.csv");
  while (std::getline(probes, line)) {
    if (line.empty()) continue;
    auto f = split(line, ',');
    if (f.size() != 4) throw Error(ErrorKind::kIo, "malformed probes.csv line");
    auto& r = lookup(f[0]);
    (f[1] == "local" ? r.local_values : r.field_values).push_back(parse_double(f[3]));
  }
  return EnsembleResult(scenario, epsilon, std::move(records));
}

}  // namespace shockmeet
