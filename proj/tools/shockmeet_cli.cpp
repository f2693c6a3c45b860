#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "shockmeet/acceptance.hpp"
#include "shockmeet/burgers.hpp"
#include "shockmeet/dynamics.hpp"
#include "shockmeet/ensemble.hpp"
#include "shockmeet/error.hpp"
#include "shockmeet/format.hpp"
#include "shockmeet/profiles.hpp"
#include "shockmeet/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace shockmeet;

namespace {

constexpr int kExitRunFailed = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitBoundary = 3;

fs::path default_out(const std::string& leaf) {
  if (const char* env = std::getenv("SHOCKMEET_OUT"); env != nullptr && *env != '\0') return fs::path(env) / leaf;
  return fs::path("shockmeet_out") / leaf;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorKind::kBadInput, message);
}

void check_epsilon(double epsilon) { require(epsilon > 0.0 && epsilon <= 1.0, "--epsilon must lie in (0, 1]"); }
void check_kappa(double kappa) { require(kappa >= 2.0, "--kappa must be at least 2"); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kBadInput, path.string() + ": " + e.what());
  }
}

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? " " : "") + format_double(xs[i]);
  return out;
}

json scenario_json(const MeetingScenario& s) {
  json doc{{"breakpoints", s.profile.breakpoints()}, {"densities", s.profile.densities()}};
  if (s.profile.shocks() == 1) doc["t_star_hint"] = s.t_star;
  return doc;
}

// Observables as stored in run.json:
//   "local_probes": [{"a": 0, "f": {"kind": "occupancy", "offset": 0}}, ...]
//   "field_probes": [{"phi": "triangle", "f": {...}}, ...]
// f kinds: occupancy (offset), pattern (radius, pattern), table (radius, table).
CylinderFunction cylinder_from_json(const json& f) {
  const auto kind = f.value("kind", std::string("occupancy"));
  if (kind == "occupancy") return CylinderFunction::occupancy(f.value("offset", 0));
  if (kind == "pattern") return CylinderFunction::from_pattern_indicator(f.at("radius"), f.at("pattern"));
  if (kind == "table") return CylinderFunction(f.at("radius"), f.at("table").get<std::vector<double>>());
  throw Error(ErrorKind::kBadInput, "unknown cylinder function kind '" + kind + "'");
}

stats::TestFunction phi_from_name(const std::string& name) {
  for (auto& phi : stats::test_function_library()) {
    if (phi.name == name) return phi;
  }
  throw Error(ErrorKind::kBadInput, "unknown test function '" + name + "' (triangle, smooth_bump, mollified_box)");
}

Observables observables_from_json(const json& run) {
  Observables obs;
  try {
    for (const auto& p : run.value("local_probes", json::array())) {
      obs.local.push_back(LocalProbe{p.at("a").get<double>(), cylinder_from_json(p.value("f", json::object()))});
    }
    for (const auto& p : run.value("field_probes", json::array())) {
      obs.field.push_back(FieldProbe{cylinder_from_json(p.value("f", json::object())), phi_from_name(p.at("phi"))});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kBadInput, std::string("observables: ") + e.what());
  }
  return obs;
}

int cmd_simulate(const std::string& scenario_path, double epsilon, std::uint64_t seed, double horizon, double kappa,
                 fs::path out) {
  check_epsilon(epsilon);
  check_kappa(kappa);
  const auto scenario = load_scenario(scenario_path);
  if (horizon <= 0.0) horizon = scenario.t_star / epsilon;
  if (out.empty()) out = default_out("simulate");
  fs::create_directories(out);

  const Window window = simulation_window(scenario, epsilon, horizon, kappa);
  const MulticlassConfig initial = sample_initial(scenario, epsilon, window, stream_seed(seed, 0));
  save_checkpoint(out / "initial.ckpt", initial);

  std::ofstream trajectory(out / "trajectory.csv");
  if (!trajectory) throw Error(ErrorKind::kIo, "cannot write " + (out / "trajectory.csv").string());
  TrajectoryLog log(trajectory, scenario.profile.shocks());
  EvolveOptions options;
  options.log = &log;
  Simulation sim(initial, ShockTracker(initial), stream_seed(seed, 1), options);
  sim.advance_to(horizon);
  save_checkpoint(out / "final.ckpt", sim.config());

  json doc{{"scenario", scenario_json(scenario)},
           {"epsilon", epsilon},
           {"seed", seed},
           {"horizon", horizon},
           {"window", {window.lo, window.hi}},
           {"events", sim.events()},
           {"tagged", sim.config().tagged_sites()},
           {"shock_positions", sim.tracker().positions()}};
  json crossings = json::array();
  for (const auto& c : sim.tracker().crossings()) {
    crossings.push_back({{"time", c.time}, {"low", c.low}, {"high", c.high}, {"position", c.position}});
  }
  doc["crossings"] = crossings;
  write_text(out / "final.json", doc.dump(2) + "\n");
  std::cout << "wrote " << out.string() << " (" << sim.events() << " events)\n";
  return 0;
}

void write_ensemble_dir(const fs::path& dir, const EnsembleResult& result, const json& run,
                        const Observables& obs) {
  fs::create_directories(dir);
  write_ensemble_csv(dir, result);
  write_text(dir / "run.json", run.dump(2) + "\n");
  write_text(dir / "summary.json", summarize(result, obs).dump(2) + "\n");
}

struct EnsembleArgs {
  std::string config;
  std::string scenario;
  std::vector<double> epsilons;
  std::size_t replicas = 0;
  bool replicas_set = false;
  std::uint64_t seed = 1;
  std::uint64_t first = 0;
  double kappa = 3.0;
  int threads = 0;
  std::vector<double> probe_a;
  bool field = false;
  std::vector<std::string> merge;
  fs::path out;
};

int cmd_merge(const EnsembleArgs& args) {
  json run = read_json(fs::path(args.merge.front()) / "run.json");
  const auto scenario = parse_scenario(run.at("scenario").dump());
  const double epsilon = run.at("epsilon");
  const Observables obs = observables_from_json(run);
  EnsembleResult merged;
  for (const auto& shard : args.merge) {
    json other = read_json(fs::path(shard) / "run.json");
    for (const char* key : {"scenario", "epsilon", "seed", "local_probes", "field_probes"}) {
      require(other.value(key, json()) == run.value(key, json()), std::string("shard ") + shard + " differs in " + key);
    }
    merged = EnsembleResult::merge(merged, read_ensemble_csv(shard, scenario, epsilon));
  }
  run["first_replica"] = merged.size() ? merged.records().front().replica : 0;
  run["replicas"] = merged.size();
  run["merged_from"] = args.merge;
  const fs::path out = args.out.empty() ? default_out("ensemble") : args.out;
  write_ensemble_dir(out, merged, run, obs);
  std::cout << "merged " << args.merge.size() << " shards, " << merged.size() << " replicas -> " << out.string()
            << "\n";
  return 0;
}

int cmd_ensemble(EnsembleArgs args) {
  if (!args.merge.empty()) return cmd_merge(args);

  json run = args.config.empty() ? json::object() : read_json(args.config);
  if (!args.scenario.empty()) {
    run["scenario_path"] = args.scenario;
  }
  require(run.contains("scenario_path") || run.contains("scenario"), "--scenario is required");
  const MeetingScenario scenario = run.contains("scenario_path")
                                       ? load_scenario(run["scenario_path"].get<std::string>())
                                       : parse_scenario(run["scenario"].dump());
  run["scenario"] = scenario_json(scenario);
  run.erase("scenario_path");

  if (args.epsilons.empty()) {
    if (run.contains("epsilon")) {
      args.epsilons = run["epsilon"].is_array() ? run["epsilon"].get<std::vector<double>>()
                                                : std::vector<double>{run["epsilon"].get<double>()};
    }
  }
  require(!args.epsilons.empty(), "--epsilon is required");
  for (double e : args.epsilons) check_epsilon(e);
  if (!args.replicas_set && run.contains("replicas")) args.replicas = run["replicas"];
  require(args.replicas >= 1, "--replicas must be at least 1");
  if (run.contains("seed") && args.seed == 1) args.seed = run["seed"];
  if (run.contains("kappa") && args.kappa == 3.0) args.kappa = run["kappa"];
  check_kappa(args.kappa);

  if (!args.probe_a.empty()) {
    run["local_probes"] = json::array();
    for (double a : args.probe_a) run["local_probes"].push_back({{"a", a}, {"f", {{"kind", "occupancy"}}}});
  }
  if (args.field) {
    run["field_probes"] = json::array();
    for (const auto& phi : stats::test_function_library()) {
      run["field_probes"].push_back({{"phi", phi.name}, {"f", {{"kind", "occupancy"}}}});
    }
  }
  const Observables obs = observables_from_json(run);

  EnsembleOptions options;
  options.threads = args.threads;
  options.kappa = args.kappa;
  options.first_replica = args.first;

  const fs::path out = args.out.empty() ? default_out("ensemble") : args.out;
  for (double epsilon : args.epsilons) {
    json shard = run;
    shard["epsilon"] = epsilon;
    shard["seed"] = args.seed;
    shard["kappa"] = args.kappa;
    shard["first_replica"] = args.first;
    shard["replicas"] = args.replicas;
    const auto result = run_ensemble(scenario, epsilon, args.replicas, args.seed, obs, options);
    const fs::path dir = args.epsilons.size() == 1 ? out : out / ("eps_" + format_double(epsilon));
    write_ensemble_dir(dir, result, shard, obs);
    std::cout << "epsilon " << format_double(epsilon) << ": " << result.valid_count() << "/" << result.size()
              << " valid replicas -> " << dir.string() << "\n";
  }
  return 0;
}

int cmd_burgers(const std::vector<double>& b, const std::vector<double>& densities, double t, const fs::path& csv) {
  const auto state = burgers::solve_fronts(b, densities, t);
  std::cout << join(state.label_positions()) << "\n";
  for (const auto& e : state.events) {
    std::cout << "coalescence t=" << format_double(e.time) << " labels=" << e.low << ".." << e.high
              << " position=" << format_double(e.position) << "\n";
  }
  if (!csv.empty()) {
    std::ostringstream text;
    text << "time,labels,position\n";
    for (const auto& e : state.events) {
      text << format_double(e.time) << ',' << e.low << '-' << e.high << ',' << format_double(e.position) << '\n';
    }
    write_text(csv, text.str());
  }
  return 0;
}

int cmd_psi(const std::vector<double>& x, const std::vector<double>& densities, std::optional<double> s) {
  const auto y = s ? burgers::psi_s(x, *s, densities) : burgers::psi(x, densities);
  std::cout << join(y) << "\n";
  return 0;
}

int cmd_verify(const std::vector<std::string>& only, int threads, std::uint64_t seed, fs::path out) {
  acceptance::AcceptanceConfig config;
  config.threads = threads;
  config.seed = seed;
  for (const auto& item : only) {
    std::stringstream parts(item);
    std::string key;
    while (std::getline(parts, key, ',')) {
      if (!key.empty()) config.only.push_back(key);
    }
  }
  const auto results = acceptance::run_acceptance(config, &std::cout);
  std::cout << '\n' << acceptance::to_table(results);
  if (out.empty()) out = default_out("verify");
  fs::create_directories(out);
  write_text(out / "acceptance.json", acceptance::to_json(results).dump(2) + "\n");
  write_text(out / "acceptance.txt", acceptance::to_table(results));
  std::cout << "report: " << (out / "acceptance.json").string() << "\n";
  for (const auto& r : results) {
    if (!r.passed) return kExitRunFailed;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-shock TASEP simulator and limit-law checks"};
  app.require_subcommand(1);

  auto* simulate = app.add_subcommand("simulate", "run one trajectory to t*/eps and write its log and checkpoints");
  std::string sim_scenario;
  double sim_epsilon = 0.01;
  std::uint64_t sim_seed = 1;
  double sim_horizon = 0.0;
  double sim_kappa = 3.0;
  std::string sim_out;
  simulate->add_option("--scenario", sim_scenario, "scenario JSON file")->required();
  simulate->add_option("--epsilon", sim_epsilon, "scaling parameter in (0, 1]")->required();
  simulate->add_option("--seed", sim_seed, "replica seed");
  simulate->add_option("--horizon", sim_horizon, "microscopic time (default t*/eps)");
  simulate->add_option("--kappa", sim_kappa, "window margin factor (>= 2)");
  simulate->add_option("--out", sim_out, "output directory (default $SHOCKMEET_OUT/simulate)");

  auto* ensemble = app.add_subcommand("ensemble", "run or merge replica ensembles");
  EnsembleArgs ens;
  std::string ens_out;
  ensemble->add_option("--config", ens.config, "run config JSON (flags override its fields)");
  ensemble->add_option("--scenario", ens.scenario, "scenario JSON file");
  ensemble->add_option("--epsilon", ens.epsilons, "one or more epsilons")->delimiter(',');
  auto* replicas_opt = ensemble->add_option("--replicas", ens.replicas, "replica count per epsilon");
  ensemble->add_option("--seed", ens.seed, "base seed");
  ensemble->add_option("--first", ens.first, "index of the first replica (for shards)");
  ensemble->add_option("--kappa", ens.kappa, "window margin factor (>= 2)");
  ensemble->add_option("--threads", ens.threads, "worker cap (0: all cores)");
  ensemble->add_option("--probe-a", ens.probe_a, "record occupancy at these offsets a")->delimiter(',');
  ensemble->add_flag("--field", ens.field, "record density-field functionals of the test-function library");
  ensemble->add_option("--merge", ens.merge, "merge these shard directories instead of running");
  ensemble->add_option("--out", ens_out, "output directory (default $SHOCKMEET_OUT/ensemble)");

  auto* burgers_cmd = app.add_subcommand("burgers", "front tracking for increasing step data");
  std::vector<double> b, b_densities;
  double b_t = 0.0;
  std::string b_csv;
  burgers_cmd->add_option("--b", b, "initial front positions")->delimiter(',')->required();
  burgers_cmd->add_option("--densities", b_densities, "rho_0..rho_n")->delimiter(',')->required();
  burgers_cmd->add_option("--t", b_t, "time")->required();
  burgers_cmd->add_option("--events-csv", b_csv, "write coalescence events as CSV");

  auto* psi_cmd = app.add_subcommand("psi", "coalescence map psi (or psi^s with --s)");
  std::vector<double> psi_x, psi_densities;
  std::optional<double> psi_s;
  psi_cmd->add_option("--x", psi_x, "one-shock positions")->delimiter(',')->required()->allow_extra_args(false);
  psi_cmd->add_option("--densities", psi_densities, "rho_0..rho_n")->delimiter(',')->required();
  psi_cmd->add_option("--s", psi_s, "time shift");

  auto* verify = app.add_subcommand("verify", "run the acceptance criteria");
  std::vector<std::string> only;
  int v_threads = 0;
  std::uint64_t v_seed = acceptance::AcceptanceConfig{}.seed;
  std::string v_out;
  verify->add_option("--only", only, "criterion keys or ids (comma separated)");
  verify->add_option("--threads", v_threads, "worker cap (0: all cores)");
  verify->add_option("--seed", v_seed, "base seed");
  verify->add_option("--out", v_out, "report directory (default $SHOCKMEET_OUT/verify)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (*simulate) return cmd_simulate(sim_scenario, sim_epsilon, sim_seed, sim_horizon, sim_kappa, sim_out);
    if (*ensemble) {
      ens.out = ens_out;
      ens.replicas_set = replicas_opt->count() > 0;
      if (ens.replicas_set) require(ens.replicas >= 1, "--replicas must be at least 1");
      return cmd_ensemble(ens);
    }
    if (*burgers_cmd) return cmd_burgers(b, b_densities, b_t, b_csv);
    if (*psi_cmd) return cmd_psi(psi_x, psi_densities, psi_s);
    if (*verify) return cmd_verify(only, v_threads, v_seed, v_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.kind() == ErrorKind::kBoundaryReached || e.kind() == ErrorKind::kTooManyInvalid) return kExitBoundary;
    return kExitInvalid;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitRunFailed;
}
