#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "shockmeet/burgers.hpp"
#include "shockmeet/stats.hpp"

namespace shockmeet::acceptance {

struct CriterionResult {
  int id = 0;
  std::string key;
  std::string title;
  bool passed = false;
  std::vector<stats::TestReport> checks;
  double seconds = 0.0;
};

struct AcceptanceConfig {
  int threads = 0;
  std::uint64_t seed = 20261015;
  /// Criterion keys (e.g. "oracle") or ids ("1"); empty runs everything.
  std::vector<std::string> only;
};

struct CriterionInfo {
  int id;
  const char* key;
  const char* title;
};

const std::vector<CriterionInfo>& criteria();

/// Runs the selected criteria, streaming one line per criterion to `progress`.
std::vector<CriterionResult> run_acceptance(const AcceptanceConfig& config, std::ostream* progress = nullptr);

nlohmann::json to_json(const std::vector<CriterionResult>& results);
std::string to_table(const std::vector<CriterionResult>& results);
std::string status_line(const CriterionResult& result);

/// Brute-force front simulator: explicit time steps of size `dt`, fronts move
/// with 1 - (left density) - (right density) and merge once they cross.
std::vector<double> march_fronts(const std::vector<double>& initial_positions, const std::vector<double>& densities,
                                 double t, double dt = 1e-4);

/// psi evaluated through `march_fronts` instead of closed-form tracking.
std::vector<double> psi_by_marching(const std::vector<double>& x, const std::vector<double>& densities,
                                    double dt = 1e-4);

}  // namespace shockmeet::acceptance
