#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "shockmeet/config.hpp"

namespace shockmeet {

/// Increasing step density profile: density rho[k] on [c_k, c_{k+1}) with
/// c_0 = -inf and c_{n+1} = +inf.
class StepProfile {
 public:
  StepProfile(std::vector<double> breakpoints, std::vector<double> densities);

  int shocks() const { return static_cast<int>(breakpoints_.size()); }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& densities() const { return densities_; }

  double breakpoint(int k) const { return breakpoints_[k - 1]; }  // k = 1..n
  double density(int k) const { return densities_[k]; }           // k = 0..n

  /// Velocity 1 - rho_{k-1} - rho_k of the k-th shock.
  double velocity(int k) const { return 1.0 - densities_[k - 1] - densities_[k]; }

 private:
  std::vector<double> breakpoints_;
  std::vector<double> densities_;
};

/// Profile whose shocks all meet at (r_star, t_star).
struct MeetingScenario {
  StepProfile profile;
  double r_star;
  double t_star;
};

MeetingScenario validate_meeting(const StepProfile& profile,
                                 std::optional<double> t_star_hint = std::nullopt);

/// Reads {"breakpoints": [...], "densities": [...], "t_star_hint": t}.
MeetingScenario load_scenario(const std::filesystem::path& path);
MeetingScenario parse_scenario(const std::string& json_text);

/// Integer part toward -inf of a macroscopic point scaled by 1/epsilon.
std::int64_t lattice_site(double macroscopic, double epsilon);

/// Samples the coupled configurations sigma^0..sigma^n on `window` with one
/// uniform per site; tagged label-j particle placed at floor(c_j / epsilon).
MulticlassConfig sample_initial(const MeetingScenario& scenario, double epsilon,
                                Window window, std::uint64_t seed);

/// Local function of the occupation variables on sites {-M..M}, stored as a
/// truth table indexed by the bit pattern (bit i <-> site i - M).
class CylinderFunction {
 public:
  static constexpr int kMaxRadius = 12;

  CylinderFunction(int radius, std::vector<double> table);

  /// Occupancy of site `offset` relative to the origin.
  static CylinderFunction occupancy(int offset = 0);
  static CylinderFunction zero(int radius = 0);
  static CylinderFunction from_pattern_indicator(int radius, std::uint32_t pattern);

  int radius() const { return radius_; }
  int width() const { return 2 * radius_ + 1; }
  const std::vector<double>& table() const { return table_; }

  double operator()(std::uint32_t pattern) const { return table_[pattern]; }

  /// Evaluates f on the occupations occ[center - M .. center + M].
  template <typename Occupied>
  double evaluate(Occupied&& occupied, std::int64_t center) const {
    std::uint32_t pattern = 0;
    for (int i = 0; i < width(); ++i) {
      if (occupied(center - radius_ + i)) pattern |= (1u << i);
    }
    return table_[pattern];
  }

 private:
  int radius_;
  std::vector<double> table_;
};

/// Exact expectation of f under the product Bernoulli(rho) measure.
double nu_expectation(const CylinderFunction& f, double rho);

}  // namespace shockmeet
