#pragma once

#include <optional>
#include <vector>

namespace shockmeet::burgers {

/// Group of coalesced shock fronts carrying labels low..high.
struct FrontBlock {
  int low;
  int high;
  double position;

  bool operator==(const FrontBlock&) const = default;
};

struct Coalescence {
  double time;
  int low;
  int high;
  double position;
};

/// Entropy solution of the inviscid Burgers equation with increasing step
/// data, represented by its shock fronts at `time`.
struct FrontState {
  std::vector<double> densities;  // rho_0..rho_n
  std::vector<FrontBlock> blocks;
  double time = 0.0;
  std::vector<Coalescence> events;

  int labels() const { return static_cast<int>(densities.size()) - 1; }
  double velocity(const FrontBlock& block) const {
    return 1.0 - densities[block.low - 1] - densities[block.high];
  }
  /// Position of the front carrying label k (merged labels share it).
  double position(int label) const;
  std::vector<double> label_positions() const;
};

/// Fronts started at b_1 < ... < b_n, advanced in closed form to time t.
FrontState solve_fronts(const std::vector<double>& initial_positions,
                        const std::vector<double>& densities, double t);

/// lambda(r, t); the right density applies at a front.
double evaluate_density(const FrontState& state, double r);

/// Velocities 1 - rho_{k-1} - rho_k of the uncoalesced fronts.
std::vector<double> front_velocities(const std::vector<double>& densities);

/// Smallest ordering time plus one: t(x) = 1 + max_k max(0, (x_k - x_{k+1}) / (v_k - v_{k+1})).
double ordering_time(const std::vector<double>& x, const std::vector<double>& densities);

/// Coalescence map: the joint front positions reached from one-shock
/// positions x when the fronts are allowed to merge.
std::vector<double> psi(const std::vector<double>& x, const std::vector<double>& densities,
                        std::optional<double> t_choice = std::nullopt);

/// Time-shifted coalescence map.
std::vector<double> psi_s(const std::vector<double>& x, double s, const std::vector<double>& densities);

}  // namespace shockmeet::burgers
