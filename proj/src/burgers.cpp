#include "shockmeet/burgers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "shockmeet/error.hpp"

namespace shockmeet::burgers {

namespace {

void check_densities(const std::vector<double>& densities) {
  if (densities.size() < 2) throw Error(ErrorKind::kBadInput, "need at least two densities");
  if (!(densities.front() >= 0.0) || !(densities.back() <= 1.0)) {
    throw Error(ErrorKind::kBadInput, "densities must lie in [0, 1]");
  }
  for (std::size_t k = 1; k < densities.size(); ++k) {
    if (!(densities[k - 1] < densities[k])) {
      throw Error(ErrorKind::kBadInput, "densities must be strictly increasing");
    }
  }
}

// Relative tolerance for treating two collision times as simultaneous.
constexpr double kSimultaneous = 1e-12;

}  // namespace

double FrontState::position(int label) const {
  for (const auto& block : blocks) {
    if (block.low <= label && label <= block.high) return block.position;
  }
  throw Error(ErrorKind::kBadInput, "label out of range");
}

std::vector<double> FrontState::label_positions() const {
  std::vector<double> out;
  for (const auto& block : blocks) out.insert(out.end(), block.high - block.low + 1, block.position);
  return out;
}

FrontState solve_fronts(const std::vector<double>& initial_positions,
                        const std::vector<double>& densities, double t) {
  check_densities(densities);
  if (initial_positions.size() + 1 != densities.size()) {
    throw Error(ErrorKind::kBadInput, "need one more density than fronts");
  }
  if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorKind::kBadInput, "t must be finite and nonnegative");
  for (std::size_t k = 0; k < initial_positions.size(); ++k) {
    if (!std::isfinite(initial_positions[k])) throw Error(ErrorKind::kBadInput, "positions must be finite");
    if (k > 0 && !(initial_positions[k - 1] < initial_positions[k])) {
      throw Error(ErrorKind::kBadInput, "front positions must be strictly increasing");
    }
  }

  FrontState state;
  state.densities = densities;
  for (std::size_t k = 0; k < initial_positions.size(); ++k) {
    int label = static_cast<int>(k) + 1;
    state.blocks.push_back(FrontBlock{label, label, initial_positions[k]});
  }

  while (true) {
    // Adjacent blocks always approach: v_j - v_{j+1} = rho_{high'} - rho_{low-1} > 0.
    std::vector<double> gaps(state.blocks.size(), std::numeric_limits<double>::infinity());
    double earliest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j + 1 < state.blocks.size(); ++j) {
      const auto& a = state.blocks[j];
      const auto& b = state.blocks[j + 1];
      gaps[j] = std::max(0.0, (b.position - a.position) / (state.velocity(a) - state.velocity(b)));
      earliest = std::min(earliest, gaps[j]);
    }
    const double remaining = t - state.time;
    if (!(earliest <= remaining)) {
      for (auto& block : state.blocks) block.position += state.velocity(block) * remaining;
      break;
    }
    for (auto& block : state.blocks) block.position += state.velocity(block) * earliest;
    state.time += earliest;

    // Merge every pair colliding at this instant, chains included. Colliding
    // fronts coincide up to rounding; the merged front keeps the position its
    // lowest member reached.
    const double cutoff = earliest + kSimultaneous * std::max(1.0, std::abs(state.time));
    std::vector<FrontBlock> merged;
    std::vector<bool> grew;
    for (std::size_t j = 0; j < state.blocks.size(); ++j) {
      if (j > 0 && gaps[j - 1] <= cutoff) {
        merged.back().high = state.blocks[j].high;
        grew.back() = true;
      } else {
        merged.push_back(state.blocks[j]);
        grew.push_back(false);
      }
    }
    state.blocks = std::move(merged);
    for (std::size_t j = 0; j < state.blocks.size(); ++j) {
      const auto& block = state.blocks[j];
      if (grew[j]) state.events.push_back(Coalescence{state.time, block.low, block.high, block.position});
    }
  }
  state.time = t;
  return state;
}

double evaluate_density(const FrontState& state, double r) {
  double density = state.densities.front();
  for (const auto& block : state.blocks) {
    if (block.position <= r) density = state.densities[block.high];
  }
  return density;
}

std::vector<double> front_velocities(const std::vector<double>& densities) {
  std::vector<double> v(densities.size() - 1);
  for (std::size_t k = 1; k < densities.size(); ++k) v[k - 1] = 1.0 - densities[k - 1] - densities[k];
  return v;
}

double ordering_time(const std::vector<double>& x, const std::vector<double>& densities) {
  check_densities(densities);
  if (x.size() + 1 != densities.size()) throw Error(ErrorKind::kBadInput, "need one more density than coordinates");
  const auto v = front_velocities(densities);
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    worst = std::max(worst, (x[k] - x[k + 1]) / (v[k] - v[k + 1]));
  }
  return 1.0 + worst;
}

namespace {

std::vector<double> start_positions(const std::vector<double>& x, const std::vector<double>& densities,
                                    double t) {
  const auto v = front_velocities(densities);
  std::vector<double> b(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) b[k] = x[k] - t * v[k];
  for (std::size_t k = 1; k < b.size(); ++k) {
    if (!(b[k - 1] < b[k])) {
      throw Error(ErrorKind::kOrderingFailed, "backward characteristics are not strictly ordered");
    }
  }
  return b;
}

}  // namespace

std::vector<double> psi(const std::vector<double>& x, const std::vector<double>& densities,
                        std::optional<double> t_choice) {
  const double t = t_choice ? *t_choice : ordering_time(x, densities);
  if (t_choice) {
    check_densities(densities);
    if (x.size() + 1 != densities.size()) throw Error(ErrorKind::kBadInput, "need one more density than coordinates");
  }
  if (!(t > 0.0) || !std::isfinite(t)) throw Error(ErrorKind::kBadInput, "time choice must be positive");
  return solve_fronts(start_positions(x, densities, t), densities, t).label_positions();
}

std::vector<double> psi_s(const std::vector<double>& x, double s, const std::vector<double>& densities) {
  const double t = ordering_time(x, densities);
  if (s <= -t) {
    const auto v = front_velocities(densities);
    std::vector<double> out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = x[k] + s * v[k];
    return out;
  }
  return solve_fronts(start_positions(x, densities, t), densities, t + s).label_positions();
}

}  // namespace shockmeet::burgers
