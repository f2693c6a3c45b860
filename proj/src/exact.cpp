#include <algorithm>
#include <cmath>
#include <map>

#include "shockmeet/dynamics.hpp"
#include "shockmeet/error.hpp"

namespace shockmeet {

std::size_t ExactDistribution::index_of(const std::vector<Priority>& state) const {
  auto it = std::lower_bound(states.begin(), states.end(), state);
  if (it == states.end() || *it != state) throw Error(ErrorKind::kBadInput, "state not in the space");
  return static_cast<std::size_t>(it - states.begin());
}

ExactDistribution exact_distribution(const std::vector<Priority>& initial, double t) {
  if (initial.size() > kMaxExactSites) {
    throw Error(ErrorKind::kTooLarge, "exact oracle limited to 6 sites");
  }
  if (initial.empty()) throw Error(ErrorKind::kBadInput, "empty segment");
  if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorKind::kBadInput, "t must be finite and nonnegative");

  ExactDistribution out;
  std::vector<Priority> state = initial;
  std::sort(state.begin(), state.end());
  do {
    out.states.push_back(state);
  } while (std::next_permutation(state.begin(), state.end()));

  // Jump chain of the uniformized generator: every swappable bond fires at
  // rate 1, total rate bounded by the bond count.
  const std::size_t count = out.states.size();
  const double bound = static_cast<double>(std::max<std::size_t>(initial.size() - 1, 1));
  std::vector<std::vector<std::pair<std::size_t, double>>> jumps(count);
  for (std::size_t s = 0; s < count; ++s) {
    double stay = 1.0;
    for (std::size_t i = 0; i + 1 < initial.size(); ++i) {
      if (out.states[s][i] < out.states[s][i + 1]) {
        auto next = out.states[s];
        std::swap(next[i], next[i + 1]);
        jumps[s].emplace_back(out.index_of(next), 1.0 / bound);
        stay -= 1.0 / bound;
      }
    }
    jumps[s].emplace_back(s, stay);
  }

  std::vector<double> p(count, 0.0);
  p[out.index_of(initial)] = 1.0;

  // Split [0, t] so each piece has a modest Poisson mean.
  const double total_mean = bound * t;
  const int pieces = std::max(1, static_cast<int>(std::ceil(total_mean / 20.0)));
  const double mean = total_mean / pieces;
  for (int piece = 0; piece < pieces; ++piece) {
    std::vector<double> power = p;  // p P^m
    std::vector<double> result(count, 0.0);
    double weight = std::exp(-mean);
    double accumulated = 0.0;
    for (int m = 0;; ++m) {
      for (std::size_t s = 0; s < count; ++s) result[s] += weight * power[s];
      accumulated += weight;
      if (1.0 - accumulated < 1e-15 || m > 10000) break;
      std::vector<double> next(count, 0.0);
      for (std::size_t s = 0; s < count; ++s) {
        for (auto [target, rate] : jumps[s]) next[target] += power[s] * rate;
      }
      power.swap(next);
      weight *= mean / (m + 1);
    }
    p.swap(result);
  }
  out.probabilities = std::move(p);
  return out;
}

}  // namespace shockmeet
