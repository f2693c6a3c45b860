#include "shockmeet/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "shockmeet/error.hpp"
#include "shockmeet/format.hpp"

namespace shockmeet {

ShockTracker::ShockTracker(const MulticlassConfig& config) {
  for (int k = 1; k <= config.labels(); ++k) {
    blocks_.push_back(TrackerBlock{k, k, config.tagged(k)});
  }
}

std::int64_t ShockTracker::position(int label) const {
  for (const auto& block : blocks_) {
    if (block.contains(label)) return block.position;
  }
  throw Error(ErrorKind::kBadInput, "no block holds label " + std::to_string(label));
}

std::vector<std::int64_t> ShockTracker::positions() const {
  std::vector<std::int64_t> out;
  for (const auto& block : blocks_) out.insert(out.end(), block.high - block.low + 1, block.position);
  return out;
}

void ShockTracker::merge(std::size_t j, double time) {
  TrackerBlock merged{blocks_[j].low, blocks_[j + 1].high, blocks_[j + 1].position};
  blocks_[j] = merged;
  blocks_.erase(blocks_.begin() + static_cast<std::ptrdiff_t>(j) + 1);
  crossings_.push_back(CrossingEvent{time, merged.low, merged.high, merged.position});
}

InvariantReport& InvariantReport::operator+=(const InvariantReport& other) {
  nesting += other.nesting;
  coupling += other.coupling;
  conservation += other.conservation;
  split += other.split;
  step += other.step;
  placement += other.placement;
  return *this;
}

TrajectoryLog::TrajectoryLog(std::ostream& out, int labels) : out_(out) {
  out_ << "time,bond,moved_from,moved_to";
  for (int k = 1; k <= labels; ++k) out_ << ",Y" << k;
  out_ << '\n';
}

void TrajectoryLog::record(double time, std::int64_t bond, const ShockTracker& tracker) {
  out_ << format_double(time) << ',' << bond << ',' << bond << ',' << bond + 1;
  for (std::int64_t y : tracker.positions()) out_ << ',' << y;
  out_ << '\n';
}

Simulation::Simulation(MulticlassConfig config, ShockTracker tracker, std::uint64_t seed,
                       EvolveOptions options)
    : config_(std::move(config)), tracker_(std::move(tracker)), rng_(seed), options_(options) {
  if (tracker_.labels() != config_.labels()) {
    throw Error(ErrorKind::kBadInput, "tracker and configuration disagree on label count");
  }
  prio_ = config_.priorities();
  const std::size_t sites = prio_.size();
  tag_at_.assign(sites, 0);
  for (int k = 1; k <= config_.labels(); ++k) {
    tag_at_[index(config_.tagged(k))] = static_cast<std::int8_t>(k);
    check_boundary(config_.tagged(k));
  }
  for (const auto& block : tracker_.blocks()) {
    check_boundary(block.position);
    Priority p = config_.priority(block.position);
    if (p < block.low || p > block.high) {
      throw Error(ErrorKind::kBadInput, "block does not sit on a discrepancy of its labels");
    }
  }
  slot_.assign(sites, -1);
  for (std::size_t i = 0; i + 1 < sites; ++i) refresh_bond(i);

  if (options_.check_invariants) {
    sigma_.resize(static_cast<std::size_t>(config_.labels()) + 1);
    for (std::size_t k = 0; k < sigma_.size(); ++k) {
      sigma_[k].resize(sites);
      for (std::size_t i = 0; i < sites; ++i) sigma_[k][i] = prio_[i] <= k;
    }
    initial_counts_ = config_.priority_counts();
  }
}

void Simulation::check_boundary(std::int64_t x) const {
  const Window& w = config_.window();
  if (x - w.lo < options_.boundary_margin || w.hi - x < options_.boundary_margin) {
    throw Error(ErrorKind::kBoundaryReached,
                "tracked position " + std::to_string(x) + " reached the window edge; enlarge kappa");
  }
}

void Simulation::refresh_bond(std::size_t i) {
  if (i + 1 >= prio_.size()) return;
  const bool on = live(i);
  if (on && slot_[i] < 0) {
    slot_[i] = static_cast<std::int32_t>(active_.size());
    active_.push_back(static_cast<std::uint32_t>(i));
  } else if (!on && slot_[i] >= 0) {
    const auto s = static_cast<std::size_t>(slot_[i]);
    active_[s] = active_.back();
    slot_[active_[s]] = static_cast<std::int32_t>(s);
    active_.pop_back();
    slot_[i] = -1;
  }
}

void Simulation::fire(std::int64_t x) {
  const std::size_t i = index(x);
  if (i + 1 >= prio_.size()) throw Error(ErrorKind::kBadInput, "bond outside window");
  if (live(i)) fire_index(i);
}

void Simulation::attach_companion(BinaryConfig eta) {
  if (eta.window.lo != config_.window().lo || eta.window.hi != config_.window().hi ||
      eta.occupied.size() != prio_.size()) {
    throw Error(ErrorKind::kBadInput, "companion window differs from the simulation window");
  }
  if (events_ != 0) throw Error(ErrorKind::kBadInput, "companion attached after the first event");
  companion_ = std::move(eta);
  for (std::size_t i = 0; i + 1 < prio_.size(); ++i) refresh_bond(i);
}

void Simulation::fire_index(std::size_t i) {
  const Priority left = prio_[i];
  const Priority right = prio_[i + 1];
  const std::int64_t x = config_.window().lo + static_cast<std::int64_t>(i);
  ++events_;

  if (companion_) {
    auto& eta = companion_->occupied;
    if (eta[i] && !eta[i + 1]) std::swap(eta[i], eta[i + 1]);
    if (!swappable(i)) {
      if (i > 0) refresh_bond(i - 1);
      refresh_bond(i);
      refresh_bond(i + 1);
      return;
    }
  }

  if (options_.check_invariants) {
    // Basic coupling: each sigma^k is a one-class TASEP driven by the same arrow.
    for (std::size_t k = 0; k < sigma_.size(); ++k) {
      auto& s = sigma_[k];
      if (s[i] && !s[i + 1]) std::swap(s[i], s[i + 1]);
    }
  }

  std::swap(prio_[i], prio_[i + 1]);
  std::swap(tag_at_[i], tag_at_[i + 1]);
  if (tag_at_[i + 1] != 0) {
    config_.set_tagged(tag_at_[i + 1], x + 1);
    check_boundary(x + 1);
  }
  if (tag_at_[i] != 0) {
    config_.set_tagged(tag_at_[i], x);
    check_boundary(x);
  }

  // A block at x follows its discrepancy right when sigma^{high}(x+1) = 0; a
  // block at x+1 follows it left when sigma^{low-1}(x) = 1.
  bool moved = false;
  for (auto& block : tracker_.blocks()) {
    if (block.position == x && right > block.high) {
      block.position = x + 1;
      moved = true;
    } else if (block.position == x + 1 && left < block.low) {
      block.position = x;
      moved = true;
    }
  }
  if (moved) {
    auto& blocks = tracker_.blocks();
    for (const auto& block : blocks) check_boundary(block.position);
    for (std::size_t j = 0; j + 1 < blocks.size();) {
      if (blocks[j].position == blocks[j + 1].position + 1) {
        tracker_.merge(j, time_);
      } else {
        ++j;
      }
    }
  }

  if (i > 0) refresh_bond(i - 1);
  refresh_bond(i);
  refresh_bond(i + 1);

  if (options_.check_invariants) {
    for (std::size_t k = 0; k < sigma_.size(); ++k) {
      for (std::size_t site : {i, i + 1}) {
        if (sigma_[k][site] != (prio_[site] <= k)) ++invariants_.coupling;
        if (k + 1 < sigma_.size() && sigma_[k][site] > sigma_[k + 1][site]) ++invariants_.nesting;
      }
    }
    for (const auto& block : tracker_.blocks()) {
      Priority p = config_.priority(block.position);
      if (p < block.low || p > block.high) ++invariants_.placement;
    }
  }

  if (options_.log != nullptr) options_.log->record(time_, x, tracker_);
}

void Simulation::advance_to(double horizon) {
  if (!(horizon >= time_) || !std::isfinite(horizon)) {
    throw Error(ErrorKind::kBadInput, "horizon must be finite and not before the current time");
  }
  std::vector<TrackerBlock> before;
  if (options_.check_invariants) before = tracker_.blocks();

  while (true) {
    const std::size_t rate = active_.size();
    if (rate == 0) {
      time_ = horizon;
      break;
    }
    const double next = time_ + rng_.exponential() / static_cast<double>(rate);
    if (next > horizon) {
      time_ = horizon;
      break;
    }
    time_ = next;
    const std::size_t i = active_[rng_.below(rate)];
    if (options_.check_invariants) {
      auto snapshot = tracker_.blocks();
      fire_index(i);
      // Labels sharing a block stay together; positions move by at most one site.
      for (const auto& old : snapshot) {
        const std::int64_t now = tracker_.position(old.low);
        if (std::abs(now - old.position) > 1) ++invariants_.step;
        for (int label = old.low + 1; label <= old.high; ++label) {
          if (tracker_.position(label) != now) ++invariants_.split;
        }
      }
    } else {
      fire_index(i);
    }
  }
  if (options_.check_invariants) final_checks();
}

void Simulation::final_checks() {
  if (config_.priority_counts() != initial_counts_) ++invariants_.conservation;
  for (std::size_t k = 0; k < sigma_.size(); ++k) {
    for (std::size_t i = 0; i < prio_.size(); ++i) {
      if (sigma_[k][i] != (prio_[i] <= k)) ++invariants_.coupling;
      if (k + 1 < sigma_.size() && sigma_[k][i] > sigma_[k + 1][i]) ++invariants_.nesting;
    }
  }
}

EvolveResult evolve(MulticlassConfig config, ShockTracker tracker, double horizon, std::uint64_t seed,
                    EvolveOptions options) {
  Simulation sim(std::move(config), std::move(tracker), seed, options);
  sim.advance_to(horizon);
  return EvolveResult{sim.config(), sim.tracker(), sim.invariants(), sim.events()};
}

BinaryConfig reconstruct_eta_prime(const MulticlassConfig& config, const ShockTracker& tracker) {
  const Window& w = config.window();
  std::vector<std::int64_t> y = tracker.positions();
  BinaryConfig out{w, std::vector<std::uint8_t>(static_cast<std::size_t>(w.size()))};
  std::size_t k = 0;  // number of labels with Y^label <= x
  for (std::int64_t x = w.lo; x <= w.hi; ++x) {
    while (k < y.size() && y[k] <= x) ++k;
    out.occupied[static_cast<std::size_t>(x - w.lo)] = config.occupied(x, static_cast<int>(k));
  }
  return out;
}

BinaryConfig step_configuration(const MeetingScenario& scenario, double epsilon,
                                const MulticlassConfig& initial, std::uint64_t seed) {
  const auto& profile = scenario.profile;
  const Window& w = initial.window();
  BinaryConfig out{w, std::vector<std::uint8_t>(static_cast<std::size_t>(w.size()))};
  std::vector<std::int64_t> edges;
  for (int k = 1; k <= profile.shocks(); ++k) edges.push_back(lattice_site(profile.breakpoint(k), epsilon));
  Rng rng(seed);
  std::size_t region = 0;
  for (std::int64_t x = w.lo; x <= w.hi; ++x) {
    bool on;
    if (region < edges.size() && x == edges[region]) {
      const int k = static_cast<int>(region) + 1;
      on = rng.uniform() < 0.5 * (profile.density(k - 1) + profile.density(k));
    } else {
      while (region < edges.size() && edges[region] < x) ++region;
      on = initial.occupied(x, static_cast<int>(region));
    }
    out.occupied[static_cast<std::size_t>(x - w.lo)] = on;
  }
  return out;
}

double n_predictor(const MulticlassConfig& initial, const StepProfile& profile, int k, double t,
                   double epsilon) {
  if (k < 1 || k > profile.shocks()) throw Error(ErrorKind::kBadInput, "label out of range");
  const double c = profile.breakpoint(k);
  const double gap = profile.density(k) - profile.density(k - 1);
  const std::int64_t origin = lattice_site(c, epsilon);
  const std::int64_t right_end = lattice_site(c + t * gap, epsilon);
  const std::int64_t left_start = lattice_site(c - t * gap, epsilon) + 1;
  const Window& w = initial.window();
  if (right_end > origin && !w.contains(right_end)) {
    throw Error(ErrorKind::kRangeOutOfWindow, "right predictor range leaves the window");
  }
  if (left_start <= origin && !w.contains(left_start)) {
    throw Error(ErrorKind::kRangeOutOfWindow, "left predictor range leaves the window");
  }
  double n = 0.0;
  for (std::int64_t x = origin + 1; x <= right_end; ++x) n += initial.occupied(x, k) ? 0.0 : 1.0;
  for (std::int64_t x = left_start; x <= origin; ++x) n -= initial.occupied(x, k - 1) ? 1.0 : 0.0;
  return n;
}

double predicted_position(const MulticlassConfig& initial, const StepProfile& profile, int k, double t,
                          double epsilon) {
  const double gap = profile.density(k) - profile.density(k - 1);
  return profile.breakpoint(k) / epsilon + n_predictor(initial, profile, k, t, epsilon) / gap;
}

Window simulation_window(const MeetingScenario& scenario, double epsilon, double horizon, double kappa) {
  const auto& c = scenario.profile.breakpoints();
  const auto reach = static_cast<std::int64_t>(std::ceil(kappa * horizon));
  return Window{lattice_site(c.front(), epsilon) - reach, lattice_site(c.back(), epsilon) + reach};
}

}  // namespace shockmeet
