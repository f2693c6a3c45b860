#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "shockmeet/config.hpp"
#include "shockmeet/profiles.hpp"
#include "shockmeet/rng.hpp"

namespace shockmeet {

/// A coalesced group of consecutive labels low..high tracking a
/// sigma^{low-1} | sigma^{high} discrepancy.
struct TrackerBlock {
  int low;
  int high;
  std::int64_t position;

  bool contains(int label) const { return low <= label && label <= high; }
  bool operator==(const TrackerBlock&) const = default;
};

struct CrossingEvent {
  double time;
  int low;
  int high;
  std::int64_t position;

  bool operator==(const CrossingEvent&) const = default;
};

/// Coalescing shock positions Y^1..Y^n: starts with one block per tagged
/// particle and merges adjacent blocks when they cross.
class ShockTracker {
 public:
  ShockTracker() = default;
  explicit ShockTracker(const MulticlassConfig& config);

  const std::vector<TrackerBlock>& blocks() const { return blocks_; }
  std::vector<TrackerBlock>& blocks() { return blocks_; }
  const std::vector<CrossingEvent>& crossings() const { return crossings_; }

  int labels() const { return blocks_.empty() ? 0 : blocks_.back().high; }

  /// Y^k for k = 1..n.
  std::int64_t position(int label) const;
  std::vector<std::int64_t> positions() const;

  /// Merges block j with block j+1 at block j+1's position.
  void merge(std::size_t j, double time);

  bool operator==(const ShockTracker&) const = default;

 private:
  std::vector<TrackerBlock> blocks_;
  std::vector<CrossingEvent> crossings_;
};

/// Counters of coupling-invariant violations observed while evolving with
/// invariant checking on. All zero for a correct run.
struct InvariantReport {
  std::uint64_t nesting = 0;       // sigma^k <= sigma^{k+1} sitewise
  std::uint64_t coupling = 0;      // separately evolved sigma^k != 1{priority <= k}
  std::uint64_t conservation = 0;  // per-priority particle counts changed
  std::uint64_t split = 0;         // merged labels separated
  std::uint64_t step = 0;          // block moved by other than 0 or +-1
  std::uint64_t placement = 0;     // block site priority outside block's label range

  std::uint64_t total() const { return nesting + coupling + conservation + split + step + placement; }
  InvariantReport& operator+=(const InvariantReport& other);
  bool operator==(const InvariantReport&) const = default;
};

/// CSV trajectory writer: time,bond,moved_from,moved_to,Y1..Yn
class TrajectoryLog {
 public:
  TrajectoryLog(std::ostream& out, int labels);
  void record(double time, std::int64_t bond, const ShockTracker& tracker);

 private:
  std::ostream& out_;
};

/// Binary occupation configuration on a window.
struct BinaryConfig {
  Window window;
  std::vector<std::uint8_t> occupied;

  bool at(std::int64_t x) const { return occupied[static_cast<std::size_t>(x - window.lo)] != 0; }
};

struct EvolveOptions {
  bool check_invariants = false;
  TrajectoryLog* log = nullptr;
  /// Tracked positions closer than this to the window edge raise BoundaryReached.
  std::int64_t boundary_margin = 2;
};

/// Graphical-construction dynamics of the coupled multiclass TASEP on a
/// closed window with rate-1 arrows x -> x+1. Only bonds where a swap is
/// possible carry rate; the next event is drawn among them uniformly.
class Simulation {
 public:
  Simulation(MulticlassConfig config, ShockTracker tracker, std::uint64_t seed,
             EvolveOptions options = {});

  /// Processes all arrows up to `horizon` (absolute time).
  void advance_to(double horizon);

  double time() const { return time_; }
  std::uint64_t events() const { return events_; }
  const MulticlassConfig& config() const { return config_; }
  const ShockTracker& tracker() const { return tracker_; }
  const InvariantReport& invariants() const { return invariants_; }

  /// Fires the arrow on bond (x, x+1) at the current time. Exposed for
  /// deterministic unit tests; `advance_to` is the normal entry point.
  void fire(std::int64_t x);

  /// Adds a one-class configuration on the same window driven by the same
  /// arrows (basic coupling). Must be attached before the first event.
  void attach_companion(BinaryConfig eta);
  const std::optional<BinaryConfig>& companion() const { return companion_; }

 private:
  std::size_t index(std::int64_t x) const { return static_cast<std::size_t>(x - config_.window().lo); }
  bool swappable(std::size_t i) const { return prio_[i] < prio_[i + 1]; }
  bool live(std::size_t i) const {
    return swappable(i) || (companion_ && companion_->occupied[i] && !companion_->occupied[i + 1]);
  }
  void refresh_bond(std::size_t i);
  void fire_index(std::size_t i);
  void check_boundary(std::int64_t x) const;
  void final_checks();

  MulticlassConfig config_;
  ShockTracker tracker_;
  Rng rng_;
  EvolveOptions options_;
  double time_ = 0.0;
  std::uint64_t events_ = 0;

  std::span<Priority> prio_;
  std::vector<std::int8_t> tag_at_;
  std::vector<std::uint32_t> active_;
  std::vector<std::int32_t> slot_;
  std::optional<BinaryConfig> companion_;

  std::vector<std::vector<std::uint8_t>> sigma_;  // invariant checking only
  std::vector<std::int64_t> initial_counts_;
  InvariantReport invariants_;
};

struct EvolveResult {
  MulticlassConfig config;
  ShockTracker tracker;
  InvariantReport invariants;
  std::uint64_t events = 0;
};

EvolveResult evolve(MulticlassConfig config, ShockTracker tracker, double horizon, std::uint64_t seed,
                    EvolveOptions options = {});

/// eta'(x) = sigma^k(x) for Y^k <= x < Y^{k+1} (Y^0 = -inf, Y^{n+1} = +inf).
BinaryConfig reconstruct_eta_prime(const MulticlassConfig& config, const ShockTracker& tracker);

/// Initial configuration of the uncoupled step process: eta(x) = sigma^k(x) on
/// region k = {[c_k/eps]+1 .. [c_{k+1}/eps]}, and an independent
/// Bernoulli((rho_{k-1} + rho_k) / 2) at each tagged site [c_k/eps], the
/// profile averaged over the site's unit cell.
BinaryConfig step_configuration(const MeetingScenario& scenario, double epsilon,
                                const MulticlassConfig& initial, std::uint64_t seed);

/// Initial-condition predictor N^k_{t,eps} of the label-k tagged particle,
/// read from the initial coupled configuration.
double n_predictor(const MulticlassConfig& initial, const StepProfile& profile, int k, double t,
                   double epsilon);

/// c_k / eps + N^k_{t,eps} / (rho_k - rho_{k-1}).
double predicted_position(const MulticlassConfig& initial, const StepProfile& profile, int k, double t,
                          double epsilon);

/// Window sized for a run to `horizon` from the given scenario:
/// [min tagged - ceil(kappa T), max tagged + ceil(kappa T)].
Window simulation_window(const MeetingScenario& scenario, double epsilon, double horizon, double kappa = 3.0);

/// Exact time-t law of the closed-segment dynamics started from `initial`
/// (at most 6 sites), over all rearrangements of its content.
struct ExactDistribution {
  std::vector<std::vector<Priority>> states;  // lexicographically sorted
  std::vector<double> probabilities;

  std::size_t index_of(const std::vector<Priority>& state) const;
};

inline constexpr std::size_t kMaxExactSites = 6;

ExactDistribution exact_distribution(const std::vector<Priority>& initial, double t);

}  // namespace shockmeet
