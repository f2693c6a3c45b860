#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "shockmeet/config.hpp"
#include "shockmeet/dynamics.hpp"
#include "shockmeet/profiles.hpp"
#include "shockmeet/rng.hpp"
#include "test_util.hpp"

namespace shockmeet {
namespace {

using testing::error_kind;
using testing::total_variation;

constexpr Priority H = kHole;

MulticlassConfig untagged(std::int64_t lo, std::vector<Priority> prio) {
  const auto hi = lo + static_cast<std::int64_t>(prio.size()) - 1;
  return MulticlassConfig(Window{lo, hi}, std::move(prio), {});
}

std::vector<Priority> state_of(const MulticlassConfig& c) {
  return {c.priorities().begin(), c.priorities().end()};
}

// Every bond carries a rate-1 clock; a firing swaps only if the left content
// has the higher priority.
std::vector<Priority> naive_run(std::vector<Priority> state, double horizon, Rng& rng) {
  const std::size_t bonds = state.size() - 1;
  double t = 0.0;
  while (true) {
    t += rng.exponential() / static_cast<double>(bonds);
    if (t > horizon) return state;
    const std::size_t i = rng.below(bonds);
    if (state[i] < state[i + 1]) std::swap(state[i], state[i + 1]);
  }
}

std::map<std::vector<Priority>, double> engine_law(const std::vector<Priority>& start, double t, int runs,
                                                   std::uint64_t seed) {
  std::map<std::vector<Priority>, double> law;
  for (int r = 0; r < runs; ++r) {
    auto config = untagged(0, start);
    Simulation sim(config, ShockTracker(config), replica_seed(seed, r));
    sim.advance_to(t);
    law[state_of(sim.config())] += 1.0 / runs;
  }
  return law;
}

std::map<std::vector<Priority>, double> exact_law(const std::vector<Priority>& start, double t) {
  auto exact = exact_distribution(start, t);
  std::map<std::vector<Priority>, double> law;
  for (std::size_t i = 0; i < exact.states.size(); ++i) law[exact.states[i]] = exact.probabilities[i];
  return law;
}

TEST(Evolve, LoneParticleDisplacementIsPoisson) {
  const double horizon = 5.0;
  const int runs = 10'000;
  std::vector<Priority> prio(80, H);
  prio[10] = 0;
  double sum = 0.0;
  for (int r = 0; r < runs; ++r) {
    auto config = untagged(0, prio);
    auto result = evolve(config, ShockTracker(config), horizon, replica_seed(1, r));
    const auto& p = result.config.priorities();
    sum += static_cast<double>(std::find(p.begin(), p.end(), Priority{0}) - p.begin() - 10);
  }
  EXPECT_NEAR(sum / runs, horizon, 3.0 * std::sqrt(horizon / runs));
}

TEST(Evolve, FullWindowNeverChanges) {
  auto config = untagged(-5, std::vector<Priority>(11, 0));
  Simulation sim(config, ShockTracker(config), 3);
  sim.advance_to(100.0);
  EXPECT_EQ(sim.config(), config);
  EXPECT_EQ(sim.events(), 0u);
  EXPECT_EQ(sim.time(), 100.0);
}

TEST(Evolve, SingletonBlockFollowsTaggedParticle) {
  auto scenario = validate_meeting(StepProfile({0.0}, {0.2, 0.8}), 1.0);
  auto config = sample_initial(scenario, 0.01, Window{-300, 300}, 9);
  Simulation sim(config, ShockTracker(config), 10);
  for (double t = 1.0; t <= 100.0; t += 1.0) {
    sim.advance_to(t);
    ASSERT_EQ(sim.tracker().position(1), sim.config().tagged(1)) << "t=" << t;
  }
  EXPECT_GT(sim.events(), 0u);
}

TEST(Evolve, HandBuiltCrossingMergesAtLeftSite) {
  // Labels 1 and 2 tagged at sites 4 and 5.
  MulticlassConfig config(Window{0, 9}, {1, 1, 1, 1, 1, 2, 2, 2, 2, 2}, {4, 5});
  Simulation sim(config, ShockTracker(config), 1);
  sim.fire(4);
  EXPECT_EQ(sim.config().tagged(1), 5);
  EXPECT_EQ(sim.config().tagged(2), 4);
  ASSERT_EQ(sim.tracker().blocks().size(), 1u);
  const auto& block = sim.tracker().blocks().front();
  EXPECT_EQ(block.low, 1);
  EXPECT_EQ(block.high, 2);
  EXPECT_EQ(block.position, 4);
  ASSERT_EQ(sim.tracker().crossings().size(), 1u);
  EXPECT_EQ(sim.tracker().crossings()[0].position, 4);

  // Only priorities 1 and 2 remain: the merged block has nothing to follow.
  sim.fire(3);
  sim.fire(5);
  EXPECT_EQ(sim.config().tagged(1), 6);
  EXPECT_EQ(sim.config().tagged(2), 3);
  EXPECT_EQ(sim.tracker().position(1), 4);
  EXPECT_EQ(sim.tracker().position(2), 4);
}

TEST(Evolve, MergedBlockFollowsOuterDiscrepancies) {
  MulticlassConfig config(Window{0, 9}, {0, 0, 0, 1, 2, H, H, H, H, H}, {3, 4});
  Simulation sim(config, ShockTracker(config), 1);
  sim.fire(3);  // labels cross; merged block at 3 holding priority 2
  ASSERT_EQ(sim.tracker().blocks().size(), 1u);
  EXPECT_EQ(sim.tracker().position(1), 3);
  sim.fire(4);  // label 1 moves on; priorities inside the block are ignored
  EXPECT_EQ(sim.config().tagged(1), 5);
  EXPECT_EQ(sim.tracker().position(1), 3);
  sim.fire(3);  // a hole enters from the right
  EXPECT_EQ(sim.tracker().position(1), 4);
  sim.fire(2);  // not adjacent to the block
  EXPECT_EQ(sim.tracker().position(1), 4);
  sim.fire(3);  // priority 0 arrives from the left
  EXPECT_EQ(sim.tracker().position(1), 3);
  EXPECT_EQ(sim.tracker().crossings().size(), 1u);
}

TEST(Evolve, MatchesExactDistribution) {
  const std::vector<Priority> start{0, 1, H, H, 2};
  const double t = 0.7;
  const auto empirical = engine_law(start, t, 100'000, 21);
  EXPECT_LT(total_variation(empirical, exact_law(start, t)), 0.015);
}

TEST(Evolve, EquivalentToNaiveAllBondScheduling) {
  const std::vector<Priority> start{0, 0, H, H, H};
  const double t = 1.0;
  const int runs = 100'000;
  const auto engine = engine_law(start, t, runs, 5);
  std::map<std::vector<Priority>, double> naive;
  Rng rng(6);
  for (int r = 0; r < runs; ++r) naive[naive_run(start, t, rng)] += 1.0 / runs;
  EXPECT_LT(total_variation(engine, naive), 0.01);
  EXPECT_LT(total_variation(naive, exact_law(start, t)), 0.01);
}

TEST(Evolve, InvariantChecksStayClean) {
  auto scenario = validate_meeting(StepProfile({-1.0, 0.0, 1.0}, {0.0, 0.3, 0.6, 0.9}));
  const double epsilon = 0.02;
  const double horizon = scenario.t_star / epsilon;
  auto config = sample_initial(scenario, epsilon, simulation_window(scenario, epsilon, horizon), 4);
  auto counts = config.priority_counts();
  EvolveOptions options;
  options.check_invariants = true;
  auto result = evolve(config, ShockTracker(config), horizon, 8, options);
  EXPECT_EQ(result.invariants.total(), 0u);
  EXPECT_EQ(result.config.priority_counts(), counts);
  EXPECT_GT(result.events, 0u);
  for (const auto& block : result.tracker.blocks()) {
    const Priority p = result.config.priority(block.position);
    EXPECT_GE(p, block.low);
    EXPECT_LE(p, block.high);
  }
}

TEST(Evolve, ReplayIsBitExact) {
  auto scenario = validate_meeting(StepProfile({-1.0, 1.0}, {0.0, 0.5, 1.0}));
  const double epsilon = 0.02;
  auto config = sample_initial(scenario, epsilon, simulation_window(scenario, epsilon, 100.0), 2);
  std::ostringstream log_a, log_b;
  TrajectoryLog a(log_a, 2), b(log_b, 2);
  auto ra = evolve(config, ShockTracker(config), 100.0, 17, EvolveOptions{false, &a});
  auto rb = evolve(config, ShockTracker(config), 100.0, 17, EvolveOptions{false, &b});
  EXPECT_EQ(ra.config, rb.config);
  EXPECT_EQ(ra.events, rb.events);
  EXPECT_EQ(log_a.str(), log_b.str());
  EXPECT_EQ(log_a.str().substr(0, 34), "time,bond,moved_from,moved_to,Y1,Y");
}

TEST(Evolve, BoundaryReached) {
  MulticlassConfig config(Window{0, 9}, {H, H, H, H, H, H, 1, H, H, H}, {6});
  Simulation sim(config, ShockTracker(config), 1);
  EXPECT_EQ(error_kind([&] { sim.advance_to(1000.0); }), ErrorKind::kBoundaryReached);
  MulticlassConfig edge(Window{0, 9}, {H, 1, H, H, H, H, H, H, H, H}, {1});
  EXPECT_EQ(error_kind([&] { Simulation(edge, ShockTracker(edge), 1); }), ErrorKind::kBoundaryReached);
}

TEST(Evolve, RejectsBadHorizon) {
  auto config = untagged(0, {0, H, H});
  Simulation sim(config, ShockTracker(config), 1);
  sim.advance_to(1.0);
  EXPECT_EQ(error_kind([&] { sim.advance_to(0.5); }), ErrorKind::kBadInput);
  EXPECT_EQ(error_kind([&] { sim.advance_to(INFINITY); }), ErrorKind::kBadInput);
}

TEST(Companion, DrivenBySameArrows) {
  auto scenario = validate_meeting(StepProfile({-1.0, 1.0}, {0.0, 0.5, 1.0}));
  const double epsilon = 0.05;
  const double horizon = scenario.t_star / epsilon;
  auto config = sample_initial(scenario, epsilon, simulation_window(scenario, epsilon, horizon), 12);
  auto eta = step_configuration(scenario, epsilon, config, 13);
  // Off the tagged sites eta is sigma^k on region k.
  EXPECT_FALSE(eta.at(-21));
  EXPECT_TRUE(eta.at(21));
  for (std::int64_t x = -19; x <= 19; ++x) EXPECT_EQ(eta.at(x), config.occupied(x, 1));

  const auto mass = std::count(eta.occupied.begin(), eta.occupied.end(), 1);
  Simulation sim(config, ShockTracker(config), 14);
  sim.attach_companion(eta);
  sim.advance_to(horizon);
  const auto& after = sim.companion()->occupied;
  EXPECT_EQ(std::count(after.begin(), after.end(), 1), mass);
  EXPECT_EQ(error_kind([&] { sim.attach_companion(eta); }), ErrorKind::kBadInput);
}

TEST(Companion, IdenticalCopyStaysIdentical) {
  // A companion equal to sigma^1 must stay equal to sigma^1.
  auto scenario = validate_meeting(StepProfile({0.0}, {0.3, 0.7}), 1.0);
  auto config = sample_initial(scenario, 0.02, Window{-200, 200}, 3);
  BinaryConfig eta{config.window(), {}};
  for (std::int64_t x = config.window().lo; x <= config.window().hi; ++x) eta.occupied.push_back(config.occupied(x, 1));
  Simulation sim(config, ShockTracker(config), 4);
  sim.attach_companion(eta);
  sim.advance_to(30.0);
  for (std::int64_t x = config.window().lo; x <= config.window().hi; ++x) {
    ASSERT_EQ(sim.companion()->at(x), sim.config().occupied(x, 1));
  }
}

TEST(ReconstructEtaPrime, OneShock) {
  MulticlassConfig config(Window{-3, 3}, {0, H, 1, 1, 0, H, 1}, {0});
  auto eta = reconstruct_eta_prime(config, ShockTracker(config));
  EXPECT_EQ(eta.occupied, (std::vector<std::uint8_t>{1, 0, 0, 1, 1, 0, 1}));
}

TEST(ReconstructEtaPrime, TwoShocksHandBuilt) {
  MulticlassConfig config(Window{-3, 2}, {0, 1, 1, 0, 2, 2}, {-1, 2});
  ShockTracker tracker(config);
  EXPECT_EQ(reconstruct_eta_prime(config, tracker).occupied, (std::vector<std::uint8_t>{1, 0, 1, 1, 0, 1}));
  tracker.merge(0, 0.0);
  EXPECT_EQ(tracker.position(1), 2);
  EXPECT_EQ(reconstruct_eta_prime(config, tracker).occupied, (std::vector<std::uint8_t>{1, 0, 0, 1, 0, 1}));
}

TEST(Predictor, EmptyRangesAtTimeZero) {
  auto scenario = validate_meeting(StepProfile({0.0}, {0.2, 0.8}), 1.0);
  auto config = sample_initial(scenario, 0.01, Window{-300, 300}, 1);
  EXPECT_EQ(n_predictor(config, scenario.profile, 1, 0.0, 0.01), 0.0);
  EXPECT_EQ(predicted_position(config, scenario.profile, 1, 0.0, 0.01), 0.0);
}

TEST(Predictor, HandBuiltRanges) {
  StepProfile profile({0.0}, {0.2, 0.7});
  // t = 8, eps = 1: right range 1..4, left range -3..0.
  MulticlassConfig holes(Window{-10, 10}, {1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, H, H, H, H, 1, 1, 1, 1, 1, 1}, {0});
  EXPECT_EQ(n_predictor(holes, profile, 1, 8.0, 1.0), 4.0);
  EXPECT_NEAR(predicted_position(holes, profile, 1, 8.0, 1.0), 8.0, 1e-12);

  MulticlassConfig full(Window{-10, 10}, {H, H, H, H, H, H, H, 0, 0, 0, 0, 0, 0, 0, 0, H, H, H, H, H, 1}, {10});
  EXPECT_EQ(n_predictor(full, profile, 1, 8.0, 1.0), -4.0);

  EXPECT_EQ(error_kind([&] { n_predictor(full, profile, 1, 40.0, 1.0); }), ErrorKind::kRangeOutOfWindow);
  EXPECT_EQ(error_kind([&] { n_predictor(full, profile, 2, 1.0, 1.0); }), ErrorKind::kBadInput);
}

TEST(SimulationWindow, Margins) {
  auto scenario = validate_meeting(StepProfile({-1.0, 1.0}, {0.0, 0.5, 1.0}));
  auto w = simulation_window(scenario, 0.01, 200.0, 3.0);
  EXPECT_EQ(w.lo, -100 - 600);
  EXPECT_EQ(w.hi, 100 + 600);
}

TEST(Checkpoint, RoundTripProperty) {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const auto size = 1 + rng.below(300);
    const std::int64_t lo = static_cast<std::int64_t>(rng.below(1000)) - 500;
    std::vector<Priority> prio(size);
    for (auto& p : prio) {
      const auto r = rng.below(5);
      p = r == 4 ? H : static_cast<Priority>(r % 3);
    }
    std::vector<std::int64_t> tagged;
    for (std::size_t i = 0; i < size && tagged.size() < 2; ++i) {
      if (prio[i] == tagged.size() + 1) tagged.push_back(lo + static_cast<std::int64_t>(i));
    }
    MulticlassConfig config(Window{lo, lo + static_cast<std::int64_t>(size) - 1}, prio, tagged);
    std::stringstream buffer;
    write_checkpoint(buffer, config);
    EXPECT_EQ(read_checkpoint(buffer), config);
  }
}

TEST(Checkpoint, RejectsCorruptInput) {
  MulticlassConfig config(Window{0, 5}, {0, 1, H, H, 0, 0}, {1});
  std::stringstream good;
  write_checkpoint(good, config);
  const std::string bytes = good.str();

  std::stringstream bad_magic(std::string("XXXXXXXX") + bytes.substr(8));
  EXPECT_EQ(error_kind([&] { read_checkpoint(bad_magic); }), ErrorKind::kIo);
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  EXPECT_EQ(error_kind([&] { read_checkpoint(truncated); }), ErrorKind::kIo);
  std::string wrong_version = bytes;
  wrong_version[8] = 9;
  std::stringstream version(wrong_version);
  EXPECT_EQ(error_kind([&] { read_checkpoint(version); }), ErrorKind::kIo);
  EXPECT_EQ(error_kind([] { load_checkpoint("/nonexistent/ckpt.bin"); }), ErrorKind::kIo);
}

TEST(MulticlassConfig, Validation) {
  EXPECT_EQ(error_kind([] { MulticlassConfig(Window{0, 3}, {0, 0}, {}); }), ErrorKind::kBadInput);
  EXPECT_EQ(error_kind([] { MulticlassConfig(Window{0, 3}, {0, 0, 1, 0}, {1}); }), ErrorKind::kBadInput);
  EXPECT_EQ(error_kind([] { MulticlassConfig(Window{0, 3}, {0, 0, 1, 0}, {7}); }), ErrorKind::kWindowTooSmall);
  MulticlassConfig c(Window{0, 3}, {0, H, 1, 0}, {2});
  EXPECT_EQ(c.priority_counts(), (std::vector<std::int64_t>{2, 1, 1}));
}

}  // namespace
}  // namespace shockmeet
