#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "shockmeet/acceptance.hpp"
#include "shockmeet/burgers.hpp"
#include "shockmeet/rng.hpp"
#include "test_util.hpp"

namespace shockmeet::burgers {
namespace {

using testing::error_kind;

const std::vector<double> kHalf{0.0, 0.5, 1.0};

// Increasing densities with adjacent gaps of at least `gap`.
std::vector<double> random_densities(Rng& rng, int n, double gap = 0.05) {
  std::vector<double> rho;
  const double slack = 1.0 - gap * n;
  std::vector<double> u(n + 1);
  for (auto& v : u) v = rng.uniform() * slack;
  std::sort(u.begin(), u.end());
  for (int k = 0; k <= n; ++k) rho.push_back(u[k] + gap * k);
  return rho;
}

std::vector<double> random_x(Rng& rng, int n) {
  std::vector<double> x(n);
  for (auto& v : x) v = 2.0 * rng.normal();
  return x;
}

// Integral of lambda(., t) over [a, b] from the front positions.
double mass(const FrontState& state, double a, double b) {
  double total = state.densities.back() * b - state.densities.front() * a;
  for (const auto& block : state.blocks) {
    total -= (state.densities[block.high] - state.densities[block.low - 1]) * block.position;
  }
  return total;
}

TEST(SolveFronts, TwoFrontsCollide) {
  auto state = solve_fronts({-1.0, 1.0}, kHalf, 3.0);
  ASSERT_EQ(state.blocks.size(), 1u);
  EXPECT_EQ(state.blocks[0], (FrontBlock{1, 2, 0.0}));
  EXPECT_DOUBLE_EQ(state.velocity(state.blocks[0]), 0.0);
  ASSERT_EQ(state.events.size(), 1u);
  EXPECT_DOUBLE_EQ(state.events[0].time, 2.0);
  EXPECT_DOUBLE_EQ(state.events[0].position, 0.0);
  EXPECT_EQ(state.label_positions(), (std::vector<double>{0.0, 0.0}));
}

TEST(SolveFronts, StationaryFront) {
  for (double t : {0.0, 1.0, 100.0}) {
    EXPECT_DOUBLE_EQ(solve_fronts({0.7}, {0.3, 0.7}, t).position(1), 0.7);
  }
}

TEST(SolveFronts, LinearBeforeFirstCollision) {
  const std::vector<double> rho{0.1, 0.3, 0.6, 0.8};
  const std::vector<double> b{-3.0, 0.0, 4.0};
  const auto v = front_velocities(rho);
  auto state = solve_fronts(b, rho, 0.5);
  EXPECT_TRUE(state.events.empty());
  for (int k = 1; k <= 3; ++k) EXPECT_EQ(state.position(k), b[k - 1] + 0.5 * v[k - 1]);
}

TEST(SolveFronts, SimultaneousTripleCollision) {
  // Velocities 0.75, 0, -0.75 from -1, 0, 1 meet at the origin at t = 4/3.
  auto meet = solve_fronts({-1.0, 0.0, 1.0}, {0.0, 0.25, 0.75, 1.0}, 5.0);
  ASSERT_EQ(meet.blocks.size(), 1u);
  ASSERT_EQ(meet.events.size(), 1u);
  EXPECT_EQ(meet.events[0].low, 1);
  EXPECT_EQ(meet.events[0].high, 3);
  EXPECT_NEAR(meet.events[0].time, 4.0 / 3.0, 1e-12);
  EXPECT_NEAR(meet.position(2), 0.0, 1e-12);
}

TEST(SolveFronts, Errors) {
  EXPECT_EQ(error_kind([] { solve_fronts({1.0, -1.0}, kHalf, 1.0); }), ErrorKind::kBadInput);
  EXPECT_EQ(error_kind([] { solve_fronts({-1.0, 1.0}, {0.0, 0.5, 0.5}, 1.0); }), ErrorKind::kBadInput);
  EXPECT_EQ(error_kind([] { solve_fronts({-1.0, 1.0}, {0.0, 0.5}, 1.0); }), ErrorKind::kBadInput);
  EXPECT_EQ(error_kind([] { solve_fronts({-1.0, 1.0}, kHalf, -1.0); }), ErrorKind::kBadInput);
  EXPECT_EQ(error_kind([] { solve_fronts({0.0}, {0.2, 1.2}, 1.0); }), ErrorKind::kBadInput);
}

TEST(EvaluateDensity, Examples) {
  auto early = solve_fronts({-1.0, 1.0}, kHalf, 1.0);
  EXPECT_DOUBLE_EQ(evaluate_density(early, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(evaluate_density(early, -0.5), 0.5);  // right density at a front
  EXPECT_DOUBLE_EQ(evaluate_density(early, -0.6), 0.0);
  EXPECT_DOUBLE_EQ(evaluate_density(early, 0.5), 1.0);
  auto late = solve_fronts({-1.0, 1.0}, kHalf, 3.0);
  for (double r : {-5.0, -1e-9}) EXPECT_EQ(evaluate_density(late, r), 0.0);
  for (double r : {0.0, 1e-9, 5.0}) EXPECT_EQ(evaluate_density(late, r), 1.0);
}

TEST(SolveFronts, MassBalanceProperty) {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(5));
    const auto rho = random_densities(rng, n);
    std::vector<double> b(n);
    for (auto& v : b) v = 4.0 * rng.normal();
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    if (static_cast<int>(b.size()) != n) continue;
    const double t = 10.0 * rng.uniform();
    const double a = -100.0;
    const double z = 100.0;
    const auto flux = [](double r) { return r * (1.0 - r); };
    const double expected = t * (flux(rho.front()) - flux(rho.back()));
    const double actual = mass(solve_fronts(b, rho, t), a, z) - mass(solve_fronts(b, rho, 0.0), a, z);
    EXPECT_NEAR(actual, expected, 1e-9);
  }
}

TEST(SolveFronts, TranslationCovariant) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(3));
    const auto rho = random_densities(rng, n);
    std::vector<double> b(n);
    for (int k = 0; k < n; ++k) b[k] = k - 2.0 + 0.5 * rng.uniform();
    const double shift = 0.25 * static_cast<double>(rng.below(40)) - 5.0;  // exact in binary
    std::vector<double> moved = b;
    for (auto& v : moved) v += shift;
    const double t = 0.5 * static_cast<double>(rng.below(20));
    auto base = solve_fronts(b, rho, t).label_positions();
    auto other = solve_fronts(moved, rho, t).label_positions();
    for (int k = 0; k < n; ++k) EXPECT_NEAR(other[k], base[k] + shift, 1e-12);
  }
}

TEST(Psi, IdentityWhenOrdered) {
  for (const auto& x : std::vector<std::vector<double>>{{-0.3, 0.4}, {0.2, 0.2}}) {
    const auto y = psi(x, kHalf);
    EXPECT_NEAR(y[0], x[0], 1e-15);
    EXPECT_NEAR(y[1], x[1], 1e-15);
  }
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(5));
    const auto rho = random_densities(rng, n);
    auto x = random_x(rng, n);
    std::sort(x.begin(), x.end());
    auto y = psi(x, rho);
    for (int k = 0; k < n; ++k) EXPECT_NEAR(y[k], x[k], 1e-12);
  }
}

TEST(Psi, CrossedPairMergesToWeightedMean) {
  EXPECT_EQ(psi({1.0, -1.0}, kHalf), (std::vector<double>{0.0, 0.0}));
  Rng rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    const auto rho = random_densities(rng, 2);
    auto x = random_x(rng, 2);
    auto y = psi(x, rho);
    if (x[0] <= x[1]) {
      EXPECT_NEAR(y[0], x[0], 1e-12);
      EXPECT_NEAR(y[1], x[1], 1e-12);
    } else {
      const double w = (rho[1] - rho[0]) / (rho[2] - rho[0]);
      const double merged = w * x[0] + (1.0 - w) * x[1];
      EXPECT_NEAR(y[0], merged, 1e-12);
      EXPECT_NEAR(y[1], merged, 1e-12);
    }
  }
}

TEST(Psi, OutputNondecreasingAndWellPosed) {
  Rng rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(5));
    const auto rho = random_densities(rng, n, 0.1);
    const auto x = random_x(rng, n);
    const auto y = psi(x, rho);
    EXPECT_TRUE(std::is_sorted(y.begin(), y.end()));
    const auto doubled = psi(x, rho, 2.0 * ordering_time(x, rho));
    for (int k = 0; k < n; ++k) EXPECT_NEAR(doubled[k], y[k], 1e-9);
    // Merged labels sit at the weighted mean of their inputs.
    for (int lo = 0; lo < n;) {
      int hi = lo;
      while (hi + 1 < n && y[hi + 1] == y[lo]) ++hi;
      double weighted = 0.0;
      for (int k = lo; k <= hi; ++k) weighted += (rho[k + 1] - rho[k]) * x[k];
      EXPECT_NEAR(y[lo], weighted / (rho[hi + 1] - rho[lo]), 1e-9);
      lo = hi + 1;
    }
  }
}

TEST(Psi, MatchesTimeMarchingOracle) {
  Rng rng(6);
  for (int trial = 0; trial < 40; ++trial) {
    const auto rho = random_densities(rng, 3, 0.15);
    const auto x = random_x(rng, 3);
    const auto exact = psi(x, rho);
    const auto marched = acceptance::psi_by_marching(x, rho);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(marched[k], exact[k], 1e-3);
  }
}

TEST(Psi, OrderingFailed) {
  // t = 0.1 leaves the backward characteristics crossed.
  EXPECT_EQ(error_kind([] { psi({1.0, -1.0}, kHalf, 0.1); }), ErrorKind::kOrderingFailed);
  EXPECT_EQ(error_kind([] { psi({1.0, -1.0}, kHalf, 0.0); }), ErrorKind::kBadInput);
  EXPECT_EQ(error_kind([] { psi({1.0}, kHalf); }), ErrorKind::kBadInput);
}

TEST(PsiS, Examples) {
  const std::vector<double> x{1.0, -1.0};
  EXPECT_EQ(psi_s(x, 0.0, kHalf), psi(x, kHalf));
  const double t = ordering_time(x, kHalf);
  EXPECT_DOUBLE_EQ(t, 3.0);
  const auto far = psi_s(x, -5.0, kHalf);
  EXPECT_DOUBLE_EQ(far[0], 1.0 - 5.0 * 0.5);
  EXPECT_DOUBLE_EQ(far[1], -1.0 + 5.0 * 0.5);
  for (double s : {10.0, 100.0, 1e4}) {
    const auto y = psi_s(x, s, kHalf);
    EXPECT_NEAR(y[0], 0.0, 1e-12);
    EXPECT_EQ(y[0], y[1]);
  }
}

TEST(PsiS, ContinuousAtBackwardTime) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto rho = random_densities(rng, 3, 0.1);
    const auto x = random_x(rng, 3);
    const double t = ordering_time(x, rho);
    const auto at = psi_s(x, -t, rho);
    const auto after = psi_s(x, -t + 1e-9, rho);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(at[k], after[k], 1e-8);
  }
}

}  // namespace
}  // namespace shockmeet::burgers
