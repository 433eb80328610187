#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "scalardyn/dataset.hpp"
#include "scalardyn/integrate.hpp"

namespace scalardyn {
namespace {

using Vec2 = Eigen::Vector2d;

const auto oscillator = [](const Vec2& z, double) { return Vec2(z(1), -z(0)); };

double oscillator_error(int steps) {
  const std::vector<double> times = {0.0, 1.0};
  const auto path = rollout(oscillator, Vec2(1.0, 0.0), times, steps);
  return (path.back() - Vec2(std::cos(1.0), -std::sin(1.0))).norm();
}

TEST(Rk4, ZeroFieldIsIdentity) {
  const Vec2 z(0.3, -2.0);
  const Vec2 out = rk4_step([](const Vec2&, double) { return Vec2::Zero().eval(); }, z, 0.0, 0.5);
  EXPECT_EQ(out, z);
}

TEST(Rk4, HarmonicOscillatorAccuracy) {
  // h = 0.01 over [0, 1].
  const std::vector<double> times = {0.0, 1.0};
  const auto path = rollout(oscillator, Vec2(1.0, 0.0), times, 100);
  EXPECT_NEAR(path.back()(0), std::cos(1.0), 1e-8);
  EXPECT_NEAR(path.back()(1), -std::sin(1.0), 1e-8);
}

TEST(Rk4, FourthOrderConvergence) {
  for (int steps : {10, 20, 40}) {
    const double ratio = oscillator_error(steps) / oscillator_error(2 * steps);
    EXPECT_GE(ratio, 12.0) << steps;
    EXPECT_LE(ratio, 20.0) << steps;
  }
}

TEST(Rollout, SingleTimeReturnsInitialState) {
  const std::vector<double> times = {0.0};
  const auto path = rollout(oscillator, Vec2(1.0, 2.0), times, 10);
  ASSERT_EQ(path.size(), 1u);
  EXPECT_EQ(path[0], Vec2(1.0, 2.0));
}

TEST(Rollout, RejectsNonIncreasingTimes) {
  const std::vector<double> times = {0.0, 1.0, 1.0};
  EXPECT_THROW(rollout(oscillator, Vec2(1.0, 0.0), times, 10), std::invalid_argument);
  const std::vector<double> backwards = {0.0, -1.0};
  EXPECT_THROW(rollout(oscillator, Vec2(1.0, 0.0), backwards, 10), std::invalid_argument);
}

TEST(Rollout, ContinuationMatches) {
  const std::vector<double> all = {0.0, 1.0, 2.0};
  const std::vector<double> first = {0.0, 1.0};
  const std::vector<double> second = {1.0, 2.0};
  const auto full = rollout(oscillator, Vec2(1.0, 0.0), all, 7);
  const auto a = rollout(oscillator, Vec2(1.0, 0.0), first, 7);
  const auto b = rollout(oscillator, a.back(), second, 7);
  EXPECT_EQ(full[2], b.back());
}

TEST(Rollout, DeterministicBitForBit) {
  const std::vector<double> times = {0.0, 0.3, 0.9, 1.4};
  EXPECT_EQ(rollout(oscillator, Vec2(0.2, 0.1), times, 13),
            rollout(oscillator, Vec2(0.2, 0.1), times, 13));
}

TEST(Rollout, PendulumEnergyConservedOverFiveSeconds) {
  const SystemParams p;
  DatasetConfig dc;
  std::mt19937_64 rng = trajectory_stream(99, 0);
  const PhaseState z0 = sample_initial_state(rng, p, dc);
  std::vector<double> times;
  for (int j = 0; j <= 50; ++j) times.push_back(0.1 * j);
  const auto path = true_rollout(p, z0, times, IntegratorConfig::for_spacing(0.1, 1e-3));
  const double h0 = hamiltonian(p, path.front());
  for (const PhaseState& z : path) EXPECT_LE(std::abs(hamiltonian(p, z) - h0), 1e-6 * std::abs(h0));
}

TEST(IntegratorConfig, ForSpacing) {
  EXPECT_EQ(IntegratorConfig::for_spacing(0.1, 1e-3).substeps_per_label, 100);
  EXPECT_EQ(IntegratorConfig::for_spacing(0.1, 0.01).substeps_per_label, 10);
  EXPECT_EQ(IntegratorConfig::for_spacing(0.1, 1.0).substeps_per_label, 1);
}

}  // namespace
}  // namespace scalardyn
