#include <random>

#include <gtest/gtest.h>

#include "scalardyn/physics.hpp"
#include "test_support.hpp"

namespace scalardyn {
namespace {

SystemParams unit_params() {
  SystemParams p;
  p.m1 = p.m2 = p.k1 = p.k2 = p.l1 = p.l2 = 1.0;
  p.qo = Vec3::Zero();
  p.g = Vec3(0, 0, -1);
  return p;
}

TEST(Hamiltonian, VanishesAtRestWithoutGravity) {
  SystemParams p;
  p.g = Vec3::Zero();
  p.qo = Vec3(0.3, -0.2, 1.0);
  PhaseState z;
  z.q1 = p.qo + Vec3(0, p.l1, 0);
  z.q2 = z.q1 + Vec3(p.l2, 0, 0);
  EXPECT_NEAR(hamiltonian(p, z), 0.0, 1e-15);
}

TEST(Hamiltonian, HangingUnitSystem) {
  // Springs at rest length; gravity terms -1*(1) and -1*(2).
  PhaseState z;
  z.q1 = Vec3(0, 0, -1);
  z.q2 = Vec3(0, 0, -2);
  EXPECT_DOUBLE_EQ(hamiltonian(unit_params(), z), -3.0);
}

TEST(Hamiltonian, InvariantUnderCoTransformation) {
  std::mt19937_64 rng(11);
  const SystemParams base;
  for (int i = 0; i < 100; ++i) {
    const PhaseState z = testing::random_state(rng, base);
    const Orthogonal3 r = sample_orthogonal(i);
    const Vec3 w = testing::random_vec(rng, 3.0);
    const Configuration moved = act(r, w, {z, base.qo, base.g});
    SystemParams p2 = base;
    p2.qo = moved.qo;
    p2.g = moved.g;
    const double h = hamiltonian(base, z);
    EXPECT_NEAR(hamiltonian(p2, moved.state), h, 1e-10 * std::abs(h));
  }
}

TEST(TrueDynamics, ZeroMomentumMeansZeroVelocity) {
  std::mt19937_64 rng(12);
  PhaseState z = testing::random_state(rng);
  z.p1.setZero();
  z.p2.setZero();
  const PhaseState dz = true_dynamics(SystemParams{}, z);
  EXPECT_EQ(dz.q1, Vec3::Zero());
  EXPECT_EQ(dz.q2, Vec3::Zero());
}

TEST(TrueDynamics, EquilibriumIsStatic) {
  for (const SystemParams& p : {SystemParams{}, unit_params()}) {
    const PhaseState dz = true_dynamics(p, equilibrium_state(p));
    EXPECT_LE(dz.to_vector().cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(TrueDynamics, MatchesFiniteDifferenceOfHamiltonian) {
  std::mt19937_64 rng(13);
  const SystemParams p;
  Eigen::Matrix<double, 12, 12> j = Eigen::Matrix<double, 12, 12>::Zero();
  j.block<6, 6>(0, 6).setIdentity();
  j.block<6, 6>(6, 0) = -Eigen::Matrix<double, 6, 6>::Identity();
  for (int i = 0; i < 100; ++i) {
    const PhaseState z = testing::random_state(rng, p);
    auto h = [&](const Eigen::VectorXd& x) {
      return hamiltonian(p, PhaseState::from_vector(StateVector(x)));
    };
    const Eigen::VectorXd fd = j * testing::central_difference(h, z.to_vector(), 1e-6);
    const Eigen::VectorXd exact = true_dynamics(p, z).to_vector();
    EXPECT_LT(testing::rel_diff(exact, fd), 1e-5);
  }
}

TEST(TrueDynamics, EquivariantVectorField) {
  std::mt19937_64 rng(14);
  const SystemParams base;
  for (int i = 0; i < 100; ++i) {
    const PhaseState z = testing::random_state(rng, base);
    const Orthogonal3 r = sample_orthogonal(500 + i);
    const Vec3 w = testing::random_vec(rng, 3.0);
    const Configuration moved = act(r, w, {z, base.qo, base.g});
    SystemParams p2 = base;
    p2.qo = moved.qo;
    p2.g = moved.g;
    const PhaseState dz = true_dynamics(base, z);
    const PhaseState lhs = true_dynamics(p2, moved.state);
    const PhaseState rhs{r * dz.q1, r * dz.q2, r * dz.p1, r * dz.p2};
    EXPECT_LT(testing::rel_diff(lhs.to_vector(), rhs.to_vector()), 1e-10);
  }
}

TEST(TrueDynamics, CoincidentPointsThrow) {
  const SystemParams p;
  PhaseState z = equilibrium_state(p);
  z.q1 = p.qo;
  EXPECT_THROW(true_dynamics(p, z), CoincidentPointError);
  z = equilibrium_state(p);
  z.q2 = z.q1;
  EXPECT_THROW(true_dynamics(p, z), CoincidentPointError);
}

TEST(Equilibrium, UnitSystem) {
  const PhaseState z = equilibrium_state(unit_params());
  EXPECT_NEAR((z.q1 - Vec3(0, 0, -3)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((z.q2 - Vec3(0, 0, -5)).norm(), 0.0, 1e-15);
  EXPECT_EQ(z.p1, Vec3::Zero());
  EXPECT_EQ(z.p2, Vec3::Zero());
}

TEST(Equilibrium, NoGravityUnstretched) {
  SystemParams p;
  p.g = Vec3::Zero();
  p.l1 = 0.7;
  p.l2 = 1.3;
  const PhaseState z = equilibrium_state(p);
  EXPECT_NEAR((z.q1 - p.qo).norm(), 0.7, 1e-15);
  EXPECT_NEAR((z.q2 - z.q1).norm(), 1.3, 1e-15);
}

TEST(SystemParams, Validation) {
  SystemParams p;
  EXPECT_NO_THROW(p.validate());
  p.k2 = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = SystemParams{};
  p.l1 = -1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace scalardyn
