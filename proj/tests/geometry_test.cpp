#include <random>

#include <gtest/gtest.h>

#include "scalardyn/geometry.hpp"
#include "test_support.hpp"

namespace scalardyn {
namespace {

using testing::random_vec;

TEST(Geometry, DotBasics) {
  EXPECT_EQ(dot(Vec3(1, 0, 0), Vec3(0, 1, 0)), 0.0);
  EXPECT_EQ(dot(Vec3(1, 2, 3), Vec3(4, 5, 6)), 32.0);
}

TEST(Geometry, DotInvariantUnderOrthogonal) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const Orthogonal3 r = sample_orthogonal(i);
    const Vec3 a = random_vec(rng), b = random_vec(rng);
    const double ref = dot(a, b);
    EXPECT_NEAR(dot(Vec3(r * a), Vec3(r * b)), ref, 1e-12 * std::max(1.0, std::abs(ref)));
  }
}

TEST(Geometry, CrossBasics) {
  EXPECT_EQ(cross(Vec3(1, 0, 0), Vec3(0, 1, 0)), Vec3(0, 0, 1));
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const Vec3 a = random_vec(rng), b = random_vec(rng);
    EXPECT_EQ(cross(a, a), Vec3::Zero());
    EXPECT_NEAR(dot(cross(a, b), a), 0.0, 1e-12);
    EXPECT_NEAR(dot(cross(a, b), b), 0.0, 1e-12);
    EXPECT_LT((cross(a, b) + cross(b, a)).norm(), 1e-15);
  }
}

TEST(Geometry, CrossIsPseudoVector) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const Orthogonal3 r = sample_orthogonal(1000 + i);
    const Vec3 a = random_vec(rng), b = random_vec(rng);
    const Vec3 lhs = cross(Vec3(r * a), Vec3(r * b));
    const Vec3 rhs = r.determinant() * (r * cross(a, b));
    EXPECT_LT((lhs - rhs).norm(), 1e-12 * std::max(1.0, rhs.norm()));
  }
}

TEST(Geometry, SampleOrthogonalIsOrthogonalAndDeterministic) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Orthogonal3 r = sample_orthogonal(seed);
    const Mat3 residual = r.matrix().transpose() * r.matrix() - Mat3::Identity();
    EXPECT_LE(residual.cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(std::abs(r.determinant()), 1.0, 1e-12);
    EXPECT_EQ(sample_orthogonal(seed).matrix(), r.matrix());
  }
}

TEST(Geometry, SampleOrthogonalCoversBothComponents) {
  int reflections = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    if (sample_orthogonal(seed).determinant() < 0.0) ++reflections;
  }
  EXPECT_GE(reflections, 400);
  EXPECT_LE(reflections, 600);
}

TEST(Geometry, RejectsNonOrthogonal) {
  Mat3 m = Mat3::Identity();
  m(0, 1) = 1e-6;
  EXPECT_THROW(Orthogonal3{m}, std::invalid_argument);
}

Configuration random_config(std::mt19937_64& rng) {
  Configuration c;
  c.state = {random_vec(rng), random_vec(rng), random_vec(rng), random_vec(rng)};
  c.qo = random_vec(rng);
  c.g = random_vec(rng);
  return c;
}

TEST(Geometry, ActIdentityAndTranslation) {
  std::mt19937_64 rng(4);
  const Configuration c = random_config(rng);
  const Configuration same = act(Orthogonal3::identity(), Vec3::Zero(), c);
  EXPECT_EQ(same.state, c.state);
  EXPECT_EQ(same.qo, c.qo);
  EXPECT_EQ(same.g, c.g);

  const Vec3 w(1, 0, 0);
  const Configuration moved = act(Orthogonal3::identity(), w, c);
  EXPECT_EQ(moved.state.q1, Vec3(c.state.q1 + w));
  EXPECT_EQ(moved.state.q2, Vec3(c.state.q2 + w));
  EXPECT_EQ(moved.qo, Vec3(c.qo + w));
  EXPECT_EQ(moved.state.p1, c.state.p1);
  EXPECT_EQ(moved.state.p2, c.state.p2);
  EXPECT_EQ(moved.g, c.g);
}

TEST(Geometry, ActComposition) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const Configuration c = random_config(rng);
    const Orthogonal3 r1 = sample_orthogonal(2 * i), r2 = sample_orthogonal(2 * i + 1);
    const Vec3 w1 = random_vec(rng), w2 = random_vec(rng);
    const Configuration lhs = act(r2, w2, act(r1, w1, c));
    const Configuration rhs = act(r2 * r1, Vec3(r2 * w1 + w2), c);
    EXPECT_LT((lhs.state.to_vector() - rhs.state.to_vector()).norm(), 1e-12);
    EXPECT_LT((lhs.qo - rhs.qo).norm(), 1e-12);
    EXPECT_LT((lhs.g - rhs.g).norm(), 1e-12);
  }
}

}  // namespace
}  // namespace scalardyn
