#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "scalardyn/scalars.hpp"
#include "test_support.hpp"

namespace scalardyn {
namespace {

Eigen::VectorXd features_of(const PhaseState& z, const Vec3& qo, const Vec3& g) {
  return scalar_features(edge_vectors(z, qo, g), default_transforms());
}

TEST(ScalarFeatures, DefaultLength) {
  EXPECT_EQ(feature_dim(default_transforms()), 42);
  const SystemParams p;
  EXPECT_EQ(features_of(equilibrium_state(p), p.qo, p.g).size(), 42);
  EXPECT_EQ(feature_dim({Transform::Identity}), 21);
}

TEST(ScalarFeatures, PairOrdering) {
  const auto& pairs = feature_pairs();
  EXPECT_EQ(pairs[0], std::make_pair(0, 0));
  EXPECT_EQ(pairs[1], std::make_pair(0, 1));
  EXPECT_EQ(pairs[5], std::make_pair(0, 5));
  EXPECT_EQ(pairs[6], std::make_pair(1, 1));
  EXPECT_EQ(pairs[20], std::make_pair(5, 5));
}

TEST(ScalarFeatures, EdgeDefinitions) {
  PhaseState z;
  z.q1 = Vec3(1, 2, 3);
  z.q2 = Vec3(0, -1, 5);
  z.p1 = Vec3(7, 0, 0);
  z.p2 = Vec3(0, 8, 0);
  const Vec3 qo(1, 1, 1), g(0, 0, -2);
  const EdgeSet e = edge_vectors(z, qo, g);
  EXPECT_EQ(e.e[0], Vec3(0, 1, 2));
  EXPECT_EQ(e.e[1], Vec3(-1, -2, 4));
  EXPECT_EQ(e.e[2], Vec3(1, 3, -2));
  EXPECT_EQ(e.e[3], z.p1);
  EXPECT_EQ(e.e[4], z.p2);
  EXPECT_EQ(e.e[5], g);
}

TEST(ScalarFeatures, HandExample) {
  EdgeSet e;
  for (Vec3& v : e.e) v.setZero();
  e.e[0] = Vec3(1, 0, 0);
  e.e[1] = Vec3(0, 2, 0);
  const Eigen::VectorXd f = scalar_features(e, default_transforms());
  // (0,0): 1 -> (1, 1); (0,1): 0 -> (0, 0); (1,1): 4 -> (4, 2).
  EXPECT_EQ(f(0), 1.0);
  EXPECT_EQ(f(1), 1.0);
  EXPECT_EQ(f(2), 0.0);
  EXPECT_EQ(f(3), 0.0);
  EXPECT_EQ(f(12), 4.0);
  EXPECT_EQ(f(13), 2.0);
  EXPECT_EQ(f.cwiseAbs().sum(), 8.0);
}

TEST(ScalarFeatures, SignedInnerProductUnderSqrtAbs) {
  EdgeSet e;
  for (Vec3& v : e.e) v.setZero();
  e.e[0] = Vec3(3, 0, 0);
  e.e[1] = Vec3(-3, 0, 0);
  const Eigen::VectorXd f = scalar_features(e, {Transform::SqrtAbs, Transform::Identity});
  EXPECT_DOUBLE_EQ(f(2), 3.0);
  EXPECT_DOUBLE_EQ(f(3), -9.0);
}

TEST(ScalarFeatures, InvariantUnderO3IncludingReflections) {
  std::mt19937_64 rng(21);
  int reflections = 0;
  for (int i = 0; i < 100; ++i) {
    const PhaseState z = testing::random_state(rng);
    const Vec3 qo = testing::random_vec(rng), g = testing::random_vec(rng, 10.0);
    const Orthogonal3 r = sample_orthogonal(1000 + i);
    reflections += r.determinant() < 0;
    const Vec3 w = testing::random_vec(rng, 2.0);
    const Configuration moved = act(r, w, {z, qo, g});
    const Eigen::VectorXd a = features_of(z, qo, g);
    const Eigen::VectorXd b = features_of(moved.state, moved.qo, moved.g);
    EXPECT_LT(testing::rel_diff(a, b), 1e-12);
  }
  EXPECT_GT(reflections, 20);
}

TEST(ScalarFeatures, TranslationInvariant) {
  std::mt19937_64 rng(22);
  const PhaseState z = testing::random_state(rng);
  const Vec3 qo = testing::random_vec(rng), g(0, 0, -9.8), w(5, -3, 2);
  const Configuration moved = act(Orthogonal3::identity(), w, {z, qo, g});
  EXPECT_LT(testing::rel_diff(features_of(z, qo, g), features_of(moved.state, moved.qo, g)),
            1e-14);
}

TEST(ScalarFeatures, BatchedMatchesPlain) {
  std::mt19937_64 rng(23);
  const Vec3 qo(0.2, 0.1, -0.3), g(0, 1, -9.8);
  Eigen::MatrixXd states(kStateDim, 5);
  for (int c = 0; c < 5; ++c) states.col(c) = testing::random_state(rng).to_vector();
  for (const TransformSet& ts : {default_transforms(), TransformSet{Transform::SqrtAbs}}) {
    ad::Tape tape;
    const ad::Var f = scalar_features(edge_matrix(tape.leaf(states), qo, g), ts);
    ASSERT_EQ(f.rows(), feature_dim(ts));
    for (int c = 0; c < 5; ++c) {
      const Eigen::VectorXd plain = scalar_features(
          edge_vectors(PhaseState::from_vector(states.col(c)), qo, g), ts);
      EXPECT_LT(testing::rel_diff(f.value().col(c), plain), 1e-14);
    }
  }
}

TEST(ScalarFeatures, SwappingEdgesPermutesPairs) {
  std::mt19937_64 rng(24);
  EdgeSet e;
  for (Vec3& v : e.e) v = testing::random_vec(rng);
  EdgeSet swapped = e;
  std::swap(swapped.e[3], swapped.e[4]);
  const TransformSet ts = default_transforms();
  const Eigen::VectorXd a = scalar_features(e, ts), b = scalar_features(swapped, ts);
  const auto& pairs = feature_pairs();
  const auto sigma = [](int i) { return i == 3 ? 4 : i == 4 ? 3 : i; };
  for (int k = 0; k < kNumPairs; ++k) {
    const int i = sigma(pairs[k].first), j = sigma(pairs[k].second);
    const auto target = std::make_pair(std::min(i, j), std::max(i, j));
    int m = 0;
    while (pairs[m] != target) ++m;
    for (int t = 0; t < 2; ++t) EXPECT_EQ(b(2 * m + t), a(2 * k + t)) << k;
  }
}

TEST(Transforms, ParseAndPrint) {
  EXPECT_EQ(parse_transform("identity"), Transform::Identity);
  EXPECT_EQ(parse_transform(to_string(Transform::SqrtAbs)), Transform::SqrtAbs);
  EXPECT_THROW(parse_transform("cube"), std::invalid_argument);
}

}  // namespace
}  // namespace scalardyn
