#include "scalardyn/scalars.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace scalardyn {

namespace {

using ad::Matrix;

double apply(Transform t, double x) {
  switch (t) {
    case Transform::Identity:
      return x;
    case Transform::SqrtAbs:
      return std::sqrt(std::abs(x));
  }
  return x;
}

// Edge map E = M z + offset, offset = (-qo, -qo, 0, 0, 0, g).
const std::shared_ptr<const Matrix>& edge_map() {
  static const auto m = [] {
    Matrix k = Matrix::Zero(kEdgeRows, kStateDim);
    const Eigen::Matrix3d id = Eigen::Matrix3d::Identity();
    k.block<3, 3>(0, 0) = id;   // q1
    k.block<3, 3>(3, 3) = id;   // q2
    k.block<3, 3>(6, 0) = id;   // q1
    k.block<3, 3>(6, 3) = -id;  // -q2
    k.block<3, 3>(9, 6) = id;   // p1
    k.block<3, 3>(12, 9) = id;  // p2
    return std::make_shared<const Matrix>(std::move(k));
  }();
  return m;
}

struct PairMaps {
  std::shared_ptr<const Matrix> left;   // 63 x 18, picks e_i
  std::shared_ptr<const Matrix> right;  // 63 x 18, picks e_j
  std::shared_ptr<const Matrix> reduce; // 21 x 63, sums the 3 components
};

const PairMaps& pair_maps() {
  static const PairMaps maps = [] {
    Matrix left = Matrix::Zero(3 * kNumPairs, kEdgeRows);
    Matrix right = Matrix::Zero(3 * kNumPairs, kEdgeRows);
    Matrix reduce = Matrix::Zero(kNumPairs, 3 * kNumPairs);
    const auto& pairs = feature_pairs();
    for (int p = 0; p < kNumPairs; ++p) {
      for (int d = 0; d < 3; ++d) {
        left(3 * p + d, 3 * pairs[p].first + d) = 1.0;
        right(3 * p + d, 3 * pairs[p].second + d) = 1.0;
        reduce(p, 3 * p + d) = 1.0;
      }
    }
    return PairMaps{std::make_shared<const Matrix>(std::move(left)),
                    std::make_shared<const Matrix>(std::move(right)),
                    std::make_shared<const Matrix>(std::move(reduce))};
  }();
  return maps;
}

// Interleaves transform-major blocks into pair-major order.
std::shared_ptr<const Matrix> interleave_map(int num_transforms) {
  const int n = kNumPairs * num_transforms;
  Matrix perm = Matrix::Zero(n, n);
  for (int t = 0; t < num_transforms; ++t) {
    for (int p = 0; p < kNumPairs; ++p) perm(p * num_transforms + t, t * kNumPairs + p) = 1.0;
  }
  return std::make_shared<const Matrix>(std::move(perm));
}

}  // namespace

TransformSet default_transforms() { return {Transform::Identity, Transform::SqrtAbs}; }

std::string_view to_string(Transform t) {
  switch (t) {
    case Transform::Identity:
      return "identity";
    case Transform::SqrtAbs:
      return "sqrt_abs";
  }
  return "unknown";
}

Transform parse_transform(std::string_view name) {
  if (name == "identity") return Transform::Identity;
  if (name == "sqrt_abs") return Transform::SqrtAbs;
  throw std::invalid_argument("unknown scalar transform '" + std::string(name) + "'");
}

const std::array<std::pair<int, int>, kNumPairs>& feature_pairs() {
  static const auto pairs = [] {
    std::array<std::pair<int, int>, kNumPairs> out{};
    int p = 0;
    for (int i = 0; i < kNumEdges; ++i) {
      for (int j = i; j < kNumEdges; ++j) out[p++] = {i, j};
    }
    return out;
  }();
  return pairs;
}

EdgeSet edge_vectors(const PhaseState& state, const Vec3& qo, const Vec3& g) {
  const Vec3 e1 = state.q1 - qo;
  const Vec3 e2 = state.q2 - qo;
  return EdgeSet{{e1, e2, Vec3(state.q1 - state.q2), state.p1, state.p2, g}};
}

Eigen::VectorXd scalar_features(const EdgeSet& edges, const TransformSet& transforms) {
  const int nt = static_cast<int>(transforms.size());
  Eigen::VectorXd out(kNumPairs * nt);
  const auto& pairs = feature_pairs();
  for (int p = 0; p < kNumPairs; ++p) {
    const double s = edges.e[pairs[p].first].dot(edges.e[pairs[p].second]);
    for (int t = 0; t < nt; ++t) out(p * nt + t) = apply(transforms[t], s);
  }
  return out;
}

ad::Var edge_matrix(ad::Var states, const Vec3& qo, const Vec3& g) {
  if (states.rows() != kStateDim) throw std::invalid_argument("edge_matrix: expected 12 rows");
  Matrix offset = Matrix::Zero(kEdgeRows, 1);
  offset.block<3, 1>(0, 0) = -qo;
  offset.block<3, 1>(3, 0) = -qo;
  offset.block<3, 1>(15, 0) = g;
  ad::Tape& tape = *states.tape();
  return ad::add_bias(ad::left_multiply(edge_map(), states), tape.constant(std::move(offset)));
}

ad::Var scalar_features(ad::Var edges, const TransformSet& transforms) {
  if (edges.rows() != kEdgeRows) throw std::invalid_argument("scalar_features: expected 18 rows");
  if (transforms.empty()) throw std::invalid_argument("scalar_features: empty transform set");
  const PairMaps& maps = pair_maps();
  const ad::Var products =
      ad::cwise_mul(ad::left_multiply(maps.left, edges), ad::left_multiply(maps.right, edges));
  const ad::Var gram = ad::left_multiply(maps.reduce, products);

  auto transformed = [&](Transform t) {
    return t == Transform::Identity ? gram : ad::sqrt_abs(gram);
  };
  ad::Var stacked = transformed(transforms[0]);
  if (transforms.size() == 1) return stacked;
  for (std::size_t t = 1; t < transforms.size(); ++t) {
    stacked = ad::vstack(stacked, transformed(transforms[t]));
  }
  static thread_local std::vector<std::shared_ptr<const Matrix>> interleave_cache;
  const std::size_t nt = transforms.size();
  if (interleave_cache.size() <= nt) interleave_cache.resize(nt + 1);
  if (!interleave_cache[nt]) interleave_cache[nt] = interleave_map(static_cast<int>(nt));
  return ad::left_multiply(interleave_cache[nt], stacked);
}

}  // namespace scalardyn
