#pragma once

// Invariant scalar features. Inputs are reduced to six translation-free edge
// vectors, and the features are transforms of their pairwise inner products.
//
// Feature ordering (version 1): pairs (i, j) with i <= j in row-major order
// over the 6 edges, i.e. (0,0) (0,1) ... (0,5) (1,1) ... (5,5); within each
// pair, one entry per transform in TransformSet order. Entry index is
// pair_index * |transforms| + transform_index.

#include <array>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "scalardyn/autodiff.hpp"
#include "scalardyn/types.hpp"

namespace scalardyn {

inline constexpr int kNumEdges = 6;
inline constexpr int kNumPairs = kNumEdges * (kNumEdges + 1) / 2;
inline constexpr int kEdgeRows = 3 * kNumEdges;
inline constexpr int kFeatureOrderingVersion = 1;

/// e1 = q1 - qo, e2 = q2 - qo, e3 = q1 - q2, e4 = p1, e5 = p2, e6 = g.
struct EdgeSet {
  std::array<Vec3, kNumEdges> e;
};

enum class Transform { Identity, SqrtAbs };
using TransformSet = std::vector<Transform>;

/// {x, sqrt|x|}.
TransformSet default_transforms();

std::string_view to_string(Transform t);
/// Throws std::invalid_argument for unknown names.
Transform parse_transform(std::string_view name);

inline int feature_dim(const TransformSet& transforms) {
  return kNumPairs * static_cast<int>(transforms.size());
}

/// The (i, j) edge pair behind each pair index.
const std::array<std::pair<int, int>, kNumPairs>& feature_pairs();

EdgeSet edge_vectors(const PhaseState& state, const Vec3& qo, const Vec3& g);

Eigen::VectorXd scalar_features(const EdgeSet& edges, const TransformSet& transforms);

// Batched forms on a tape; one column per configuration.

/// states: 12 x B in (q1, q2, p1, p2) layout. Returns the 18 x B stack of edges.
ad::Var edge_matrix(ad::Var states, const Vec3& qo, const Vec3& g);

/// edges: 18 x B. Returns feature_dim(transforms) x B.
ad::Var scalar_features(ad::Var edges, const TransformSet& transforms);

}  // namespace scalardyn
