#pragma once

#include <cstdint>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "scalardyn/types.hpp"

namespace scalardyn {

template <typename Scalar>
Scalar dot(const Vec3T<Scalar>& a, const Vec3T<Scalar>& b) {
  return a.dot(b);
}

template <typename Scalar>
Vec3T<Scalar> cross(const Vec3T<Scalar>& a, const Vec3T<Scalar>& b) {
  return a.cross(b);
}

/// An element of O(3). Only constructible from a matrix that passes the
/// orthogonality check, so holders can rely on R^T R = I.
class Orthogonal3 {
 public:
  static constexpr double kTolerance = 1e-12;

  Orthogonal3() : matrix_(Mat3::Identity()) {}

  /// Throws std::invalid_argument if `m` is not orthogonal within kTolerance.
  explicit Orthogonal3(const Mat3& m);

  static Orthogonal3 identity() { return Orthogonal3(); }

  const Mat3& matrix() const { return matrix_; }
  double determinant() const { return matrix_.determinant(); }

  Vec3 operator*(const Vec3& v) const { return matrix_ * v; }
  Orthogonal3 operator*(const Orthogonal3& other) const;

 private:
  struct Unchecked {};
  Orthogonal3(const Mat3& m, Unchecked) : matrix_(m) {}

  Mat3 matrix_;
};

/// Seeded draw from O(3): QR of a Gaussian matrix with the sign convention
/// fixed, then one column flipped with probability 1/2 so both components
/// are covered.
Orthogonal3 sample_orthogonal(std::uint64_t seed);

/// A phase state together with the two external vectors it is paired with.
struct Configuration {
  PhaseState state;
  Vec3 qo = Vec3::Zero();
  Vec3 g = Vec3::Zero();
};

/// x -> R x + w applied to a configuration: positions and the pivot are
/// rotated and translated, momenta and gravity are only rotated.
Configuration act(const Orthogonal3& rotation, const Vec3& shift,
                  const Configuration& config);

}  // namespace scalardyn
