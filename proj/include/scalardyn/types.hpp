#pragma once

#include <Eigen/Core>


namespace scalardyn {

template <typename Scalar>
using Vec3T = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3T = Eigen::Matrix<Scalar, 3, 3>;

using Vec3 = Vec3T<double>;
using Mat3 = Mat3T<double>;

inline constexpr int kStateDim = 12;

template <typename Scalar>
using StateVectorT = Eigen::Matrix<Scalar, kStateDim, 1>;
using StateVector = StateVectorT<double>;

/// Flattened as (q1, q2, p1, p2); every flat layout in the project uses this
/// order, including the batch matrices (one column per trajectory).
template <typename Scalar>
struct PhaseStateT {
  Vec3T<Scalar> q1 = Vec3T<Scalar>::Zero();
  Vec3T<Scalar> q2 = Vec3T<Scalar>::Zero();
  Vec3T<Scalar> p1 = Vec3T<Scalar>::Zero();
  Vec3T<Scalar> p2 = Vec3T<Scalar>::Zero();

  static PhaseStateT from_vector(const StateVectorT<Scalar>& z) {
    return {z.template segment<3>(0), z.template segment<3>(3),
            z.template segment<3>(6), z.template segment<3>(9)};
  }

  StateVectorT<Scalar> to_vector() const {
    StateVectorT<Scalar> z;
    z << q1, q2, p1, p2;
    return z;
  }

  bool all_finite() const { return to_vector().allFinite(); }

  friend bool operator==(const PhaseStateT&, const PhaseStateT&) = default;
};

using PhaseState = PhaseStateT<double>;

}  // namespace scalardyn
