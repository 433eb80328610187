#pragma once

#include <cmath>
#include <stdexcept>

#include "scalardyn/geometry.hpp"
#include "scalardyn/types.hpp"

namespace scalardyn {

/// Springy spherical double pendulum: pivot qo, spring 1 between the pivot
/// and mass 1, spring 2 between the two masses, uniform gravity g.
struct SystemParams {
  double m1 = 1.0;
  double m2 = 1.0;
  double k1 = 10.0;
  double k2 = 10.0;
  double l1 = 1.0;
  double l2 = 1.0;
  Vec3 qo = Vec3::Zero();
  Vec3 g = Vec3(0.0, 0.0, -9.8);

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  friend bool operator==(const SystemParams&, const SystemParams&) = default;
};

/// Raised when a spring has zero length and its force direction is undefined.
class CoincidentPointError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Total energy T + U.
template <typename Scalar>
Scalar hamiltonian(const SystemParams& params, const PhaseStateT<Scalar>& z) {
  const Vec3T<Scalar> qo = params.qo.cast<Scalar>();
  const Vec3T<Scalar> g = params.g.cast<Scalar>();
  const Scalar m1(params.m1), m2(params.m2), k1(params.k1), k2(params.k2);
  const Scalar l1(params.l1), l2(params.l2);
  using std::sqrt;

  const Scalar kinetic = z.p1.squaredNorm() / (Scalar(2) * m1) +
                         z.p2.squaredNorm() / (Scalar(2) * m2);
  const Scalar stretch1 = sqrt((z.q1 - qo).squaredNorm()) - l1;
  const Scalar stretch2 = sqrt((z.q2 - z.q1).squaredNorm()) - l2;
  const Scalar potential = Scalar(0.5) * k1 * stretch1 * stretch1 +
                           Scalar(0.5) * k2 * stretch2 * stretch2 -
                           m1 * g.dot(z.q1 - qo) - m2 * g.dot(z.q2 - qo);
  return kinetic + potential;
}

/// Hamilton's equations (dq/dt = p/m, dp/dt = -dU/dq) from the hand-derived
/// gradient. The result is a tangent laid out like a PhaseState.
PhaseState true_dynamics(const SystemParams& params, const PhaseState& z);

StateVector true_dynamics(const SystemParams& params, const StateVector& z);

/// Static equilibrium hanging along g (along -z when g = 0).
PhaseState equilibrium_state(const SystemParams& params);

}  // namespace scalardyn
