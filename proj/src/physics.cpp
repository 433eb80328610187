#include "scalardyn/physics.hpp"

#include <string>

namespace scalardyn {

void SystemParams::validate() const {
  auto require = [](bool ok, const char* field, const char* what) {
    if (!ok) {
      throw std::invalid_argument(std::string("system.") + field + " " + what);
    }
  };
  require(std::isfinite(m1) && m1 > 0.0, "m1", "must be positive");
  require(std::isfinite(m2) && m2 > 0.0, "m2", "must be positive");
  require(std::isfinite(k1) && k1 > 0.0, "k1", "must be positive");
  require(std::isfinite(k2) && k2 > 0.0, "k2", "must be positive");
  require(std::isfinite(l1) && l1 >= 0.0, "l1", "must be nonnegative");
  require(std::isfinite(l2) && l2 >= 0.0, "l2", "must be nonnegative");
  require(qo.allFinite(), "qo", "must be finite");
  require(g.allFinite(), "g", "must be finite");
}

PhaseState true_dynamics(const SystemParams& params, const PhaseState& z) {
  const Vec3 d1 = z.q1 - params.qo;
  const Vec3 d2 = z.q2 - z.q1;
  const double r1 = d1.norm();
  const double r2 = d2.norm();
  if (r1 == 0.0) {
    throw CoincidentPointError("true_dynamics: mass 1 coincides with pivot");
  }
  if (r2 == 0.0) {
    throw CoincidentPointError("true_dynamics: masses 1 and 2 coincide");
  }
  const Vec3 spring1 = params.k1 * (r1 - params.l1) / r1 * d1;
  const Vec3 spring2 = params.k2 * (r2 - params.l2) / r2 * d2;

  PhaseState dz;
  dz.q1 = z.p1 / params.m1;
  dz.q2 = z.p2 / params.m2;
  dz.p1 = -spring1 + spring2 + params.m1 * params.g;
  dz.p2 = -spring2 + params.m2 * params.g;
  return dz;
}

StateVector true_dynamics(const SystemParams& params, const StateVector& z) {
  return true_dynamics(params, PhaseState::from_vector(z)).to_vector();
}

PhaseState equilibrium_state(const SystemParams& params) {
  const double g_norm = params.g.norm();
  const Vec3 down = g_norm > 0.0 ? Vec3(params.g / g_norm) : Vec3(0.0, 0.0, -1.0);
  PhaseState z;
  z.q1 = params.qo + down * (params.l1 + (params.m1 + params.m2) * g_norm / params.k1);
  z.q2 = z.q1 + down * (params.l2 + params.m2 * g_norm / params.k2);
  return z;
}

}  // namespace scalardyn
