#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace scalardyn {

enum class IntegratorMethod { RK4 };

struct IntegratorConfig {
  IntegratorMethod method = IntegratorMethod::RK4;
  double step = 1e-3;
  int substeps_per_label = 100;

  /// Substep count that divides `spacing` into steps no longer than `step`.
  static IntegratorConfig for_spacing(double spacing, double step) {
    IntegratorConfig c;
    c.step = step;
    c.substeps_per_label = std::max(1, static_cast<int>(std::ceil(spacing / step - 1e-9)));
    return c;
  }

  void validate() const {
    if (!(step > 0.0) || !std::isfinite(step)) {
      throw std::invalid_argument("integrator.step must be positive");
    }
    if (substeps_per_label < 1) {
      throw std::invalid_argument("integrator.substeps_per_label must be >= 1");
    }
  }
};

/// Classical fourth-order Runge-Kutta step. `State` needs `State + State` and
/// `double * State`; this covers Eigen vectors/matrices and ad::Var.
template <typename State, typename Field>
State rk4_step(Field&& field, const State& z, double t, double h) {
  const double half = 0.5 * h;
  const State k1 = field(z, t);
  const State k2 = field(State(z + half * k1), t + half);
  const State k3 = field(State(z + half * k2), t + half);
  const State k4 = field(State(z + h * k3), t + h);
  return State(z + (h / 6.0) * State(State(k1 + k4) + 2.0 * State(k2 + k3)));
}

/// States at every entry of `times`; consecutive labels are joined by
/// `substeps` equal RK4 steps. out[0] is z0 itself.
template <typename State, typename Field>
std::vector<State> rollout(Field&& field, const State& z0, std::span<const double> times,
                           int substeps) {
  if (times.empty()) throw std::invalid_argument("rollout: empty time grid");
  if (substeps < 1) throw std::invalid_argument("rollout: substeps must be >= 1");
  for (std::size_t j = 1; j < times.size(); ++j) {
    if (!(times[j] > times[j - 1])) {
      throw std::invalid_argument("rollout: times must be strictly increasing (index " +
                                  std::to_string(j) + ")");
    }
  }
  std::vector<State> out;
  out.reserve(times.size());
  out.push_back(z0);
  for (std::size_t j = 1; j < times.size(); ++j) {
    const double h = (times[j] - times[j - 1]) / substeps;
    State z = out.back();
    for (int s = 0; s < substeps; ++s) {
      z = rk4_step(field, z, times[j - 1] + s * h, h);
    }
    out.push_back(std::move(z));
  }
  return out;
}

template <typename State, typename Field>
std::vector<State> rollout(Field&& field, const State& z0, std::span<const double> times,
                           const IntegratorConfig& config) {
  config.validate();
  return rollout(std::forward<Field>(field), z0, times, config.substeps_per_label);
}

}  // namespace scalardyn
