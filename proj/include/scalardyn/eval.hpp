#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scalardyn/dataset.hpp"
#include "scalardyn/models.hpp"

namespace scalardyn {

/// (q1 x p1 + q2 x p2) . g / |g|. Throws std::invalid_argument when g = 0.
double angular_momentum_proj(const PhaseState& state, const Vec3& g);

/// ||pred - truth|| / (||pred|| + ||truth||) over the flattened state; 0 when
/// both are zero. Always in [0, 1].
double state_rel_err(const PhaseState& pred, const PhaseState& truth);

inline constexpr double kGeometricMeanFloor = 1e-12;

/// exp(mean(log(max(e, floor)))). Throws std::invalid_argument when empty.
double geometric_mean(std::span<const double> errors, double floor = kGeometricMeanFloor);

/// |L(0)| below this switches the L_perp error from relative to absolute.
inline constexpr double kLperpAbsoluteThreshold = 1e-9;

struct EvalConfig {
  int horizon = 150;
  double label_spacing = 0.1;
  /// RK4 substeps per label for the learned models.
  int model_substeps = 10;
  /// Ground-truth integrator.
  IntegratorConfig ground_truth = IntegratorConfig::for_spacing(0.1, 1e-3);

  std::vector<double> times() const;
  void validate() const;
};

/// Exact trajectories of the test initial states over the evaluation grid.
struct GroundTruth {
  std::vector<double> times;
  std::vector<int> trajectory_ids;
  std::vector<std::vector<PhaseState>> paths;  // empty path = integration failed
  std::vector<std::string> failures;
};

GroundTruth compute_ground_truth(const SystemParams& params,
                                 std::span<const TrajectoryRecord> test_records,
                                 const EvalConfig& config);

struct TrajectoryMetrics {
  int trajectory_id = 0;
  std::vector<double> state_rel_err;  // per label, index 0 is t = 0
  std::vector<double> lperp_rel_err;
  double state_geomean = 0.0;  // over labels 1..T
  double lperp_geomean = 0.0;
};

struct RolloutMetrics {
  std::vector<TrajectoryMetrics> trajectories;
  std::vector<int> failed_ids;
  /// Per-trajectory geometric means, then mean and std across trajectories.
  double state_geomean_mean = 0.0;
  double state_geomean_std = 0.0;
  /// One geometric mean pooled over every step of every trajectory.
  double state_geomean_pooled = 0.0;
  double lperp_geomean_mean = 0.0;
  std::uint64_t seed = 0;

  /// Per-step geometric mean across trajectories (plot series).
  std::vector<double> step_state_err() const;
  std::vector<double> step_lperp_err() const;
  /// Per-step arithmetic mean across trajectories.
  std::vector<double> step_lperp_err_mean() const;
};

/// Rolls the model out from each ground-truth initial state, all trajectories
/// in one batch, and scores it label by label.
RolloutMetrics evaluate(const DynamicsModel& model, const SystemParams& params,
                        const GroundTruth& truth, const EvalConfig& config);

/// Tangent of every column of a 12 x B state matrix.
using BatchField = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

/// evaluate() for an arbitrary vector field.
RolloutMetrics evaluate_field(const BatchField& field, const SystemParams& params,
                              const GroundTruth& truth, const EvalConfig& config);

/// "t,state_rel_err,L_perp_rel_err" with per-step geometric means.
std::string per_step_csv(const RolloutMetrics& metrics, std::span<const double> times);

struct SeedAggregate {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation across seeds (0 for one seed)
};
SeedAggregate aggregate(std::span<const double> values);

/// One summary row: a model evaluated once per training seed.
nlohmann::json summary_row(ModelKind kind, std::span<const RolloutMetrics> per_seed);

}  // namespace scalardyn
