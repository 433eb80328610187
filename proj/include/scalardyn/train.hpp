#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "scalardyn/dataset.hpp"
#include "scalardyn/models.hpp"

namespace scalardyn {

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 500;
  int batch_size = 100;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  int substeps_per_label = 10;
  /// Tail fraction of the training records used for checkpoint selection.
  double holdout_fraction = 0.1;
  /// Records per recording when accumulating a minibatch gradient; bounds
  /// tape memory without changing the result beyond summation order.
  int chunk_size = 50;

  void validate() const;
};

struct AdamState {
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  long step = 0;

  explicit AdamState(Eigen::Index n = 0)
      : first_moment(Eigen::VectorXd::Zero(n)), second_moment(Eigen::VectorXd::Zero(n)) {}
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state,
               const TrainConfig& config);

/// Minibatch in column layout: initial states and per-label targets (12 x B).
struct Batch {
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> targets;  // targets[0] is the initial state
};

/// All records must share one time grid.
Batch make_batch(std::span<const TrajectoryRecord> records);

/// Sum over records and labels of ||z(t_j) - zhat(t_j)||^2, zhat rolled out
/// from the recorded initial state with `substeps` RK4 steps per label gap.
double loss(const DynamicsModel& model, std::span<const TrajectoryRecord> records,
            const Vec3& qo, const Vec3& g, int substeps);

struct LossGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;
};

/// Loss and its parameter gradient by reverse mode through the unrolled
/// solver, accumulated over chunks of `chunk_size` records in record order.
LossGradient loss_and_gradient(const DynamicsModel& model,
                               std::span<const TrajectoryRecord> records, const Vec3& qo,
                               const Vec3& g, int substeps, int chunk_size);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;    // mean per record over the epoch's minibatches
  double holdout_loss = 0.0;  // mean per record
  double seconds = 0.0;       // cumulative wall clock
  std::uint64_t kinks = 0;    // autodiff kink counter at the end of the epoch
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double best_holdout_loss = 0.0;

  /// epoch,train_loss,holdout_loss,seconds,kinks
  std::string to_csv() const;
};

class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainResult {
  DynamicsModel model;  // parameters with the lowest held-out loss
  TrainHistory history;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Minibatch Adam over `records` (the training split). The last
/// holdout_fraction of them only scores checkpoints. Deterministic given the
/// inputs. Throws NumericalFailure on a non-finite loss or gradient.
TrainResult train(DynamicsModel model, std::span<const TrajectoryRecord> records,
                  const Vec3& qo, const Vec3& g, const TrainConfig& config,
                  const EpochCallback& on_epoch = nullptr);

}  // namespace scalardyn
