#include "scalardyn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "scalardyn/integrate.hpp"

namespace scalardyn {

namespace {

using ad::Var;

// Squared-error rollout loss of one chunk recorded on `tape`.
Var record_loss(ad::Tape& tape, const DynamicsModel& model, const Mlp::Bound& params,
                const Batch& batch, const Vec3& qo, const Vec3& g, int substeps,
                bool differentiable) {
  const Var z0 = tape.constant(batch.targets[0]);
  auto field = [&](const Var& z, double) { return model.dynamics(params, z, qo, g, differentiable); };
  const std::vector<Var> path = rollout(field, z0, std::span<const double>(batch.times), substeps);
  Var total;
  for (std::size_t j = 1; j < path.size(); ++j) {
    const Var diff = path[j] - tape.constant(batch.targets[j]);
    const Var term = ad::dot(diff, diff);
    total = total.valid() ? total + term : term;
  }
  return total.valid() ? total : tape.constant(Eigen::MatrixXd::Zero(1, 1));
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("training.learning_rate must be > 0");
  if (epochs < 1) throw std::invalid_argument("training.epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("training.batch_size must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("training.beta1 out of range");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw std::invalid_argument("training.beta2 out of range");
  if (!(epsilon > 0.0)) throw std::invalid_argument("training.epsilon must be > 0");
  if (substeps_per_label < 1) {
    throw std::invalid_argument("training.substeps_per_label must be >= 1");
  }
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw std::invalid_argument("training.holdout_fraction must be in [0, 1)");
  }
  if (chunk_size < 1) throw std::invalid_argument("training.chunk_size must be >= 1");
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state,
               const TrainConfig& config) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: size mismatch");
  }
  ++state.step;
  state.first_moment = config.beta1 * state.first_moment + (1.0 - config.beta1) * grads;
  state.second_moment =
      config.beta2 * state.second_moment + (1.0 - config.beta2) * grads.array().square().matrix();
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  params.array() -= config.learning_rate * (state.first_moment.array() / c1) /
                    ((state.second_moment.array() / c2).sqrt() + config.epsilon);
}

Batch make_batch(std::span<const TrajectoryRecord> records) {
  if (records.empty()) throw std::invalid_argument("make_batch: no records");
  Batch b;
  b.times = records[0].times;
  const auto n_cols = static_cast<Eigen::Index>(records.size());
  b.targets.assign(b.times.size(), Eigen::MatrixXd(kStateDim, n_cols));
  for (Eigen::Index c = 0; c < n_cols; ++c) {
    const TrajectoryRecord& r = records[c];
    if (r.times != b.times || r.states.size() != b.times.size()) {
      throw std::invalid_argument("make_batch: records do not share a time grid");
    }
    for (std::size_t j = 0; j < b.times.size(); ++j) b.targets[j].col(c) = r.states[j].to_vector();
  }
  return b;
}

double loss(const DynamicsModel& model, std::span<const TrajectoryRecord> records,
            const Vec3& qo, const Vec3& g, int substeps) {
  if (records.empty()) return 0.0;
  const Batch batch = make_batch(records);
  ad::Tape tape;
  const Mlp::Bound params = model.mlp().bind(tape);
  return record_loss(tape, model, params, batch, qo, g, substeps, false).value()(0, 0);
}

LossGradient loss_and_gradient(const DynamicsModel& model,
                               std::span<const TrajectoryRecord> records, const Vec3& qo,
                               const Vec3& g, int substeps, int chunk_size) {
  LossGradient out;
  out.gradient = Eigen::VectorXd::Zero(model.parameters().size());
  ad::Tape tape;
  for (std::size_t start = 0; start < records.size(); start += chunk_size) {
    const std::size_t n = std::min<std::size_t>(chunk_size, records.size() - start);
    const Batch batch = make_batch(records.subspan(start, n));
    tape.clear();
    const Mlp::Bound params = model.mlp().bind(tape);
    const Var l = record_loss(tape, model, params, batch, qo, g, substeps, true);
    const std::vector<Var> leaves = params.leaves();
    out.loss += l.value()(0, 0);
    out.gradient += model.mlp().flatten_gradient(tape.gradient(l, leaves));
  }
  return out;
}

std::string TrainHistory::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,train_loss,holdout_loss,seconds,kinks\n";
  for (const EpochStats& e : epochs) {
    os << e.epoch << ',' << e.train_loss << ',' << e.holdout_loss << ',' << e.seconds << ','
       << e.kinks << '\n';
  }
  return os.str();
}

TrainResult train(DynamicsModel model, std::span<const TrajectoryRecord> records,
                  const Vec3& qo, const Vec3& g, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (records.size() < 2) throw std::invalid_argument("train: need at least 2 records");
  auto n_holdout = static_cast<std::size_t>(std::floor(records.size() * config.holdout_fraction));
  if (config.holdout_fraction > 0.0) n_holdout = std::max<std::size_t>(n_holdout, 1);
  const std::span<const TrajectoryRecord> fit = records.first(records.size() - n_holdout);
  const std::span<const TrajectoryRecord> holdout = records.subspan(fit.size());
  const std::span<const TrajectoryRecord> scoring = holdout.empty() ? fit : holdout;

  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(fit.size());
  std::iota(order.begin(), order.end(), 0);

  Eigen::VectorXd params = model.parameters();
  AdamState adam(params.size());
  TrainResult result{model, {}};
  std::vector<TrajectoryRecord> minibatch;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t n = std::min<std::size_t>(config.batch_size, order.size() - start);
      minibatch.clear();
      for (std::size_t i = 0; i < n; ++i) minibatch.push_back(fit[order[start + i]]);
      model.set_parameters(params);
      const LossGradient lg = loss_and_gradient(model, minibatch, qo, g,
                                                config.substeps_per_label, config.chunk_size);
      if (!std::isfinite(lg.loss) || !lg.gradient.allFinite()) {
        throw NumericalFailure("non-finite loss or gradient at epoch " + std::to_string(epoch) +
                               ", batch starting at " + std::to_string(start) +
                               " (loss = " + std::to_string(lg.loss) + ")");
      }
      epoch_loss += lg.loss;
      adam_step(params, lg.gradient, adam, config);
    }
    model.set_parameters(params);
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_loss / static_cast<double>(fit.size());
    stats.holdout_loss = loss(model, scoring, qo, g, config.substeps_per_label) /
                         static_cast<double>(scoring.size());
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    stats.kinks = ad::kink_count();
    if (!std::isfinite(stats.holdout_loss)) {
      throw NumericalFailure("non-finite held-out loss at epoch " + std::to_string(epoch));
    }
    if (result.history.best_epoch < 0 || stats.holdout_loss < result.history.best_holdout_loss) {
      result.history.best_epoch = epoch;
      result.history.best_holdout_loss = stats.holdout_loss;
      result.model.set_parameters(params);
    }
    result.history.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return result;
}

}  // namespace scalardyn
