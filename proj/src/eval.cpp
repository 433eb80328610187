#include "scalardyn/eval.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "scalardyn/integrate.hpp"

namespace scalardyn {

double angular_momentum_proj(const PhaseState& state, const Vec3& g) {
  const double norm = g.norm();
  if (!(norm > 0.0)) throw std::invalid_argument("angular_momentum_proj: zero gravity vector");
  const Vec3 l = cross(state.q1, state.p1) + cross(state.q2, state.p2);
  return l.dot(g) / norm;
}

double state_rel_err(const PhaseState& pred, const PhaseState& truth) {
  const StateVector a = pred.to_vector();
  const StateVector b = truth.to_vector();
  const double denom = a.norm() + b.norm();
  if (denom == 0.0) return 0.0;
  return (a - b).norm() / denom;
}

double geometric_mean(std::span<const double> errors, double floor) {
  if (errors.empty()) throw std::invalid_argument("geometric_mean: empty input");
  double acc = 0.0;
  for (double e : errors) {
    if (e < 0.0) throw std::invalid_argument("geometric_mean: negative error");
    acc += std::log(std::max(e, floor));
  }
  return std::exp(acc / static_cast<double>(errors.size()));
}

std::vector<double> EvalConfig::times() const {
  std::vector<double> t(horizon + 1);
  for (int j = 0; j <= horizon; ++j) t[j] = j * label_spacing;
  return t;
}

void EvalConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("eval.horizon must be >= 1");
  if (!(label_spacing > 0.0)) throw std::invalid_argument("eval.label_spacing must be > 0");
  if (model_substeps < 1) throw std::invalid_argument("eval.model_substeps must be >= 1");
  ground_truth.validate();
}

GroundTruth compute_ground_truth(const SystemParams& params,
                                 std::span<const TrajectoryRecord> test_records,
                                 const EvalConfig& config) {
  config.validate();
  GroundTruth gt;
  gt.times = config.times();
  for (const TrajectoryRecord& rec : test_records) {
    gt.trajectory_ids.push_back(rec.trajectory_id);
    try {
      gt.paths.push_back(true_rollout(params, rec.states.at(0), gt.times, config.ground_truth));
      gt.failures.emplace_back();
    } catch (const std::exception& e) {
      gt.paths.emplace_back();
      gt.failures.emplace_back(e.what());
    }
  }
  return gt;
}

std::vector<double> RolloutMetrics::step_state_err() const {
  if (trajectories.empty()) return {};
  std::vector<double> out(trajectories[0].state_rel_err.size());
  std::vector<double> column(trajectories.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
      column[i] = trajectories[i].state_rel_err[j];
    }
    out[j] = j == 0 ? 0.0 : geometric_mean(column);
  }
  return out;
}

std::vector<double> RolloutMetrics::step_lperp_err() const {
  if (trajectories.empty()) return {};
  std::vector<double> out(trajectories[0].lperp_rel_err.size());
  std::vector<double> column(trajectories.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
      column[i] = trajectories[i].lperp_rel_err[j];
    }
    out[j] = j == 0 ? 0.0 : geometric_mean(column);
  }
  return out;
}

std::vector<double> RolloutMetrics::step_lperp_err_mean() const {
  if (trajectories.empty()) return {};
  std::vector<double> out(trajectories[0].lperp_rel_err.size(), 0.0);
  for (const TrajectoryMetrics& t : trajectories) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += t.lperp_rel_err[j];
  }
  for (double& v : out) v /= static_cast<double>(trajectories.size());
  return out;
}

RolloutMetrics evaluate(const DynamicsModel& model, const SystemParams& params,
                        const GroundTruth& truth, const EvalConfig& config) {
  return evaluate_field(
      [&](const Eigen::MatrixXd& z) { return model.dynamics(z, params.qo, params.g); }, params,
      truth, config);
}

RolloutMetrics evaluate_field(const BatchField& field_fn, const SystemParams& params,
                              const GroundTruth& truth, const EvalConfig& config) {
  config.validate();
  RolloutMetrics m;
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < truth.paths.size(); ++i) {
    if (truth.paths[i].empty()) {
      m.failed_ids.push_back(truth.trajectory_ids[i]);
    } else {
      usable.push_back(i);
    }
  }
  if (usable.empty()) throw std::runtime_error("evaluate: no usable test trajectories");

  Eigen::MatrixXd z0(kStateDim, static_cast<Eigen::Index>(usable.size()));
  for (std::size_t c = 0; c < usable.size(); ++c) z0.col(c) = truth.paths[usable[c]][0].to_vector();
  auto field = [&](const Eigen::MatrixXd& z, double) { return field_fn(z); };
  const std::vector<Eigen::MatrixXd> pred =
      rollout(field, z0, std::span<const double>(truth.times), config.model_substeps);

  std::vector<double> pooled;
  const std::size_t n_steps = truth.times.size();
  for (std::size_t c = 0; c < usable.size(); ++c) {
    const std::vector<PhaseState>& path = truth.paths[usable[c]];
    bool finite = true;
    for (std::size_t j = 0; j < n_steps; ++j) finite = finite && pred[j].col(c).allFinite();
    if (!finite) {
      m.failed_ids.push_back(truth.trajectory_ids[usable[c]]);
      continue;
    }
    TrajectoryMetrics t;
    t.trajectory_id = truth.trajectory_ids[usable[c]];
    const double l0 = angular_momentum_proj(path[0], params.g);
    for (std::size_t j = 0; j < n_steps; ++j) {
      const PhaseState p = PhaseState::from_vector(pred[j].col(c));
      t.state_rel_err.push_back(state_rel_err(p, path[j]));
      const double dl = std::abs(angular_momentum_proj(p, params.g) - l0);
      t.lperp_rel_err.push_back(std::abs(l0) < kLperpAbsoluteThreshold ? dl : dl / std::abs(l0));
    }
    const std::span<const double> s(t.state_rel_err);
    const std::span<const double> l(t.lperp_rel_err);
    t.state_geomean = geometric_mean(s.subspan(1));
    t.lperp_geomean = geometric_mean(l.subspan(1));
    pooled.insert(pooled.end(), s.begin() + 1, s.end());
    m.trajectories.push_back(std::move(t));
  }
  if (m.trajectories.empty()) throw std::runtime_error("evaluate: every model rollout diverged");

  std::vector<double> per_traj;
  double lperp = 0.0;
  for (const TrajectoryMetrics& t : m.trajectories) {
    per_traj.push_back(t.state_geomean);
    lperp += t.lperp_geomean;
  }
  const SeedAggregate agg = aggregate(per_traj);
  m.state_geomean_mean = agg.mean;
  m.state_geomean_std = agg.std;
  m.state_geomean_pooled = geometric_mean(pooled);
  m.lperp_geomean_mean = lperp / static_cast<double>(m.trajectories.size());
  return m;
}

std::string per_step_csv(const RolloutMetrics& metrics, std::span<const double> times) {
  const std::vector<double> s = metrics.step_state_err();
  const std::vector<double> l = metrics.step_lperp_err();
  std::ostringstream os;
  os.precision(17);
  os << "t,state_rel_err,L_perp_rel_err\n";
  for (std::size_t j = 0; j < s.size() && j < times.size(); ++j) {
    os << times[j] << ',' << s[j] << ',' << l[j] << '\n';
  }
  return os.str();
}

SeedAggregate aggregate(std::span<const double> values) {
  SeedAggregate a;
  if (values.empty()) return a;
  for (double v : values) a.mean += v;
  a.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return a;
}

nlohmann::json summary_row(ModelKind kind, std::span<const RolloutMetrics> per_seed) {
  std::vector<double> geo, pooled, lperp;
  nlohmann::json seeds = nlohmann::json::array();
  for (const RolloutMetrics& m : per_seed) {
    geo.push_back(m.state_geomean_mean);
    pooled.push_back(m.state_geomean_pooled);
    lperp.push_back(m.lperp_geomean_mean);
    seeds.push_back({{"seed", m.seed},
                     {"state_rel_err_geomean", m.state_geomean_mean},
                     {"state_rel_err_geomean_std_across_trajectories", m.state_geomean_std},
                     {"state_rel_err_geomean_pooled", m.state_geomean_pooled},
                     {"L_perp_rel_err_geomean", m.lperp_geomean_mean},
                     {"n_trajectories", m.trajectories.size()},
                     {"n_failed", m.failed_ids.size()}});
  }
  auto cell = [](std::span<const double> v) {
    const SeedAggregate a = aggregate(v);
    return nlohmann::json{{"mean", a.mean}, {"std", a.std}};
  };
  return {{"model", std::string(to_string(kind))},
          {"state_rel_err_geomean", cell(geo)},
          {"state_rel_err_geomean_pooled", cell(pooled)},
          {"L_perp_rel_err_geomean", cell(lperp)},
          {"per_seed", seeds}};
}

}  // namespace scalardyn
