#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "scalardyn/integrate.hpp"
#include "scalardyn/physics.hpp"

namespace scalardyn {

struct DatasetConfig {
  int n_trajectories = 500;
  int n_labels = 5;
  double label_spacing = 0.1;
  std::uint64_t seed = 0;
  double init_position_spread = 0.5;
  double init_momentum_spread = 1.0;

  void validate() const;
  std::vector<double> times() const;

  friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

struct TrajectoryRecord {
  int trajectory_id = 0;
  std::vector<double> times;
  std::vector<PhaseState> states;

  friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

struct Dataset {
  SystemParams params;
  DatasetConfig config;
  IntegratorConfig integrator;
  std::vector<TrajectoryRecord> records;
};

/// Records [0, 80%) train, [80%, 100%) test, by position (= trajectory_id).
struct DatasetSplit {
  std::span<const TrajectoryRecord> train;
  std::span<const TrajectoryRecord> test;
};
DatasetSplit split_dataset(const Dataset& dataset);

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
/// Truncated or tampered file.
class DatasetIntegrityError : public DatasetError {
 public:
  using DatasetError::DatasetError;
};
class DatasetVersionError : public DatasetError {
 public:
  using DatasetError::DatasetError;
};

inline constexpr int kDatasetSchemaVersion = 1;

/// Independent generator for trajectory `id` of a dataset seeded by `seed`.
std::mt19937_64 trajectory_stream(std::uint64_t seed, int id);

/// Equilibrium plus independent Gaussian jitter on every position and
/// momentum component; redraws while a spring has zero length.
PhaseState sample_initial_state(std::mt19937_64& rng, const SystemParams& params,
                                const DatasetConfig& config);

/// Exact-dynamics rollouts at times 0, dt, ..., T dt.
Dataset generate_dataset(const SystemParams& params, const DatasetConfig& config,
                         const IntegratorConfig& integrator);

/// Ground-truth rollout of the exact system; used for datasets and evaluation.
std::vector<PhaseState> true_rollout(const SystemParams& params, const PhaseState& z0,
                                     std::span<const double> times,
                                     const IntegratorConfig& integrator);

nlohmann::json params_to_json(const SystemParams& p);
SystemParams params_from_json(const nlohmann::json& j);
nlohmann::json dataset_config_to_json(const DatasetConfig& c);
DatasetConfig dataset_config_from_json(const nlohmann::json& j);
nlohmann::json integrator_to_json(const IntegratorConfig& c);
IntegratorConfig integrator_from_json(const nlohmann::json& j);

/// Serialized document; deterministic for a given dataset.
std::string dataset_to_string(const Dataset& dataset);
Dataset dataset_from_string(const std::string& text);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace scalardyn
