#include "scalardyn/dataset.hpp"

#include <string>

#include "scalardyn/io.hpp"

namespace scalardyn {

namespace {

using nlohmann::json;

json vec_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace

void DatasetConfig::validate() const {
  if (n_trajectories < 1) throw std::invalid_argument("dataset.n_trajectories must be >= 1");
  if (n_labels < 1) throw std::invalid_argument("dataset.n_labels must be >= 1");
  if (!(label_spacing > 0.0) || !std::isfinite(label_spacing)) {
    throw std::invalid_argument("dataset.label_spacing must be positive");
  }
  if (!(init_position_spread >= 0.0)) {
    throw std::invalid_argument("dataset.init_position_spread must be >= 0");
  }
  if (!(init_momentum_spread >= 0.0)) {
    throw std::invalid_argument("dataset.init_momentum_spread must be >= 0");
  }
}

std::vector<double> DatasetConfig::times() const {
  std::vector<double> t(n_labels + 1);
  for (int j = 0; j <= n_labels; ++j) t[j] = j * label_spacing;
  return t;
}

DatasetSplit split_dataset(const Dataset& dataset) {
  const std::size_t n = dataset.records.size();
  const std::size_t n_train = (n * 4) / 5;
  const std::span<const TrajectoryRecord> all(dataset.records);
  return {all.first(n_train), all.subspan(n_train)};
}

std::mt19937_64 trajectory_stream(std::uint64_t seed, int id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id), 0x5ca1a75u};
  return std::mt19937_64(seq);
}

PhaseState sample_initial_state(std::mt19937_64& rng, const SystemParams& params,
                                const DatasetConfig& config) {
  const PhaseState eq = equilibrium_state(params);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int attempt = 0; attempt < 100; ++attempt) {
    PhaseState z = eq;
    for (Vec3* v : {&z.q1, &z.q2}) {
      for (int d = 0; d < 3; ++d) (*v)(d) += config.init_position_spread * normal(rng);
    }
    for (Vec3* v : {&z.p1, &z.p2}) {
      for (int d = 0; d < 3; ++d) (*v)(d) += config.init_momentum_spread * normal(rng);
    }
    if ((z.q1 - params.qo).norm() > 0.0 && (z.q2 - z.q1).norm() > 0.0) return z;
  }
  throw DatasetError("sample_initial_state: 100 draws in a row had a zero-length spring");
}

std::vector<PhaseState> true_rollout(const SystemParams& params, const PhaseState& z0,
                                     std::span<const double> times,
                                     const IntegratorConfig& integrator) {
  auto field = [&params](const StateVector& z, double) { return true_dynamics(params, z); };
  const std::vector<StateVector> path = rollout(field, z0.to_vector(), times, integrator);
  std::vector<PhaseState> out;
  out.reserve(path.size());
  for (const StateVector& z : path) out.push_back(PhaseState::from_vector(z));
  return out;
}

Dataset generate_dataset(const SystemParams& params, const DatasetConfig& config,
                         const IntegratorConfig& integrator) {
  params.validate();
  config.validate();
  integrator.validate();
  Dataset ds{params, config, integrator, {}};
  const std::vector<double> times = config.times();
  ds.records.reserve(config.n_trajectories);
  for (int i = 0; i < config.n_trajectories; ++i) {
    std::mt19937_64 rng = trajectory_stream(config.seed, i);
    TrajectoryRecord rec;
    rec.trajectory_id = i;
    rec.times = times;
    try {
      rec.states = true_rollout(params, sample_initial_state(rng, params, config), times,
                                integrator);
    } catch (const std::exception& e) {
      throw DatasetError("trajectory " + std::to_string(i) + ": " + e.what());
    }
    for (const PhaseState& s : rec.states) {
      if (!s.all_finite()) {
        throw DatasetError("trajectory " + std::to_string(i) + ": non-finite state");
      }
    }
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

json params_to_json(const SystemParams& p) {
  return {{"m1", p.m1}, {"m2", p.m2}, {"k1", p.k1}, {"k2", p.k2}, {"l1", p.l1},
          {"l2", p.l2}, {"qo", vec_to_json(p.qo)}, {"g", vec_to_json(p.g)}};
}

SystemParams params_from_json(const json& j) {
  SystemParams p;
  p.m1 = j.at("m1").get<double>();
  p.m2 = j.at("m2").get<double>();
  p.k1 = j.at("k1").get<double>();
  p.k2 = j.at("k2").get<double>();
  p.l1 = j.at("l1").get<double>();
  p.l2 = j.at("l2").get<double>();
  p.qo = vec_from_json(j.at("qo"));
  p.g = vec_from_json(j.at("g"));
  return p;
}

json dataset_config_to_json(const DatasetConfig& c) {
  return {{"n_trajectories", c.n_trajectories},
          {"n_labels", c.n_labels},
          {"label_spacing", c.label_spacing},
          {"seed", c.seed},
          {"init_position_spread", c.init_position_spread},
          {"init_momentum_spread", c.init_momentum_spread}};
}

DatasetConfig dataset_config_from_json(const json& j) {
  DatasetConfig c;
  c.n_trajectories = j.at("n_trajectories").get<int>();
  c.n_labels = j.at("n_labels").get<int>();
  c.label_spacing = j.at("label_spacing").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.init_position_spread = j.at("init_position_spread").get<double>();
  c.init_momentum_spread = j.at("init_momentum_spread").get<double>();
  return c;
}

json integrator_to_json(const IntegratorConfig& c) {
  return {{"method", "rk4"}, {"step", c.step}, {"substeps_per_label", c.substeps_per_label}};
}

IntegratorConfig integrator_from_json(const json& j) {
  if (j.at("method").get<std::string>() != "rk4") {
    throw std::invalid_argument("integrator.method must be rk4");
  }
  IntegratorConfig c;
  c.step = j.at("step").get<double>();
  c.substeps_per_label = j.at("substeps_per_label").get<int>();
  return c;
}

std::string dataset_to_string(const Dataset& dataset) {
  json trajectories = json::array();
  for (const TrajectoryRecord& rec : dataset.records) {
    std::vector<double> flat;
    flat.reserve(rec.states.size() * kStateDim);
    for (const PhaseState& s : rec.states) {
      const StateVector z = s.to_vector();
      flat.insert(flat.end(), z.data(), z.data() + kStateDim);
    }
    trajectories.push_back({{"id", rec.trajectory_id}, {"times", rec.times}, {"states", flat}});
  }
  const std::string payload = trajectories.dump();
  json doc = {{"format", "scalardyn-dataset"},
              {"schema_version", kDatasetSchemaVersion},
              {"params", params_to_json(dataset.params)},
              {"config", dataset_config_to_json(dataset.config)},
              {"integrator", integrator_to_json(dataset.integrator)},
              {"checksum", "fnv1a64:" + to_hex(fnv1a64(payload))},
              {"trajectories", std::move(trajectories)}};
  return doc.dump();
}

Dataset dataset_from_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DatasetIntegrityError(std::string("dataset integrity check failed (truncated or "
                                            "corrupted file): ") + e.what());
  }
  try {
    const int version = doc.at("schema_version").get<int>();
    if (version != kDatasetSchemaVersion) {
      throw DatasetVersionError("dataset schema_version " + std::to_string(version) +
                                " is not the supported version " +
                                std::to_string(kDatasetSchemaVersion));
    }
    const json& trajectories = doc.at("trajectories");
    const std::string expected = "fnv1a64:" + to_hex(fnv1a64(trajectories.dump()));
    if (doc.at("checksum").get<std::string>() != expected) {
      throw DatasetIntegrityError("dataset checksum mismatch: file says " +
                                  doc.at("checksum").get<std::string>() + ", payload is " +
                                  expected);
    }
    Dataset ds;
    ds.params = params_from_json(doc.at("params"));
    ds.config = dataset_config_from_json(doc.at("config"));
    ds.integrator = integrator_from_json(doc.at("integrator"));
    ds.records.reserve(trajectories.size());
    for (const json& t : trajectories) {
      TrajectoryRecord rec;
      rec.trajectory_id = t.at("id").get<int>();
      rec.times = t.at("times").get<std::vector<double>>();
      const auto flat = t.at("states").get<std::vector<double>>();
      if (flat.size() != rec.times.size() * kStateDim) {
        throw DatasetError("trajectory " + std::to_string(rec.trajectory_id) +
                           ": state array length does not match times");
      }
      for (std::size_t j = 0; j < rec.times.size(); ++j) {
        rec.states.push_back(PhaseState::from_vector(
            Eigen::Map<const StateVector>(flat.data() + j * kStateDim)));
      }
      ds.records.push_back(std::move(rec));
    }
    return ds;
  } catch (const json::exception& e) {
    throw DatasetError(std::string("malformed dataset: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DatasetError(std::string("malformed dataset: ") + e.what());
  }
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  write_file_atomic(path, dataset_to_string(dataset));
}

Dataset load_dataset(const std::filesystem::path& path) {
  return dataset_from_string(read_file(path));
}

}  // namespace scalardyn
