#include "scalardyn/models.hpp"

#include <memory>
#include <stdexcept>
#include <string>

#include "scalardyn/io.hpp"

namespace scalardyn {

namespace {

using ad::Matrix;
using ad::Var;

// Expands the 24 coefficients so that entry (k, s, d) = c[6k + s].
const std::shared_ptr<const Matrix>& coefficient_expand() {
  static const auto m = [] {
    Matrix k = Matrix::Zero(4 * kEdgeRows, kNodeCoefficients);
    for (int slot = 0; slot < 4; ++slot) {
      for (int s = 0; s < kNumEdges; ++s) {
        for (int d = 0; d < 3; ++d) k(slot * kEdgeRows + 3 * s + d, slot * kNumEdges + s) = 1.0;
      }
    }
    return std::make_shared<const Matrix>(std::move(k));
  }();
  return m;
}

// Tiles the 18 edge rows once per tangent slot.
const std::shared_ptr<const Matrix>& edge_tile() {
  static const auto m = [] {
    Matrix k = Matrix::Zero(4 * kEdgeRows, kEdgeRows);
    for (int slot = 0; slot < 4; ++slot) {
      k.block(slot * kEdgeRows, 0, kEdgeRows, kEdgeRows).setIdentity();
    }
    return std::make_shared<const Matrix>(std::move(k));
  }();
  return m;
}

// Sums over edges within each slot: 12 x 72.
const std::shared_ptr<const Matrix>& edge_reduce() {
  static const auto m = [] {
    Matrix k = Matrix::Zero(kStateDim, 4 * kEdgeRows);
    for (int slot = 0; slot < 4; ++slot) {
      for (int s = 0; s < kNumEdges; ++s) {
        for (int d = 0; d < 3; ++d) k(3 * slot + d, slot * kEdgeRows + 3 * s + d) = 1.0;
      }
    }
    return std::make_shared<const Matrix>(std::move(k));
  }();
  return m;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::ScalarsNode:
      return "scalars-node";
    case ModelKind::ScalarsHnn:
      return "scalars-hnn";
    case ModelKind::MlpNode:
      return "mlp-node";
    case ModelKind::MlpHnn:
      return "mlp-hnn";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  for (ModelKind k : {ModelKind::ScalarsNode, ModelKind::ScalarsHnn, ModelKind::MlpNode,
                      ModelKind::MlpHnn}) {
    if (name == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown model kind '" + std::string(name) + "'");
}

const std::shared_ptr<const Matrix>& symplectic_matrix() {
  static const auto m = [] {
    Matrix j = Matrix::Zero(kStateDim, kStateDim);
    j.block<6, 6>(0, 6).setIdentity();
    j.block<6, 6>(6, 0) = -Eigen::Matrix<double, 6, 6>::Identity();
    return std::make_shared<const Matrix>(std::move(j));
  }();
  return m;
}

MlpSpec mlp_spec_for(ModelKind kind, const ModelOptions& options) {
  MlpSpec spec;
  spec.hidden_dims = options.hidden_dims;
  spec.activation = options.activation;
  spec.init_seed = options.init_seed;
  spec.output_gain = options.output_gain;
  spec.input_dim = is_scalar_model(kind) ? feature_dim(options.transforms) : kBaselineInputDim;
  switch (kind) {
    case ModelKind::ScalarsNode:
      spec.output_dim = kNodeCoefficients;
      break;
    case ModelKind::MlpNode:
      spec.output_dim = kStateDim;
      break;
    case ModelKind::ScalarsHnn:
    case ModelKind::MlpHnn:
      spec.output_dim = 1;
      break;
  }
  return spec;
}

DynamicsModel::DynamicsModel(ModelKind kind, const ModelOptions& options)
    : DynamicsModel(kind, Mlp(mlp_spec_for(kind, options)), options.transforms) {}

DynamicsModel::DynamicsModel(ModelKind kind, Mlp mlp, TransformSet transforms)
    : kind_(kind), mlp_(std::move(mlp)), transforms_(std::move(transforms)) {
  if (is_scalar_model(kind_) && transforms_.empty()) {
    throw std::invalid_argument("model: scalar models need at least one transform");
  }
  ModelOptions probe;
  probe.transforms = transforms_;
  const MlpSpec want = mlp_spec_for(kind_, probe);
  if (mlp_.spec().input_dim != want.input_dim || mlp_.spec().output_dim != want.output_dim) {
    throw std::invalid_argument("model: MLP dims " + std::to_string(mlp_.spec().input_dim) +
                                "->" + std::to_string(mlp_.spec().output_dim) +
                                " do not fit kind " + std::string(to_string(kind_)));
  }
}

Var DynamicsModel::inputs(Var states, const Vec3& qo, const Vec3& g) const {
  if (is_scalar_model(kind_)) return scalar_features(edge_matrix(states, qo, g), transforms_);
  Matrix offset(kBaselineInputDim, 1);
  offset << -qo, -qo, Vec3::Zero(), Vec3::Zero(), qo, g;
  const Var padded = ad::pad_rows(states, 0, kBaselineInputDim);
  return ad::add_bias(padded, states.tape()->constant(std::move(offset)));
}

Var DynamicsModel::energy(const Mlp::Bound& params, Var states, const Vec3& qo,
                          const Vec3& g) const {
  if (!is_hamiltonian(kind_)) throw std::logic_error("model: energy() on a non-Hamiltonian model");
  return mlp_.forward(params, inputs(states, qo, g));
}

Var DynamicsModel::dynamics(const Mlp::Bound& params, Var states, const Vec3& qo, const Vec3& g,
                            bool differentiable) const {
  ad::Tape& tape = *states.tape();
  switch (kind_) {
    case ModelKind::ScalarsNode: {
      const Var edges = edge_matrix(states, qo, g);
      const Var coeffs = mlp_.forward(params, scalar_features(edges, transforms_));
      const Var terms = ad::cwise_mul(ad::left_multiply(coefficient_expand(), coeffs),
                                      ad::left_multiply(edge_tile(), edges));
      return ad::left_multiply(edge_reduce(), terms);
    }
    case ModelKind::MlpNode:
      return mlp_.forward(params, inputs(states, qo, g));
    case ModelKind::ScalarsHnn:
    case ModelKind::MlpHnn: {
      const Var total = ad::sum(energy(params, states, qo, g));
      const Var wrt[] = {states};
      if (differentiable) {
        return ad::left_multiply(symplectic_matrix(), tape.gradient_graph(total, wrt)[0]);
      }
      Matrix grad = tape.gradient(total, wrt)[0];
      return tape.constant(*symplectic_matrix() * grad);
    }
  }
  throw std::logic_error("model: unknown kind");
}

Eigen::MatrixXd DynamicsModel::dynamics(const Eigen::MatrixXd& states, const Vec3& qo,
                                        const Vec3& g) const {
  ad::Tape tape;
  const Mlp::Bound params = mlp_.bind(tape);
  const Var z = tape.leaf(states);
  return dynamics(params, z, qo, g, false).value();
}

PhaseState DynamicsModel::dynamics(const PhaseState& state, const Vec3& qo, const Vec3& g) const {
  const Eigen::MatrixXd out = dynamics(Eigen::MatrixXd(state.to_vector()), qo, g);
  return PhaseState::from_vector(out.col(0));
}

double DynamicsModel::energy(const PhaseState& state, const Vec3& qo, const Vec3& g) const {
  ad::Tape tape;
  const Mlp::Bound params = mlp_.bind(tape);
  const Var z = tape.leaf(Eigen::MatrixXd(state.to_vector()));
  return energy(params, z, qo, g).value()(0, 0);
}

PhaseState node_dynamics(const DynamicsModel& model, const PhaseState& state, const Vec3& qo,
                         const Vec3& g) {
  if (is_hamiltonian(model.kind())) {
    throw std::invalid_argument("node_dynamics: model is Hamiltonian");
  }
  return model.dynamics(state, qo, g);
}

PhaseState hnn_dynamics(const DynamicsModel& model, const PhaseState& state, const Vec3& qo,
                        const Vec3& g) {
  if (!is_hamiltonian(model.kind())) {
    throw std::invalid_argument("hnn_dynamics: model is not Hamiltonian");
  }
  return model.dynamics(state, qo, g);
}

nlohmann::json model_to_json(const DynamicsModel& model) {
  const MlpSpec& spec = model.mlp().spec();
  nlohmann::json transforms = nlohmann::json::array();
  for (Transform t : model.transforms()) transforms.push_back(std::string(to_string(t)));
  const Eigen::VectorXd& p = model.parameters();
  return {
      {"schema_version", kCheckpointSchemaVersion},
      {"feature_ordering_version", kFeatureOrderingVersion},
      {"model", std::string(to_string(model.kind()))},
      {"transforms", transforms},
      {"mlp",
       {{"input_dim", spec.input_dim},
        {"hidden_dims", spec.hidden_dims},
        {"output_dim", spec.output_dim},
        {"activation", std::string(to_string(spec.activation))},
        {"init_seed", spec.init_seed},
        {"output_gain", spec.output_gain}}},
      {"parameters", std::vector<double>(p.data(), p.data() + p.size())},
  };
}

DynamicsModel model_from_json(const nlohmann::json& doc) {
  try {
    const int schema = doc.at("schema_version").get<int>();
    if (schema != kCheckpointSchemaVersion) {
      throw CheckpointError("checkpoint schema_version " + std::to_string(schema) +
                            " does not match supported version " +
                            std::to_string(kCheckpointSchemaVersion));
    }
    const int ordering = doc.at("feature_ordering_version").get<int>();
    if (ordering != kFeatureOrderingVersion) {
      throw CheckpointError("checkpoint feature_ordering_version " + std::to_string(ordering) +
                            " does not match supported version " +
                            std::to_string(kFeatureOrderingVersion));
    }
    const ModelKind kind = parse_model_kind(doc.at("model").get<std::string>());
    TransformSet transforms;
    for (const auto& t : doc.at("transforms")) {
      transforms.push_back(parse_transform(t.get<std::string>()));
    }
    const auto& m = doc.at("mlp");
    MlpSpec spec;
    spec.input_dim = m.at("input_dim").get<int>();
    spec.hidden_dims = m.at("hidden_dims").get<std::vector<int>>();
    spec.output_dim = m.at("output_dim").get<int>();
    spec.activation = parse_activation(m.at("activation").get<std::string>());
    spec.init_seed = m.at("init_seed").get<std::uint64_t>();
    spec.output_gain = m.at("output_gain").get<double>();
    Mlp mlp(spec);
    const auto values = doc.at("parameters").get<std::vector<double>>();
    mlp.set_parameters(Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                         static_cast<Eigen::Index>(values.size())));
    return DynamicsModel(kind, std::move(mlp), std::move(transforms));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("invalid checkpoint: ") + e.what());
  }
}

void save_model(const DynamicsModel& model, const std::filesystem::path& path,
                const nlohmann::json& extra) {
  nlohmann::json doc = model_to_json(model);
  doc["provenance"] = extra;
  write_file_atomic(path, doc.dump());
}

DynamicsModel load_model(const std::filesystem::path& path, nlohmann::json* provenance) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw CheckpointError("checkpoint '" + path.string() + "' is not valid JSON: " + e.what());
  }
  if (provenance != nullptr) *provenance = doc.value("provenance", nlohmann::json::object());
  return model_from_json(doc);
}

}  // namespace scalardyn
