#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "scalardyn/autodiff.hpp"
#include "scalardyn/mlp.hpp"
#include "scalardyn/scalars.hpp"
#include "scalardyn/types.hpp"

namespace scalardyn {

enum class ModelKind { ScalarsNode, ScalarsHnn, MlpNode, MlpHnn };

std::string_view to_string(ModelKind kind);
/// Accepts "scalars-node", "scalars-hnn", "mlp-node", "mlp-hnn".
ModelKind parse_model_kind(std::string_view name);

inline bool is_hamiltonian(ModelKind k) {
  return k == ModelKind::ScalarsHnn || k == ModelKind::MlpHnn;
}
inline bool is_scalar_model(ModelKind k) {
  return k == ModelKind::ScalarsNode || k == ModelKind::ScalarsHnn;
}

/// Raw input width of the baseline MLPs: (q1 - qo, q2 - qo, p1, p2, qo, g).
inline constexpr int kBaselineInputDim = 18;
/// Scalar N-ODE coefficients: 4 tangent slots x 6 edges.
inline constexpr int kNodeCoefficients = 4 * kNumEdges;

/// Architecture knobs shared by every model kind; input/output widths follow
/// from the kind.
struct ModelOptions {
  std::vector<int> hidden_dims = {128, 128};
  Activation activation = Activation::Swish;
  std::uint64_t init_seed = 0;
  double output_gain = 0.01;
  TransformSet transforms = default_transforms();
};

/// A learnable vector field on phase space.
///
///   scalars-node: dz/dt slot k = sum_s c[6k + s] * e_s, c = MLP(features)
///                 (slots k = dq1, dq2, dp1, dp2; edges s as in EdgeSet)
///   scalars-hnn:  dz/dt = J grad_z H, H = MLP(features)
///   mlp-node:     dz/dt = MLP(raw inputs)
///   mlp-hnn:      dz/dt = J grad_z H, H = MLP(raw inputs)
class DynamicsModel {
 public:
  DynamicsModel(ModelKind kind, const ModelOptions& options);
  DynamicsModel(ModelKind kind, Mlp mlp, TransformSet transforms);

  ModelKind kind() const { return kind_; }
  const Mlp& mlp() const { return mlp_; }
  Mlp& mlp() { return mlp_; }
  const TransformSet& transforms() const { return transforms_; }

  const Eigen::VectorXd& parameters() const { return mlp_.parameters(); }
  void set_parameters(const Eigen::VectorXd& p) { mlp_.set_parameters(p); }

  /// Network input for a batch of states (12 x B).
  ad::Var inputs(ad::Var states, const Vec3& qo, const Vec3& g) const;

  /// Learned energy per column (1 x B). Hamiltonian kinds only.
  ad::Var energy(const Mlp::Bound& params, ad::Var states, const Vec3& qo, const Vec3& g) const;

  /// Tangent per column (12 x B). With `differentiable`, the Hamiltonian
  /// kinds record their inner gradient so the result can be differentiated
  /// again (w.r.t. parameters or states).
  ad::Var dynamics(const Mlp::Bound& params, ad::Var states, const Vec3& qo, const Vec3& g,
                   bool differentiable) const;

  /// Plain evaluation on a fresh tape.
  Eigen::MatrixXd dynamics(const Eigen::MatrixXd& states, const Vec3& qo, const Vec3& g) const;
  PhaseState dynamics(const PhaseState& state, const Vec3& qo, const Vec3& g) const;
  double energy(const PhaseState& state, const Vec3& qo, const Vec3& g) const;

 private:
  ModelKind kind_;
  Mlp mlp_;
  TransformSet transforms_;
};

/// The MLP spec each kind uses for given options.
MlpSpec mlp_spec_for(ModelKind kind, const ModelOptions& options);

PhaseState node_dynamics(const DynamicsModel& model, const PhaseState& state, const Vec3& qo,
                         const Vec3& g);
PhaseState hnn_dynamics(const DynamicsModel& model, const PhaseState& state, const Vec3& qo,
                        const Vec3& g);

/// The symplectic matrix J = [0 I; -I 0] on the 12-dimensional state.
const std::shared_ptr<const ad::Matrix>& symplectic_matrix();

// Checkpoints: JSON header plus the flat parameter array in Mlp layout.
inline constexpr int kCheckpointSchemaVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `extra` lands under "provenance" in the header. The file is written to a
/// temporary sibling and renamed into place.
void save_model(const DynamicsModel& model, const std::filesystem::path& path,
                const nlohmann::json& extra = nlohmann::json::object());
DynamicsModel load_model(const std::filesystem::path& path, nlohmann::json* provenance = nullptr);

nlohmann::json model_to_json(const DynamicsModel& model);
DynamicsModel model_from_json(const nlohmann::json& doc);

}  // namespace scalardyn
