#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "scalardyn/autodiff.hpp"

namespace scalardyn {

enum class Activation { Tanh, Swish };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

struct MlpSpec {
  int input_dim = 0;
  std::vector<int> hidden_dims = {128, 128};
  int output_dim = 0;
  Activation activation = Activation::Swish;
  std::uint64_t init_seed = 0;
  /// Multiplies the Glorot limit of the output layer only.
  double output_gain = 0.01;

  void validate() const;
  int num_layers() const { return static_cast<int>(hidden_dims.size()) + 1; }
  int layer_in(int layer) const { return layer == 0 ? input_dim : hidden_dims[layer - 1]; }
  int layer_out(int layer) const {
    return layer == num_layers() - 1 ? output_dim : hidden_dims[layer];
  }
  Eigen::Index num_parameters() const;

  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

/// Fully connected network with a linear output layer.
///
/// Flat parameter layout: for each layer in order, the weight matrix
/// (out x in) in row-major order followed by the bias (out).
class Mlp {
 public:
  /// Glorot-uniform weights drawn from spec.init_seed (output layer scaled by
  /// spec.output_gain), zero biases.
  explicit Mlp(MlpSpec spec);

  const MlpSpec& spec() const { return spec_; }
  const Eigen::VectorXd& parameters() const { return params_; }
  /// Throws std::invalid_argument on a length mismatch.
  void set_parameters(const Eigen::VectorXd& params);

  /// Parameters recorded as tape leaves.
  struct Bound {
    std::vector<ad::Var> weights;
    std::vector<ad::Var> biases;
    std::vector<ad::Var> leaves() const;
  };
  Bound bind(ad::Tape& tape) const;

  /// x: input_dim x B  ->  output_dim x B.
  ad::Var forward(const Bound& bound, ad::Var x) const;

  /// Packs per-leaf adjoints (in Bound::leaves() order) into the flat layout.
  Eigen::VectorXd flatten_gradient(const std::vector<ad::Matrix>& leaf_grads) const;

 private:
  MlpSpec spec_;
  Eigen::VectorXd params_;
};

}  // namespace scalardyn
