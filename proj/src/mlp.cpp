#include "scalardyn/mlp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace scalardyn {

namespace {
using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
}

std::string_view to_string(Activation a) {
  return a == Activation::Tanh ? "tanh" : "swish";
}

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "swish") return Activation::Swish;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

void MlpSpec::validate() const {
  if (input_dim <= 0 || output_dim <= 0) {
    throw std::invalid_argument("mlp: input and output dims must be positive");
  }
  for (int h : hidden_dims) {
    if (h <= 0) throw std::invalid_argument("model.hidden_dims entries must be positive");
  }
  if (!(output_gain >= 0.0) || !std::isfinite(output_gain)) {
    throw std::invalid_argument("model.output_gain must be finite and >= 0");
  }
}

Eigen::Index MlpSpec::num_parameters() const {
  Eigen::Index n = 0;
  for (int l = 0; l < num_layers(); ++l) {
    n += static_cast<Eigen::Index>(layer_out(l)) * (layer_in(l) + 1);
  }
  return n;
}

Mlp::Mlp(MlpSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  params_.resize(spec_.num_parameters());
  std::mt19937_64 rng(spec_.init_seed);
  Eigen::Index offset = 0;
  for (int l = 0; l < spec_.num_layers(); ++l) {
    const int in = spec_.layer_in(l);
    const int out = spec_.layer_out(l);
    const double gain = l == spec_.num_layers() - 1 ? spec_.output_gain : 1.0;
    const double limit = gain * std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> uniform(-limit, limit);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(in) * out; ++i) {
      params_(offset++) = uniform(rng);
    }
    params_.segment(offset, out).setZero();
    offset += out;
  }
}

void Mlp::set_parameters(const Eigen::VectorXd& params) {
  if (params.size() != params_.size()) {
    throw std::invalid_argument("mlp: expected " + std::to_string(params_.size()) +
                                " parameters, got " + std::to_string(params.size()));
  }
  params_ = params;
}

std::vector<ad::Var> Mlp::Bound::leaves() const {
  std::vector<ad::Var> out;
  out.reserve(weights.size() * 2);
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(weights[l]);
    out.push_back(biases[l]);
  }
  return out;
}

Mlp::Bound Mlp::bind(ad::Tape& tape) const {
  Bound b;
  Eigen::Index offset = 0;
  for (int l = 0; l < spec_.num_layers(); ++l) {
    const int in = spec_.layer_in(l);
    const int out = spec_.layer_out(l);
    b.weights.push_back(
        tape.leaf(Eigen::Map<const RowMajor>(params_.data() + offset, out, in)));
    offset += static_cast<Eigen::Index>(in) * out;
    b.biases.push_back(tape.leaf(params_.segment(offset, out)));
    offset += out;
  }
  return b;
}

ad::Var Mlp::forward(const Bound& bound, ad::Var x) const {
  if (x.rows() != spec_.input_dim) {
    throw std::invalid_argument("mlp: input has " + std::to_string(x.rows()) +
                                " rows, expected " + std::to_string(spec_.input_dim));
  }
  const ad::UnaryKind act =
      spec_.activation == Activation::Tanh ? ad::UnaryKind::Tanh : ad::UnaryKind::Swish;
  ad::Var h = x;
  const int last = spec_.num_layers() - 1;
  for (int l = 0; l <= last; ++l) {
    h = ad::add_bias(ad::matmul(bound.weights[l], h), bound.biases[l]);
    if (l != last) h = ad::unary(act, h);
  }
  return h;
}

Eigen::VectorXd Mlp::flatten_gradient(const std::vector<ad::Matrix>& leaf_grads) const {
  if (static_cast<int>(leaf_grads.size()) != 2 * spec_.num_layers()) {
    throw std::invalid_argument("mlp: wrong number of leaf gradients");
  }
  Eigen::VectorXd g(params_.size());
  Eigen::Index offset = 0;
  for (int l = 0; l < spec_.num_layers(); ++l) {
    const int in = spec_.layer_in(l);
    const int out = spec_.layer_out(l);
    Eigen::Map<RowMajor>(g.data() + offset, out, in) = leaf_grads[2 * l];
    offset += static_cast<Eigen::Index>(in) * out;
    g.segment(offset, out) = leaf_grads[2 * l + 1].col(0);
    offset += out;
  }
  return g;
}

}  // namespace scalardyn
