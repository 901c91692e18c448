#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ntkcv {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Activation { relu, linear };

// lecun: W ~ N(0, 1/fan_in), used as drawn.
// ntk:   W ~ N(0, 1), each layer's weight contribution scaled by 1/sqrt(fan_in).
enum class Parametrization { lecun, ntk };

enum class LossKind { mse, softmax_cross_entropy };

std::string_view to_string(Activation a);
std::string_view to_string(Parametrization p);
std::string_view to_string(LossKind k);
Activation parse_activation(std::string_view s);
Parametrization parse_parametrization(std::string_view s);
LossKind parse_loss_kind(std::string_view s);

/// Dense feed-forward architecture. `layer_widths` lists the input width
/// first and the output width last; the activation is applied between hidden
/// layers only, the output layer is linear.
struct NetworkSpec {
  std::vector<int> layer_widths;
  Activation activation = Activation::relu;
  Parametrization parametrization = Parametrization::lecun;
  bool bias = true;

  void validate() const;
  std::size_t layer_count() const { return layer_widths.size() - 1; }
  int input_width() const { return layer_widths.front(); }
  int output_width() const { return layer_widths.back(); }
  std::size_t param_count() const;

  bool operator==(const NetworkSpec&) const = default;
};

/// Offsets of one dense layer inside the flat parameter vector. Weights are
/// stored row-major as fan_out x fan_in, followed by fan_out biases when the
/// spec has them.
struct LayerLayout {
  std::size_t weight_offset;
  std::size_t bias_offset;
  int fan_in;
  int fan_out;
  double weight_scale;  // 1 for lecun, 1/sqrt(fan_in) for ntk
  bool has_bias;
};

std::vector<LayerLayout> layer_layout(const NetworkSpec& spec);

struct NetworkState {
  NetworkSpec spec;
  Eigen::VectorXd params;
  // Number of optimizer updates applied since initialization.
  std::uint64_t optimizer_steps = 0;

  std::size_t param_count() const { return static_cast<std::size_t>(params.size()); }
};

NetworkState init_network(const NetworkSpec& spec, std::uint64_t seed);

/// Intermediate values of a batched forward pass. activations[l] is the input
/// of layer l (activations[0] = inputs, activations.back() = outputs);
/// preactivations[l] is layer l's affine output.
struct ForwardPass {
  std::vector<Eigen::MatrixXd> activations;
  std::vector<Eigen::MatrixXd> preactivations;
};

ForwardPass forward_pass(const NetworkState& state, const Eigen::MatrixXd& inputs);

/// Maps dL/dz of layer `layer` (N x fan_out) to dL/dz of layer `layer - 1`.
/// ReLU'(0) is taken as 0.
Eigen::MatrixXd backprop_delta(const NetworkState& state, std::size_t layer,
                               const Eigen::MatrixXd& delta, const ForwardPass& pass);

/// Row i of the result is the network output for row i of `inputs`.
Eigen::MatrixXd forward(const NetworkState& state, const Eigen::MatrixXd& inputs);

/// d_out x P matrix of exact partial derivatives d f_o(x) / d theta_k.
RowMatrix param_jacobian(const NetworkState& state, std::span<const double> input);
RowMatrix param_jacobian(const NetworkState& state, const Eigen::VectorXd& input);

/// Per-output Jacobian blocks for a batch: element o is the N x P matrix whose
/// row i is d f_o(x_i) / d theta.
std::vector<RowMatrix> batch_param_jacobians(const NetworkState& state,
                                             const Eigen::MatrixXd& inputs);

/// The N x P block of a single output.
RowMatrix batch_param_jacobian(const NetworkState& state, const Eigen::MatrixXd& inputs,
                               int output);

struct LossGrad {
  double loss;
  Eigen::VectorXd grad;
};

/// Mean loss over samples and its exact gradient.
///
/// mse averages the squared error over every output element. For
/// softmax_cross_entropy `targets` is either N x C (one-hot or probabilities)
/// or N x 1 holding class indices. A non-finite loss is returned as-is; callers
/// treat it as divergence.
LossGrad loss_and_grad(const NetworkState& state, const Eigen::MatrixXd& inputs,
                       const Eigen::MatrixXd& targets, LossKind kind);

double loss_value(const NetworkState& state, const Eigen::MatrixXd& inputs,
                  const Eigen::MatrixXd& targets, LossKind kind);

/// Loss evaluated on precomputed outputs, and dL/dF with the same N x d_out shape.
double loss_from_outputs(const Eigen::MatrixXd& outputs, const Eigen::MatrixXd& targets,
                         LossKind kind);
Eigen::MatrixXd loss_output_gradient(const Eigen::MatrixXd& outputs,
                                     const Eigen::MatrixXd& targets, LossKind kind);

/// Percentage of rows whose argmax output equals the class target.
double accuracy_percent(const Eigen::MatrixXd& outputs, const Eigen::MatrixXd& targets);

}  // namespace ntkcv
