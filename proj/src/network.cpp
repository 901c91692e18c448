#include "ntkcv/network.hpp"

#include "ntkcv/error.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace ntkcv {

std::string_view to_string(Activation a) {
  return a == Activation::relu ? "relu" : "linear";
}

std::string_view to_string(Parametrization p) {
  return p == Parametrization::lecun ? "lecun" : "ntk";
}

std::string_view to_string(LossKind k) {
  return k == LossKind::mse ? "mse" : "softmax_cross_entropy";
}

Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "linear") return Activation::linear;
  throw ValidationError("unknown activation '" + std::string(s) + "' (expected relu|linear)");
}

Parametrization parse_parametrization(std::string_view s) {
  if (s == "lecun") return Parametrization::lecun;
  if (s == "ntk") return Parametrization::ntk;
  throw ValidationError("unknown parametrization '" + std::string(s) + "' (expected lecun|ntk)");
}

LossKind parse_loss_kind(std::string_view s) {
  if (s == "mse") return LossKind::mse;
  if (s == "softmax_cross_entropy" || s == "cross_entropy" || s == "ce")
    return LossKind::softmax_cross_entropy;
  throw ValidationError("unknown loss '" + std::string(s) + "' (expected mse|cross_entropy)");
}

void NetworkSpec::validate() const {
  if (layer_widths.size() < 2)
    throw ValidationError("network spec needs at least an input and an output width");
  for (int w : layer_widths)
    if (w < 1) throw ValidationError("network layer widths must be >= 1");
}

std::size_t NetworkSpec::param_count() const {
  validate();
  std::size_t p = 0;
  for (std::size_t l = 0; l + 1 < layer_widths.size(); ++l) {
    const auto in = static_cast<std::size_t>(layer_widths[l]);
    const auto out = static_cast<std::size_t>(layer_widths[l + 1]);
    p += in * out + (bias ? out : 0);
  }
  return p;
}

std::vector<LayerLayout> layer_layout(const NetworkSpec& spec) {
  spec.validate();
  std::vector<LayerLayout> layout;
  layout.reserve(spec.layer_count());
  std::size_t offset = 0;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const int in = spec.layer_widths[l];
    const int out = spec.layer_widths[l + 1];
    const double scale = spec.parametrization == Parametrization::ntk
                             ? 1.0 / std::sqrt(static_cast<double>(in))
                             : 1.0;
    const std::size_t weights = static_cast<std::size_t>(in) * static_cast<std::size_t>(out);
    layout.push_back({offset, offset + weights, in, out, scale, spec.bias});
    offset += weights + (spec.bias ? static_cast<std::size_t>(out) : 0);
  }
  return layout;
}

NetworkState init_network(const NetworkSpec& spec, std::uint64_t seed) {
  const auto layout = layer_layout(spec);
  NetworkState state{spec, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.param_count())), 0};
  std::mt19937_64 rng(seed);
  for (const auto& layer : layout) {
    const double stddev = spec.parametrization == Parametrization::lecun
                              ? 1.0 / std::sqrt(static_cast<double>(layer.fan_in))
                              : 1.0;
    std::normal_distribution<double> normal(0.0, stddev);
    const std::size_t weights =
        static_cast<std::size_t>(layer.fan_in) * static_cast<std::size_t>(layer.fan_out);
    for (std::size_t k = 0; k < weights; ++k)
      state.params[static_cast<Eigen::Index>(layer.weight_offset + k)] = normal(rng);
  }
  return state;
}

namespace {

using ConstWeightMap = Eigen::Map<const RowMatrix>;

ConstWeightMap weights_of(const NetworkState& state, const LayerLayout& layer) {
  return ConstWeightMap(state.params.data() + layer.weight_offset, layer.fan_out, layer.fan_in);
}

auto bias_of(const NetworkState& state, const LayerLayout& layer) {
  return state.params.segment(static_cast<Eigen::Index>(layer.bias_offset), layer.fan_out);
}

void check_inputs(const NetworkState& state, const Eigen::MatrixXd& inputs) {
  if (inputs.cols() != state.spec.input_width())
    throw DimensionError("input width " + std::to_string(inputs.cols()) +
                         " does not match network input width " +
                         std::to_string(state.spec.input_width()));
  if (state.params.size() != static_cast<Eigen::Index>(state.spec.param_count()))
    throw DimensionError("parameter vector length does not match network spec");
}

}  // namespace

ForwardPass forward_pass(const NetworkState& state, const Eigen::MatrixXd& inputs) {
  check_inputs(state, inputs);
  const auto layout = layer_layout(state.spec);
  const bool relu = state.spec.activation == Activation::relu;
  ForwardPass cache;
  cache.activations.reserve(layout.size() + 1);
  cache.preactivations.reserve(layout.size());
  cache.activations.push_back(inputs);
  for (std::size_t l = 0; l < layout.size(); ++l) {
    const auto& layer = layout[l];
    Eigen::MatrixXd z = cache.activations.back() * weights_of(state, layer).transpose();
    if (layer.weight_scale != 1.0) z *= layer.weight_scale;
    if (layer.has_bias) z.rowwise() += bias_of(state, layer).transpose();
    const bool hidden = l + 1 < layout.size();
    cache.activations.push_back(hidden && relu ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z);
    cache.preactivations.push_back(std::move(z));
  }
  return cache;
}

namespace {

Eigen::MatrixXd backprop_through(const NetworkState& state, const LayerLayout& layer,
                                 const Eigen::MatrixXd& delta,
                                 const Eigen::MatrixXd& previous_preactivation) {
  Eigen::MatrixXd prev = delta * weights_of(state, layer);
  if (layer.weight_scale != 1.0) prev *= layer.weight_scale;
  if (state.spec.activation == Activation::relu)
    prev = (previous_preactivation.array() > 0.0).select(prev, 0.0);
  return prev;
}

bool class_index_targets(const Eigen::MatrixXd& outputs, const Eigen::MatrixXd& targets) {
  if (targets.rows() != outputs.rows())
    throw DimensionError("targets have " + std::to_string(targets.rows()) +
                         " rows, outputs have " + std::to_string(outputs.rows()));
  if (targets.cols() == outputs.cols()) return false;
  if (targets.cols() == 1) return true;
  throw DimensionError("cross-entropy targets must be N x C or N x 1 class indices");
}

Eigen::Index class_of(const Eigen::MatrixXd& targets, Eigen::Index row, Eigen::Index classes) {
  const double v = targets(row, 0);
  const auto c = static_cast<Eigen::Index>(std::llround(v));
  if (c < 0 || c >= classes || static_cast<double>(c) != v)
    throw ValidationError("class index " + std::to_string(v) + " out of range");
  return c;
}

}  // namespace

Eigen::MatrixXd backprop_delta(const NetworkState& state, std::size_t layer,
                               const Eigen::MatrixXd& delta, const ForwardPass& pass) {
  if (layer == 0 || layer >= pass.preactivations.size())
    throw DimensionError("backprop_delta layer index out of range");
  const auto layout = layer_layout(state.spec);
  return backprop_through(state, layout[layer], delta, pass.preactivations[layer - 1]);
}

Eigen::MatrixXd forward(const NetworkState& state, const Eigen::MatrixXd& inputs) {
  return std::move(forward_pass(state, inputs).activations.back());
}

namespace {

RowMatrix jacobian_for_output(const NetworkState& state, const ForwardPass& cache,
                              const std::vector<LayerLayout>& layout, int output) {
  const Eigen::Index n = cache.activations.front().rows();
  RowMatrix j = RowMatrix::Zero(n, static_cast<Eigen::Index>(state.param_count()));
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(n, state.spec.output_width());
  delta.col(output).setOnes();
  for (std::size_t l = layout.size(); l-- > 0;) {
    const auto& layer = layout[l];
    const Eigen::MatrixXd& a = cache.activations[l];
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Map<RowMatrix> dw(j.row(i).data() + layer.weight_offset, layer.fan_out,
                               layer.fan_in);
      dw.noalias() = layer.weight_scale * delta.row(i).transpose() * a.row(i);
    }
    if (layer.has_bias) j.block(0, static_cast<Eigen::Index>(layer.bias_offset), n, layer.fan_out) = delta;
    if (l > 0) delta = backprop_through(state, layer, delta, cache.preactivations[l - 1]);
  }
  return j;
}

}  // namespace

RowMatrix batch_param_jacobian(const NetworkState& state, const Eigen::MatrixXd& inputs,
                               int output) {
  if (output < 0 || output >= state.spec.output_width())
    throw DimensionError("output index out of range");
  return jacobian_for_output(state, forward_pass(state, inputs), layer_layout(state.spec),
                             output);
}

std::vector<RowMatrix> batch_param_jacobians(const NetworkState& state,
                                             const Eigen::MatrixXd& inputs) {
  const auto cache = forward_pass(state, inputs);
  const auto layout = layer_layout(state.spec);
  std::vector<RowMatrix> jac;
  jac.reserve(static_cast<std::size_t>(state.spec.output_width()));
  for (int o = 0; o < state.spec.output_width(); ++o)
    jac.push_back(jacobian_for_output(state, cache, layout, o));
  return jac;
}

RowMatrix param_jacobian(const NetworkState& state, const Eigen::VectorXd& input) {
  const Eigen::MatrixXd x = input.transpose();
  const auto blocks = batch_param_jacobians(state, x);
  RowMatrix jac(static_cast<Eigen::Index>(blocks.size()), static_cast<Eigen::Index>(state.param_count()));
  for (std::size_t o = 0; o < blocks.size(); ++o) jac.row(static_cast<Eigen::Index>(o)) = blocks[o].row(0);
  return jac;
}

RowMatrix param_jacobian(const NetworkState& state, std::span<const double> input) {
  return param_jacobian(state, Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(
                                   input.data(), static_cast<Eigen::Index>(input.size()))));
}

double loss_from_outputs(const Eigen::MatrixXd& outputs, const Eigen::MatrixXd& targets,
                         LossKind kind) {
  const Eigen::Index n = outputs.rows();
  if (n == 0) throw DimensionError("loss of an empty batch");
  if (kind == LossKind::mse) {
    if (targets.rows() != n || targets.cols() != outputs.cols())
      throw DimensionError("mse targets shape does not match outputs");
    return (outputs - targets).squaredNorm() / static_cast<double>(outputs.size());
  }
  const bool indices = class_index_targets(outputs, targets);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = outputs.row(i).maxCoeff();
    const double lse = m + std::log((outputs.row(i).array() - m).exp().sum());
    if (indices) {
      total += lse - outputs(i, class_of(targets, i, outputs.cols()));
    } else {
      total += (targets.row(i).array() * (lse - outputs.row(i).array())).sum();
    }
  }
  return total / static_cast<double>(n);
}

Eigen::MatrixXd loss_output_gradient(const Eigen::MatrixXd& outputs,
                                     const Eigen::MatrixXd& targets, LossKind kind) {
  const Eigen::Index n = outputs.rows();
  if (n == 0) throw DimensionError("loss of an empty batch");
  if (kind == LossKind::mse) {
    if (targets.rows() != n || targets.cols() != outputs.cols())
      throw DimensionError("mse targets shape does not match outputs");
    return 2.0 * (outputs - targets) / static_cast<double>(outputs.size());
  }
  const bool indices = class_index_targets(outputs, targets);
  Eigen::MatrixXd g(n, outputs.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = outputs.row(i).maxCoeff();
    Eigen::RowVectorXd e = (outputs.row(i).array() - m).exp();
    e /= e.sum();
    if (indices) {
      e(class_of(targets, i, outputs.cols())) -= 1.0;
    } else {
      e = e * targets.row(i).sum() - targets.row(i);
    }
    g.row(i) = e / static_cast<double>(n);
  }
  return g;
}

LossGrad loss_and_grad(const NetworkState& state, const Eigen::MatrixXd& inputs,
                       const Eigen::MatrixXd& targets, LossKind kind) {
  const auto cache = forward_pass(state, inputs);
  const auto layout = layer_layout(state.spec);
  const Eigen::MatrixXd& out = cache.activations.back();

  LossGrad result{loss_from_outputs(out, targets, kind),
                  Eigen::VectorXd::Zero(static_cast<Eigen::Index>(state.param_count()))};
  Eigen::MatrixXd delta = loss_output_gradient(out, targets, kind);
  for (std::size_t l = layout.size(); l-- > 0;) {
    const auto& layer = layout[l];
    Eigen::Map<RowMatrix> dw(result.grad.data() + layer.weight_offset, layer.fan_out,
                             layer.fan_in);
    dw.noalias() = delta.transpose() * cache.activations[l];
    if (layer.weight_scale != 1.0) dw *= layer.weight_scale;
    if (layer.has_bias)
      result.grad.segment(static_cast<Eigen::Index>(layer.bias_offset), layer.fan_out) =
          delta.colwise().sum().transpose();
    if (l > 0) delta = backprop_through(state, layer, delta, cache.preactivations[l - 1]);
  }
  return result;
}

double loss_value(const NetworkState& state, const Eigen::MatrixXd& inputs,
                  const Eigen::MatrixXd& targets, LossKind kind) {
  return loss_from_outputs(forward(state, inputs), targets, kind);
}

double accuracy_percent(const Eigen::MatrixXd& outputs, const Eigen::MatrixXd& targets) {
  const bool indices = class_index_targets(outputs, targets);
  const Eigen::Index n = outputs.rows();
  if (n == 0) throw DimensionError("accuracy of an empty batch");
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index predicted = 0;
    outputs.row(i).maxCoeff(&predicted);
    Eigen::Index expected = 0;
    if (indices) {
      expected = class_of(targets, i, outputs.cols());
    } else {
      targets.row(i).maxCoeff(&expected);
    }
    if (predicted == expected) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(n);
}

}  // namespace ntkcv
