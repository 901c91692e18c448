#include "ntkcv/trainer.hpp"

#include "ntkcv/error.hpp"
#include "ntkcv/ntk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace ntkcv {

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (eval_every < 1) throw ValidationError("eval_every must be >= 1");
  adam.validate();
}

nlohmann::json TrainOutcome::to_json() const {
  nlohmann::json j = {{"min_test_loss", min_test_loss},
                      {"final_test_loss", final_test_loss},
                      {"min_train_loss", min_train_loss},
                      {"final_train_loss", final_train_loss},
                      {"max_accuracy", max_accuracy ? nlohmann::json(*max_accuracy) : nlohmann::json(nullptr)},
                      {"diverged", diverged},
                      {"epochs_completed", epochs_completed},
                      {"eval_epochs", eval_epochs},
                      {"train_loss_curve", train_loss_curve},
                      {"test_loss_curve", test_loss_curve}};
  if (!accuracy_curve.empty()) j["accuracy_curve"] = accuracy_curve;
  return j;
}

namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, std::span<const std::size_t> idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t r = 0; r < idx.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(idx[r]));
  return out;
}

}  // namespace

std::pair<NetworkState, TrainOutcome> train(NetworkState state, const Dataset& train_set,
                                            const Dataset& test_set, const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.size() == 0) throw ValidationError("training set is empty");
  if (test_set.size() == 0) throw ValidationError("test set is empty");
  if (train_set.input_width() != state.spec.input_width() ||
      test_set.input_width() != state.spec.input_width())
    throw DimensionError("dataset input width does not match network");
  const bool classification = train_set.task == Task::classification;

  TrainOutcome out;
  const auto evaluate = [&](int epoch) {
    const double train_loss = loss_value(state, train_set.inputs, train_set.targets, cfg.loss);
    const Eigen::MatrixXd test_out = forward(state, test_set.inputs);
    const double test_loss = loss_from_outputs(test_out, test_set.targets, cfg.loss);
    out.eval_epochs.push_back(epoch);
    out.train_loss_curve.push_back(train_loss);
    out.test_loss_curve.push_back(test_loss);
    if (classification) out.accuracy_curve.push_back(accuracy_percent(test_out, test_set.targets));
    return std::isfinite(train_loss) && std::isfinite(test_loss);
  };

  if (!evaluate(0)) out.diverged = true;

  const std::size_t n = train_set.size();
  const bool full_batch = cfg.batch_size == 0 || cfg.batch_size >= n;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(cfg.seed);
  auto opt = AdamState::zeros(state.param_count());

  for (int epoch = 1; epoch <= cfg.epochs && !out.diverged; ++epoch) {
    if (full_batch) {
      const auto lg = loss_and_grad(state, train_set.inputs, train_set.targets, cfg.loss);
      if (!std::isfinite(lg.loss) || !lg.grad.allFinite()) {
        out.diverged = true;
        break;
      }
      adam_update(state, lg.grad, opt, cfg.adam);
    } else {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < n; start += cfg.batch_size) {
        const std::span<const std::size_t> idx(order.data() + start, std::min(cfg.batch_size, n - start));
        const auto lg = loss_and_grad(state, gather_rows(train_set.inputs, idx),
                                      gather_rows(train_set.targets, idx), cfg.loss);
        if (!std::isfinite(lg.loss) || !lg.grad.allFinite()) {
          out.diverged = true;
          break;
        }
        adam_update(state, lg.grad, opt, cfg.adam);
      }
      if (out.diverged) break;
    }
    out.epochs_completed = epoch;
    if (epoch % cfg.eval_every == 0 || epoch == cfg.epochs) {
      if (!evaluate(epoch)) out.diverged = true;
    }
  }

  const auto finite_min = [](const std::vector<double>& v) {
    double m = std::numeric_limits<double>::infinity();
    for (double x : v)
      if (std::isfinite(x)) m = std::min(m, x);
    return m;
  };
  out.min_test_loss = finite_min(out.test_loss_curve);
  out.min_train_loss = finite_min(out.train_loss_curve);
  out.final_test_loss = out.test_loss_curve.back();
  out.final_train_loss = out.train_loss_curve.back();
  if (classification)
    out.max_accuracy = *std::max_element(out.accuracy_curve.begin(), out.accuracy_curve.end());
  return {std::move(state), std::move(out)};
}

LinearizedCheck linearized_step_check(const NetworkState& state, const Eigen::MatrixXd& inputs,
                                      const Eigen::MatrixXd& targets, LossKind kind, double eta) {
  if (!(eta > 0.0)) throw ValidationError("eta must be > 0");
  const Eigen::Index n = inputs.rows();
  const int outputs = state.spec.output_width();

  const Eigen::MatrixXd before = forward(state, inputs);
  const Eigen::MatrixXd dloss_df = loss_output_gradient(before, targets, kind);

  LinearizedCheck check;
  if (outputs == 1) {
    const NtkMatrix theta = compute_ntk(state, inputs, {NtkMethod::jacobian_gram});
    check.predicted_delta = -eta * (theta.entries * dloss_df.col(0));
  } else {
    // Full kernel over (sample, output) pairs, row index i * O + o.
    const auto blocks = batch_param_jacobians(state, inputs);
    RowMatrix j(n * outputs, static_cast<Eigen::Index>(state.param_count()));
    for (Eigen::Index i = 0; i < n; ++i)
      for (int o = 0; o < outputs; ++o) j.row(i * outputs + o) = blocks[static_cast<std::size_t>(o)].row(i);
    Eigen::VectorXd g(n * outputs);
    for (Eigen::Index i = 0; i < n; ++i)
      for (int o = 0; o < outputs; ++o) g(i * outputs + o) = dloss_df(i, o);
    const Eigen::MatrixXd kernel = j * j.transpose();
    check.predicted_delta = -eta * (kernel * g);
  }

  NetworkState stepped = state;
  stepped.params -= eta * loss_and_grad(state, inputs, targets, kind).grad;
  const Eigen::MatrixXd after = forward(stepped, inputs);
  const Eigen::MatrixXd diff = after - before;
  check.actual_delta.resize(n * outputs);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int o = 0; o < outputs; ++o) check.actual_delta(i * outputs + o) = diff(i, o);

  const double denom = check.actual_delta.norm();
  if (denom == 0.0) {
    check.degenerate = true;
    check.rel_err = std::numeric_limits<double>::quiet_NaN();
  } else {
    check.rel_err = (check.predicted_delta - check.actual_delta).norm() / denom;
  }
  return check;
}

}  // namespace ntkcv
