#pragma once

#include "ntkcv/adam.hpp"
#include "ntkcv/dataset.hpp"
#include "ntkcv/network.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace ntkcv {

struct TrainConfig {
  int epochs = 100;
  std::size_t batch_size = 0;  // 0 = full batch
  AdamConfig adam;
  LossKind loss = LossKind::mse;
  int eval_every = 1;
  std::uint64_t seed = 0;  // mini-batch shuffling

  void validate() const;
};

struct TrainOutcome {
  double min_test_loss = 0.0;
  double final_test_loss = 0.0;
  double min_train_loss = 0.0;
  double final_train_loss = 0.0;
  std::optional<double> max_accuracy;  // percent; classification only
  std::vector<int> eval_epochs;
  std::vector<double> train_loss_curve;
  std::vector<double> test_loss_curve;
  std::vector<double> accuracy_curve;
  bool diverged = false;
  int epochs_completed = 0;

  nlohmann::json to_json() const;
};

/// ADAM training with per-epoch deterministic shuffling. Losses are evaluated
/// at epoch 0, every eval_every epochs and at the last epoch. A non-finite loss
/// stops the run and sets `diverged`; the curves up to that point are kept.
std::pair<NetworkState, TrainOutcome> train(NetworkState state, const Dataset& train_set,
                                            const Dataset& test_set, const TrainConfig& cfg);

struct LinearizedCheck {
  Eigen::VectorXd predicted_delta;  // -eta * Theta * dL/df, flattened (sample, output)
  Eigen::VectorXd actual_delta;     // f(theta - eta grad) - f(theta)
  double rel_err = 0.0;
  bool degenerate = false;          // actual_delta is zero; rel_err undefined
};

/// Compares one plain gradient-descent step against the kernel prediction
/// df_i = -eta sum_j Theta_ij dL/df_j. Single-output networks use the N x N
/// NTK; multi-output networks use the full (N*O) x (N*O) kernel.
LinearizedCheck linearized_step_check(const NetworkState& state, const Eigen::MatrixXd& inputs,
                                      const Eigen::MatrixXd& targets, LossKind kind,
                                      double eta = 1e-4);

}  // namespace ntkcv
