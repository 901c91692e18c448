#pragma once

#include "ntkcv/network.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <utility>

namespace ntkcv {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

// First/second moment estimates and the number of updates taken.
struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::uint64_t step = 0;

  static AdamState zeros(std::size_t param_count);
};

/// Bias-corrected ADAM update applied in place.
void adam_update(NetworkState& state, const Eigen::VectorXd& grad, AdamState& opt,
                 const AdamConfig& cfg);

std::pair<NetworkState, AdamState> adam_step(NetworkState state, const Eigen::VectorXd& grad,
                                             AdamState opt, const AdamConfig& cfg);

}  // namespace ntkcv
