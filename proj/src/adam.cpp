#include "ntkcv/adam.hpp"

#include "ntkcv/error.hpp"

#include <cmath>

namespace ntkcv {

void AdamConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ValidationError("learning_rate must be >= 0");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ValidationError("beta1 must lie in (0,1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ValidationError("beta2 must lie in (0,1)");
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be > 0");
}

AdamState AdamState::zeros(std::size_t param_count) {
  const auto p = static_cast<Eigen::Index>(param_count);
  return {Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(p), 0};
}

void adam_update(NetworkState& state, const Eigen::VectorXd& grad, AdamState& opt,
                 const AdamConfig& cfg) {
  const Eigen::Index p = state.params.size();
  if (grad.size() != p) throw DimensionError("gradient length does not match parameter count");
  if (opt.m.size() != p || opt.v.size() != p) opt = AdamState::zeros(static_cast<std::size_t>(p));

  ++opt.step;
  opt.m = cfg.beta1 * opt.m + (1.0 - cfg.beta1) * grad;
  opt.v = cfg.beta2 * opt.v + (1.0 - cfg.beta2) * grad.cwiseAbs2();
  const double t = static_cast<double>(opt.step);
  const double m_corr = 1.0 / (1.0 - std::pow(cfg.beta1, t));
  const double v_corr = 1.0 / (1.0 - std::pow(cfg.beta2, t));
  state.params.array() -= cfg.learning_rate * (opt.m.array() * m_corr) /
                          ((opt.v.array() * v_corr).sqrt() + cfg.epsilon);
  ++state.optimizer_steps;
}

std::pair<NetworkState, AdamState> adam_step(NetworkState state, const Eigen::VectorXd& grad,
                                             AdamState opt, const AdamConfig& cfg) {
  adam_update(state, grad, opt, cfg);
  return {std::move(state), std::move(opt)};
}

}  // namespace ntkcv
