#include "ntkcv/rnd.hpp"

#include "ntkcv/adam.hpp"
#include "ntkcv/error.hpp"
#include "ntkcv/seeding.hpp"

#include <numeric>
#include <random>
#include <string>

namespace ntkcv {

std::string_view to_string(SelectionMethod m) { return m == SelectionMethod::rnd ? "rnd" : "random"; }

SelectionMethod parse_selection_method(std::string_view s) {
  if (s == "rnd") return SelectionMethod::rnd;
  if (s == "random") return SelectionMethod::random;
  throw ValidationError("unknown selection method '" + std::string(s) + "' (expected rnd|random)");
}

void RndConfig::validate(std::size_t pool_size) const {
  embedding_spec.validate();
  if (pool_size == 0) throw ValidationError("selection pool is empty");
  if (target_size == 0) throw ValidationError("target size must be >= 1");
  if (target_size > pool_size)
    throw ValidationError("target size " + std::to_string(target_size) + " exceeds pool size " +
                          std::to_string(pool_size));
  if (retrain_epochs < 1) throw ValidationError("retrain_epochs must be >= 1");
  if (!(retrain_lr > 0.0)) throw ValidationError("retrain_lr must be > 0");
}

RndNetworks init_rnd_networks(const RndConfig& cfg) {
  return {init_network(cfg.embedding_spec, derive_seed(cfg.seed, 0)),
          init_network(cfg.embedding_spec, derive_seed(cfg.seed, 1))};
}

Eigen::VectorXd rnd_distances(const NetworkState& target, const NetworkState& predictor,
                              const Eigen::MatrixXd& points) {
  if (target.spec.output_width() != predictor.spec.output_width())
    throw DimensionError("target and predictor embedding widths differ");
  const Eigen::MatrixXd diff = forward(target, points) - forward(predictor, points);
  return diff.array().square().rowwise().mean();
}

double rnd_distance(const NetworkState& target, const NetworkState& predictor,
                    std::span<const double> point) {
  const Eigen::MatrixXd x = Eigen::Map<const Eigen::RowVectorXd>(
      point.data(), static_cast<Eigen::Index>(point.size()));
  return rnd_distances(target, predictor, x)(0);
}

namespace {

void retrain_predictor(NetworkState& predictor, const Eigen::MatrixXd& inputs,
                       const Eigen::MatrixXd& embeddings, const RndConfig& cfg) {
  AdamConfig adam;
  adam.learning_rate = cfg.retrain_lr;
  auto opt = AdamState::zeros(predictor.param_count());
  for (int e = 0; e < cfg.retrain_epochs; ++e) {
    const auto lg = loss_and_grad(predictor, inputs, embeddings, LossKind::mse);
    adam_update(predictor, lg.grad, opt, adam);
  }
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t r = 0; r < idx.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(idx[r]));
  return out;
}

}  // namespace

SelectionResult select_rnd(const Eigen::MatrixXd& pool, const RndConfig& cfg, RndNetworks nets) {
  cfg.validate(static_cast<std::size_t>(pool.rows()));
  if (pool.cols() != cfg.embedding_spec.input_width())
    throw DimensionError("pool width " + std::to_string(pool.cols()) +
                         " does not match embedding input width " +
                         std::to_string(cfg.embedding_spec.input_width()));

  const Eigen::MatrixXd target_embeddings = forward(nets.target, pool);
  SelectionResult result;
  result.method = SelectionMethod::rnd;
  std::vector<bool> taken(static_cast<std::size_t>(pool.rows()), false);

  const auto add = [&](std::size_t index, double distance) {
    taken[index] = true;
    result.chosen_indices.push_back(index);
    result.step_distances.push_back(distance);
    if (result.chosen_indices.size() == cfg.target_size) return;
    const Eigen::MatrixXd chosen = rows_of(pool, result.chosen_indices);
    retrain_predictor(nets.predictor, chosen, forward(nets.target, chosen), cfg);
  };

  if (cfg.mode == SelectionMode::greedy) {
    while (result.chosen_indices.size() < cfg.target_size) {
      const Eigen::VectorXd d =
          (target_embeddings - forward(nets.predictor, pool)).array().square().rowwise().mean();
      std::size_t best = taken.size();
      for (std::size_t i = 0; i < taken.size(); ++i) {
        if (taken[i]) continue;
        if (best == taken.size() || d(static_cast<Eigen::Index>(i)) > d(static_cast<Eigen::Index>(best)))
          best = i;
      }
      add(best, d(static_cast<Eigen::Index>(best)));
    }
  } else {
    for (std::size_t i = 0; i < taken.size() && result.chosen_indices.size() < cfg.target_size; ++i) {
      const Eigen::MatrixXd point = pool.row(static_cast<Eigen::Index>(i));
      const double d = rnd_distances(nets.target, nets.predictor, point)(0);
      if (d > cfg.threshold) add(i, d);
    }
  }
  return result;
}

SelectionResult select_rnd(const Eigen::MatrixXd& pool, const RndConfig& cfg) {
  cfg.embedding_spec.validate();
  return select_rnd(pool, cfg, init_rnd_networks(cfg));
}

SelectionResult select_rnd(const Dataset& pool, const RndConfig& cfg) {
  return select_rnd(pool.inputs, cfg);
}

SelectionResult select_random(std::size_t pool_size, std::size_t target_size, std::uint64_t seed) {
  if (pool_size == 0) throw ValidationError("selection pool is empty");
  if (target_size > pool_size)
    throw ValidationError("target size " + std::to_string(target_size) + " exceeds pool size " +
                          std::to_string(pool_size));
  std::vector<std::size_t> order(pool_size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first target_size slots form the sample.
  for (std::size_t i = 0; i < target_size; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool_size - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  order.resize(target_size);
  return {std::move(order), std::vector<double>(target_size, 0.0), SelectionMethod::random};
}

nlohmann::json to_json(const SelectionResult& r) {
  return {{"method", to_string(r.method)},
          {"indices", r.chosen_indices},
          {"distances", r.step_distances}};
}

nlohmann::json to_json(const RndConfig& cfg) {
  return {{"embedding_widths", cfg.embedding_spec.layer_widths},
          {"activation", to_string(cfg.embedding_spec.activation)},
          {"parametrization", to_string(cfg.embedding_spec.parametrization)},
          {"target_size", cfg.target_size},
          {"retrain_epochs", cfg.retrain_epochs},
          {"retrain_lr", cfg.retrain_lr},
          {"seed", cfg.seed},
          {"mode", cfg.mode == SelectionMode::greedy ? "greedy" : "threshold"},
          {"threshold", cfg.threshold}};
}

}  // namespace ntkcv
