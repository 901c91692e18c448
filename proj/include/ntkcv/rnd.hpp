#pragma once

#include "ntkcv/dataset.hpp"
#include "ntkcv/network.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace ntkcv {

enum class SelectionMethod { rnd, random };
std::string_view to_string(SelectionMethod m);
SelectionMethod parse_selection_method(std::string_view s);

enum class SelectionMode {
  // Pick the pool point with the largest distance, S times.
  greedy,
  // Scan the pool in index order and accept a point when its distance
  // exceeds `threshold`; stops at S accepted points or the end of the pool.
  threshold,
};

struct RndConfig {
  // Shared by the frozen target and the trained predictor.
  NetworkSpec embedding_spec;
  std::size_t target_size = 0;
  int retrain_epochs = 50;
  double retrain_lr = 1e-3;
  std::uint64_t seed = 0;
  SelectionMode mode = SelectionMode::greedy;
  double threshold = 0.0;

  void validate(std::size_t pool_size) const;
};

struct SelectionResult {
  std::vector<std::size_t> chosen_indices;
  // Distance of each chosen point at the moment it was chosen.
  std::vector<double> step_distances;
  SelectionMethod method = SelectionMethod::rnd;
};

struct RndNetworks {
  NetworkState target;
  NetworkState predictor;
};

/// Target and predictor drawn from independent seed streams of cfg.seed.
RndNetworks init_rnd_networks(const RndConfig& cfg);

/// Mean over embedding dimensions of (target(p) - predictor(p))^2.
double rnd_distance(const NetworkState& target, const NetworkState& predictor,
                    std::span<const double> point);
Eigen::VectorXd rnd_distances(const NetworkState& target, const NetworkState& predictor,
                              const Eigen::MatrixXd& points);

/// Greedy RND selection. After each pick the predictor is warm-started and
/// trained for retrain_epochs full-batch ADAM steps on the chosen inputs with
/// the target's embeddings as labels. Already chosen indices are excluded from
/// the argmax; ties go to the lowest index.
SelectionResult select_rnd(const Eigen::MatrixXd& pool, const RndConfig& cfg);
SelectionResult select_rnd(const Eigen::MatrixXd& pool, const RndConfig& cfg, RndNetworks nets);
SelectionResult select_rnd(const Dataset& pool, const RndConfig& cfg);

/// Uniform sample of `target_size` distinct indices from [0, pool_size).
SelectionResult select_random(std::size_t pool_size, std::size_t target_size, std::uint64_t seed);

nlohmann::json to_json(const SelectionResult& r);
nlohmann::json to_json(const RndConfig& cfg);

}  // namespace ntkcv
