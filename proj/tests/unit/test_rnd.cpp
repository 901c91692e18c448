#include "oracles.hpp"

#include "ntkcv/error.hpp"
#include "ntkcv/rnd.hpp"

#include <doctest.h>

#include <set>

using namespace ntkcv;

namespace {

RndConfig small_config(std::size_t size, std::uint64_t seed = 0) {
  RndConfig cfg;
  cfg.embedding_spec = NetworkSpec{{2, 16, 4}, Activation::relu, Parametrization::lecun};
  cfg.target_size = size;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("rnd distance formula") {
  // Two linear 1 -> 2 maps with hand-set parameters: embeddings (1,2) and (1,0).
  NetworkState target{NetworkSpec{{1, 2}, Activation::linear}, Eigen::VectorXd(4), 0};
  NetworkState predictor = target;
  target.params << 1, 2, 0, 0;
  predictor.params << 1, 0, 0, 0;
  const std::vector<double> point{1.0};
  CHECK(rnd_distance(target, predictor, point) == 2.0);
  CHECK(rnd_distance(target, target, point) == 0.0);
}

TEST_CASE("identical predictor falls back to index order") {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd pool = oracles::random_matrix(10, 2, rng);
  RndConfig cfg = small_config(4);
  auto nets = init_rnd_networks(cfg);
  nets.predictor = nets.target;
  const auto r = select_rnd(pool, cfg, nets);
  // All distances stay exactly zero, since the predictor starts at the target
  // and retraining on zero residuals has zero gradient.
  CHECK(r.chosen_indices == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(r.step_distances == std::vector<double>(4, 0.0));
}

TEST_CASE("greedy selection picks the argmax and never repeats") {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd pool = oracles::random_matrix(30, 2, rng);
  const RndConfig cfg = small_config(12, 5);
  const auto nets = init_rnd_networks(cfg);
  const auto r = select_rnd(pool, cfg, nets);
  REQUIRE(r.chosen_indices.size() == 12);
  CHECK(std::set<std::size_t>(r.chosen_indices.begin(), r.chosen_indices.end()).size() == 12);
  CHECK(r.method == SelectionMethod::rnd);

  // The first pick is the argmax of the untrained distances, and the recorded
  // distance equals the distance at selection time.
  const Eigen::VectorXd d0 = rnd_distances(nets.target, nets.predictor, pool);
  Eigen::Index best = 0;
  d0.maxCoeff(&best);
  CHECK(r.chosen_indices.front() == static_cast<std::size_t>(best));
  CHECK(r.step_distances.front() == d0[best]);

  CHECK(select_rnd(pool, cfg).chosen_indices == r.chosen_indices);
  CHECK(select_rnd(pool, small_config(12, 6)).chosen_indices != r.chosen_indices);
}

TEST_CASE("selecting the whole pool returns every index") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd pool = oracles::random_matrix(8, 2, rng);
  auto r = select_rnd(pool, small_config(8));
  std::sort(r.chosen_indices.begin(), r.chosen_indices.end());
  CHECK(r.chosen_indices == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7});
  auto q = select_random(8, 8, 1);
  std::sort(q.chosen_indices.begin(), q.chosen_indices.end());
  CHECK(q.chosen_indices == r.chosen_indices);
}

TEST_CASE("threshold mode scans in index order") {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd pool = oracles::random_matrix(20, 2, rng);
  RndConfig cfg = small_config(20);
  cfg.mode = SelectionMode::threshold;
  cfg.threshold = 0.0;
  auto nets = init_rnd_networks(cfg);
  // Any positive distance passes a zero threshold; the scan is in index order.
  const auto r = select_rnd(pool, cfg, nets);
  CHECK(std::is_sorted(r.chosen_indices.begin(), r.chosen_indices.end()));
  for (double d : r.step_distances) CHECK(d > 0.0);

  cfg.threshold = 1e300;
  CHECK(select_rnd(pool, cfg, nets).chosen_indices.empty());
}

TEST_CASE("selection validation") {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd pool = oracles::random_matrix(3, 2, rng);
  CHECK_THROWS_AS(select_rnd(pool, small_config(5)), ValidationError);
  CHECK_THROWS_AS(select_rnd(pool, small_config(0)), ValidationError);
  RndConfig cfg = small_config(2);
  cfg.retrain_epochs = 0;
  CHECK_THROWS_AS(select_rnd(pool, cfg), ValidationError);
  CHECK_THROWS_AS(select_rnd(oracles::random_matrix(3, 3, rng), small_config(2)), DimensionError);
  CHECK_THROWS_AS(select_random(3, 5, 0), ValidationError);
  CHECK_THROWS_AS(parse_selection_method("coreset"), ValidationError);
}

TEST_CASE("random selection is uniform and deterministic") {
  const auto a = select_random(50, 10, 7);
  CHECK(a.chosen_indices == select_random(50, 10, 7).chosen_indices);
  CHECK(std::set<std::size_t>(a.chosen_indices.begin(), a.chosen_indices.end()).size() == 10);
  // Each index is drawn with probability 10/50; over 2000 seeds the count for
  // index 0 has mean 400 and standard deviation about 17.9.
  int hits = 0;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    const auto r = select_random(50, 10, s);
    hits += std::count(r.chosen_indices.begin(), r.chosen_indices.end(), std::size_t{0});
  }
  CHECK(std::abs(hits - 400) < 90);
}

TEST_CASE("selection json") {
  const auto r = select_random(5, 2, 1);
  const auto j = to_json(r);
  CHECK(j["method"] == "random");
  CHECK(j["indices"].size() == 2);
  CHECK(to_json(small_config(3))["embedding_widths"] == nlohmann::json({2, 16, 4}));
}
