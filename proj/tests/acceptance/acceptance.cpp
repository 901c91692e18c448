// Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
// if any selected criterion fails. Usage: ntkcv_acceptance [criterion ...]

#include "oracles.hpp"

#include "ntkcv/experiments.hpp"
#include "ntkcv/ntk.hpp"
#include "ntkcv/rnd.hpp"
#include "ntkcv/seeding.hpp"
#include "ntkcv/spectrum.hpp"
#include "ntkcv/stats.hpp"
#include "ntkcv/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace ntkcv;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double max_rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& ref) {
  return (a - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff();
}

Config data_config(const char* preset) {
  Config cfg = Config::from_preset(preset);
  cfg.set("data_dir", NTKCV_TEST_DATA_DIR);
  return cfg;
}

Outcome criterion_1() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> width(1, 16), depth(1, 3), in_width(2, 6), out_width(1, 3);
  double worst_fd = 0.0, worst_pair = 0.0;
  int nets = 0;
  while (nets < 8) {
    NetworkSpec spec;
    spec.layer_widths.push_back(in_width(rng));
    const int hidden = depth(rng);
    for (int h = 0; h < hidden; ++h) spec.layer_widths.push_back(width(rng));
    spec.layer_widths.push_back(out_width(rng));
    spec.parametrization = nets % 2 ? Parametrization::ntk : Parametrization::lecun;
    spec.activation = nets % 4 == 3 ? Activation::linear : Activation::relu;
    if (spec.param_count() > 2000) continue;
    const NetworkState state = init_network(spec, rng());
    const Eigen::MatrixXd x = oracles::random_matrix(8, spec.input_width(), rng);
    if (oracles::kink_distance(state, x) < 1e-3) continue;
    const Eigen::MatrixXd fd = oracles::fd_ntk(state, x);
    const Eigen::MatrixXd pair = oracles::pairwise_ntk(state, x);
    for (auto method : {NtkMethod::jacobian_gram, NtkMethod::layer_factorized}) {
      const Eigen::MatrixXd theta = compute_ntk(state, x, {method}).entries;
      worst_fd = std::max(worst_fd, oracles::rel_frobenius(theta, fd));
      worst_pair = std::max(worst_pair, max_rel(theta, pair));
    }
    ++nets;
  }
  return {worst_fd < 1e-4 && worst_pair < 1e-10,
          fmt("%d architectures, max rel err vs finite differences %.2e (< 1e-4), vs pairwise sum %.2e (< 1e-10)",
              nets, worst_fd, worst_pair)};
}

Outcome criterion_2() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    NetworkSpec spec{{5, 1}, Activation::linear, Parametrization::lecun, false};
    const NetworkState state = init_network(spec, rng());
    const Eigen::MatrixXd x = oracles::random_matrix(12, 5, rng);
    const Eigen::MatrixXd expected = x * x.transpose();
    for (auto method : {NtkMethod::jacobian_gram, NtkMethod::layer_factorized})
      worst = std::max(worst, max_rel(compute_ntk(state, x, {method}).entries, expected));
  }
  return {worst < 1e-12, fmt("10 random X (12 x 5), max rel err vs X X^T %.2e (< 1e-12)", worst)};
}

Outcome criterion_3() {
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> size(2, 20);
  double worst_trace = 0.0, worst_scale = 0.0, worst_dup = 0.0;
  bool entropy_in_range = true;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = size(rng);
    const int rank = std::uniform_int_distribution<int>(1, n + 3)(rng);
    const Eigen::MatrixXd a = oracles::random_psd(n, rank, rng);
    const auto eig = symmetric_eigenvalues(a);
    double sum = 0.0;
    for (double e : eig) sum += e;
    worst_trace = std::max(worst_trace, std::abs(sum - a.trace()) / a.trace());
    const double h = von_neumann_entropy(eig);
    if (h < 0.0 || h > std::log(static_cast<double>(n)) + 1e-12) entropy_in_range = false;
    for (double c : {1e-3, 7.5, 1e4}) {
      const auto scaled = symmetric_eigenvalues(c * a);
      worst_scale = std::max(worst_scale, std::abs(von_neumann_entropy(scaled) - h));
    }
    // Duplicate a row of the factor: the Gram matrix gains a zero eigenvalue.
    Eigen::MatrixXd b = oracles::random_matrix(n, n, rng);
    b.row(n - 1) = b.row(0);
    const Eigen::MatrixXd dup = b * b.transpose();
    const auto dup_eig = symmetric_eigenvalues(dup);
    worst_dup = std::max(worst_dup, std::abs(dup_eig.back()) / dup.trace());
  }
  return {worst_trace < 1e-8 && entropy_in_range && worst_scale < 1e-10 && worst_dup <= 1e-8,
          fmt("100 matrices: |sum - trace|/trace %.1e, entropy in [0, ln N] %s, scaling drift %.1e, "
              "duplicate-row smallest eigenvalue/trace %.1e",
              worst_trace, entropy_in_range ? "yes" : "NO", worst_scale, worst_dup)};
}

Outcome criterion_4() {
  std::mt19937_64 rng(404);
  double linear_err = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    NetworkSpec spec{{4, 1}, Activation::linear, Parametrization::lecun};
    const NetworkState state = init_network(spec, rng());
    const Eigen::MatrixXd x = oracles::random_matrix(10, 4, rng);
    const Eigen::MatrixXd y = oracles::random_matrix(10, 1, rng);
    linear_err = std::max(linear_err, linearized_step_check(state, x, y, LossKind::mse, 1e-2).rel_err);
  }
  NetworkSpec spec{{4, 8, 8, 1}, Activation::relu, Parametrization::lecun};
  double relu_err = 0.0, relu_half = 0.0;
  bool decreases = true;
  for (int trial = 0; trial < 5;) {
    const NetworkState state = init_network(spec, rng());
    const Eigen::MatrixXd x = oracles::random_matrix(10, 4, rng);
    const Eigen::MatrixXd y = oracles::random_matrix(10, 1, rng);
    if (oracles::kink_distance(state, x) < 1e-3) continue;
    ++trial;
    const double e1 = linearized_step_check(state, x, y, LossKind::mse, 1e-4).rel_err;
    const double e2 = linearized_step_check(state, x, y, LossKind::mse, 5e-5).rel_err;
    relu_err = std::max(relu_err, e1);
    relu_half = std::max(relu_half, e2);
    if (!(e2 < e1)) decreases = false;
  }
  return {linear_err < 1e-12 && relu_err < 1e-2 && decreases,
          fmt("linear+MSE rel err %.1e (< 1e-12); relu (8,8,1) rel err %.2e at eta 1e-4 (< 1e-2), "
              "%.2e at eta/2, decreases in every trial: %s",
              linear_err, relu_err, relu_half, decreases ? "yes" : "NO")};
}

Outcome criterion_5() {
  const Config cfg = data_config("clusters");
  int rnd_hits = 0, random_hits = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Dataset ds = make_synthetic_clusters(4, 10, 10.0, 0.1, trial);
    const Eigen::VectorXd labels = ds.targets.col(0);
    ds = standardize(ds).train;
    RndConfig rc;
    rc.embedding_spec = network_spec_from(cfg, 2, "embedding");
    rc.target_size = 4;
    rc.retrain_epochs = static_cast<int>(cfg.get_int("retrain_epochs"));
    rc.retrain_lr = cfg.get_double("retrain_lr");
    rc.seed = derive_seed(trial, SeedStream::select);
    const auto distinct = [&](const SelectionResult& r) {
      std::set<int> clusters;
      for (auto i : r.chosen_indices) clusters.insert(static_cast<int>(labels[static_cast<Eigen::Index>(i)]));
      return clusters.size() == 4;
    };
    rnd_hits += distinct(select_rnd(ds.inputs, rc));
    random_hits += distinct(select_random(ds.size(), 4, rc.seed));
  }
  return {rnd_hits >= 95 && random_hits <= 60,
          fmt("4 distinct clusters: rnd %d/100 (>= 95), random %d/100 (<= 60)", rnd_hits, random_hits)};
}

ComparisonResult fuel_comparison(unsigned workers = 0) {
  Config cfg = data_config("fuel");
  cfg.set("workers", std::to_string(workers));
  const PreparedData data = prepare_data(cfg);
  return run_rnd_comparison(data, ComparisonSettings::from(cfg, data));
}

CorrelationResult fuel_correlation(unsigned workers = 0) {
  Config cfg = data_config("fuel-dense");
  cfg.set("workers", std::to_string(workers));
  const PreparedData data = prepare_data(cfg);
  return run_correlation_experiment(data, CorrelationSettings::from(cfg, data));
}

Outcome criterion_6() {
  const auto result = fuel_comparison();
  int sizes_ok = 0;
  std::string per_size;
  for (std::size_t p = 0; p + 1 < result.points.size(); p += 2) {
    const auto& rnd = result.points[p];
    const auto& rand = result.points[p + 1];
    const bool ok = rnd.min_test_loss.mean <= rand.min_test_loss.mean;
    sizes_ok += ok;
    per_size += fmt(" %zu:%.4f/%.4f", rnd.dataset_size, rnd.min_test_loss.mean, rand.min_test_loss.mean);
  }
  // Paired differences random - rnd over every (size, repetition); both arms
  // share the run seed, so pairs differ only in the selected data.
  std::vector<double> diff;
  const std::size_t ensemble = result.points.front().ensemble_count;
  for (std::size_t s = 0; s < result.records.size(); s += 2 * ensemble)
    for (std::size_t r = 0; r < ensemble; ++r) {
      const auto& a = result.records[s + r];
      const auto& b = result.records[s + ensemble + r];
      if (!a.diverged && !b.diverged) diff.push_back(b.min_test_loss - a.min_test_loss);
    }
  const double d_mean = mean(diff);
  const double t = d_mean / standard_error(diff);
  return {sizes_ok >= 2 && d_mean > 0.0,
          fmt("mean min_test_loss rnd/random per size:%s; rnd <= random at %d/3 sizes (>= 2); pooled "
              "paired mean(random - rnd) = %.4f (> 0), t = %.2f",
              per_size.c_str(), sizes_ok, d_mean, t)};
}

Outcome criterion_7() {
  const auto result = fuel_comparison();
  bool ok = true;
  std::string per_size;
  for (std::size_t p = 0; p + 1 < result.points.size(); p += 2) {
    const auto& rnd = result.points[p];
    const auto& rand = result.points[p + 1];
    const bool entropy_ok = rnd.starting_entropy.mean >= rand.starting_entropy.mean - rand.starting_entropy.standard_error;
    const bool trace_ok = rnd.starting_trace.mean >= rand.starting_trace.mean - rand.starting_trace.standard_error;
    const bool strict = rnd.starting_entropy.mean > rand.starting_entropy.mean ||
                        rnd.starting_trace.mean > rand.starting_trace.mean;
    ok = ok && entropy_ok && trace_ok && strict;
    per_size += fmt(" %zu: entropy %.3f vs %.3f+-%.3f, trace %.1f vs %.1f+-%.1f;", rnd.dataset_size,
                    rnd.starting_entropy.mean, rand.starting_entropy.mean, rand.starting_entropy.standard_error,
                    rnd.starting_trace.mean, rand.starting_trace.mean, rand.starting_trace.standard_error);
  }
  return {ok, "rnd vs random (mean, random SE)" + per_size};
}

Outcome criterion_8() {
  const auto result = fuel_correlation();
  if (!result.correlation) return {false, "insufficient data: " + result.insufficient_reason};
  const auto& m = *result.correlation;
  const auto at = [&](const std::string& a, const std::string& b) -> double {
    std::size_t i = 0, j = 0;
    for (std::size_t k = 0; k < m.variable_names.size(); ++k) {
      if (m.variable_names[k] == a) i = k;
      if (m.variable_names[k] == b) j = k;
    }
    return m.entries[i][j].value_or(std::nan(""));
  };
  const double tr_test = at("starting_trace", "min_test_loss");
  const double en_test = at("starting_entropy", "min_test_loss");
  const double tr_train = at("starting_trace", "min_train_loss");
  return {tr_test < 0.0 && en_test < 0.0 && tr_train > 0.0,
          fmt("%zu runs (%zu diverged): r(trace, min_test) = %.3f (< 0), r(entropy, min_test) = %.3f (< 0), "
              "r(trace, min_train) = %.3f (> 0)",
              result.records.size(), result.diverged_count, tr_test, en_test, tr_train)};
}

Outcome criterion_9() {
  const auto corr = fuel_correlation();
  double best = INFINITY;
  for (const auto& r : corr.records)
    if (!r.diverged) best = std::min(best, r.min_test_loss);

  Config cfg = data_config("mnist-dense");
  cfg.set("mnist_subset", "2500");
  cfg.set("test_count", "500");
  const PreparedData data = prepare_data(cfg);
  const auto spec = network_spec_from(cfg, data.pool.input_width());
  const auto record = run_training_job(spec, train_config_from(cfg, data.pool.task), data.pool, data.test,
                                       cfg.get_u64("master_seed"), cfg.get_u64("ntk_max"));
  const double acc = record.max_accuracy.value_or(0.0);
  return {best <= 0.10 && acc >= 90.0,
          fmt("fuel-dense best min_test_loss over %zu runs %.4f (<= 0.10); MNIST-dense %zu train / %zu test "
              "max accuracy %.1f%% (>= 90)",
              corr.records.size(), best, data.pool.size(), data.test.size(), acc)};
}

Outcome criterion_10() {
  const std::string cmp_a = records_csv(fuel_comparison(1).records);
  const std::string cmp_b = records_csv(fuel_comparison(3).records);
  const std::string cor_a = records_csv(fuel_correlation(1).records);
  const std::string cor_b = records_csv(fuel_correlation(3).records);
  const bool ok = cmp_a == cmp_b && cor_a == cor_b;
  return {ok, fmt("comparison records.csv identical across reruns (1 vs 3 workers): %s (%zu bytes); correlation "
                  "records.csv identical: %s (%zu bytes)",
                  cmp_a == cmp_b ? "yes" : "NO", cmp_a.size(), cor_a == cor_b ? "yes" : "NO", cor_a.size())};
}

struct Criterion {
  int id;
  double runtime_limit_s;  // 0 = none stated
  Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, 10, criterion_1},  {2, 1, criterion_2},   {3, 5, criterion_3},   {4, 5, criterion_4},
      {5, 120, criterion_5}, {6, 900, criterion_6}, {7, 900, criterion_7}, {8, 1200, criterion_8},
      {9, 0, criterion_9},   {10, 0, criterion_10},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = fmt("%.2f s", secs);
    if (c.runtime_limit_s > 0) {
      timing += fmt(" (limit %.0f s)", c.runtime_limit_s);
      if (secs >= c.runtime_limit_s) {
        outcome.pass = false;
        outcome.detail += "; runtime limit exceeded";
      }
    }
    std::cout << "criterion " << c.id << ": " << (outcome.pass ? "PASS" : "FAIL") << " [" << timing << "] "
              << outcome.detail << std::endl;
    failures += !outcome.pass;
  }
  return failures == 0 ? 0 : 1;
}
