#pragma once

#include "ntkcv/config.hpp"
#include "ntkcv/dataset.hpp"
#include "ntkcv/network.hpp"
#include "ntkcv/ntk.hpp"
#include "ntkcv/rnd.hpp"
#include "ntkcv/stats.hpp"
#include "ntkcv/trainer.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ntkcv {

/// One training run. Starting values come from a network that has taken no
/// optimizer step.
struct ExperimentRecord {
  std::string run_id;
  std::uint64_t seed = 0;
  std::string dataset_name;
  std::size_t dataset_size = 0;
  Parametrization parametrization = Parametrization::lecun;
  double starting_entropy = 0.0;
  double starting_trace = 0.0;
  double max_eig_ratio = 0.0;
  double min_test_loss = 0.0;
  double final_test_loss = 0.0;
  double min_train_loss = 0.0;
  std::optional<double> max_accuracy;
  bool diverged = false;
};

/// Column order of records.csv.
const std::vector<std::string>& record_columns();
std::string records_csv(const std::vector<ExperimentRecord>& records);

/// Standardized selection/training pool and the fixed test set.
struct PreparedData {
  Dataset pool;
  Dataset test;
  Standardizer stats;
  std::vector<std::filesystem::path> input_files;
};

/// Loads the configured dataset, splits off `test_count` rows with
/// `split_seed`, and standardizes both parts with pool statistics.
PreparedData prepare_data(const Config& cfg);
/// Loads the configured dataset without splitting or standardizing.
Dataset load_configured_dataset(const Config& cfg, std::vector<std::filesystem::path>* files = nullptr);

NetworkSpec network_spec_from(const Config& cfg, int input_width, std::string_view widths_key = "architecture");
TrainConfig train_config_from(const Config& cfg, Task task);

/// Runs fn(0..count-1) on up to `workers` threads (0 = hardware concurrency).
/// The first exception by index is rethrown.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& fn);

/// Runs one seeded training job: initialize, measure the starting NTK on the
/// training set (first ntk_max rows), train, fill the record.
ExperimentRecord run_training_job(const NetworkSpec& spec, const TrainConfig& train_cfg,
                                  const Dataset& train_set, const Dataset& test_set,
                                  std::uint64_t run_seed, std::size_t ntk_max,
                                  const NtkOptions& ntk = {});

struct CorrelationSettings {
  NetworkSpec spec;
  TrainConfig train;
  std::size_t runs = 200;
  std::size_t size_min = 16;
  std::size_t size_max = 200;
  std::size_t ntk_max = 512;
  std::uint64_t master_seed = 0;
  unsigned workers = 0;

  static CorrelationSettings from(const Config& cfg, const PreparedData& data);
};

struct CorrelationResult {
  std::vector<ExperimentRecord> records;
  std::optional<CorrelationMatrix> correlation;
  std::string insufficient_reason;  // set when `correlation` is empty
  std::size_t diverged_count = 0;

  nlohmann::json correlation_json() const;
};

/// Variables entering the correlation matrix, in order.
std::vector<std::string> correlation_variables(Task task);

CorrelationResult run_correlation_experiment(const PreparedData& data, const CorrelationSettings& s);

struct Summary {
  double mean = 0.0;
  double standard_error = 0.0;
};

struct ComparisonPoint {
  std::size_t dataset_size = 0;
  SelectionMethod method = SelectionMethod::rnd;
  std::size_t ensemble_count = 0;
  Summary min_test_loss;
  Summary final_test_loss;
  Summary starting_entropy;
  Summary starting_trace;
};

const std::vector<std::string>& comparison_columns();
std::string comparison_csv(const std::vector<ComparisonPoint>& points);

struct ComparisonSettings {
  NetworkSpec spec;
  TrainConfig train;
  std::vector<std::size_t> sizes;
  std::size_t ensemble = 20;
  // Embedding network and retraining schedule; target_size and seed are set per run.
  RndConfig rnd;
  std::size_t ntk_max = 512;
  std::uint64_t master_seed = 0;
  unsigned workers = 0;

  static ComparisonSettings from(const Config& cfg, const PreparedData& data);
};

struct ComparisonResult {
  std::vector<ExperimentRecord> records;
  std::vector<ComparisonPoint> points;  // for each size: rnd, random
};

/// Seed of repetition `rep` at target size `size`. Shared by both methods so
/// the rnd and random arms use the same network initialization and shuffling.
std::uint64_t comparison_run_seed(std::uint64_t master_seed, std::size_t size, std::size_t rep);

ComparisonResult run_rnd_comparison(const PreparedData& data, const ComparisonSettings& s);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace ntkcv
