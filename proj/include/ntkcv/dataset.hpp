#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ntkcv {

enum class Task { regression, classification };

std::string_view to_string(Task t);

struct LoadReport {
  std::size_t rows_read = 0;     // data rows in the source (header excluded)
  std::size_t rows_dropped = 0;  // rows removed by the missing-value policy or unparseable
  std::vector<std::size_t> dropped_lines;  // 1-based file line numbers
  std::size_t cells_imputed = 0;
};

/// Regression targets are N x t; classification targets are N x 1 class
/// indices in [0, num_classes).
struct Dataset {
  std::string name;
  Task task = Task::regression;
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;
  int num_classes = 0;
  // False for inputs that are already on a fixed scale (MNIST pixels).
  bool standardize_inputs = true;
  LoadReport report;

  std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
  int input_width() const { return static_cast<int>(inputs.cols()); }
  // Network output width needed for this task.
  int output_width() const;
  void validate() const;

  Dataset subset(const std::vector<std::size_t>& indices) const;
};

enum class MissingPolicy { drop, mean };

struct CsvSchema {
  std::string name;
  Task task = Task::regression;
  // Empty means every column that is not a target or ignored.
  std::vector<std::string> feature_columns;
  std::vector<std::string> target_columns;
  std::vector<std::string> ignored_columns;
  MissingPolicy missing = MissingPolicy::drop;
  // Published shape checks: rows in the source file and numeric columns
  // consumed (features + target columns).
  std::optional<std::size_t> expected_rows;
  std::optional<std::size_t> expected_columns;
};

/// Schema for one of the named tabular datasets: "fuel", "gait", "concrete".
CsvSchema named_schema(std::string_view name);

/// Reads a headered CSV. Cells that are empty, "?", "NA" or "nan" are missing
/// and handled by the schema's policy; rows with the wrong field count are
/// dropped and reported; any other non-numeric cell is a DataError.
Dataset load_csv_tabular(const std::filesystem::path& path, const CsvSchema& schema);

/// IDX image/label files (magic 2051 / 2049, optionally gzip-compressed).
/// Pixels are scaled to [0,1]; `subset` rows are drawn uniformly without
/// replacement (0 keeps all rows, still permuted by `seed`).
Dataset load_mnist_idx(const std::filesystem::path& images_path,
                       const std::filesystem::path& labels_path, std::size_t subset,
                       std::uint64_t seed);

/// Column statistics taken from a training set.
struct Standardizer {
  Eigen::RowVectorXd input_mean, input_scale;
  Eigen::RowVectorXd target_mean, target_scale;
  bool inputs_enabled = false;
  bool targets_enabled = false;

  Dataset apply(const Dataset& ds) const;
  Eigen::MatrixXd inverse_targets(const Eigen::MatrixXd& standardized) const;
};

Standardizer fit_standardizer(const Dataset& train);

struct Standardized {
  Dataset train;
  std::vector<Dataset> others;
  Standardizer stats;
};

/// Zero-mean unit-variance (population) scaling with train statistics only.
/// Constant columns map to 0. Regression targets are standardized too.
Standardized standardize(const Dataset& train, const std::vector<Dataset>& others = {});

struct SplitSpec {
  std::size_t test_count = 0;
  std::uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<std::size_t> pool;
  std::vector<std::size_t> test;
};

SplitIndices split_indices(std::size_t n, const SplitSpec& spec);
std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

/// k Gaussian blobs in 2D whose centers sit on a regular polygon with side
/// `separation`; labels are the cluster index.
Dataset make_synthetic_clusters(int k, int per_cluster, double separation, double noise,
                                std::uint64_t seed);

/// y = x . w + noise with standard normal x and w.
Dataset make_synthetic_linear(std::size_t n, int features, double noise, std::uint64_t seed);

}  // namespace ntkcv
