#include "ntkcv/dataset.hpp"

#include "ntkcv/error.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace ntkcv {

std::string_view to_string(Task t) {
  return t == Task::regression ? "regression" : "classification";
}

int Dataset::output_width() const {
  return task == Task::regression ? static_cast<int>(targets.cols()) : num_classes;
}

void Dataset::validate() const {
  if (inputs.rows() != targets.rows())
    throw DimensionError("dataset '" + name + "': inputs and targets disagree on row count");
  if (!inputs.allFinite() || !targets.allFinite())
    throw ValidationError("dataset '" + name + "' contains non-finite values");
  if (task == Task::classification) {
    if (targets.cols() != 1) throw DimensionError("classification targets must be N x 1");
    for (Eigen::Index i = 0; i < targets.rows(); ++i) {
      const double c = targets(i, 0);
      if (c < 0 || c >= num_classes || c != std::floor(c))
        throw ValidationError("dataset '" + name + "': class index out of range");
    }
  }
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Dataset out;
  out.name = name;
  out.task = task;
  out.num_classes = num_classes;
  out.standardize_inputs = standardize_inputs;
  out.inputs.resize(static_cast<Eigen::Index>(indices.size()), inputs.cols());
  out.targets.resize(static_cast<Eigen::Index>(indices.size()), targets.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= size()) throw DimensionError("subset index out of range");
    out.inputs.row(static_cast<Eigen::Index>(r)) = inputs.row(static_cast<Eigen::Index>(indices[r]));
    out.targets.row(static_cast<Eigen::Index>(r)) = targets.row(static_cast<Eigen::Index>(indices[r]));
  }
  return out;
}

CsvSchema named_schema(std::string_view name) {
  CsvSchema s;
  s.name = std::string(name);
  if (name == "fuel") {
    s.task = Task::regression;
    s.target_columns = {"mpg"};
    s.ignored_columns = {"car_name"};
    s.expected_rows = 398;
    s.expected_columns = 8;
  } else if (name == "gait") {
    s.task = Task::classification;
    s.target_columns = {"class"};
    s.expected_rows = 48;
    s.expected_columns = 328;
  } else if (name == "concrete") {
    s.task = Task::regression;
    s.target_columns = {"SLUMP(cm)", "FLOW(cm)", "Compressive Strength (28-day)(Mpa)"};
    s.ignored_columns = {"No"};
    s.expected_rows = 103;
    s.expected_columns = 10;
  } else {
    throw ValidationError("no named schema for dataset '" + std::string(name) + "'");
  }
  return s;
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "?" || cell == "NA" || cell == "nan" || cell == "NaN";
}

std::optional<double> parse_number(const std::string& cell) {
  double v = 0.0;
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DataError("schema column '" + name + "' not in CSV header");
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

Dataset load_csv_tabular(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  if (schema.target_columns.empty()) throw ValidationError("schema names no target column");
  if (schema.task == Task::classification && schema.target_columns.size() != 1)
    throw ValidationError("classification schema needs exactly one target column");

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  const auto header = split_csv_line(line);
  if (header.empty() || (header.size() == 1 && header[0].empty()))
    throw DataError(path.string() + ": missing header row");

  std::vector<std::size_t> feature_idx;
  if (schema.feature_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      const auto& h = header[c];
      const auto listed = [&](const std::vector<std::string>& v) {
        return std::find(v.begin(), v.end(), h) != v.end();
      };
      if (!listed(schema.target_columns) && !listed(schema.ignored_columns)) feature_idx.push_back(c);
    }
  } else {
    for (const auto& f : schema.feature_columns) feature_idx.push_back(column_index(header, f));
  }
  std::vector<std::size_t> target_idx;
  for (const auto& t : schema.target_columns) target_idx.push_back(column_index(header, t));
  if (feature_idx.empty()) throw ValidationError("schema selects no feature columns");

  LoadReport report;
  std::vector<std::vector<double>> features;  // NaN marks missing
  std::vector<std::vector<std::string>> raw_targets;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++report.rows_read;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      ++report.rows_dropped;
      report.dropped_lines.push_back(line_no);
      continue;
    }
    bool drop = false;
    std::vector<double> row;
    row.reserve(feature_idx.size());
    for (std::size_t c : feature_idx) {
      const auto& cell = fields[c];
      if (is_missing(cell)) {
        row.push_back(nan);
        if (schema.missing == MissingPolicy::drop) drop = true;
        continue;
      }
      const auto v = parse_number(cell);
      if (!v)
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": non-numeric value '" +
                        cell + "' in column '" + header[c] + "'");
      row.push_back(*v);
    }
    std::vector<std::string> tgt;
    for (std::size_t c : target_idx) {
      if (is_missing(fields[c])) drop = true;
      tgt.push_back(fields[c]);
    }
    if (drop) {
      ++report.rows_dropped;
      report.dropped_lines.push_back(line_no);
      continue;
    }
    features.push_back(std::move(row));
    raw_targets.push_back(std::move(tgt));
  }

  if (schema.expected_rows && report.rows_read != *schema.expected_rows)
    throw DataError(path.string() + ": schema expects " + std::to_string(*schema.expected_rows) +
                    " rows, file has " + std::to_string(report.rows_read));
  const std::size_t consumed = feature_idx.size() + target_idx.size();
  if (schema.expected_columns && consumed != *schema.expected_columns)
    throw DataError(path.string() + ": schema expects " + std::to_string(*schema.expected_columns) +
                    " numeric columns, selected " + std::to_string(consumed));
  if (features.empty()) throw DataError(path.string() + ": no usable rows");

  Dataset ds;
  ds.name = schema.name.empty() ? path.stem().string() : schema.name;
  ds.task = schema.task;
  const auto n = static_cast<Eigen::Index>(features.size());
  const auto d = static_cast<Eigen::Index>(feature_idx.size());
  ds.inputs.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      ds.inputs(i, j) = features[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];

  if (schema.missing == MissingPolicy::mean) {
    for (Eigen::Index j = 0; j < d; ++j) {
      double sum = 0.0;
      std::size_t count = 0;
      for (Eigen::Index i = 0; i < n; ++i)
        if (!std::isnan(ds.inputs(i, j))) {
          sum += ds.inputs(i, j);
          ++count;
        }
      if (count == 0) throw DataError("column '" + header[feature_idx[static_cast<std::size_t>(j)]] +
                                      "' has no values to impute from");
      for (Eigen::Index i = 0; i < n; ++i)
        if (std::isnan(ds.inputs(i, j))) {
          ds.inputs(i, j) = sum / static_cast<double>(count);
          ++report.cells_imputed;
        }
    }
  }

  if (schema.task == Task::regression) {
    ds.targets.resize(n, static_cast<Eigen::Index>(target_idx.size()));
    for (Eigen::Index i = 0; i < n; ++i)
      for (std::size_t t = 0; t < target_idx.size(); ++t) {
        const auto& cell = raw_targets[static_cast<std::size_t>(i)][t];
        const auto v = parse_number(cell);
        if (!v) throw DataError("non-numeric regression target '" + cell + "'");
        ds.targets(i, static_cast<Eigen::Index>(t)) = *v;
      }
  } else {
    // Class labels map to indices in sorted order (numeric order when every
    // label is a number).
    std::vector<std::string> labels;
    for (const auto& t : raw_targets) labels.push_back(t.front());
    std::vector<std::string> distinct(labels.begin(), labels.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (std::all_of(distinct.begin(), distinct.end(), [](const auto& s) { return parse_number(s).has_value(); }))
      std::sort(distinct.begin(), distinct.end(),
                [](const auto& a, const auto& b) { return *parse_number(a) < *parse_number(b); });
    std::map<std::string, int> index;
    for (std::size_t c = 0; c < distinct.size(); ++c) index[distinct[c]] = static_cast<int>(c);
    ds.num_classes = static_cast<int>(distinct.size());
    ds.targets.resize(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) ds.targets(i, 0) = index.at(labels[static_cast<std::size_t>(i)]);
  }
  ds.report = report;
  ds.validate();
  return ds;
}

namespace {

std::vector<unsigned char> read_maybe_gzipped(const std::filesystem::path& path) {
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (!f) throw DataError("cannot read " + path.string());
  std::vector<unsigned char> bytes;
  unsigned char buf[1 << 16];
  int got = 0;
  while ((got = gzread(f, buf, sizeof buf)) > 0) bytes.insert(bytes.end(), buf, buf + got);
  const bool failed = got < 0;
  gzclose(f);
  if (failed) throw DataError("corrupt compressed stream in " + path.string());
  return bytes;
}

std::uint32_t read_be32(const std::vector<unsigned char>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

}  // namespace

Dataset load_mnist_idx(const std::filesystem::path& images_path,
                       const std::filesystem::path& labels_path, std::size_t subset,
                       std::uint64_t seed) {
  const auto img = read_maybe_gzipped(images_path);
  const auto lab = read_maybe_gzipped(labels_path);
  if (img.size() < 16) throw DataError(images_path.string() + ": truncated IDX header");
  if (lab.size() < 8) throw DataError(labels_path.string() + ": truncated IDX header");
  if (read_be32(img, 0) != 2051) throw DataError(images_path.string() + ": bad magic number");
  if (read_be32(lab, 0) != 2049) throw DataError(labels_path.string() + ": bad magic number");

  const std::size_t count = read_be32(img, 4);
  const std::size_t rows = read_be32(img, 8);
  const std::size_t cols = read_be32(img, 12);
  const std::size_t label_count = read_be32(lab, 4);
  if (count != label_count)
    throw DataError("image count " + std::to_string(count) + " != label count " +
                    std::to_string(label_count));
  const std::size_t pixels = rows * cols;
  if (img.size() < 16 + count * pixels) throw DataError(images_path.string() + ": truncated image data");
  if (lab.size() < 8 + count) throw DataError(labels_path.string() + ": truncated label data");
  if (subset > count)
    throw ValidationError("subset " + std::to_string(subset) + " exceeds " + std::to_string(count) +
                          " available images");
  const std::size_t take = subset == 0 ? count : subset;

  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  Dataset ds;
  ds.name = "mnist";
  ds.task = Task::classification;
  ds.num_classes = 10;
  ds.standardize_inputs = false;
  ds.inputs.resize(static_cast<Eigen::Index>(take), static_cast<Eigen::Index>(pixels));
  ds.targets.resize(static_cast<Eigen::Index>(take), 1);
  for (std::size_t r = 0; r < take; ++r) {
    const std::size_t src = order[r];
    const unsigned char* p = img.data() + 16 + src * pixels;
    for (std::size_t k = 0; k < pixels; ++k)
      ds.inputs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = p[k] / 255.0;
    const unsigned label = lab[8 + src];
    if (label > 9) throw DataError(labels_path.string() + ": label out of range");
    ds.targets(static_cast<Eigen::Index>(r), 0) = label;
  }
  ds.report.rows_read = count;
  return ds;
}

Standardizer fit_standardizer(const Dataset& train) {
  if (train.size() == 0) throw ValidationError("cannot standardize with an empty train set");
  const auto stats = [](const Eigen::MatrixXd& m, Eigen::RowVectorXd& mean, Eigen::RowVectorXd& scale) {
    mean = m.colwise().mean();
    scale = ((m.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(m.rows()))
                .sqrt()
                .matrix();
    for (Eigen::Index j = 0; j < scale.size(); ++j)
      if (!(scale(j) > 0.0)) scale(j) = 1.0;
  };
  Standardizer s;
  s.inputs_enabled = train.standardize_inputs;
  if (s.inputs_enabled) stats(train.inputs, s.input_mean, s.input_scale);
  s.targets_enabled = train.task == Task::regression;
  if (s.targets_enabled) stats(train.targets, s.target_mean, s.target_scale);
  return s;
}

Dataset Standardizer::apply(const Dataset& ds) const {
  Dataset out = ds;
  if (inputs_enabled) {
    if (ds.inputs.cols() != input_mean.size()) throw DimensionError("standardizer input width mismatch");
    out.inputs = ((ds.inputs.rowwise() - input_mean).array().rowwise() / input_scale.array()).matrix();
  }
  if (targets_enabled) {
    if (ds.targets.cols() != target_mean.size()) throw DimensionError("standardizer target width mismatch");
    out.targets = ((ds.targets.rowwise() - target_mean).array().rowwise() / target_scale.array()).matrix();
  }
  return out;
}

Eigen::MatrixXd Standardizer::inverse_targets(const Eigen::MatrixXd& standardized) const {
  if (!targets_enabled) return standardized;
  return ((standardized.array().rowwise() * target_scale.array()).rowwise() + target_mean.array()).matrix();
}

Standardized standardize(const Dataset& train, const std::vector<Dataset>& others) {
  Standardized out;
  out.stats = fit_standardizer(train);
  out.train = out.stats.apply(train);
  out.others.reserve(others.size());
  for (const auto& o : others) out.others.push_back(out.stats.apply(o));
  return out;
}

SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
  if (spec.test_count >= n)
    throw ValidationError("test_count " + std::to_string(spec.test_count) +
                          " must be smaller than dataset size " + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);
  SplitIndices s;
  s.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(spec.test_count));
  s.pool.assign(order.begin() + static_cast<std::ptrdiff_t>(spec.test_count), order.end());
  std::sort(s.test.begin(), s.test.end());
  std::sort(s.pool.begin(), s.pool.end());
  return s;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
  const auto idx = split_indices(ds.size(), spec);
  return {ds.subset(idx.pool), ds.subset(idx.test)};
}

Dataset make_synthetic_clusters(int k, int per_cluster, double separation, double noise,
                                std::uint64_t seed) {
  if (k < 2) throw ValidationError("synthetic clusters need k >= 2");
  if (per_cluster < 1) throw ValidationError("per_cluster must be >= 1");
  const double radius = separation / (2.0 * std::sin(std::numbers::pi / k));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Dataset ds;
  ds.name = "clusters";
  ds.task = Task::classification;
  ds.num_classes = k;
  ds.inputs.resize(static_cast<Eigen::Index>(k) * per_cluster, 2);
  ds.targets.resize(static_cast<Eigen::Index>(k) * per_cluster, 1);
  Eigen::Index row = 0;
  for (int c = 0; c < k; ++c) {
    const double angle = 2.0 * std::numbers::pi * c / k;
    const double cx = radius * std::cos(angle);
    const double cy = radius * std::sin(angle);
    for (int i = 0; i < per_cluster; ++i, ++row) {
      const double dx = normal(rng);
      const double dy = normal(rng);
      ds.inputs(row, 0) = cx + noise * dx;
      ds.inputs(row, 1) = cy + noise * dy;
      ds.targets(row, 0) = c;
    }
  }
  return ds;
}

Dataset make_synthetic_linear(std::size_t n, int features, double noise, std::uint64_t seed) {
  if (n == 0 || features < 1) throw ValidationError("synthetic linear data needs n >= 1, features >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd w(features);
  for (int j = 0; j < features; ++j) w(j) = normal(rng);
  Dataset ds;
  ds.name = "synthetic-linear";
  ds.task = Task::regression;
  ds.inputs.resize(static_cast<Eigen::Index>(n), features);
  for (Eigen::Index i = 0; i < ds.inputs.rows(); ++i)
    for (int j = 0; j < features; ++j) ds.inputs(i, j) = normal(rng);
  ds.targets = ds.inputs * w;
  for (Eigen::Index i = 0; i < ds.targets.rows(); ++i) ds.targets(i, 0) += noise * normal(rng);
  return ds;
}

}  // namespace ntkcv
