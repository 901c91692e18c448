#include "ntkcv/stats.hpp"

#include "ntkcv/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ntkcv {

double mean(std::span<const double> x) {
  if (x.empty()) throw DimensionError("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_stddev(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double standard_error(std::span<const double> x) {
  if (x.empty()) throw DimensionError("standard error of an empty sample");
  return sample_stddev(x) / std::sqrt(static_cast<double>(x.size()));
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("pearson inputs differ in length");
  if (x.size() < 2) throw DimensionError("pearson needs at least two observations");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw UndefinedResult("pearson undefined for zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationMatrix correlation_matrix(const std::vector<std::string>& names,
                                     const std::vector<std::vector<double>>& columns) {
  if (names.size() != columns.size()) throw DimensionError("one name per variable required");
  const std::size_t k = columns.size();
  CorrelationMatrix m;
  m.variable_names = names;
  m.entries.assign(k, std::vector<std::optional<double>>(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      std::optional<double> r;
      try {
        r = i == j ? (pearson(columns[i], columns[i]), 1.0) : pearson(columns[i], columns[j]);
      } catch (const UndefinedResult&) {
      }
      m.entries[i][j] = r;
      m.entries[j][i] = r;
    }
  }
  return m;
}

nlohmann::json CorrelationMatrix::to_json() const {
  nlohmann::json matrix = nlohmann::json::array();
  for (const auto& row : entries) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& e : row) r.push_back(e ? nlohmann::json(*e) : nlohmann::json(nullptr));
    matrix.push_back(std::move(r));
  }
  return {{"variables", variable_names}, {"matrix", std::move(matrix)}};
}

}  // namespace ntkcv
