#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ntkcv {

/// Pearson product-moment coefficient. Throws DimensionError for unequal or
/// too-short inputs and UndefinedResult when either side has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> x);
/// Sample standard deviation (n - 1 denominator); 0 for a single value.
double sample_stddev(std::span<const double> x);
/// sample_stddev / sqrt(n).
double standard_error(std::span<const double> x);

/// Symmetric matrix of Pearson coefficients. An entry is empty when the
/// coefficient is undefined (a variable with zero variance).
struct CorrelationMatrix {
  std::vector<std::string> variable_names;
  std::vector<std::vector<std::optional<double>>> entries;

  nlohmann::json to_json() const;
};

/// Columns are variables, each with the same number of observations (>= 2).
CorrelationMatrix correlation_matrix(const std::vector<std::string>& names,
                                     const std::vector<std::vector<double>>& columns);

}  // namespace ntkcv
