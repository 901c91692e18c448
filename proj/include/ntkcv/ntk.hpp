#pragma once

#include "ntkcv/network.hpp"
#include "ntkcv/spectrum.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <vector>

namespace ntkcv {

/// Empirical NTK: symmetric N x N Gram matrix of per-sample parameter
/// gradients. For multi-output networks the per-output inner products are
/// summed, which keeps the N x N shape.
struct NtkMatrix {
  Eigen::MatrixXd entries;

  Eigen::Index n() const { return entries.rows(); }
};

enum class NtkMethod {
  // Choose jacobian_gram unless the N x P Jacobian block exceeds the memory
  // budget, then fall back to layer_factorized.
  automatic,
  // Materialize the N x P Jacobian block per output and form J J^T.
  jacobian_gram,
  // Per dense layer, combine the sample Gram of the layer input with the Gram
  // of the backpropagated output sensitivities. Never forms the Jacobian.
  layer_factorized,
};

struct NtkOptions {
  NtkMethod method = NtkMethod::automatic;
  std::size_t jacobian_budget_bytes = std::size_t{256} << 20;
};

NtkMatrix compute_ntk(const NetworkState& state, const Eigen::MatrixXd& inputs,
                      const NtkOptions& opts = {});

/// Throws when the matrix is not symmetric within 1e-10 relative or has an
/// eigenvalue below -1e-8 * trace.
void check_ntk_invariants(const NtkMatrix& m, std::span<const double> eigenvalues);

double ntk_trace(const NtkMatrix& m);

struct SpectrumReport {
  std::vector<double> eigenvalues;  // descending
  double trace = 0.0;
  double entropy = 0.0;  // nats
  double max_eig_ratio = 0.0;
};

SpectrumReport spectrum_report(const NtkMatrix& m);

/// compute_ntk followed by spectrum_report.
SpectrumReport collective_variables(const NetworkState& state, const Eigen::MatrixXd& inputs,
                                    const NtkOptions& opts = {});

nlohmann::json to_json(const SpectrumReport& r);
void write_ntk_csv(const std::filesystem::path& path, const NtkMatrix& m);

}  // namespace ntkcv
