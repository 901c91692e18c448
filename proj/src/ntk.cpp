#include "ntkcv/ntk.hpp"

#include "ntkcv/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

namespace ntkcv {

namespace {

void mirror_upper(Eigen::MatrixXd& m) {
  m.triangularView<Eigen::StrictlyLower>() = m.transpose();
}

Eigen::MatrixXd ntk_jacobian_gram(const NetworkState& state, const Eigen::MatrixXd& inputs) {
  const Eigen::Index n = inputs.rows();
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(n, n);
  for (int o = 0; o < state.spec.output_width(); ++o) {
    const RowMatrix j = batch_param_jacobian(state, inputs, o);
    theta.selfadjointView<Eigen::Upper>().rankUpdate(j);
  }
  mirror_upper(theta);
  return theta;
}

// For a dense layer z = s W a + b the per-sample gradient of output o is
// (s delta_o a^T, delta_o), so its contribution to Theta_ij factorizes as
// (delta_o,i . delta_o,j) * (s^2 a_i . a_j + 1).
Eigen::MatrixXd ntk_layer_factorized(const NetworkState& state, const Eigen::MatrixXd& inputs) {
  const auto layout = layer_layout(state.spec);
  const auto pass = forward_pass(state, inputs);
  const Eigen::Index n = inputs.rows();

  // (s^2 A A^T + 1) per layer, A being the layer input; no +1 without biases.
  std::vector<Eigen::MatrixXd> input_gram;
  input_gram.reserve(layout.size());
  for (std::size_t l = 0; l < layout.size(); ++l) {
    const double s2 = layout[l].weight_scale * layout[l].weight_scale;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    g.selfadjointView<Eigen::Upper>().rankUpdate(pass.activations[l], s2);
    mirror_upper(g);
    if (layout[l].has_bias) g.array() += 1.0;
    input_gram.push_back(std::move(g));
  }

  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(n, n);
  for (int o = 0; o < state.spec.output_width(); ++o) {
    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(n, state.spec.output_width());
    delta.col(o).setOnes();
    for (std::size_t l = layout.size(); l-- > 0;) {
      Eigen::MatrixXd dgram = Eigen::MatrixXd::Zero(n, n);
      dgram.selfadjointView<Eigen::Upper>().rankUpdate(delta);
      mirror_upper(dgram);
      theta.array() += dgram.array() * input_gram[l].array();
      if (l > 0) delta = backprop_delta(state, l, delta, pass);
    }
  }
  mirror_upper(theta);
  return theta;
}

}  // namespace

NtkMatrix compute_ntk(const NetworkState& state, const Eigen::MatrixXd& inputs,
                      const NtkOptions& opts) {
  if (inputs.rows() < 1) throw DimensionError("NTK needs at least one sample");
  if (inputs.cols() != state.spec.input_width())
    throw DimensionError("input width " + std::to_string(inputs.cols()) +
                         " does not match network input width " +
                         std::to_string(state.spec.input_width()));
  NtkMethod method = opts.method;
  if (method == NtkMethod::automatic) {
    const double block_bytes = static_cast<double>(inputs.rows()) *
                               static_cast<double>(state.param_count()) * sizeof(double);
    method = block_bytes <= static_cast<double>(opts.jacobian_budget_bytes)
                 ? NtkMethod::jacobian_gram
                 : NtkMethod::layer_factorized;
  }
  if (method == NtkMethod::jacobian_gram) return {ntk_jacobian_gram(state, inputs)};
  return {ntk_layer_factorized(state, inputs)};
}

double ntk_trace(const NtkMatrix& m) { return m.entries.trace(); }

void check_ntk_invariants(const NtkMatrix& m, std::span<const double> eigenvalues) {
  const double scale = m.entries.cwiseAbs().maxCoeff();
  const double asym = (m.entries - m.entries.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale) throw Error("NTK matrix is not symmetric");
  if (!eigenvalues.empty()) {
    const double min_eig = *std::min_element(eigenvalues.begin(), eigenvalues.end());
    if (min_eig < -1e-8 * ntk_trace(m))
      throw Error("NTK matrix is not positive semi-definite (min eigenvalue " +
                  std::to_string(min_eig) + ")");
  }
}

SpectrumReport spectrum_report(const NtkMatrix& m) {
  SpectrumReport r;
  r.eigenvalues = symmetric_eigenvalues(m.entries);
  r.trace = ntk_trace(m);
  r.entropy = von_neumann_entropy(r.eigenvalues);
  if (!(r.trace > 0.0)) throw UndefinedResult("NTK trace is zero");
  r.max_eig_ratio = r.eigenvalues.front() / r.trace;
  return r;
}

SpectrumReport collective_variables(const NetworkState& state, const Eigen::MatrixXd& inputs,
                                    const NtkOptions& opts) {
  return spectrum_report(compute_ntk(state, inputs, opts));
}

nlohmann::json to_json(const SpectrumReport& r) {
  return {{"n", r.eigenvalues.size()},
          {"trace", r.trace},
          {"entropy", r.entropy},
          {"max_eig_ratio", r.max_eig_ratio},
          {"eigenvalues", r.eigenvalues}};
}

void write_ntk_csv(const std::filesystem::path& path, const NtkMatrix& m) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  for (Eigen::Index i = 0; i < m.n(); ++i) {
    for (Eigen::Index j = 0; j < m.n(); ++j) {
      if (j) out << ',';
      out << m.entries(i, j);
    }
    out << '\n';
  }
}

}  // namespace ntkcv
