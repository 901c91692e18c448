#pragma once

// Independent reference computations used by the unit and acceptance tests.
// None of these share code paths with the library beyond the forward pass.

#include "ntkcv/network.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace oracles {

// O x P Jacobian of the network output at one input, by central differences.
inline Eigen::MatrixXd fd_jacobian(const ntkcv::NetworkState& state, const Eigen::RowVectorXd& x,
                                   double h = 1e-6) {
  const Eigen::Index p = state.params.size();
  const int o = state.spec.output_width();
  Eigen::MatrixXd j(o, p);
  ntkcv::NetworkState probe = state;
  const Eigen::MatrixXd in = x;
  for (Eigen::Index k = 0; k < p; ++k) {
    const double saved = probe.params[k];
    probe.params[k] = saved + h;
    const Eigen::RowVectorXd up = ntkcv::forward(probe, in).row(0);
    probe.params[k] = saved - h;
    const Eigen::RowVectorXd down = ntkcv::forward(probe, in).row(0);
    probe.params[k] = saved;
    j.col(k) = (up - down).transpose() / (2.0 * h);
  }
  return j;
}

// Theta from finite-difference Jacobians, summed over outputs.
inline Eigen::MatrixXd fd_ntk(const ntkcv::NetworkState& state, const Eigen::MatrixXd& inputs) {
  const Eigen::Index n = inputs.rows();
  std::vector<Eigen::MatrixXd> jac;
  for (Eigen::Index i = 0; i < n; ++i) jac.push_back(fd_jacobian(state, inputs.row(i)));
  Eigen::MatrixXd theta(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k) theta(i, k) = (jac[i].array() * jac[k].array()).sum();
  return theta;
}

// Theta_ij = sum_o sum_p dF_o(x_i)/dp dF_o(x_j)/dp, one explicit pair at a time
// from the per-sample Jacobians.
inline Eigen::MatrixXd pairwise_ntk(const ntkcv::NetworkState& state, const Eigen::MatrixXd& inputs) {
  const Eigen::Index n = inputs.rows();
  std::vector<ntkcv::RowMatrix> jac;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd x = inputs.row(i).transpose();
    jac.push_back(ntkcv::param_jacobian(state, x));
  }
  Eigen::MatrixXd theta(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < n; ++k) {
      double sum = 0.0;
      for (Eigen::Index o = 0; o < jac[i].rows(); ++o)
        for (Eigen::Index p = 0; p < jac[i].cols(); ++p) sum += jac[i](o, p) * jac[k](o, p);
      theta(i, k) = sum;
    }
  }
  return theta;
}

// Gradient of a scalar function of the parameters by central differences.
template <class F>
Eigen::VectorXd fd_gradient(const ntkcv::NetworkState& state, F&& loss, double h = 1e-6) {
  Eigen::VectorXd g(state.params.size());
  ntkcv::NetworkState probe = state;
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    const double saved = probe.params[k];
    probe.params[k] = saved + h;
    const double up = loss(probe);
    probe.params[k] = saved - h;
    const double down = loss(probe);
    probe.params[k] = saved;
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

// Characteristic polynomial coefficients (Faddeev-LeVerrier), highest degree
// first: det(tI - A) = c[0] t^n + c[1] t^(n-1) + ... + c[n].
inline std::vector<double> char_poly(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
  c[0] = 1.0;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    m = a * m + c[static_cast<std::size_t>(k - 1)] * Eigen::MatrixXd::Identity(n, n);
    c[static_cast<std::size_t>(k)] = -(a * m).trace() / static_cast<double>(k);
  }
  return c;
}

// Roots of the characteristic polynomial by Durand-Kerner iteration, real
// parts sorted descending. Meant for small, well separated spectra.
inline std::vector<double> char_poly_eigenvalues(const Eigen::MatrixXd& a) {
  const auto c = char_poly(a);
  const std::size_t n = c.size() - 1;
  const auto eval = [&](std::complex<double> z) {
    std::complex<double> v = c[0];
    for (std::size_t k = 1; k <= n; ++k) v = v * z + c[k];
    return v;
  };
  double radius = 0.0;
  for (std::size_t k = 1; k <= n; ++k) radius = std::max(radius, std::abs(c[k]));
  radius = 1.0 + radius;
  std::vector<std::complex<double>> z(n);
  for (std::size_t k = 0; k < n; ++k)
    z[k] = std::polar(radius * 0.9, 0.4 + 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n));
  for (int iter = 0; iter < 2000; ++iter) {
    double change = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      std::complex<double> denom = 1.0;
      for (std::size_t m = 0; m < n; ++m)
        if (m != k) denom *= z[k] - z[m];
      const auto step = eval(z[k]) / denom;
      z[k] -= step;
      change = std::max(change, std::abs(step));
    }
    if (change < 1e-15 * radius) break;
  }
  std::vector<double> out;
  for (const auto& r : z) out.push_back(r.real());
  std::sort(out.rbegin(), out.rend());
  return out;
}

// Pearson correlation, computing means in a first pass and centered sums in a
// second.
inline double two_pass_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// Random symmetric PSD matrix B B^T with B of shape n x rank.
inline Eigen::MatrixXd random_psd(int n, int rank, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd b(n, rank);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = normal(rng);
  return b * b.transpose();
}

inline Eigen::MatrixXd random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

// Smallest |z| over the hidden-layer preactivations. Finite differences and
// first-order expansions are only valid when no ReLU sits at its kink.
inline double kink_distance(const ntkcv::NetworkState& state, const Eigen::MatrixXd& inputs) {
  if (state.spec.activation != ntkcv::Activation::relu) return INFINITY;
  const auto pass = ntkcv::forward_pass(state, inputs);
  double d = INFINITY;
  for (std::size_t l = 0; l + 1 < pass.preactivations.size(); ++l)
    d = std::min(d, pass.preactivations[l].cwiseAbs().minCoeff());
  return d;
}

inline double rel_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& ref) {
  return (a - ref).norm() / ref.norm();
}

}  // namespace oracles
