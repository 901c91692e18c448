#include "ntkcv/spectrum.hpp"

#include "ntkcv/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

namespace ntkcv {

namespace {

double off_diagonal_norm(const Eigen::MatrixXd& a) {
  double sum = 0.0;
  for (Eigen::Index q = 1; q < a.cols(); ++q)
    for (Eigen::Index p = 0; p < q; ++p) sum += a(p, q) * a(p, q);
  return std::sqrt(2.0 * sum);
}

// Zeroes a(p,q) with the rotation J = [[c, s], [-s, c]] acting on rows and
// columns p, q: a <- J^T a J.
void rotate(Eigen::MatrixXd& a, Eigen::Index p, Eigen::Index q) {
  const double apq = a(p, q);
  if (apq == 0.0) return;
  const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = tau >= 0.0 ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                              : -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
  const double c = 1.0 / std::sqrt(1.0 + t * t);
  const double s = t * c;

  const Eigen::Index n = a.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = c * akp - s * akq;
    a(k, q) = s * akp + c * akq;
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    const double apk = a(p, k);
    const double aqk = a(q, k);
    a(p, k) = c * apk - s * aqk;
    a(q, k) = s * apk + c * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;
}

}  // namespace

std::vector<double> symmetric_eigenvalues(const Eigen::MatrixXd& m, const JacobiOptions& opts) {
  if (m.rows() != m.cols()) throw DimensionError("eigenvalues of a non-square matrix");
  const Eigen::Index n = m.rows();
  if (n == 0) return {};
  const double magnitude = m.cwiseAbs().maxCoeff();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * magnitude)
    throw ValidationError("eigenvalues requested for a non-symmetric matrix");

  // Work on the symmetrized copy; the lower triangle is mirrored from the upper.
  Eigen::MatrixXd a = m.selfadjointView<Eigen::Upper>();
  const double trace = a.trace();
  const double scale = std::max(std::abs(trace), a.norm());
  const double tolerance = opts.relative_tolerance * scale;

  int sweep = 0;
  while (off_diagonal_norm(a) > tolerance) {
    if (sweep++ >= opts.max_sweeps)
      throw ConvergenceError("Jacobi eigensolver did not converge in " +
                             std::to_string(opts.max_sweeps) + " sweeps");
    for (Eigen::Index p = 0; p + 1 < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) rotate(a, p, q);
  }

  std::vector<double> eig(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) eig[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(eig.begin(), eig.end(), std::greater<>());

  const double sum = std::accumulate(eig.begin(), eig.end(), 0.0);
  if (std::abs(sum - trace) > 1e-8 * std::max(scale, 1e-300))
    throw Error("eigenvalue sum " + std::to_string(sum) + " does not reproduce trace " +
                std::to_string(trace));
  return eig;
}

double von_neumann_entropy(std::span<const double> eigenvalues) {
  if (eigenvalues.empty()) throw UndefinedResult("entropy of an empty spectrum");
  const double raw_sum = std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0.0);
  double clamped_sum = 0.0;
  for (double l : eigenvalues) {
    if (!std::isfinite(l)) throw UndefinedResult("non-finite eigenvalue in spectrum");
    if (l < -1e-6 * std::abs(raw_sum))
      throw Error("eigenvalue " + std::to_string(l) +
                  " is too negative for a Gram matrix (below -1e-6 * trace)");
    clamped_sum += std::max(l, 0.0);
  }
  if (!(clamped_sum > 0.0)) throw UndefinedResult("entropy of an all-zero spectrum");

  double entropy = 0.0;
  for (double l : eigenvalues) {
    const double p = std::max(l, 0.0) / clamped_sum;
    if (p > 0.0) entropy -= p * std::log(p);
  }
  return entropy;
}

double max_eig_ratio(std::span<const double> eigenvalues) {
  if (eigenvalues.empty()) throw UndefinedResult("ratio of an empty spectrum");
  const double sum = std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0.0);
  if (!(sum > 0.0)) throw UndefinedResult("max eigenvalue ratio needs a positive trace");
  return *std::max_element(eigenvalues.begin(), eigenvalues.end()) / sum;
}

}  // namespace ntkcv
