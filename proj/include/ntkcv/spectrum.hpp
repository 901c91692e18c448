#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace ntkcv {

struct JacobiOptions {
  // Stop once the off-diagonal Frobenius norm is below
  // relative_tolerance * max(|trace|, ||A||_F).
  double relative_tolerance = 1e-12;
  int max_sweeps = 100;
};

/// All eigenvalues of a symmetric matrix in descending order, computed with
/// cyclic Jacobi rotations. Throws ConvergenceError when the sweep budget is
/// exhausted and Error when the eigenvalue sum misses the trace by more than
/// 1e-8 relative.
std::vector<double> symmetric_eigenvalues(const Eigen::MatrixXd& m, const JacobiOptions& opts = {});

/// Von Neumann entropy (nats) of a spectrum normalized by its sum. Negative
/// round-off eigenvalues are clamped to zero; an eigenvalue below
/// -1e-6 * sum, or an all-zero spectrum, is an error.
double von_neumann_entropy(std::span<const double> eigenvalues);

/// Largest eigenvalue divided by the eigenvalue sum.
double max_eig_ratio(std::span<const double> eigenvalues);

}  // namespace ntkcv
