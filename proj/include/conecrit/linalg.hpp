#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace conecrit {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

/// Assembles [[A, right], [bottomᵀ, corner]] for dense border blocks
/// (right: n x k, bottom: n x k, corner: k x k).
SparseMatrix bordered(const SparseMatrix& A, const Eigen::MatrixXd& right, const Eigen::MatrixXd& bottom,
                      const Eigen::MatrixXd& corner);

/// Solves A x = b with sparse LU. Throws std::runtime_error-derived
/// SingularMatrix when the factorization fails or the solution is not finite.
class SingularMatrix : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
Eigen::VectorXd sparse_solve(const SparseMatrix& A, const Eigen::VectorXd& b);

/// Appends the triplets of `A` shifted by (row0, col0).
void append_triplets(Triplets& out, const SparseMatrix& A, Eigen::Index row0 = 0, Eigen::Index col0 = 0,
                     double scale = 1.0);

struct ConstrainedSpectrum {
  Eigen::VectorXd values;   ///< ascending
  Eigen::MatrixXd vectors;  ///< M-orthonormal columns
};

struct SpectrumOptions {
  int min_count = 5;
  /// Every eigenvalue below this value is returned in addition to the
  /// `min_count` smallest.
  double include_below = 0.0;
  /// Shift with A - shift * M positive definite.
  double shift = -1.0;
  double tolerance = 1e-10;
  std::uint64_t seed = 20240611;
};

/// Smallest eigenvalues of A v = mu M v restricted to {v : cᵀ v = 0}
/// (A symmetric, M symmetric positive definite). Large problems use
/// shift-invert Lanczos in the M inner product with locking, so repeated
/// eigenvalues are resolved; small problems are solved densely.
ConstrainedSpectrum constrained_eigenvalues(const SparseMatrix& A, const SparseMatrix& M,
                                            const Eigen::VectorXd& constraint, const SpectrumOptions& options);

}  // namespace conecrit
