#include "conecrit/linalg.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <random>
#include <stdexcept>

namespace conecrit {

void append_triplets(Triplets& out, const SparseMatrix& A, Eigen::Index row0, Eigen::Index col0, double scale) {
  for (int k = 0; k < A.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
      out.emplace_back(static_cast<int>(it.row() + row0), static_cast<int>(it.col() + col0), scale * it.value());
    }
  }
}

Eigen::VectorXd sparse_solve(const SparseMatrix& A, const Eigen::VectorXd& b) {
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success) throw SingularMatrix("sparse_solve: factorization failed");
  Eigen::VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success || !x.allFinite()) throw SingularMatrix("sparse_solve: solve failed");
  return x;
}

SparseMatrix bordered(const SparseMatrix& A, const Eigen::MatrixXd& right, const Eigen::MatrixXd& bottom,
                      const Eigen::MatrixXd& corner) {
  const Eigen::Index n = A.rows();
  const Eigen::Index k = corner.rows();
  Triplets trip;
  trip.reserve(static_cast<std::size_t>(A.nonZeros() + 2 * n * k + k * k));
  append_triplets(trip, A);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (right(i, j) != 0.0) trip.emplace_back(static_cast<int>(i), static_cast<int>(n + j), right(i, j));
      if (bottom(i, j) != 0.0) trip.emplace_back(static_cast<int>(n + j), static_cast<int>(i), bottom(i, j));
    }
    for (Eigen::Index i = 0; i < k; ++i) {
      if (corner(i, j) != 0.0) trip.emplace_back(static_cast<int>(n + i), static_cast<int>(n + j), corner(i, j));
    }
  }
  SparseMatrix out(n + k, n + k);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

namespace {

ConstrainedSpectrum dense_constrained(const SparseMatrix& A, const SparseMatrix& M, const Eigen::VectorXd& c,
                                      const SpectrumOptions& options) {
  const Eigen::Index n = A.rows();
  // Orthonormal basis of {v : cᵀv = 0} from a full QR of c.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(c);
  const Eigen::MatrixXd Q = qr.householderQ();
  const Eigen::MatrixXd Z = Q.rightCols(n - 1);
  const Eigen::MatrixXd Ad = Eigen::MatrixXd(A);
  const Eigen::MatrixXd Md = Eigen::MatrixXd(M);
  const Eigen::MatrixXd Ar = Z.transpose() * Ad * Z;
  const Eigen::MatrixXd Mr = Z.transpose() * Md * Z;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Ar + Ar.transpose()),
                                                               0.5 * (Mr + Mr.transpose()));
  if (es.info() != Eigen::Success) throw std::runtime_error("constrained_eigenvalues: dense solver failed");
  Eigen::Index count = std::min<Eigen::Index>(options.min_count, n - 1);
  while (count < n - 1 && es.eigenvalues()[count] < options.include_below) ++count;
  ConstrainedSpectrum out;
  out.values = es.eigenvalues().head(count);
  out.vectors = Z * es.eigenvectors().leftCols(count);
  return out;
}

class ShiftInvertOperator {
 public:
  ShiftInvertOperator(const SparseMatrix& A, const SparseMatrix& M, const Eigen::VectorXd& c, double shift)
      : M_(M), c_(c) {
    const SparseMatrix B = A - shift * M;
    llt_.compute(B);
    if (llt_.info() != Eigen::Success) throw std::runtime_error("shift-invert: A - shift*M is not positive definite");
    z_ = llt_.solve(c_);
    cz_ = c_.dot(z_);
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
    Eigen::VectorXd w = llt_.solve(M_ * v);
    w -= z_ * (c_.dot(w) / cz_);
    return w;
  }

 private:
  const SparseMatrix& M_;
  const Eigen::VectorXd& c_;
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
  Eigen::VectorXd z_;
  double cz_ = 1.0;
};

struct RitzPairs {
  std::vector<double> theta;      // descending
  std::vector<Eigen::VectorXd> y;  // M-normalized
};

// One Lanczos run in the M inner product, orthogonal to `locked`. Returns the
// converged Ritz pairs among the `want` largest.
RitzPairs lanczos_run(const ShiftInvertOperator& op, const SparseMatrix& M, const Eigen::VectorXd& c,
                      const std::vector<Eigen::VectorXd>& locked, int want, double threshold_theta,
                      double tol, std::mt19937_64& rng) {
  const Eigen::Index n = M.rows();
  const Eigen::Index kmax = std::min<Eigen::Index>(n - 1 - static_cast<Eigen::Index>(locked.size()),
                                                   std::max<Eigen::Index>(3 * want + 40, 80));
  RitzPairs out;
  if (kmax <= 0) return out;

  std::vector<Eigen::VectorXd> lockedM;
  lockedM.reserve(locked.size());
  for (const auto& y : locked) lockedM.push_back(M * y);

  Eigen::MatrixXd Q(n, kmax + 1);
  Eigen::MatrixXd MQ(n, kmax + 1);
  std::normal_distribution<double> gauss;
  Eigen::VectorXd q(n);
  for (Eigen::Index i = 0; i < n; ++i) q[i] = gauss(rng);
  const auto project = [&](Eigen::VectorXd& v, Eigen::Index upto) {
    v -= c * (c.dot(v) / c.squaredNorm());
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < locked.size(); ++i) v -= locked[i] * lockedM[i].dot(v);
      if (upto > 0) v -= Q.leftCols(upto) * (MQ.leftCols(upto).transpose() * v);
    }
  };
  project(q, 0);
  Eigen::VectorXd Mq = M * q;
  double nrm = std::sqrt(q.dot(Mq));
  Q.col(0) = q / nrm;
  MQ.col(0) = Mq / nrm;

  std::vector<double> alpha, beta;
  Eigen::VectorXd evals;
  Eigen::MatrixXd evecs;
  Eigen::Index steps = 0;
  for (Eigen::Index j = 0; j < kmax; ++j) {
    Eigen::VectorXd w = op.apply(Q.col(j));
    const double a = MQ.col(j).dot(w);
    alpha.push_back(a);
    w -= a * Q.col(j);
    if (j > 0) w -= beta.back() * Q.col(j - 1);
    project(w, j + 1);
    Eigen::VectorXd Mw = M * w;
    const double b = std::sqrt(std::max(0.0, w.dot(Mw)));
    steps = j + 1;

    const bool check = (steps >= want + 2 && (steps % 5 == 0)) || steps == kmax || b < 1e-14;
    if (check) {
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(steps, steps);
      for (Eigen::Index i = 0; i < steps; ++i) {
        T(i, i) = alpha[i];
        if (i + 1 < steps) T(i, i + 1) = T(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
      evals = es.eigenvalues();
      evecs = es.eigenvectors();
      // Count how many of the largest Ritz values are converged; require the
      // `want` largest plus every one above the threshold.
      bool all = true;
      int needed = want;
      for (Eigen::Index i = steps - 1; i >= 0; --i) {
        const Eigen::Index rank = steps - 1 - i;
        if (rank >= needed && evals[i] <= threshold_theta) break;
        if (rank >= needed) needed = static_cast<int>(rank) + 1;
        const double res = std::abs(b * evecs(steps - 1, i));
        if (res > tol * std::abs(evals[i])) {
          all = false;
          break;
        }
      }
      if (all || b < 1e-14 || steps == kmax) break;
    }
    beta.push_back(b);
    Q.col(j + 1) = w / b;
    MQ.col(j + 1) = Mw / b;
  }
  for (Eigen::Index i = steps - 1; i >= 0; --i) {
    const Eigen::Index rank = steps - 1 - i;
    if (rank >= want && evals[i] <= threshold_theta) break;
    Eigen::VectorXd y = Q.leftCols(steps) * evecs.col(i);
    const double ny = std::sqrt(y.dot(M * y));
    out.theta.push_back(evals[i]);
    out.y.push_back(y / ny);
  }
  return out;
}

}  // namespace

ConstrainedSpectrum constrained_eigenvalues(const SparseMatrix& A, const SparseMatrix& M,
                                            const Eigen::VectorXd& constraint, const SpectrumOptions& options) {
  const Eigen::Index n = A.rows();
  if (n < 2) throw std::invalid_argument("constrained_eigenvalues: dimension must be at least 2");
  if (n <= 400) return dense_constrained(A, M, constraint, options);

  const double shift = options.shift;
  const ShiftInvertOperator op(A, M, constraint, shift);
  const double threshold_theta =
      options.include_below > shift ? 1.0 / (options.include_below - shift) : std::numeric_limits<double>::max();
  std::mt19937_64 rng(options.seed);

  std::vector<double> theta;
  std::vector<Eigen::VectorXd> vecs;
  // Locking restarts pick up repeated eigenvalues missed by a single run.
  for (int round = 0; round < 8; ++round) {
    const int want = round == 0 ? options.min_count : 1;
    RitzPairs found = lanczos_run(op, M, constraint, vecs, want, threshold_theta, options.tolerance, rng);
    if (found.theta.empty()) break;
    double smallest_kept = std::numeric_limits<double>::max();
    for (double t : theta) smallest_kept = std::min(smallest_kept, t);
    bool added = false;
    for (std::size_t i = 0; i < found.theta.size(); ++i) {
      if (round == 0 || found.theta[i] > threshold_theta || found.theta[i] > smallest_kept * (1.0 + 1e-12)) {
        theta.push_back(found.theta[i]);
        vecs.push_back(found.y[i]);
        added = true;
      }
    }
    if (!added) break;
  }

  std::vector<int> order(theta.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int i, int j) { return theta[i] > theta[j]; });
  Eigen::Index count = std::min<Eigen::Index>(options.min_count, static_cast<Eigen::Index>(order.size()));
  while (count < static_cast<Eigen::Index>(order.size()) && theta[order[count]] > threshold_theta) ++count;
  ConstrainedSpectrum out;
  out.values.resize(count);
  out.vectors.resize(n, count);
  for (Eigen::Index i = 0; i < count; ++i) {
    out.values[i] = shift + 1.0 / theta[order[i]];
    out.vectors.col(i) = vecs[order[i]];
  }
  return out;
}

}  // namespace conecrit
