#include "conecrit/continuation.hpp"

#include <cmath>

namespace conecrit {

namespace {

void append_column(Triplets& trip, const Eigen::VectorXd& col, Eigen::Index row0, Eigen::Index c) {
  for (Eigen::Index i = 0; i < col.size(); ++i) {
    if (col[i] != 0.0) trip.emplace_back(static_cast<int>(row0 + i), static_cast<int>(c), col[i]);
  }
}

void append_row(Triplets& trip, const Eigen::VectorXd& row, Eigen::Index r, Eigen::Index col0) {
  for (Eigen::Index i = 0; i < row.size(); ++i) {
    if (row[i] != 0.0) trip.emplace_back(static_cast<int>(r), static_cast<int>(col0 + i), row[i]);
  }
}

// Moore-Spence system in X = (x, v, p1) with the second parameter active.
class FoldProblem : public Problem {
 public:
  FoldProblem(Problem& base, int p1, int p2, const Params& values)
      : Problem(base.parameter_names(), values, p2), base_(base), p1_(p1), n_(base.dimension()) {}

  Eigen::Index dimension() const override { return 2 * n_ + 1; }

  Eigen::VectorXd residual(const Eigen::VectorXd& X, const Params& p) const override {
    const Params q = base_params(X, p);
    const Eigen::VectorXd x = X.head(n_);
    const Eigen::VectorXd v = X.segment(n_, n_);
    Eigen::VectorXd r(dimension());
    r.head(n_) = base_.residual(x, q);
    r.segment(n_, n_) = base_.jacobian(x, q) * v;
    r[2 * n_] = v.squaredNorm() - 1.0;
    return r;
  }

  SparseMatrix jacobian(const Eigen::VectorXd& X, const Params& p) const override {
    const Params q = base_params(X, p);
    const Eigen::VectorXd x = X.head(n_);
    const Eigen::VectorXd v = X.segment(n_, n_);
    const SparseMatrix J = base_.jacobian(x, q);
    Triplets trip;
    append_triplets(trip, J, 0, 0);
    append_triplets(trip, base_.hessian_action(x, q, v), n_, 0);
    append_triplets(trip, J, n_, n_);
    append_column(trip, base_.parameter_derivative(x, q, p1_), 0, 2 * n_);
    append_column(trip, base_.jacobian_parameter_derivative(x, q, p1_) * v, n_, 2 * n_);
    append_row(trip, 2.0 * v, 2 * n_, n_);
    SparseMatrix A(dimension(), dimension());
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
  }

  Eigen::VectorXd arclength_weights() const override {
    const Eigen::VectorXd w = base_.arclength_weights();
    Eigen::VectorXd W(dimension());
    W << w, w, 1.0;
    return W;
  }

  Observables observables(const Eigen::VectorXd& X, const Params& p) const override {
    const Params q = base_params(X, p);
    Observables obs = base_.observables(X.head(n_), q);
    obs.emplace_back(parameter_names()[p1_], X[2 * n_]);
    obs.emplace_back("cusp_test", cusp_test(X, p));
    return obs;
  }

  std::vector<double> test_functions(const Eigen::VectorXd& X, const Params& p) const override {
    return {cusp_test(X, p)};
  }

  std::shared_ptr<const void> context() const override { return base_.context(); }

 private:
  Params base_params(const Eigen::VectorXd& X, const Params& p) const {
    Params q = p;
    q[p1_] = X[2 * n_];
    return q;
  }

  // c = wᵀ G_xx[v, v] with w the left null vector normalized by vᵀ w = 1.
  double cusp_test(const Eigen::VectorXd& X, const Params& p) const {
    const Params q = base_params(X, p);
    const Eigen::VectorXd x = X.head(n_);
    const Eigen::VectorXd v = X.segment(n_, n_);
    const SparseMatrix Jt = SparseMatrix(base_.jacobian(x, q).transpose());
    const SparseMatrix B = bordered(Jt, v, v, Eigen::MatrixXd::Zero(1, 1));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_ + 1);
    rhs[n_] = 1.0;
    const Eigen::VectorXd sol = sparse_solve(B, rhs);
    const Eigen::VectorXd w = sol.head(n_);
    const Eigen::VectorXd gvv = base_.hessian_action(x, q, v) * v;
    return w.dot(gvv) / w.norm();
  }

  Problem& base_;
  int p1_;
  Eigen::Index n_;
};

// Branch-point system in X = (x, psi, p1, kappa) with the second parameter
// active.
class BPProblem : public Problem {
 public:
  BPProblem(Problem& base, int p1, int p2, const Params& values)
      : Problem(base.parameter_names(), values, p2), base_(base), p1_(p1), n_(base.dimension()) {}

  Eigen::Index dimension() const override { return 2 * n_ + 2; }

  Eigen::VectorXd residual(const Eigen::VectorXd& X, const Params& p) const override {
    const Params q = base_params(X, p);
    const Eigen::VectorXd x = X.head(n_);
    const Eigen::VectorXd psi = X.segment(n_, n_);
    const double kappa = X[2 * n_ + 1];
    Eigen::VectorXd r(dimension());
    r.head(n_) = base_.residual(x, q) + kappa * psi;
    r.segment(n_, n_) = base_.jacobian(x, q).transpose() * psi;
    r[2 * n_] = psi.squaredNorm() - 1.0;
    r[2 * n_ + 1] = psi.dot(base_.parameter_derivative(x, q, p1_));
    return r;
  }

  SparseMatrix jacobian(const Eigen::VectorXd& X, const Params& p) const override {
    const Params q = base_params(X, p);
    const Eigen::VectorXd x = X.head(n_);
    const Eigen::VectorXd psi = X.segment(n_, n_);
    const double kappa = X[2 * n_ + 1];
    const SparseMatrix J = base_.jacobian(x, q);
    const Eigen::VectorXd Gp = base_.parameter_derivative(x, q, p1_);
    const Eigen::VectorXd Jp_t_psi = base_.jacobian_parameter_derivative(x, q, p1_).transpose() * psi;

    const double h = fd_step * std::max(1.0, std::abs(q[p1_]));
    Params qp = q, qm = q;
    qp[p1_] += h;
    qm[p1_] -= h;
    const double psi_Gpp =
        psi.dot(base_.parameter_derivative(x, qp, p1_) - base_.parameter_derivative(x, qm, p1_)) / (2.0 * h);

    Triplets trip;
    append_triplets(trip, J, 0, 0);
    if (kappa != 0.0) {
      for (Eigen::Index i = 0; i < n_; ++i) trip.emplace_back(static_cast<int>(i), static_cast<int>(n_ + i), kappa);
    }
    append_column(trip, Gp, 0, 2 * n_);
    append_column(trip, psi, 0, 2 * n_ + 1);
    append_triplets(trip, base_.hessian_adjoint(x, q, psi), n_, 0);
    append_triplets(trip, SparseMatrix(J.transpose()), n_, n_);
    append_column(trip, Jp_t_psi, n_, 2 * n_);
    append_row(trip, 2.0 * psi, 2 * n_, n_);
    append_row(trip, Jp_t_psi, 2 * n_ + 1, 0);
    append_row(trip, Gp, 2 * n_ + 1, n_);
    if (psi_Gpp != 0.0) trip.emplace_back(static_cast<int>(2 * n_ + 1), static_cast<int>(2 * n_), psi_Gpp);
    SparseMatrix A(dimension(), dimension());
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
  }

  Eigen::VectorXd arclength_weights() const override {
    const Eigen::VectorXd w = base_.arclength_weights();
    Eigen::VectorXd W(dimension());
    W << w, w, 1.0, 1.0;
    return W;
  }

  Observables observables(const Eigen::VectorXd& X, const Params& p) const override {
    const Params q = base_params(X, p);
    Observables obs = base_.observables(X.head(n_), q);
    obs.emplace_back(parameter_names()[p1_], X[2 * n_]);
    obs.emplace_back("kappa", X[2 * n_ + 1]);
    return obs;
  }

  std::shared_ptr<const void> context() const override { return base_.context(); }

 private:
  Params base_params(const Eigen::VectorXd& X, const Params& p) const {
    Params q = p;
    q[p1_] = X[2 * n_];
    return q;
  }

  Problem& base_;
  int p1_;
  Eigen::Index n_;
};

}  // namespace

namespace {

// The first parameter is an unknown of the extended systems; copy it back
// into the parameter vectors of the emitted points.
void sync_first_parameter(Branch& br, int p1, Eigen::Index slot) {
  const auto fix = [&](BranchPoint& pt) { pt.params[static_cast<std::size_t>(p1)] = pt.x[slot]; };
  for (auto& pt : br.points) fix(pt);
  for (auto& pt : br.hits) fix(pt);
  for (auto& rec : br.events) fix(rec.point);
}

}  // namespace

Branch fold_continue(Problem& problem, const BranchPointRecord& fold, const std::string& second,
                     const ContinuationSettings& settings, double direction) {
  if (fold.kind != EventKind::fold) throw std::invalid_argument("fold_continue: record is not a fold");
  const int p1 = problem.active;
  const int p2 = problem.parameter_index(second);
  if (p1 == p2) throw std::invalid_argument("fold_continue: second parameter equals the active one");
  const Eigen::Index n = problem.dimension();
  if (fold.point.x.size() != n) throw std::invalid_argument("fold_continue: record does not match the problem");

  Eigen::VectorXd v = fold.kernel.size() == n + 1 ? Eigen::VectorXd(fold.kernel.head(n)) : fold.point.tangent.head(n);
  v.normalize();
  FoldProblem fp(problem, p1, p2, fold.point.params);
  Eigen::VectorXd X0(2 * n + 1);
  X0 << fold.point.x, v, fold.point.params[p1];
  Branch br = continue_branch(fp, X0, parameter_direction(fp, direction), settings);
  sync_first_parameter(br, p1, 2 * n);
  return br;
}

Branch bp_continue(Problem& problem, const BranchPointRecord& bp, const std::string& second,
                   const ContinuationSettings& settings, double direction) {
  if (bp.kind != EventKind::bp) throw std::invalid_argument("bp_continue: record is not a branch point");
  const int p1 = problem.active;
  const int p2 = problem.parameter_index(second);
  if (p1 == p2) throw std::invalid_argument("bp_continue: second parameter equals the active one");
  const Eigen::Index n = problem.dimension();
  if (bp.point.x.size() != n) throw std::invalid_argument("bp_continue: record does not match the problem");

  const Eigen::VectorXd psi = null_vector(problem.jacobian(bp.point.x, bp.point.params), true);
  BPProblem bpp(problem, p1, p2, bp.point.params);
  Eigen::VectorXd X0(2 * n + 2);
  X0 << bp.point.x, psi, bp.point.params[p1], 0.0;
  Branch br = continue_branch(bpp, X0, parameter_direction(bpp, direction), settings);
  sync_first_parameter(br, p1, 2 * n);
  return br;
}

}  // namespace conecrit
