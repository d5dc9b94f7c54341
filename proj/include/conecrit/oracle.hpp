#pragma once

#include "conecrit/continuation.hpp"

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace conecrit {

class NoRoot : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reference value with the inputs and method that produced it.
struct OracleValue {
  std::string name;
  double value = 0.0;
  std::string inputs;
  std::string method;  ///< closed-form | root-solve | eigen-solve
  double residual = 0.0;
};

/// Interface through the tip along a diameter: 2 sqrt(1 + h^2).
OracleValue l1(double h);
/// Horizontal circle halving the area: sqrt(2) pi, for any h.
OracleValue l3();
/// Area-halving circular arc avoiding the tip on the circular cone.
OracleValue l2(double h);

/// Height of the level circle that realizes l3.
double l3_height(double h);

/// Neumann eigenvalues of the unit disk in ascending order, repeated
/// according to multiplicity, excluding the constant mode.
std::vector<double> disk_neumann_eigenvalues(int count);

/// Same for the circular cone of height h (slant height S, angular
/// frequencies n S).
std::vector<double> cone_neumann_eigenvalues(double h, int count);

/// Zeros of J'_nu in (0, x_max], ascending (x = 0 excluded).
std::vector<double> bessel_derivative_zeros(double nu, double x_max);

/// Masses m_k = sqrt((1 - eps^2 nu_k) / 3) of branch points on the trivial
/// branch for each nu_k > 0 with eps^2 nu_k < 1, ordered by ascending nu_k.
std::vector<double> trivial_branch_bps(double eps, const std::vector<double>& eigenvalues);

/// Fold locus of the cusp normal form: mu2 = (4 / (3 sqrt 6)) mu1^{3/2}.
double cusp_fold_mu2(double mu1);

/// Scalar problem f(u, params) = 0 given with analytic derivatives. The
/// stability spectrum is -f_u (the Hessian of E with u' = -E'(u) = f).
class ScalarProblem : public Problem {
 public:
  using F = std::function<double(double, const Params&)>;
  using Fk = std::function<double(double, const Params&, int)>;

  ScalarProblem(std::string name, std::vector<std::string> names, Params values, F f, F fu, F fuu, Fk fp, Fk fup);

  const std::string& name() const { return name_; }
  double f(double u) const { return f_(u, params); }

  Eigen::Index dimension() const override { return 1; }
  Eigen::VectorXd residual(const Eigen::VectorXd& x, const Params& p) const override;
  SparseMatrix jacobian(const Eigen::VectorXd& x, const Params& p) const override;
  Eigen::VectorXd parameter_derivative(const Eigen::VectorXd& x, const Params& p, int k) const override;
  SparseMatrix jacobian_parameter_derivative(const Eigen::VectorXd& x, const Params& p, int k) const override;
  SparseMatrix hessian_action(const Eigen::VectorXd& x, const Params& p, const Eigen::VectorXd& v) const override;
  SparseMatrix hessian_adjoint(const Eigen::VectorXd& x, const Params& p, const Eigen::VectorXd& psi) const override;
  bool has_spectrum() const override { return true; }
  Eigen::VectorXd spectrum(const Eigen::VectorXd& x, const Params& p) const override;

 private:
  std::string name_;
  F f_, fu_, fuu_;
  Fk fp_, fup_;
};

/// Registry: fold, transcritical, pitchfork-super, pitchfork-sub, quintic,
/// cusp, plus the two-parameter unfoldings pitchfork-imperfect
/// (mu u - u^3 + beta) and pitchfork-asymmetric (mu u + beta u^2 - u^3).
std::unique_ptr<ScalarProblem> normal_form(const std::string& name);
std::vector<std::string> normal_form_names();

}  // namespace conecrit
