#pragma once

#include "conecrit/linalg.hpp"

#include <Eigen/Core>

#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace conecrit {

using Params = std::vector<double>;
using Observables = std::vector<std::pair<std::string, double>>;

class NoConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class SingularJacobian : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class IndeterminateIndex : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class AllPredictorsFellBack : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EventKind { none, fold, bp, cusp_candidate };
const char* to_string(EventKind kind);

/// A parameter-dependent system G(x, p) = 0 with one active continuation
/// parameter. Derivatives beyond the Jacobian have finite-difference
/// defaults; problems override them when exact forms are cheap.
class Problem {
 public:
  Problem(std::vector<std::string> names, Params values, int active = 0);
  virtual ~Problem() = default;

  virtual Eigen::Index dimension() const = 0;
  virtual Eigen::VectorXd residual(const Eigen::VectorXd& x, const Params& p) const = 0;
  virtual SparseMatrix jacobian(const Eigen::VectorXd& x, const Params& p) const = 0;

  /// dG/dp_k.
  virtual Eigen::VectorXd parameter_derivative(const Eigen::VectorXd& x, const Params& p, int k) const;
  /// d(G_x)/dp_k.
  virtual SparseMatrix jacobian_parameter_derivative(const Eigen::VectorXd& x, const Params& p, int k) const;
  /// H with H w = G_xx[v, w].
  virtual SparseMatrix hessian_action(const Eigen::VectorXd& x, const Params& p, const Eigen::VectorXd& v) const;
  /// T with T w = (G_xx[w, .])ᵀ psi, i.e. the Hessian of psiᵀ G. The default
  /// costs one Jacobian pair per unknown and is meant for small systems.
  virtual SparseMatrix hessian_adjoint(const Eigen::VectorXd& x, const Params& p, const Eigen::VectorXd& psi) const;

  /// Diagonal weights of the state part of the arclength norm.
  virtual Eigen::VectorXd arclength_weights() const;

  /// Stability spectrum (ascending); the Morse index counts negative entries.
  virtual bool has_spectrum() const { return false; }
  virtual Eigen::VectorXd spectrum(const Eigen::VectorXd& x, const Params& p) const;

  virtual Observables observables(const Eigen::VectorXd& /*x*/, const Params& /*p*/) const { return {}; }

  /// Additional scalar test functions whose sign changes are events.
  virtual std::vector<double> test_functions(const Eigen::VectorXd& /*x*/, const Params& /*p*/) const { return {}; }
  virtual EventKind test_function_kind(int /*i*/) const { return EventKind::cusp_candidate; }

  /// Remeshing hook called after accepted steps. Returns true if the
  /// discretization changed; `x` is then replaced by the transferred state.
  virtual bool adapt(Eigen::VectorXd& /*x*/, const Params& /*p*/) { return false; }

  /// Opaque handle of the current discretization, stored with branch points.
  virtual std::shared_ptr<const void> context() const { return nullptr; }

  const std::vector<std::string>& parameter_names() const { return names_; }
  int parameter_index(const std::string& name) const;
  const std::string& active_name() const { return names_.at(static_cast<std::size_t>(active)); }
  double active_value() const { return params.at(static_cast<std::size_t>(active)); }

  Params params;
  int active = 0;
  double fd_step = 1e-6;

 private:
  std::vector<std::string> names_;
};

struct NewtonSettings {
  double tol = 1e-8;
  double step_tol = 1e-10;
  int max_iter = 20;
};

struct NewtonResult {
  Eigen::VectorXd x;
  double p = 0.0;
  int iterations = 0;
  double residual_norm = 0.0;
};

/// Newton's method for G(x, p) = 0. With an empty `normal` the active
/// parameter is fixed; otherwise (x, p) is constrained to the hyperplane
/// normalᵀ (x, p) = rhs.
NewtonResult newton_correct(const Problem& problem, Eigen::VectorXd x, double p, const NewtonSettings& settings,
                            const Eigen::VectorXd& normal = Eigen::VectorXd(), double rhs = 0.0);

/// Unit tangent (dx, dp) of the solution curve in the weighted norm,
/// oriented so that its weighted product with `direction` is positive.
Eigen::VectorXd branch_tangent(const Problem& problem, const Eigen::VectorXd& x, double p,
                               const Eigen::VectorXd& direction);

/// Direction vector pointing along +/- the active parameter.
Eigen::VectorXd parameter_direction(const Problem& problem, double sign = 1.0);

/// Counts negative entries; throws IndeterminateIndex if any entry lies
/// within tol of zero.
int morse_index(const Eigen::VectorXd& spectrum, double tol);

struct BranchPoint {
  Eigen::VectorXd x;
  Params params;
  Eigen::VectorXd tangent;  ///< (dx, dp), unit in the weighted norm
  Eigen::VectorXd spectrum;
  int index = -1;  ///< -1 when unknown or indeterminate
  Observables observables;
  EventKind event = EventKind::none;
  double arclength = 0.0;
  std::shared_ptr<const void> context;

  double observable(const std::string& name, double fallback) const;
};

struct BranchPointRecord {
  EventKind kind = EventKind::none;
  BranchPoint point;
  Eigen::VectorXd kernel;  ///< (dx, dp) near-null vector; unit in the weighted norm
  double s_lo = 0.0;       ///< arclength bracket of the detection interval
  double s_hi = 0.0;
  int step = 0;
  int index_before = -1;
  int index_after = -1;
  bool resolved = true;
};

struct Branch {
  std::string param_name;
  std::vector<std::string> param_names;
  int active = 0;
  std::vector<BranchPoint> points;
  std::vector<BranchPointRecord> events;
  std::vector<BranchPoint> hits;  ///< points corrected exactly at requested targets
  std::vector<std::string> labels;
  std::string stop_reason;

  std::vector<const BranchPointRecord*> events_of(EventKind kind) const;
};

struct ContinuationSettings {
  double ds = 0.02;
  double ds_min = 1e-5;
  double ds_max = 0.1;
  int max_steps = 500;
  double p_min = -std::numeric_limits<double>::infinity();
  double p_max = std::numeric_limits<double>::infinity();
  /// Parameter values at which a fixed-parameter correction is recorded.
  std::vector<double> targets;
  NewtonSettings newton;
  bool detect_events = true;
  double tol_eig = 1e-8;
  /// Relative arclength tolerance of event location.
  double event_tol = 1e-10;
  int grow_after = 3;
  double grow = 1.3;
  /// Stop after this many located events (0 = no limit).
  int max_events = 0;
  bool stop_at_cusp = true;
  std::function<bool(const BranchPoint&)> stop;
  std::function<void(const BranchPoint&)> on_step;
};

/// Pseudo-arclength continuation of a converged start point along
/// `direction` (length dimension + 1; see parameter_direction).
Branch continue_branch(Problem& problem, const Eigen::VectorXd& x0, const Eigen::VectorXd& direction,
                       const ContinuationSettings& settings);

/// Null direction (v, 0) of G_x at a branch point, made W-orthogonal to the
/// branch tangent and normalized.
Eigen::VectorXd branch_point_kernel(const Problem& problem, const Eigen::VectorXd& x, double p,
                                    const Eigen::VectorXd& tangent);

struct BranchSeed {
  Eigen::VectorXd x;
  Params params;
  Eigen::VectorXd direction;
};

struct SwitchSettings {
  double ds = 0.02;
  /// Predictor offset as a fraction of ds.
  double delta_factor = 0.1;
  NewtonSettings newton;
};

/// Converged starting points on the branches crossing the parent at a
/// simple branch point. Throws AllPredictorsFellBack if none is distinct.
std::vector<BranchSeed> switch_branch(Problem& problem, const BranchPointRecord& bp, const Branch& parent,
                                      const SwitchSettings& settings);

/// Two-parameter continuation of a fold: Moore-Spence system
/// {G = 0, G_x v = 0, vᵀv = 1} in (active, second). Emits a cusp candidate
/// where wᵀ G_xx[v, v] changes sign.
Branch fold_continue(Problem& problem, const BranchPointRecord& fold, const std::string& second,
                     const ContinuationSettings& settings, double direction = 1.0);

/// Two-parameter continuation of a simple branch point with the system
/// {G + kappa psi = 0, G_xᵀ psi = 0, psiᵀ psi = 1, psiᵀ G_p = 0}.
Branch bp_continue(Problem& problem, const BranchPointRecord& bp, const std::string& second,
                   const ContinuationSettings& settings, double direction = 1.0);

/// Unit null vector of a square sparse matrix (smallest singular direction).
Eigen::VectorXd null_vector(const SparseMatrix& A, bool transpose = false);

/// CSV: step,param_name,param_value,m,eps,h,a,lambda,energy,index,event
void write_branch_csv(std::ostream& os, const Branch& branch);
void save_branch_csv(const std::string& path, const Branch& branch);

}  // namespace conecrit
