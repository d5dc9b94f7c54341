#pragma once

#include "conecrit/continuation.hpp"
#include "conecrit/fem.hpp"

#include <memory>
#include <string>
#include <vector>

namespace conecrit {

/// Interface-driven remeshing during continuation.
struct AdaptSettings {
  bool enabled = false;
  /// Refine while eps < width_factor * (mesh size along the interface).
  double width_factor = 1.5;
  /// Triangles with a vertex where |u| < band belong to the interface.
  double band = 0.9;
  std::size_t element_cap = kDefaultElementCap;
  int max_rounds = 6;
};

/// The constrained Allen-Cahn system on a cone as a continuation problem.
/// Unknowns x = (u, lambda); parameters m, eps, h, a.
class FemProblem : public Problem {
 public:
  static constexpr int kM = 0;
  static constexpr int kEps = 1;
  static constexpr int kH = 2;
  static constexpr int kA = 3;

  FemProblem(std::shared_ptr<const Mesh> mesh, const ConeParams& cone, double m, double eps, int workers = 1);

  Eigen::Index dimension() const override { return mesh_->node_count() + 1; }
  Eigen::VectorXd residual(const Eigen::VectorXd& x, const Params& p) const override;
  SparseMatrix jacobian(const Eigen::VectorXd& x, const Params& p) const override;
  Eigen::VectorXd parameter_derivative(const Eigen::VectorXd& x, const Params& p, int k) const override;
  SparseMatrix jacobian_parameter_derivative(const Eigen::VectorXd& x, const Params& p, int k) const override;
  SparseMatrix hessian_action(const Eigen::VectorXd& x, const Params& p, const Eigen::VectorXd& v) const override;
  SparseMatrix hessian_adjoint(const Eigen::VectorXd& x, const Params& p, const Eigen::VectorXd& psi) const override;
  Eigen::VectorXd arclength_weights() const override;
  bool has_spectrum() const override { return compute_spectrum; }
  Eigen::VectorXd spectrum(const Eigen::VectorXd& x, const Params& p) const override;
  Observables observables(const Eigen::VectorXd& x, const Params& p) const override;
  bool adapt(Eigen::VectorXd& x, const Params& p) override;
  std::shared_ptr<const void> context() const override { return mesh_; }

  const std::shared_ptr<const Mesh>& mesh() const { return mesh_; }
  void set_mesh(std::shared_ptr<const Mesh> mesh);

  /// Assembled operators for the cone in `p` (cached).
  const DiscreteOperators& operators(const Params& p) const;
  const DiscreteOperators& operators() const { return operators(params); }

  State state(const Eigen::VectorXd& x, const Params& p) const;
  State state(const Eigen::VectorXd& x) const { return state(x, params); }
  Eigen::VectorXd pack(const Eigen::VectorXd& u, double lambda) const;

  /// Constrained-Hessian eigenpairs at x (values ascending).
  ConstrainedSpectrum constrained_spectrum(const Eigen::VectorXd& x, const Params& p, int count) const;

  bool compute_spectrum = true;
  int spectrum_count = 5;
  AdaptSettings adapt_settings;
  int workers = 1;

 private:
  struct CacheEntry {
    double h;
    double a;
    std::shared_ptr<const Mesh> mesh;
    std::shared_ptr<DiscreteOperators> ops;
  };

  std::shared_ptr<const Mesh> mesh_;
  mutable std::vector<CacheEntry> cache_;
};

/// Morse index of a converged FEM state: negative eigenvalues of the
/// constrained Hessian. Throws IndeterminateIndex near zero.
int morse_index(const FemProblem& problem, const Eigen::VectorXd& x, double tol_eig = 1e-8);

enum class InterfaceGuess {
  t1,         ///< straight interface through the tip along the short axis
  t1_long,    ///< straight interface through the tip along the long axis
  t3,         ///< horizontal circle around the tip at parameter radius 1/sqrt(2)
  winding,    ///< arc from boundary to boundary that bends around the tip
};

/// Tanh-profile nodal field approximating an interface of the given type.
Eigen::VectorXd interface_guess(const Mesh& mesh, const ConeParams& cone, double eps, InterfaceGuess type);

/// Relaxes u by semi-implicit mass-conserving gradient flow and then
/// converges with Newton at the current parameters. Returns x = (u, lambda).
Eigen::VectorXd converge_from_guess(const FemProblem& problem, const Eigen::VectorXd& u, int relax_steps = 0,
                                    double tau = 0.05, const NewtonSettings& newton = {});

/// Interface type of the zero level set: "T1" (within one mesh size of the
/// tip), "T3" (closed loop winding once around the tip), "T2" (a single
/// boundary-to-boundary curve avoiding the tip) or "other".
std::string classify_interface(const Eigen::VectorXd& u, const Mesh& mesh, const ConeParams& cone);

}  // namespace conecrit
