#pragma once

#include "conecrit/geometry.hpp"
#include "conecrit/linalg.hpp"
#include "conecrit/mesh.hpp"

#include <Eigen/Core>

#include <array>
#include <memory>
#include <vector>

namespace conecrit {

/// Normalization of the double-well energy: integral of sqrt(W/2) over [-1, 1].
inline constexpr double kSigma = 0.47140452079103168;  // sqrt(2) / 3

/// W(u) = (u^2 - 1)^2 / 4 and its derivatives.
template <typename Scalar>
Scalar double_well(Scalar u) {
  const Scalar s = u * u - Scalar(1);
  return s * s / Scalar(4);
}
template <typename Scalar>
Scalar double_well_d1(Scalar u) {
  return u * u * u - u;
}
template <typename Scalar>
Scalar double_well_d2(Scalar u) {
  return Scalar(3) * u * u - Scalar(1);
}

/// Seven-point, degree-five rule on the reference triangle; every point is
/// strictly interior. Weights sum to one.
struct TriangleQuadrature {
  static constexpr int size = 7;
  std::array<Eigen::Vector3d, size> barycentric;
  std::array<double, size> weight;
  static const TriangleQuadrature& degree5();
};

/// One critical-point candidate of the constrained Allen-Cahn system.
struct State {
  Eigen::VectorXd u;
  double lambda = 0.0;
  double m = 0.0;
  double eps = 0.1;
  ConeParams cone;
};

/// Assembled P1 operators of the cone metric plus the quadrature data used by
/// the nonlinear terms. Residual and energy share this rule.
struct DiscreteOperators {
  SparseMatrix K;  ///< integral of sqrt(det) g^{-1} grad phi_i . grad phi_j
  SparseMatrix M;  ///< integral of sqrt(det) phi_i phi_j
  Eigen::VectorXd mass_column;  ///< M * 1
  double area = 0.0;
  /// Quadrature weight w_q |T| sqrt(det(x_q)) per triangle (rows) and point.
  Eigen::Matrix<double, Eigen::Dynamic, TriangleQuadrature::size, Eigen::RowMajor> qweight;
  std::shared_ptr<const Mesh> mesh;
  ConeParams cone;

  Eigen::Index size() const { return K.rows(); }
};

/// Assembles stiffness and mass operators. Throws MeshError on degenerate
/// triangles. `workers` > 1 splits the triangle loop across threads.
DiscreteOperators assemble(std::shared_ptr<const Mesh> mesh, const ConeParams& cone, int workers = 1);

struct Residual {
  Eigen::VectorXd field;
  double constraint = 0.0;
};

/// Field part eps^2 K u + integral (W'(u) - lambda) phi_i; constraint part
/// <u> - m.
Residual residual(const State& state, const DiscreteOperators& ops);

/// Bordered Jacobian [[eps^2 K + N(u), -M 1], [(M 1)ᵀ / area, 0]] with
/// N(u) the quadrature of W''(u) phi_i phi_j.
SparseMatrix jacobian(const State& state, const DiscreteOperators& ops);

/// Field block eps^2 K + N(u) (the constrained Hessian is its restriction to
/// mass-neutral directions).
SparseMatrix hessian_field_block(const Eigen::VectorXd& u, double eps, const DiscreteOperators& ops);

/// Quadrature of weight(x_q) phi_i phi_j for a nodal weight interpolated at
/// the quadrature points, i.e. integral of (w_h) phi_i phi_j.
SparseMatrix weighted_mass(const Eigen::VectorXd& nodal_a, const Eigen::VectorXd& nodal_b, double scale,
                           const DiscreteOperators& ops);

/// Discrete Modica-Mortola energy (1/2 sigma) [ (eps/2) uᵀ K u + (1/eps) integral W(u) ].
double energy(const State& state, const DiscreteOperators& ops);

/// Mass average <u> = (1ᵀ M u) / area.
double mass_average(const Eigen::VectorXd& u, const DiscreteOperators& ops);

/// Per-triangle integral of |grad u|_g^2 (the interface indicator).
Eigen::VectorXd gradient_indicator(const Eigen::VectorXd& u, const DiscreteOperators& ops);

struct Polyline {
  std::vector<Eigen::Vector2d> points;
  bool closed = false;
};

struct LevelSet {
  double length = 0.0;
  std::vector<std::array<Eigen::Vector2d, 2>> segments;
  std::vector<Polyline> polylines;
};

/// Marching-triangles extraction of {u = c} with lengths measured in the cone
/// metric. Nodes with u == c count as lying above the level.
LevelSet level_set_length(const Eigen::VectorXd& u, double c, const Mesh& mesh, const ConeParams& cone);

/// Metric length of the straight parameter segment p0 -> p1.
double metric_segment_length(const Eigen::Vector2d& p0, const Eigen::Vector2d& p1, const ConeParams& cone);

}  // namespace conecrit
