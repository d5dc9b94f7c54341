#include "conecrit/fem_problem.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace conecrit {

namespace {

SparseMatrix pad(const SparseMatrix& A, Eigen::Index extra = 1) {
  Triplets trip;
  append_triplets(trip, A);
  SparseMatrix out(A.rows() + extra, A.cols() + extra);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

ConeParams cone_of(const Params& p) { return ConeParams{p[FemProblem::kH], p[FemProblem::kA]}; }

}  // namespace

FemProblem::FemProblem(std::shared_ptr<const Mesh> mesh, const ConeParams& cone, double m, double eps, int n_workers)
    : Problem({"m", "eps", "h", "a"}, {m, eps, cone.h, cone.a}, kM), workers(n_workers), mesh_(std::move(mesh)) {
  cone.validate();
  if (!(eps > 0.0)) throw std::invalid_argument("FemProblem: eps must be positive");
}

void FemProblem::set_mesh(std::shared_ptr<const Mesh> mesh) {
  mesh_ = std::move(mesh);
  cache_.clear();
}

const DiscreteOperators& FemProblem::operators(const Params& p) const {
  const double h = p[kH], a = p[kA];
  for (std::size_t i = 0; i < cache_.size(); ++i) {
    if (cache_[i].h == h && cache_[i].a == a && cache_[i].mesh == mesh_) {
      if (i != 0) std::rotate(cache_.begin(), cache_.begin() + static_cast<long>(i), cache_.begin() + static_cast<long>(i) + 1);
      return *cache_.front().ops;
    }
  }
  auto ops = std::make_shared<DiscreteOperators>(assemble(mesh_, ConeParams{h, a}, workers));
  cache_.insert(cache_.begin(), CacheEntry{h, a, mesh_, ops});
  if (cache_.size() > 4) cache_.pop_back();
  return *cache_.front().ops;
}

State FemProblem::state(const Eigen::VectorXd& x, const Params& p) const {
  const Eigen::Index n = mesh_->node_count();
  if (x.size() != n + 1) throw std::invalid_argument("FemProblem: state size does not match the mesh");
  State s;
  s.u = x.head(n);
  s.lambda = x[n];
  s.m = p[kM];
  s.eps = p[kEps];
  s.cone = cone_of(p);
  return s;
}

Eigen::VectorXd FemProblem::pack(const Eigen::VectorXd& u, double lambda) const {
  Eigen::VectorXd x(u.size() + 1);
  x << u, lambda;
  return x;
}

Eigen::VectorXd FemProblem::residual(const Eigen::VectorXd& x, const Params& p) const {
  const Residual r = conecrit::residual(state(x, p), operators(p));
  Eigen::VectorXd out(x.size());
  out << r.field, r.constraint;
  return out;
}

SparseMatrix FemProblem::jacobian(const Eigen::VectorXd& x, const Params& p) const {
  return conecrit::jacobian(state(x, p), operators(p));
}

Eigen::VectorXd FemProblem::parameter_derivative(const Eigen::VectorXd& x, const Params& p, int k) const {
  const Eigen::Index n = mesh_->node_count();
  if (k == kM) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n + 1);
    d[n] = -1.0;
    return d;
  }
  if (k == kEps) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n + 1);
    d.head(n) = 2.0 * p[kEps] * (operators(p).K * x.head(n));
    return d;
  }
  return Problem::parameter_derivative(x, p, k);
}

SparseMatrix FemProblem::jacobian_parameter_derivative(const Eigen::VectorXd& x, const Params& p, int k) const {
  if (k == kM) return SparseMatrix(x.size(), x.size());
  if (k == kEps) return pad(SparseMatrix(2.0 * p[kEps] * operators(p).K));
  return Problem::jacobian_parameter_derivative(x, p, k);
}

SparseMatrix FemProblem::hessian_action(const Eigen::VectorXd& x, const Params& p, const Eigen::VectorXd& v) const {
  const Eigen::Index n = mesh_->node_count();
  return pad(weighted_mass(x.head(n), v.head(n), 6.0, operators(p)));
}

SparseMatrix FemProblem::hessian_adjoint(const Eigen::VectorXd& x, const Params& p,
                                         const Eigen::VectorXd& psi) const {
  const Eigen::Index n = mesh_->node_count();
  return pad(weighted_mass(x.head(n), psi.head(n), 6.0, operators(p)));
}

Eigen::VectorXd FemProblem::arclength_weights() const {
  const Eigen::Index n = dimension();
  return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n - 1));
}

ConstrainedSpectrum FemProblem::constrained_spectrum(const Eigen::VectorXd& x, const Params& p, int count) const {
  const DiscreteOperators& ops = operators(p);
  const Eigen::Index n = mesh_->node_count();
  SpectrumOptions opt;
  opt.min_count = count;
  opt.include_below = 0.0;
  // W'' >= -1, so A - shift M is positive definite.
  opt.shift = -1.1;
  return constrained_eigenvalues(hessian_field_block(x.head(n), p[kEps], ops), ops.M, ops.mass_column, opt);
}

Eigen::VectorXd FemProblem::spectrum(const Eigen::VectorXd& x, const Params& p) const {
  return constrained_spectrum(x, p, spectrum_count).values;
}

Observables FemProblem::observables(const Eigen::VectorXd& x, const Params& p) const {
  const State s = state(x, p);
  return {{"lambda", s.lambda}, {"energy", energy(s, operators(p))}};
}

bool FemProblem::adapt(Eigen::VectorXd& x, const Params& p) {
  if (!adapt_settings.enabled) return false;
  const double eps = p[kEps];
  bool changed = false;
  for (int round = 0; round < adapt_settings.max_rounds; ++round) {
    const Mesh& mesh = *mesh_;
    const Eigen::Index n = mesh.node_count();
    const Eigen::VectorXd u = x.head(n);
    std::vector<int> marked;
    for (Eigen::Index t = 0; t < mesh.triangle_count(); ++t) {
      const auto& tri = mesh.triangles[t];
      double lo = std::numeric_limits<double>::infinity(), hi = -lo, near = lo;
      for (int k = 0; k < 3; ++k) {
        lo = std::min(lo, u[tri[k]]);
        hi = std::max(hi, u[tri[k]]);
        near = std::min(near, std::abs(u[tri[k]]));
      }
      const bool interface = (lo < 0.0 && hi >= 0.0) || near < adapt_settings.band;
      if (interface && eps < adapt_settings.width_factor * mesh.diameter(t)) marked.push_back(static_cast<int>(t));
    }
    if (marked.empty()) break;
    const Eigen::VectorXd grad = gradient_indicator(u, operators(p));
    // Marked triangles rank above all others; the gradient breaks ties.
    Eigen::VectorXd indicator = Eigen::VectorXd::Zero(mesh.triangle_count());
    const double top = grad.maxCoeff() + 1.0;
    for (int t : marked) indicator[t] = top + grad[t];
    const double fraction = static_cast<double>(marked.size()) / static_cast<double>(mesh.triangle_count());
    RefineOptions opt;
    opt.element_cap = adapt_settings.element_cap;
    Mesh fine;
    try {
      fine = refine(mesh, indicator, fraction, opt);
    } catch (const MeshError&) {
      break;
    }
    auto fine_ptr = std::make_shared<const Mesh>(std::move(fine));
    const Eigen::VectorXd u_fine = transfer(u, mesh, *fine_ptr);
    const double lambda = x[n];
    set_mesh(fine_ptr);
    x = pack(u_fine, lambda);
    changed = true;
  }
  return changed;
}

int morse_index(const FemProblem& problem, const Eigen::VectorXd& x, double tol_eig) {
  return morse_index(problem.spectrum(x, problem.params), tol_eig);
}

Eigen::VectorXd interface_guess(const Mesh& mesh, const ConeParams& cone, double eps, InterfaceGuess type) {
  const double w = std::numbers::sqrt2 * eps;
  const double S = cone.slant_height();
  Eigen::VectorXd u(mesh.node_count());
  for (Eigen::Index i = 0; i < mesh.node_count(); ++i) {
    const double x = mesh.nodes[i].x(), y = mesh.nodes[i].y();
    double d = 0.0;
    switch (type) {
      case InterfaceGuess::t1: d = cone.a * x; break;
      case InterfaceGuess::t1_long: d = y; break;
      case InterfaceGuess::t3: d = S * (std::hypot(x, y) - 1.0 / std::numbers::sqrt2); break;
      case InterfaceGuess::winding: {
        // Circle centred at (c, 0) meeting the unit circle orthogonally.
        const double c = 2.5;
        const double rho = std::sqrt(c * c - 1.0);
        d = cone.a * (rho - std::hypot(x - c, y));
        break;
      }
    }
    u[i] = std::tanh(d / w);
  }
  return u;
}

Eigen::VectorXd converge_from_guess(const FemProblem& problem, const Eigen::VectorXd& u0, int relax_steps, double tau,
                                    const NewtonSettings& newton) {
  const DiscreteOperators& ops = problem.operators();
  const Eigen::Index n = ops.size();
  const double eps = problem.params[FemProblem::kEps];
  const double m = problem.params[FemProblem::kM];
  Eigen::VectorXd u = u0;
  double lambda = 0.0;

  const auto nonlinear = [&](const Eigen::VectorXd& v) {
    State s = problem.state(problem.pack(v, 0.0));
    return Eigen::VectorXd(residual(s, ops).field - eps * eps * (ops.K * v));
  };

  if (relax_steps > 0) {
    // Convex splitting: implicit diffusion plus stabilization 2 M.
    const double stab = 2.0;
    const SparseMatrix A = SparseMatrix((1.0 / tau + stab) * ops.M + eps * eps * ops.K);
    const SparseMatrix B = bordered(A, -ops.mass_column, ops.mass_column / ops.area, Eigen::MatrixXd::Zero(1, 1));
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(B);
    if (lu.info() != Eigen::Success) throw SingularJacobian("converge_from_guess: relaxation matrix is singular");
    for (int k = 0; k < relax_steps; ++k) {
      Eigen::VectorXd rhs(n + 1);
      rhs.head(n) = (1.0 / tau + stab) * (ops.M * u) - nonlinear(u);
      rhs[n] = m;
      const Eigen::VectorXd sol = lu.solve(rhs);
      u = sol.head(n);
      lambda = sol[n];
    }
  } else {
    lambda = nonlinear(u).sum() / ops.area;
  }
  const NewtonResult r = newton_correct(problem, problem.pack(u, lambda), problem.active_value(), newton);
  return r.x;
}

std::string classify_interface(const Eigen::VectorXd& u, const Mesh& mesh, const ConeParams& cone) {
  const LevelSet ls = level_set_length(u, 0.0, mesh, cone);
  if (ls.polylines.empty()) return "other";

  double tip_size = 0.0;
  const int origin = mesh.origin_node();
  for (Eigen::Index t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    if (tri[0] == origin || tri[1] == origin || tri[2] == origin) tip_size = std::max(tip_size, mesh.diameter(t));
  }
  if (tip_size == 0.0) tip_size = mesh.max_edge_length();

  const auto segment_distance = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    const Eigen::Vector2d d = b - a;
    const double dd = d.squaredNorm();
    const double t = dd > 0.0 ? std::clamp(-a.dot(d) / dd, 0.0, 1.0) : 0.0;
    return (a + t * d).norm();
  };
  for (const auto& seg : ls.segments) {
    if (segment_distance(seg[0], seg[1]) < tip_size) return "T1";
  }
  if (ls.polylines.size() != 1) return "other";
  const Polyline& line = ls.polylines.front();
  if (line.closed) {
    double winding = 0.0;
    for (std::size_t i = 0; i < line.points.size(); ++i) {
      const Eigen::Vector2d& a = line.points[i];
      const Eigen::Vector2d& b = line.points[(i + 1) % line.points.size()];
      winding += std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b));
    }
    return std::abs(std::abs(winding) / (2.0 * std::numbers::pi) - 1.0) < 0.1 ? "T3" : "other";
  }
  return "T2";
}

}  // namespace conecrit
