#include "conecrit/continuation.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace conecrit {

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::none: return "none";
    case EventKind::fold: return "fold";
    case EventKind::bp: return "bp";
    case EventKind::cusp_candidate: return "cusp-candidate";
  }
  return "none";
}

Problem::Problem(std::vector<std::string> names, Params values, int active_index)
    : params(std::move(values)), active(active_index), names_(std::move(names)) {
  if (params.size() != names_.size()) throw std::invalid_argument("Problem: parameter names/values mismatch");
  if (active < 0 || active >= static_cast<int>(params.size())) throw std::invalid_argument("Problem: bad active index");
}

int Problem::parameter_index(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<int>(i);
  }
  throw std::invalid_argument("unknown parameter '" + name + "'");
}

Eigen::VectorXd Problem::parameter_derivative(const Eigen::VectorXd& x, const Params& p, int k) const {
  const double h = fd_step * std::max(1.0, std::abs(p[k]));
  Params pp = p, pm = p;
  pp[k] += h;
  pm[k] -= h;
  return (residual(x, pp) - residual(x, pm)) / (2.0 * h);
}

SparseMatrix Problem::jacobian_parameter_derivative(const Eigen::VectorXd& x, const Params& p, int k) const {
  const double h = fd_step * std::max(1.0, std::abs(p[k]));
  Params pp = p, pm = p;
  pp[k] += h;
  pm[k] -= h;
  SparseMatrix d = (jacobian(x, pp) - jacobian(x, pm)) / (2.0 * h);
  d.prune(0.0);
  return d;
}

SparseMatrix Problem::hessian_action(const Eigen::VectorXd& x, const Params& p, const Eigen::VectorXd& v) const {
  const double nv = v.lpNorm<Eigen::Infinity>();
  if (nv == 0.0) return SparseMatrix(x.size(), x.size());
  const double h = fd_step * (1.0 + x.lpNorm<Eigen::Infinity>()) / nv;
  SparseMatrix d = (jacobian(x + h * v, p) - jacobian(x - h * v, p)) / (2.0 * h);
  d.prune(0.0);
  return d;
}

SparseMatrix Problem::hessian_adjoint(const Eigen::VectorXd& x, const Params& p, const Eigen::VectorXd& psi) const {
  const Eigen::Index n = x.size();
  const double h = fd_step * (1.0 + x.lpNorm<Eigen::Infinity>());
  Eigen::MatrixXd T(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    T.col(j) = (jacobian(xp, p).transpose() * psi - jacobian(xm, p).transpose() * psi) / (2.0 * h);
  }
  return T.sparseView();
}

Eigen::VectorXd Problem::arclength_weights() const { return Eigen::VectorXd::Ones(dimension()); }

Eigen::VectorXd Problem::spectrum(const Eigen::VectorXd&, const Params&) const {
  throw std::logic_error("Problem: no stability spectrum available");
}

double BranchPoint::observable(const std::string& name, double fallback) const {
  for (const auto& [k, v] : observables) {
    if (k == name) return v;
  }
  return fallback;
}

std::vector<const BranchPointRecord*> Branch::events_of(EventKind kind) const {
  std::vector<const BranchPointRecord*> out;
  for (const auto& e : events) {
    if (e.kind == kind) out.push_back(&e);
  }
  return out;
}

namespace {

Eigen::VectorXd join(const Eigen::VectorXd& x, double p) {
  Eigen::VectorXd X(x.size() + 1);
  X << x, p;
  return X;
}

Eigen::VectorXd full_weights(const Problem& problem) {
  const Eigen::VectorXd w = problem.arclength_weights();
  Eigen::VectorXd W(w.size() + 1);
  W << w, 1.0;
  return W;
}

double wdot(const Eigen::VectorXd& W, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (W.array() * a.array() * b.array()).sum();
}

double wnorm(const Eigen::VectorXd& W, const Eigen::VectorXd& a) { return std::sqrt(wdot(W, a, a)); }

SparseMatrix extended_jacobian(const Problem& problem, const Eigen::VectorXd& x, const Params& p,
                               const Eigen::VectorXd& row) {
  const SparseMatrix J = problem.jacobian(x, p);
  const Eigen::VectorXd Gp = problem.parameter_derivative(x, p, problem.active);
  const Eigen::Index n = x.size();
  return bordered(J, Gp, row.head(n), Eigen::MatrixXd::Constant(1, 1, row[n]));
}

Eigen::VectorXd solve_or_throw(const SparseMatrix& A, const Eigen::VectorXd& b) {
  try {
    return sparse_solve(A, b);
  } catch (const SingularMatrix& e) {
    throw SingularJacobian(e.what());
  }
}

}  // namespace

NewtonResult newton_correct(const Problem& problem, Eigen::VectorXd x, double p, const NewtonSettings& settings,
                            const Eigen::VectorXd& normal, double rhs) {
  const bool arclength = normal.size() > 0;
  const Eigen::Index n = x.size();
  Params params = problem.params;
  double last_step = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= settings.max_iter; ++it) {
    params[problem.active] = p;
    const Eigen::VectorXd G = problem.residual(x, params);
    const double gnorm = G.lpNorm<Eigen::Infinity>();
    const double hyper = arclength ? normal.dot(join(x, p)) - rhs : 0.0;
    if (!std::isfinite(gnorm)) throw NoConvergence("newton: non-finite residual");
    const double scale = 1.0 + std::max(x.lpNorm<Eigen::Infinity>(), std::abs(p));
    const bool small_residual = gnorm <= settings.tol && std::abs(hyper) <= settings.tol * scale;
    if (small_residual && (last_step <= settings.step_tol * scale || gnorm <= 1e-3 * settings.tol)) {
      return {x, p, it, gnorm};
    }
    if (it == settings.max_iter) break;
    if (arclength) {
      const SparseMatrix A = extended_jacobian(problem, x, params, normal);
      const Eigen::VectorXd d = solve_or_throw(A, -join(G, hyper));
      x += d.head(n);
      p += d[n];
      last_step = d.lpNorm<Eigen::Infinity>();
    } else {
      const Eigen::VectorXd d = solve_or_throw(problem.jacobian(x, params), -G);
      x += d;
      last_step = d.lpNorm<Eigen::Infinity>();
    }
    if (!x.allFinite() || !std::isfinite(p)) throw NoConvergence("newton: diverged");
  }
  std::ostringstream msg;
  msg << "newton: no convergence in " << settings.max_iter << " iterations";
  throw NoConvergence(msg.str());
}

Eigen::VectorXd branch_tangent(const Problem& problem, const Eigen::VectorXd& x, double p,
                               const Eigen::VectorXd& direction) {
  const Eigen::VectorXd W = full_weights(problem);
  Params params = problem.params;
  params[problem.active] = p;
  const Eigen::VectorXd row = (W.array() * direction.array()).matrix();
  const SparseMatrix A = extended_jacobian(problem, x, params, row);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(x.size() + 1);
  e[x.size()] = 1.0;
  Eigen::VectorXd t = solve_or_throw(A, e);
  t /= wnorm(W, t);
  if (wdot(W, t, direction) < 0.0) t = -t;
  return t;
}

Eigen::VectorXd parameter_direction(const Problem& problem, double sign) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(problem.dimension() + 1);
  d[problem.dimension()] = sign >= 0.0 ? 1.0 : -1.0;
  return d;
}

int morse_index(const Eigen::VectorXd& spectrum, double tol) {
  int count = 0;
  for (double mu : spectrum) {
    if (std::abs(mu) <= tol) throw IndeterminateIndex("morse_index: eigenvalue within tolerance of zero");
    if (mu < 0.0) ++count;
  }
  return count;
}

Eigen::VectorXd null_vector(const SparseMatrix& A, bool transpose) {
  const Eigen::Index n = A.rows();
  if (n <= 400) {
    Eigen::MatrixXd D = Eigen::MatrixXd(A);
    if (transpose) D.transposeInPlace();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(D, Eigen::ComputeFullV);
    Eigen::VectorXd v = svd.matrixV().col(n - 1);
    Eigen::Index imax;
    v.cwiseAbs().maxCoeff(&imax);
    return v[imax] < 0.0 ? Eigen::VectorXd(-v) : v;
  }
  SparseMatrix B = transpose ? SparseMatrix(A.transpose()) : A;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(B);
  lu.factorize(B);
  if (lu.info() != Eigen::Success) {
    // Exactly singular: shift slightly off the singular point.
    SparseMatrix I(n, n);
    I.setIdentity();
    double scale = 1e-300;
    for (int k = 0; k < B.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(B, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
    B = B + 1e-12 * scale * I;
    lu.factorize(B);
    if (lu.info() != Eigen::Success) throw SingularJacobian("null_vector: factorization failed");
  }
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * std::sin(1.0 + 0.7 * static_cast<double>(i));
  v.normalize();
  for (int it = 0; it < 6; ++it) {
    Eigen::VectorXd z = lu.solve(v);
    if (!z.allFinite()) throw SingularJacobian("null_vector: inverse iteration failed");
    z.normalize();
    const double change = std::min((z - v).norm(), (z + v).norm());
    v = z;
    if (change < 1e-13) break;
  }
  Eigen::Index imax;
  v.cwiseAbs().maxCoeff(&imax);
  return v[imax] < 0.0 ? Eigen::VectorXd(-v) : v;
}

Eigen::VectorXd branch_point_kernel(const Problem& problem, const Eigen::VectorXd& x, double p,
                                    const Eigen::VectorXd& tangent) {
  const Eigen::VectorXd W = full_weights(problem);
  Params params = problem.params;
  params[problem.active] = p;
  Eigen::VectorXd k = Eigen::VectorXd::Zero(x.size() + 1);
  k.head(x.size()) = null_vector(problem.jacobian(x, params));
  k -= wdot(W, k, tangent) * tangent;
  return k / wnorm(W, k);
}

namespace {

class Driver {
 public:
  Driver(Problem& problem, const ContinuationSettings& settings) : problem_(problem), s_(settings) {}

  BranchPoint make_point(const Eigen::VectorXd& x, double p, const Eigen::VectorXd& tangent, double arclength) {
    BranchPoint pt;
    pt.x = x;
    pt.params = problem_.params;
    pt.params[problem_.active] = p;
    pt.tangent = tangent;
    pt.arclength = arclength;
    pt.context = problem_.context();
    pt.observables = problem_.observables(x, pt.params);
    if (problem_.has_spectrum()) {
      pt.spectrum = problem_.spectrum(x, pt.params);
      try {
        pt.index = morse_index(pt.spectrum, s_.tol_eig);
      } catch (const IndeterminateIndex&) {
        pt.index = -1;
      }
    }
    return pt;
  }

  double p_of(const BranchPoint& pt) const { return pt.params[problem_.active]; }
  Eigen::VectorXd X_of(const BranchPoint& pt) const { return join(pt.x, p_of(pt)); }

  // Corrects the point at arclength s from `a` along its tangent.
  BranchPoint correct_at(const BranchPoint& a, double s) {
    const Eigen::VectorXd W = full_weights(problem_);
    const Eigen::VectorXd Xa = X_of(a);
    const Eigen::VectorXd normal = (W.array() * a.tangent.array()).matrix();
    const Eigen::VectorXd Xp = Xa + s * a.tangent;
    const Eigen::Index n = a.x.size();
    const NewtonResult r = newton_correct(problem_, Xp.head(n), Xp[n], s_.newton, normal, normal.dot(Xa) + s);
    const Eigen::VectorXd t = branch_tangent(problem_, r.x, r.p, a.tangent);
    return make_point(r.x, r.p, t, a.arclength + s);
  }

  BranchPoint correct_fixed(const BranchPoint& guess_from, double p_guess_x_blend, double p_target,
                            const BranchPoint& b) {
    // Linear interpolation between a and b as predictor, fixed parameter.
    const double t = p_guess_x_blend;
    const Eigen::VectorXd xg = (1.0 - t) * guess_from.x + t * b.x;
    const NewtonResult r = newton_correct(problem_, xg, p_target, s_.newton);
    const Eigen::VectorXd dir = (1.0 - t) * guess_from.tangent + t * b.tangent;
    const Eigen::VectorXd tan = branch_tangent(problem_, r.x, r.p, dir);
    const double arc = (1.0 - t) * guess_from.arclength + t * b.arclength;
    return make_point(r.x, r.p, tan, arc);
  }

  // Regula falsi (Illinois) on g(s) over (0, ds) from point a.
  template <typename G>
  BranchPoint locate(const BranchPoint& a, const BranchPoint& b, double ds, G&& g) {
    double s_lo = 0.0, s_hi = ds;
    double g_lo = g(a), g_hi = g(b);
    BranchPoint best = std::abs(g_lo) < std::abs(g_hi) ? a : b;
    double g_best = std::min(std::abs(g_lo), std::abs(g_hi));
    int side = 0;
    for (int it = 0; it < 80; ++it) {
      if (s_hi - s_lo <= s_.event_tol * std::max(ds, 1e-300)) break;
      double s = (g_hi - g_lo) != 0.0 ? s_hi - g_hi * (s_hi - s_lo) / (g_hi - g_lo) : 0.5 * (s_lo + s_hi);
      if (!(s > s_lo && s < s_hi)) s = 0.5 * (s_lo + s_hi);
      BranchPoint c;
      try {
        c = correct_at(a, s);
      } catch (const std::runtime_error&) {
        break;
      }
      const double gc = g(c);
      if (std::abs(gc) < g_best) {
        g_best = std::abs(gc);
        best = c;
      }
      if (gc == 0.0) break;
      if ((gc < 0.0) == (g_lo < 0.0)) {
        s_lo = s;
        g_lo = gc;
        if (side == -1) g_hi *= 0.5;
        side = -1;
      } else {
        s_hi = s;
        g_hi = gc;
        if (side == 1) g_lo *= 0.5;
        side = 1;
      }
    }
    return best;
  }

  Branch run(const Eigen::VectorXd& x0, const Eigen::VectorXd& direction) {
    Branch br;
    br.param_name = problem_.active_name();
    br.param_names = problem_.parameter_names();
    br.active = problem_.active;

    const double p0 = problem_.active_value();
    NewtonResult start = newton_correct(problem_, x0, p0, s_.newton);
    Eigen::VectorXd tan0 = branch_tangent(problem_, start.x, start.p, direction);
    BranchPoint a = make_point(start.x, start.p, tan0, 0.0);
    br.points.push_back(a);
    for (double t : s_.targets) {
      if (t == start.p) br.hits.push_back(a);
    }
    if (s_.on_step) s_.on_step(a);

    double ds = std::clamp(s_.ds, s_.ds_min, s_.ds_max);
    int successes = 0;
    int steps = 0;
    const Eigen::VectorXd W0 = full_weights(problem_);
    while (steps < s_.max_steps) {
      BranchPoint b;
      try {
        b = correct_at(a, ds);
        const Eigen::VectorXd W = full_weights(problem_);
        const double jump = wnorm(W, X_of(b) - X_of(a));
        const double turn = wdot(W, a.tangent, b.tangent);
        if (jump > 2.0 * ds || (turn < 0.9 && ds > 4.0 * s_.ds_min)) throw NoConvergence("step rejected");
      } catch (const std::runtime_error&) {
        ds *= 0.5;
        successes = 0;
        if (ds < s_.ds_min) {
          br.stop_reason = "corrector failed at minimal step";
          break;
        }
        continue;
      }

      bool unresolved = false;
      if (s_.detect_events && a.index >= 0 && b.index >= 0 && std::abs(a.index - b.index) > 1) {
        if (ds > 2.0 * s_.ds_min) {
          ds *= 0.5;
          successes = 0;
          continue;
        }
        unresolved = true;
      }
      ++steps;

      std::vector<BranchPointRecord> found;
      if (s_.detect_events) found = detect(a, b, ds, steps, unresolved);

      // Parameter targets and bounds.
      const double pa = p_of(a), pb = p_of(b);
      for (double t : s_.targets) {
        if ((pa - t) * (pb - t) < 0.0 || (pb == t && pa != t)) {
          try {
            br.hits.push_back(correct_fixed(a, (t - pa) / (pb - pa), t, b));
          } catch (const std::runtime_error&) {
          }
        }
      }
      bool out_of_bounds = false;
      double bound = 0.0;
      if (pb > s_.p_max) {
        out_of_bounds = true;
        bound = s_.p_max;
      } else if (pb < s_.p_min) {
        out_of_bounds = true;
        bound = s_.p_min;
      }

      for (auto& rec : found) {
        if (out_of_bounds && (p_of(rec.point) > s_.p_max || p_of(rec.point) < s_.p_min)) continue;
        rec.point.event = rec.kind;
        br.points.push_back(rec.point);
        br.events.push_back(rec);
      }
      if (out_of_bounds) {
        try {
          BranchPoint c = correct_fixed(a, (bound - pa) / (pb - pa), bound, b);
          br.points.push_back(c);
          if (s_.on_step) s_.on_step(c);
        } catch (const std::runtime_error&) {
        }
        br.stop_reason = "parameter bound";
        break;
      }
      br.points.push_back(b);
      if (s_.on_step) s_.on_step(b);

      bool stop = false;
      if (s_.max_events > 0 && static_cast<int>(br.events.size()) >= s_.max_events) {
        br.stop_reason = "event limit";
        stop = true;
      }
      if (s_.stop_at_cusp && !br.events_of(EventKind::cusp_candidate).empty()) {
        br.stop_reason = "cusp candidate";
        stop = true;
      }
      if (s_.stop && s_.stop(b)) {
        br.stop_reason = "stop condition";
        stop = true;
      }
      if (stop) break;

      a = b;
      if (problem_.adapt(a.x, a.params)) {
        try {
          const NewtonResult r = newton_correct(problem_, a.x, p_of(a), s_.newton);
          const double sign = a.tangent[a.tangent.size() - 1] >= 0.0 ? 1.0 : -1.0;
          const Eigen::VectorXd t = branch_tangent(problem_, r.x, r.p, parameter_direction(problem_, sign));
          a = make_point(r.x, r.p, t, a.arclength);
          br.points.push_back(a);
        } catch (const std::runtime_error&) {
          br.stop_reason = "re-convergence after remeshing failed";
          break;
        }
      }

      if (++successes >= s_.grow_after) {
        ds = std::min(ds * s_.grow, s_.ds_max);
        successes = 0;
      }
    }
    if (br.stop_reason.empty()) br.stop_reason = "step limit";
    (void)W0;
    return br;
  }

 private:
  std::vector<BranchPointRecord> detect(const BranchPoint& a, const BranchPoint& b, double ds, int step,
                                        bool unresolved) {
    std::vector<BranchPointRecord> out;
    const Eigen::Index np = a.tangent.size() - 1;
    const bool fold = a.tangent[np] * b.tangent[np] < 0.0;
    const bool index_change = a.index >= 0 && b.index >= 0 && a.index != b.index;

    const auto base_record = [&](EventKind kind) {
      BranchPointRecord rec;
      rec.kind = kind;
      rec.s_lo = a.arclength;
      rec.s_hi = b.arclength;
      rec.step = step;
      rec.index_before = a.index;
      rec.index_after = b.index;
      return rec;
    };

    if (fold) {
      BranchPointRecord rec = base_record(EventKind::fold);
      rec.point = locate(a, b, ds, [np](const BranchPoint& c) { return c.tangent[np]; });
      Eigen::VectorXd k = rec.point.tangent;
      k[np] = 0.0;
      const Eigen::VectorXd W = full_weights(problem_);
      rec.kernel = k / wnorm(W, k);
      out.push_back(std::move(rec));
    } else if (index_change) {
      BranchPointRecord rec = base_record(EventKind::bp);
      if (unresolved) {
        rec.resolved = false;
        rec.point = b;
      } else {
        const int k = std::min(a.index, b.index);
        rec.point = locate(a, b, ds, [k](const BranchPoint& c) {
          return k < c.spectrum.size() ? c.spectrum[k] : 0.0;
        });
        // The tangent is not unique at the branch point itself.
        const double theta = (rec.point.arclength - a.arclength) / (b.arclength - a.arclength);
        const Eigen::VectorXd W = full_weights(problem_);
        Eigen::VectorXd t = (1.0 - theta) * a.tangent + theta * b.tangent;
        rec.point.tangent = t / wnorm(W, t);
      }
      try {
        rec.kernel = branch_point_kernel(problem_, rec.point.x, p_of(rec.point), rec.point.tangent);
      } catch (const std::runtime_error&) {
        rec.resolved = false;
      }
      out.push_back(std::move(rec));
    }

    const std::vector<double> ta = problem_.test_functions(a.x, a.params);
    if (!ta.empty()) {
      const std::vector<double> tb = problem_.test_functions(b.x, b.params);
      for (std::size_t i = 0; i < ta.size() && i < tb.size(); ++i) {
        if (ta[i] * tb[i] >= 0.0) continue;
        BranchPointRecord rec = base_record(problem_.test_function_kind(static_cast<int>(i)));
        rec.point = locate(a, b, ds, [this, i](const BranchPoint& c) {
          return problem_.test_functions(c.x, c.params)[i];
        });
        rec.kernel = rec.point.tangent;
        out.push_back(std::move(rec));
      }
    }
    std::sort(out.begin(), out.end(),
              [](const BranchPointRecord& l, const BranchPointRecord& r) { return l.point.arclength < r.point.arclength; });
    return out;
  }

  Problem& problem_;
  const ContinuationSettings& s_;
};

}  // namespace

Branch continue_branch(Problem& problem, const Eigen::VectorXd& x0, const Eigen::VectorXd& direction,
                       const ContinuationSettings& settings) {
  if (direction.size() != problem.dimension() + 1) {
    throw std::invalid_argument("continue_branch: direction must have dimension + 1 entries");
  }
  Driver driver(problem, settings);
  return driver.run(x0, direction);
}

namespace {

double distance_to_polyline(const Eigen::VectorXd& W, const Eigen::VectorXd& X,
                            const std::vector<Eigen::VectorXd>& pts) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    best = std::min(best, wnorm(W, X - pts[i]));
    if (i + 1 < pts.size()) {
      const Eigen::VectorXd d = pts[i + 1] - pts[i];
      const double dd = wdot(W, d, d);
      if (dd > 0.0) {
        const double t = std::clamp(wdot(W, X - pts[i], d) / dd, 0.0, 1.0);
        best = std::min(best, wnorm(W, X - pts[i] - t * d));
      }
    }
  }
  return best;
}

}  // namespace

std::vector<BranchSeed> switch_branch(Problem& problem, const BranchPointRecord& bp, const Branch& parent,
                                      const SwitchSettings& settings) {
  if (bp.kind != EventKind::bp || bp.kernel.size() == 0) {
    throw std::invalid_argument("switch_branch: requires a branch point with a kernel");
  }
  const Eigen::VectorXd W = full_weights(problem);
  const Eigen::Index n = bp.point.x.size();
  const Eigen::VectorXd Xbp = join(bp.point.x, bp.point.params[problem.active]);
  const Eigen::VectorXd& tau = bp.point.tangent;
  Eigen::VectorXd phi = bp.kernel - wdot(W, bp.kernel, tau) * tau;
  phi /= wnorm(W, phi);
  const double delta = settings.delta_factor * settings.ds;

  std::vector<Eigen::VectorXd> parent_pts;
  for (const auto& pt : parent.points) {
    if (pt.x.size() == n) parent_pts.push_back(join(pt.x, pt.params[problem.active]));
  }

  const Params saved = problem.params;
  problem.params = bp.point.params;
  std::vector<BranchSeed> seeds;
  std::vector<Eigen::VectorXd> accepted;
  const auto attempt = [&](const Eigen::VectorXd& dir) {
    const Eigen::VectorXd d = dir / wnorm(W, dir);
    const Eigen::VectorXd normal = (W.array() * d.array()).matrix();
    const Eigen::VectorXd Xp = Xbp + delta * d;
    NewtonResult r;
    try {
      r = newton_correct(problem, Xp.head(n), Xp[n], settings.newton, normal, normal.dot(Xbp) + delta);
    } catch (const std::runtime_error&) {
      return;
    }
    const Eigen::VectorXd X = join(r.x, r.p);
    const double from_bp = wnorm(W, X - Xbp);
    if (from_bp > 5.0 * delta) return;
    if (distance_to_polyline(W, X, parent_pts) < 0.5 * delta) return;
    for (const auto& other : accepted) {
      if (wnorm(W, X - other) < 0.5 * delta) return;
    }
    accepted.push_back(X);
    BranchSeed seed;
    seed.x = r.x;
    seed.params = bp.point.params;
    seed.params[problem.active] = r.p;
    seed.direction = X - Xbp;
    seeds.push_back(std::move(seed));
  };
  attempt(phi);
  attempt(-phi);
  if (seeds.size() < 2) {
    // Transcritical case: mix in the parent tangent.
    attempt(phi + tau);
    attempt(phi - tau);
    attempt(-phi + tau);
    attempt(-phi - tau);
  }
  problem.params = saved;
  if (seeds.empty()) throw AllPredictorsFellBack("switch_branch: every predictor returned to the parent branch");
  return seeds;
}

void write_branch_csv(std::ostream& os, const Branch& branch) {
  os << "step,param_name,param_value,m,eps,h,a,lambda,energy,index,event\n";
  const auto lookup = [&](const BranchPoint& pt, const std::string& name) -> std::string {
    for (const auto& [k, v] : pt.observables) {
      if (k == name) {
        std::ostringstream s;
        s << std::setprecision(12) << v;
        return s.str();
      }
    }
    for (std::size_t i = 0; i < branch.param_names.size() && i < pt.params.size(); ++i) {
      if (branch.param_names[i] == name) {
        std::ostringstream s;
        s << std::setprecision(12) << pt.params[i];
        return s.str();
      }
    }
    return "";
  };
  int step = 0;
  for (const auto& pt : branch.points) {
    os << step++ << ',' << branch.param_name << ',';
    os << std::setprecision(12) << pt.params[branch.active];
    for (const char* name : {"m", "eps", "h", "a", "lambda", "energy"}) os << ',' << lookup(pt, name);
    os << ',';
    if (pt.index >= 0) os << pt.index;
    os << ',' << to_string(pt.event) << '\n';
  }
}

void save_branch_csv(const std::string& path, const Branch& branch) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_branch_csv(os, branch);
}

}  // namespace conecrit
