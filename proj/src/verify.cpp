#include "conecrit/verify.hpp"

#include "conecrit/fem.hpp"
#include "conecrit/oracle.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

namespace conecrit {

namespace {

Check make(std::string name, double value, double target, double tol, std::string note = "") {
  const bool ok = std::isfinite(value) && std::abs(value - target) <= tol;
  return Check{std::move(name), value, target, tol, ok, std::move(note)};
}

Check failed(std::string name, double target, const std::exception& e) {
  return Check{std::move(name), std::nan(""), target, 0.0, false, e.what()};
}

Branch run_scalar(ScalarProblem& p, double u0, double sign, double p_min, double p_max) {
  ContinuationSettings s;
  s.ds = 0.05;
  s.max_steps = 400;
  s.p_min = p_min;
  s.p_max = p_max;
  return continue_branch(p, Eigen::VectorXd::Constant(1, u0), parameter_direction(p, sign), s);
}

// Largest distance of located events of `kind` from the nearest target.
double worst_event_error(const Branch& br, EventKind kind, const std::vector<std::pair<double, double>>& targets,
                         int active, int& count) {
  double worst = 0.0;
  count = 0;
  for (const auto* rec : br.events_of(kind)) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [mu, u] : targets) {
      best = std::min(best, std::hypot(rec->point.params[static_cast<std::size_t>(active)] - mu, rec->point.x[0] - u));
    }
    worst = std::max(worst, best);
    ++count;
  }
  return count > 0 ? worst : std::numeric_limits<double>::infinity();
}

}  // namespace

std::vector<Check> oracle_checks() {
  std::vector<Check> out;
  out.push_back(make("l1(1)", l1(1.0).value, 2.0 * std::numbers::sqrt2, 1e-12));
  out.push_back(make("l3", l3().value, std::numbers::sqrt2 * std::numbers::pi, 1e-12));
  try {
    const OracleValue v = l2(1.0);
    out.push_back(make("l2(1)", v.value, 2.71, 0.02));
    out.push_back(make("l2(1) residual", v.residual, 0.0, 1e-10));
  } catch (const std::exception& e) {
    out.push_back(failed("l2(1)", 2.71, e));
  }
  {
    double worst = -std::numeric_limits<double>::infinity();
    for (double h = 0.1; h <= 5.0 + 1e-12; h += 0.1) worst = std::max(worst, l2(h).value - l1(h).value);
    Check c{"max l2(h) - l1(h), h in [0.1, 5]", worst, 0.0, 0.0, worst < 0.0, "must be negative"};
    out.push_back(c);
  }

  try {
    auto p = normal_form("fold");
    p->params = {1.0};
    const Branch br = run_scalar(*p, 1.0, -1.0, -1.0, 2.0);
    int n = 0;
    out.push_back(make("fold: mu - u^2 fold at (0, 0)", worst_event_error(br, EventKind::fold, {{0.0, 0.0}}, 0, n), 0.0,
                       1e-8));
  } catch (const std::exception& e) {
    out.push_back(failed("fold: mu - u^2 fold at (0, 0)", 0.0, e));
  }

  for (const std::string name : {"transcritical", "pitchfork-super", "pitchfork-sub"}) {
    try {
      auto p = normal_form(name);
      p->params = {-1.0};
      const Branch br = run_scalar(*p, 0.0, 1.0, -2.0, 1.0);
      int n = 0;
      const double err = worst_event_error(br, EventKind::bp, {{0.0, 0.0}}, 0, n);
      out.push_back(make(name + ": branch point at (0, 0)", err, 0.0, 1e-8));
    } catch (const std::exception& e) {
      out.push_back(failed(name + ": branch point at (0, 0)", 0.0, e));
    }
  }

  try {
    auto p = normal_form("quintic");
    p->params = {-1.0};
    const Branch trivial = run_scalar(*p, 0.0, 1.0, -1.5, 0.5);
    const auto bps = trivial.events_of(EventKind::bp);
    if (bps.empty()) throw std::runtime_error("no branch point on u = 0");
    const auto seeds = switch_branch(*p, *bps.front(), trivial, SwitchSettings{});
    const double r = 1.0 / std::numbers::sqrt2;
    double worst = 0.0;
    int total = 0;
    for (const auto& sd : seeds) {
      p->params = sd.params;
      ContinuationSettings s;
      s.ds = 0.05;
      s.max_steps = 400;
      s.p_min = -1.5;
      s.p_max = 0.5;
      const Branch br = continue_branch(*p, sd.x, sd.direction, s);
      int n = 0;
      worst = std::max(worst, worst_event_error(br, EventKind::fold, {{-0.25, r}, {-0.25, -r}}, 0, n));
      total += n;
    }
    out.push_back(make("quintic: folds at (-1/4, +-1/sqrt2)", total == 2 ? worst : std::nan(""), 0.0, 1e-8,
                       std::to_string(total) + " folds"));
  } catch (const std::exception& e) {
    out.push_back(failed("quintic: folds at (-1/4, +-1/sqrt2)", 0.0, e));
  }

  try {
    auto p = normal_form("cusp");
    p->params = {0.5, -1.0};
    p->active = 1;
    const Branch br = run_scalar(*p, 0.8, 1.0, -1.5, 1.0);
    const auto folds = br.events_of(EventKind::fold);
    if (folds.empty()) throw std::runtime_error("no fold at mu1 = 0.5");
    ContinuationSettings s;
    s.ds = 0.02;
    s.max_steps = 500;
    s.p_min = -2.0;
    s.p_max = 2.0;
    const Branch curve = fold_continue(*p, *folds.front(), "mu1", s, -1.0);
    double worst = 0.0;
    for (const auto& pt : curve.points) {
      const double mu1 = pt.params[0];
      if (mu1 >= 0.01 && mu1 <= 1.0) {
        worst = std::max(worst, std::abs(std::abs(pt.observable("mu2", 0.0)) - cusp_fold_mu2(mu1)));
      }
    }
    out.push_back(make("cusp: fold curve vs mu2 = 4/(3 sqrt6) mu1^1.5", worst, 0.0, 1e-8));
    const auto cusps = curve.events_of(EventKind::cusp_candidate);
    const double dist = cusps.empty() ? std::nan("")
                                      : std::hypot(cusps.front()->point.params[0],
                                                   cusps.front()->point.observable("mu2", 0.0));
    out.push_back(make("cusp: candidate distance from (0, 0)", dist, 0.0, 1e-4));
  } catch (const std::exception& e) {
    out.push_back(failed("cusp: fold curve", 0.0, e));
  }

  {
    const double nu1 = disk_neumann_eigenvalues(1).front();
    const auto m = trivial_branch_bps(0.3, {nu1});
    out.push_back(make("flat disk eps=0.3: first trivial-branch BP mass", m.empty() ? std::nan("") : m.front(),
                       0.481, 5e-4));
    const double eps_big = 1.01 / std::sqrt(nu1);
    out.push_back(make("flat disk eps > 1/sqrt(nu1): predicted BP count",
                       static_cast<double>(trivial_branch_bps(eps_big, {nu1}).size()), 0.0, 0.0));
  }

  try {
    auto mesh = std::make_shared<const Mesh>(generate_disk_mesh(0.04));
    const DiscreteOperators ops = assemble(mesh, ConeParams{0.0, 1.0});
    SpectrumOptions opt;
    opt.min_count = 1;
    opt.shift = -1.0;
    const auto sp = constrained_eigenvalues(ops.K, ops.M, ops.mass_column, opt);
    out.push_back(make("flat disk FEM first Neumann eigenvalue", sp.values[0], disk_neumann_eigenvalues(1).front(),
                       0.01 * 3.39, "Bessel root 1.8412^2"));
  } catch (const std::exception& e) {
    out.push_back(failed("flat disk FEM first Neumann eigenvalue", 3.39, e));
  }
  return out;
}

bool print_checks(std::ostream& os, const std::vector<Check>& checks) {
  bool all = true;
  os << std::setprecision(10);
  for (const auto& c : checks) {
    all = all && c.passed;
    os << (c.passed ? "PASS  " : "FAIL  ") << c.name << ": value " << c.value << ", target " << c.target
       << ", tolerance " << c.tolerance;
    if (!c.note.empty()) os << " (" << c.note << ")";
    os << '\n';
  }
  return all;
}

}  // namespace conecrit
