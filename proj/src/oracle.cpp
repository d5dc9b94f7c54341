#include "conecrit/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace conecrit {

namespace {

std::string describe_h(double h) {
  std::ostringstream s;
  s << "h=" << h;
  return s.str();
}

double l2_area_gap(double beta, double S, double alpha) {
  const double r1 = S / std::tan(beta);
  const double A1 = 0.5 * r1 * r1 * (2.0 * beta - std::sin(2.0 * beta));
  const double A2 = 0.5 * S * S * (std::numbers::pi - 2.0 * beta - std::sin(2.0 * beta));
  return A1 + A2 - alpha * S * S / 4.0;
}

double bessel_j(double nu, double x) { return std::cyl_bessel_j(nu, x); }

// J'_nu(x) = (nu / x) J_nu(x) - J_{nu+1}(x).
double bessel_j_prime(double nu, double x) { return nu / x * bessel_j(nu, x) - bessel_j(nu + 1.0, x); }

}  // namespace

OracleValue l1(double h) {
  if (!(h >= 0.0)) throw std::invalid_argument("l1: h must be non-negative");
  return {"l1", 2.0 * std::sqrt(1.0 + h * h), describe_h(h), "closed-form", 0.0};
}

OracleValue l3() { return {"l3", std::numbers::sqrt2 * std::numbers::pi, "", "closed-form", 0.0}; }

double l3_height(double h) { return (1.0 - 1.0 / std::numbers::sqrt2) * h; }

OracleValue l2(double h) {
  if (!(h > 0.0)) throw std::invalid_argument("l2: h must be positive");
  const double S = std::sqrt(1.0 + h * h);
  const double alpha = 2.0 * std::numbers::pi / S;
  double lo = 1e-6, hi = std::numbers::pi / 2.0 - 1e-6;
  double flo = l2_area_gap(lo, S, alpha);
  const double fhi = l2_area_gap(hi, S, alpha);
  if (!(flo * fhi < 0.0)) throw NoRoot("l2: area equation is not bracketed for " + describe_h(h));
  while (hi - lo > 1e-15) {
    const double mid = 0.5 * (lo + hi);
    const double fm = l2_area_gap(mid, S, alpha);
    if (fm == 0.0) {
      lo = hi = mid;
      break;
    }
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  const double beta = 0.5 * (lo + hi);
  const double r1 = S / std::tan(beta);
  const double residual = std::abs(l2_area_gap(beta, S, alpha));
  return {"l2", 2.0 * beta * r1, describe_h(h), "root-solve", residual};
}

std::vector<double> bessel_derivative_zeros(double nu, double x_max) {
  std::vector<double> zeros;
  const double step = 0.01;
  double x0 = 1e-3;
  double f0 = bessel_j_prime(nu, x0);
  for (double x1 = x0 + step; x1 <= x_max + step; x1 += step) {
    const double f1 = bessel_j_prime(nu, x1);
    if (f0 == 0.0) {
      zeros.push_back(x0);
    } else if (f0 * f1 < 0.0) {
      double a = x0, b = x1, fa = f0;
      for (int it = 0; it < 200 && b - a > 1e-14 * b; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = bessel_j_prime(nu, m);
        if ((fm < 0.0) == (fa < 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      const double root = 0.5 * (a + b);
      if (root <= x_max) zeros.push_back(root);
    }
    x0 = x1;
    f0 = f1;
  }
  return zeros;
}

namespace {

// Eigenvalues (j'_{n s, l} / R)^2 with doubled angular modes.
std::vector<double> rotational_spectrum(double s, double R, int count) {
  double x_max = 10.0;
  while (true) {
    std::vector<double> values;
    for (int n = 0;; ++n) {
      const auto zeros = bessel_derivative_zeros(n * s, x_max);
      if (zeros.empty() && n * s > x_max) break;
      for (double z : zeros) {
        const double lam = (z / R) * (z / R);
        values.push_back(lam);
        if (n > 0) values.push_back(lam);
      }
    }
    std::sort(values.begin(), values.end());
    const double cutoff = (x_max / R) * (x_max / R);
    // Every eigenvalue below the cutoff has been found.
    const auto below = std::count_if(values.begin(), values.end(), [&](double v) { return v <= cutoff; });
    if (below >= count) {
      values.resize(static_cast<std::size_t>(count));
      return values;
    }
    x_max *= 1.5;
  }
}

}  // namespace

std::vector<double> disk_neumann_eigenvalues(int count) { return rotational_spectrum(1.0, 1.0, count); }

std::vector<double> cone_neumann_eigenvalues(double h, int count) {
  const double S = std::sqrt(1.0 + h * h);
  return rotational_spectrum(S, S, count);
}

std::vector<double> trivial_branch_bps(double eps, const std::vector<double>& eigenvalues) {
  std::vector<double> nu;
  for (double v : eigenvalues) {
    if (v > 1e-12 && eps * eps * v < 1.0) nu.push_back(v);
  }
  std::sort(nu.begin(), nu.end());
  std::vector<double> m;
  m.reserve(nu.size());
  for (double v : nu) m.push_back(std::sqrt((1.0 - eps * eps * v) / 3.0));
  return m;
}

double cusp_fold_mu2(double mu1) { return 4.0 / (3.0 * std::sqrt(6.0)) * std::pow(mu1, 1.5); }

ScalarProblem::ScalarProblem(std::string name, std::vector<std::string> names, Params values, F f, F fu, F fuu,
                             Fk fp, Fk fup)
    : Problem(std::move(names), std::move(values), 0),
      name_(std::move(name)),
      f_(std::move(f)),
      fu_(std::move(fu)),
      fuu_(std::move(fuu)),
      fp_(std::move(fp)),
      fup_(std::move(fup)) {}

namespace {

SparseMatrix scalar_matrix(double v) {
  SparseMatrix A(1, 1);
  if (v != 0.0) A.insert(0, 0) = v;
  return A;
}

}  // namespace

Eigen::VectorXd ScalarProblem::residual(const Eigen::VectorXd& x, const Params& p) const {
  return Eigen::VectorXd::Constant(1, f_(x[0], p));
}

SparseMatrix ScalarProblem::jacobian(const Eigen::VectorXd& x, const Params& p) const {
  // Keep the structural entry so sparse LU sees a 1x1 pattern.
  SparseMatrix A(1, 1);
  A.insert(0, 0) = fu_(x[0], p);
  return A;
}

Eigen::VectorXd ScalarProblem::parameter_derivative(const Eigen::VectorXd& x, const Params& p, int k) const {
  return Eigen::VectorXd::Constant(1, fp_(x[0], p, k));
}

SparseMatrix ScalarProblem::jacobian_parameter_derivative(const Eigen::VectorXd& x, const Params& p, int k) const {
  return scalar_matrix(fup_(x[0], p, k));
}

SparseMatrix ScalarProblem::hessian_action(const Eigen::VectorXd& x, const Params& p, const Eigen::VectorXd& v) const {
  return scalar_matrix(fuu_(x[0], p) * v[0]);
}

SparseMatrix ScalarProblem::hessian_adjoint(const Eigen::VectorXd& x, const Params& p,
                                            const Eigen::VectorXd& psi) const {
  return scalar_matrix(fuu_(x[0], p) * psi[0]);
}

Eigen::VectorXd ScalarProblem::spectrum(const Eigen::VectorXd& x, const Params& p) const {
  return Eigen::VectorXd::Constant(1, -fu_(x[0], p));
}

std::vector<std::string> normal_form_names() {
  return {"fold",    "transcritical", "pitchfork-super",     "pitchfork-sub",
          "quintic", "cusp",          "pitchfork-imperfect", "pitchfork-asymmetric"};
}

std::unique_ptr<ScalarProblem> normal_form(const std::string& name) {
  using P = const Params&;
  const auto zero_k = [](double, P, int) { return 0.0; };
  if (name == "fold") {
    return std::make_unique<ScalarProblem>(
        name, std::vector<std::string>{"mu"}, Params{0.0}, [](double u, P p) { return p[0] - u * u; },
        [](double u, P) { return -2.0 * u; }, [](double, P) { return -2.0; }, [](double, P, int) { return 1.0; },
        zero_k);
  }
  if (name == "transcritical") {
    return std::make_unique<ScalarProblem>(
        name, std::vector<std::string>{"mu"}, Params{0.0}, [](double u, P p) { return p[0] * u + u * u; },
        [](double u, P p) { return p[0] + 2.0 * u; }, [](double, P) { return 2.0; },
        [](double u, P, int) { return u; }, [](double, P, int) { return 1.0; });
  }
  if (name == "pitchfork-super" || name == "pitchfork-sub") {
    const double s = name == "pitchfork-super" ? -1.0 : 1.0;
    return std::make_unique<ScalarProblem>(
        name, std::vector<std::string>{"mu"}, Params{0.0}, [s](double u, P p) { return p[0] * u + s * u * u * u; },
        [s](double u, P p) { return p[0] + 3.0 * s * u * u; }, [s](double u, P) { return 6.0 * s * u; },
        [](double u, P, int) { return u; }, [](double, P, int) { return 1.0; });
  }
  if (name == "quintic") {
    return std::make_unique<ScalarProblem>(
        name, std::vector<std::string>{"mu"}, Params{0.0},
        [](double u, P p) { return p[0] * u + u * u * u - std::pow(u, 5); },
        [](double u, P p) { return p[0] + 3.0 * u * u - 5.0 * std::pow(u, 4); },
        [](double u, P) { return 6.0 * u - 20.0 * u * u * u; }, [](double u, P, int) { return u; },
        [](double, P, int) { return 1.0; });
  }
  if (name == "cusp") {
    return std::make_unique<ScalarProblem>(
        name, std::vector<std::string>{"mu1", "mu2"}, Params{0.0, 0.0},
        [](double u, P p) { return -4.0 * u * u * u + 2.0 * p[0] * u - p[1]; },
        [](double u, P p) { return -12.0 * u * u + 2.0 * p[0]; }, [](double u, P) { return -24.0 * u; },
        [](double u, P, int k) { return k == 0 ? 2.0 * u : -1.0; },
        [](double, P, int k) { return k == 0 ? 2.0 : 0.0; });
  }
  if (name == "pitchfork-imperfect") {
    return std::make_unique<ScalarProblem>(
        name, std::vector<std::string>{"mu", "beta"}, Params{0.0, 0.0},
        [](double u, P p) { return p[0] * u - u * u * u + p[1]; },
        [](double u, P p) { return p[0] - 3.0 * u * u; }, [](double u, P) { return -6.0 * u; },
        [](double u, P, int k) { return k == 0 ? u : 1.0; }, [](double, P, int k) { return k == 0 ? 1.0 : 0.0; });
  }
  if (name == "pitchfork-asymmetric") {
    return std::make_unique<ScalarProblem>(
        name, std::vector<std::string>{"mu", "beta"}, Params{0.0, 0.0},
        [](double u, P p) { return p[0] * u + p[1] * u * u - u * u * u; },
        [](double u, P p) { return p[0] + 2.0 * p[1] * u - 3.0 * u * u; },
        [](double u, P p) { return 2.0 * p[1] - 6.0 * u; },
        [](double u, P, int k) { return k == 0 ? u : u * u; },
        [](double u, P, int k) { return k == 0 ? 1.0 : 2.0 * u; });
  }
  throw std::invalid_argument("normal_form: unknown name '" + name + "'");
}

}  // namespace conecrit
