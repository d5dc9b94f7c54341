#include "conecrit/fem_problem.hpp"

#include <doctest.h>

#include <cmath>

using namespace conecrit;

namespace {

std::shared_ptr<const Mesh> coarse_mesh() {
  static const auto mesh = std::make_shared<const Mesh>(generate_disk_mesh(0.1));
  return mesh;
}

Eigen::VectorXd smooth_state(const FemProblem& p) {
  const Mesh& mesh = *p.mesh();
  Eigen::VectorXd u(mesh.node_count());
  for (Eigen::Index i = 0; i < mesh.node_count(); ++i) {
    const auto& q = mesh.nodes[static_cast<std::size_t>(i)];
    u[i] = 0.6 * std::tanh(2.0 * q.x()) + 0.2 * q.y() * q.y() - 0.1;
  }
  return p.pack(u, 0.3);
}

}  // namespace

TEST_SUITE("fem_problem") {
  TEST_CASE("homogeneous state solves the system") {
    FemProblem p(coarse_mesh(), ConeParams{1.0, 1.05}, -0.4, 0.15);
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(p.mesh()->node_count(), -0.4);
    const Eigen::VectorXd x = p.pack(u, double_well_d1(-0.4));
    CHECK(p.residual(x, p.params).norm() < 1e-12);
    CHECK(p.state(x).m == -0.4);
    CHECK(p.parameter_names() == std::vector<std::string>{"m", "eps", "h", "a"});
  }

  TEST_CASE("parameter derivatives match finite differences") {
    FemProblem p(coarse_mesh(), ConeParams{1.0, 1.05}, 0.1, 0.15);
    const Eigen::VectorXd x = smooth_state(p);
    for (int k = 0; k < 4; ++k) {
      CAPTURE(k);
      Params up = p.params, dn = p.params;
      const double d = 1e-6;
      up[static_cast<std::size_t>(k)] += d;
      dn[static_cast<std::size_t>(k)] -= d;
      const Eigen::VectorXd fd = (p.residual(x, up) - p.residual(x, dn)) / (2 * d);
      const Eigen::VectorXd an = p.parameter_derivative(x, p.params, k);
      CHECK((an - fd).norm() <= 1e-5 * (1.0 + fd.norm()));
      const SparseMatrix jfd = (p.jacobian(x, up) - p.jacobian(x, dn)) / (2 * d);
      const SparseMatrix jan = p.jacobian_parameter_derivative(x, p.params, k);
      CHECK((Eigen::MatrixXd(jan) - Eigen::MatrixXd(jfd)).norm() <= 1e-5 * (1.0 + Eigen::MatrixXd(jfd).norm()));
    }
  }

  TEST_CASE("jacobian and hessian match finite differences") {
    FemProblem p(coarse_mesh(), ConeParams{1.0, 1.05}, 0.1, 0.15);
    const Eigen::VectorXd x = smooth_state(p);
    const Eigen::Index n = x.size();
    Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(n, -1.0, 1.0);
    v[n - 1] = 0.0;
    const double d = 1e-6;
    const Eigen::VectorXd jv_fd = (p.residual(x + d * v, p.params) - p.residual(x - d * v, p.params)) / (2 * d);
    CHECK((p.jacobian(x, p.params) * v - jv_fd).norm() < 1e-6 * (1.0 + jv_fd.norm()));

    Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
    w[n - 1] = 0.0;
    const Eigen::VectorXd hw_fd =
        (p.jacobian(x + d * v, p.params) * w - p.jacobian(x - d * v, p.params) * w) / (2 * d);
    CHECK((p.hessian_action(x, p.params, v) * w - hw_fd).norm() < 1e-5 * (1.0 + hw_fd.norm()));

    // psiᵀ G_xx[v, w] is symmetric in v and w.
    const Eigen::VectorXd psi = Eigen::VectorXd::LinSpaced(n, 0.5, 2.0);
    const double a1 = psi.dot(p.hessian_action(x, p.params, v) * w);
    const double a2 = w.dot(p.hessian_adjoint(x, p.params, psi) * v);
    CHECK(a1 == doctest::Approx(a2).epsilon(1e-10));
  }

  TEST_CASE("trivial state spectrum") {
    // Constrained Hessian at u = 0 has eigenvalues eps^2 nu_k - 1.
    FemProblem p(coarse_mesh(), ConeParams{0.0, 1.0}, 0.0, 1.0);
    const Eigen::VectorXd x = p.pack(Eigen::VectorXd::Zero(p.mesh()->node_count()), 0.0);
    CHECK(morse_index(p, x) == 0);
    p.params[FemProblem::kEps] = 0.3;
    // The double modes nu = 3.39 and 9.33 lie below 1 / 0.09.
    const Eigen::VectorXd s = p.spectrum(x, p.params);
    CHECK(s[0] == doctest::Approx(0.09 * 3.39 - 1.0).epsilon(0.02));
    CHECK(morse_index(p, x) == 4);
    p.compute_spectrum = false;
    CHECK_FALSE(p.has_spectrum());
  }

  TEST_CASE("observables") {
    FemProblem p(coarse_mesh(), ConeParams{1.0, 1.0}, 0.0, 0.15);
    const Eigen::VectorXd x = p.pack(Eigen::VectorXd::Constant(p.mesh()->node_count(), 0.0), 0.0);
    bool saw_energy = false;
    for (const auto& [name, value] : p.observables(x, p.params)) {
      if (name == "energy") {
        saw_energy = true;
        CHECK(value == doctest::Approx(p.operators().area / (4.0 * 2.0 * kSigma * 0.15)));
      }
    }
    CHECK(saw_energy);
  }

  TEST_CASE("guesses classify as intended") {
    const auto mesh = std::make_shared<const Mesh>(generate_disk_mesh(0.05));
    const ConeParams cone{2.0, 1.05};
    CHECK(classify_interface(interface_guess(*mesh, cone, 0.1, InterfaceGuess::t1), *mesh, cone) == "T1");
    CHECK(classify_interface(interface_guess(*mesh, cone, 0.1, InterfaceGuess::t1_long), *mesh, cone) == "T1");
    CHECK(classify_interface(interface_guess(*mesh, cone, 0.1, InterfaceGuess::t3), *mesh, cone) == "T3");
    CHECK(classify_interface(interface_guess(*mesh, cone, 0.1, InterfaceGuess::winding), *mesh, cone) == "T2");
    CHECK(classify_interface(Eigen::VectorXd::Ones(mesh->node_count()), *mesh, cone) == "other");
  }

  TEST_CASE("T3 guess converges to a T3 critical point") {
    const auto mesh = std::make_shared<const Mesh>(generate_disk_mesh(0.06));
    FemProblem p(mesh, ConeParams{1.0, 1.05}, 0.0, 0.1);
    const Eigen::VectorXd g = interface_guess(*mesh, ConeParams{1.0, 1.05}, 0.1, InterfaceGuess::t3);
    NewtonSettings ns;
    ns.max_iter = 50;
    const Eigen::VectorXd x = converge_from_guess(p, g, 0, 0.05, ns);
    CHECK(p.residual(x, p.params).norm() < 1e-7);
    CHECK(std::abs(mass_average(p.state(x).u, p.operators())) < 1e-10);
    CHECK(classify_interface(p.state(x).u, *mesh, ConeParams{1.0, 1.05}) == "T3");
  }

  TEST_CASE("adaptation refines along the interface") {
    FemProblem p(coarse_mesh(), ConeParams{1.0, 1.05}, 0.0, 0.05);
    p.adapt_settings.enabled = true;
    p.adapt_settings.width_factor = 3.0;
    const Eigen::VectorXd u = interface_guess(*p.mesh(), ConeParams{1.0, 1.05}, 0.05, InterfaceGuess::t1);
    Eigen::VectorXd x = p.pack(u, 0.0);
    const auto before = p.mesh()->triangle_count();
    CHECK(p.adapt(x, p.params));
    CHECK(p.mesh()->triangle_count() > before);
    CHECK(x.size() == p.dimension());
    // Already resolved meshes are left alone.
    FemProblem q(coarse_mesh(), ConeParams{1.0, 1.05}, 0.0, 1.0);
    q.adapt_settings.enabled = true;
    Eigen::VectorXd y = q.pack(u, 0.0);
    CHECK_FALSE(q.adapt(y, q.params));
  }
}
