#include "conecrit/oracle.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace conecrit;

TEST_SUITE("oracle") {
  TEST_CASE("interface lengths") {
    CHECK(l1(1.0).value == doctest::Approx(2.828).epsilon(1e-3));
    CHECK(l1(0.0).value == doctest::Approx(2.0));
    CHECK(l3().value == doctest::Approx(4.443).epsilon(1e-3));
    CHECK(l1(1.0).method == "closed-form");
    const OracleValue v = l2(1.0);
    CHECK(std::abs(v.value - 2.71) < 0.02);
    CHECK(v.method == "root-solve");
    CHECK(std::abs(v.residual) < 1e-10);
  }

  TEST_CASE("l2 tends to the flat value 2 and stays below l1") {
    CHECK(std::abs(l2(0.01).value - 2.0) < 1e-2);
    for (double h = 0.1; h <= 5.0 + 1e-12; h += 0.1) CHECK(l2(h).value < l1(h).value);
  }

  TEST_CASE("l1 and l3 cross at sqrt(pi^2 / 2 - 1)") {
    const double hc = std::sqrt(std::numbers::pi * std::numbers::pi / 2.0 - 1.0);
    CHECK(std::abs(l1(hc).value - l3().value) < 1e-12);
    CHECK(l1(hc - 0.1).value < l3().value);
    CHECK(l1(hc + 0.1).value > l3().value);
  }

  TEST_CASE("level circle halves the cone area") {
    // Area density is uniform in r^2, so the circle sits at r = 1/sqrt(2).
    for (double h : {0.5, 1.0, 3.0}) CHECK(l3_height(h) == doctest::Approx(h * (1.0 - 1.0 / std::numbers::sqrt2)));
  }

  TEST_CASE("disk Neumann eigenvalues") {
    const auto nu = disk_neumann_eigenvalues(6);
    REQUIRE(nu.size() == 6);
    CHECK(nu[0] == doctest::Approx(3.3900).epsilon(1e-4));
    CHECK(nu[1] == doctest::Approx(nu[0]));
    CHECK(nu[2] == doctest::Approx(9.3284).epsilon(1e-4));
    CHECK(nu[4] == doctest::Approx(14.6820).epsilon(1e-4));
    CHECK(std::is_sorted(nu.begin(), nu.end()));
    const auto z = bessel_derivative_zeros(0.0, 8.0);
    REQUIRE(z.size() == 2);
    CHECK(z[0] == doctest::Approx(3.8317).epsilon(1e-4));
    CHECK(z[1] == doctest::Approx(7.0156).epsilon(1e-4));
  }

  TEST_CASE("cone eigenvalues reduce to the disk at h = 0") {
    const auto d = disk_neumann_eigenvalues(8);
    const auto c = cone_neumann_eigenvalues(0.0, 8);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(c[i] == doctest::Approx(d[i]));
    // Steeper cones have longer generators and smaller eigenvalues.
    CHECK(cone_neumann_eigenvalues(1.0, 1)[0] < d[0]);
  }

  TEST_CASE("trivial-branch branch points") {
    const double nu1 = disk_neumann_eigenvalues(1)[0];
    const auto m = trivial_branch_bps(0.3, {nu1});
    REQUIRE(m.size() == 1);
    CHECK(m[0] == doctest::Approx(0.481).epsilon(1e-3));
    CHECK(trivial_branch_bps(1.01 / std::sqrt(nu1), {nu1}).empty());
    CHECK(trivial_branch_bps(0.3, {-1.0, 0.0}).empty());
  }

  TEST_CASE("circular cone h = 1, eps = 0.15 has 18 branch points in (0, 1)") {
    const auto nu = cone_neumann_eigenvalues(1.0, 80);
    const auto m = trivial_branch_bps(0.15, nu);
    CHECK(m.size() == 18);
    for (double v : m) CHECK((v > 0.0 && v < 1.0));
  }

  TEST_CASE("normal form registry") {
    const auto names = normal_form_names();
    for (const char* n : {"fold", "transcritical", "pitchfork-super", "pitchfork-sub", "quintic", "cusp",
                          "pitchfork-imperfect", "pitchfork-asymmetric"}) {
      CHECK(std::find(names.begin(), names.end(), n) != names.end());
      CHECK(normal_form(n)->name() == n);
    }
    CHECK_THROWS_AS(normal_form("hopf"), std::invalid_argument);
  }

  TEST_CASE("normal form derivatives match finite differences") {
    for (const auto& name : normal_form_names()) {
      auto p = normal_form(name);
      for (auto& v : p->params) v = 0.3;
      const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.7);
      const double h = 1e-6;
      const double fd = (p->f(0.7 + h) - p->f(0.7 - h)) / (2 * h);
      CHECK(Eigen::MatrixXd(p->jacobian(x, p->params))(0, 0) == doctest::Approx(fd).epsilon(1e-6));
      for (int k = 0; k < static_cast<int>(p->params.size()); ++k) {
        Params q = p->params;
        q[static_cast<std::size_t>(k)] += h;
        const double up = p->residual(x, q)[0];
        q[static_cast<std::size_t>(k)] -= 2 * h;
        const double dn = p->residual(x, q)[0];
        CHECK(p->parameter_derivative(x, p->params, k)[0] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("cusp fold locus") {
    CHECK(cusp_fold_mu2(0.0) == 0.0);
    CHECK(cusp_fold_mu2(1.0) == doctest::Approx(4.0 / (3.0 * std::sqrt(6.0))));
  }
}
