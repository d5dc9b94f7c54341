#include "conecrit/geometry.hpp"

#include <doctest.h>

#include <numbers>
#include <random>

using namespace conecrit;

TEST_SUITE("geometry") {
  TEST_CASE("cone_map base, tip and long axis") {
    const auto q1 = cone_map(ConeParams{1.0, 1.0}, 1.0, 0.0);
    CHECK(q1.isApprox(Eigen::Vector3d(1, 0, 0)));
    const auto q2 = cone_map(ConeParams{3.0, 2.0}, 0.0, 0.0);
    CHECK(q2.isApprox(Eigen::Vector3d(0, 0, 3)));
    const auto q3 = cone_map(ConeParams{1.0, 2.0}, 0.0, 1.0);
    CHECK(q3.isApprox(Eigen::Vector3d(0, 1, 0)));
    CHECK_THROWS_AS(cone_map(ConeParams{1.0, 1.0}, 0.9, 0.9), std::domain_error);
  }

  TEST_CASE("metric values") {
    const auto g = metric(ConeParams{1.0, 1.0}, 1.0, 0.0);
    CHECK(g.E == doctest::Approx(2.0));
    CHECK(g.F == doctest::Approx(0.0));
    CHECK(g.G == doctest::Approx(1.0));
    CHECK(g.det == doctest::Approx(2.0));
    const auto flat = metric(ConeParams{0.0, 1.7}, 0.3, -0.2);
    CHECK(flat.E == doctest::Approx(1.7 * 1.7));
    CHECK(flat.F == 0.0);
    CHECK(flat.G == 1.0);
    CHECK(flat.det == doctest::Approx(1.7 * 1.7));
    CHECK_THROWS_AS(metric(ConeParams{1.0, 1.0}, 0.0, 0.0), std::domain_error);
  }

  TEST_CASE("metric matches finite-difference tangents of the embedding") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> r(0.05, 0.95), t(0.0, 2.0 * std::numbers::pi);
    const ConeParams p{1.3, 1.4};
    const double d = 1e-6;
    for (int i = 0; i < 100; ++i) {
      const double rad = r(rng), th = t(rng);
      const double x = rad * std::cos(th), y = rad * std::sin(th);
      const Eigen::Vector3d px = (cone_map(p, x + d, y) - cone_map(p, x - d, y)) / (2 * d);
      const Eigen::Vector3d py = (cone_map(p, x, y + d) - cone_map(p, x, y - d)) / (2 * d);
      const double gram = px.squaredNorm() * py.squaredNorm() - std::pow(px.dot(py), 2);
      const auto g = metric(p, x, y);
      CHECK(std::abs(g.det - gram) < 1e-6);
      CHECK(std::abs(g.E * g.G - g.F * g.F - g.det) < 1e-12);
    }
  }

  TEST_CASE("reflections keep E, G, det and negate F") {
    const ConeParams p{2.0, 1.3};
    const auto g = metric(p, 0.3, 0.4);
    for (const auto& r : {metric(p, -0.3, 0.4), metric(p, 0.3, -0.4)}) {
      CHECK(r.E == doctest::Approx(g.E));
      CHECK(r.G == doctest::Approx(g.G));
      CHECK(r.det == doctest::Approx(g.det));
      CHECK(r.F == doctest::Approx(-g.F));
    }
    CHECK(metric(p, 0.0, 0.5).F == 0.0);
    CHECK(metric(p, 0.5, 0.0).F == 0.0);
  }

  TEST_CASE("surface area") {
    CHECK(surface_area(ConeParams{0.0, 1.0}) == doctest::Approx(std::numbers::pi).epsilon(1e-12));
    CHECK(surface_area(ConeParams{0.0, 2.0}) == doctest::Approx(2 * std::numbers::pi).epsilon(1e-12));
    CHECK(surface_area(ConeParams{1.0, 1.0}) == doctest::Approx(std::numbers::pi * std::sqrt(2.0)).epsilon(1e-12));
    for (double h : {0.5, 1.0, 3.0}) {
      const ConeParams p{h, 1.0};
      const double S = p.slant_height();
      CHECK(std::abs(surface_area(p) - cone_angle(p) * S * S / 2) < 1e-6);
    }
  }

  TEST_CASE("cone angle") {
    CHECK(cone_angle(ConeParams{0.0, 1.0}) == doctest::Approx(2 * std::numbers::pi));
    CHECK(cone_angle(ConeParams{1.0, 1.0}) == doctest::Approx(2 * std::numbers::pi / std::sqrt(2.0)));
    const double base = 2 * std::numbers::pi / std::sqrt(2.0);
    const double e = cone_angle(ConeParams{1.0, 1.05});
    CHECK(e > base);
    CHECK(e < 1.05 * base);
    for (double h : {0.1, 1.0, 5.0}) {
      for (double a : {1.0, 1.5, 3.0}) CHECK(cone_angle(ConeParams{h, a}) < 2 * std::numbers::pi);
    }
    // Generic a: compare with the length of the curve of unit generator directions.
    const ConeParams p{0.7, 1.6};
    const double r = 1e-3;
    const int n = 20000;
    double sphere = 0.0;
    for (int i = 0; i < n; ++i) {
      const double t0 = 2 * std::numbers::pi * i / n, t1 = 2 * std::numbers::pi * (i + 1) / n;
      const Eigen::Vector3d v0 = (cone_map(p, r * std::cos(t0), r * std::sin(t0)) - cone_map(p, 0.0, 0.0)).normalized();
      const Eigen::Vector3d v1 = (cone_map(p, r * std::cos(t1), r * std::sin(t1)) - cone_map(p, 0.0, 0.0)).normalized();
      sphere += (v1 - v0).norm();
    }
    CHECK(cone_angle(p) == doctest::Approx(sphere).epsilon(1e-7));
  }

  TEST_CASE("invalid parameters") {
    CHECK_THROWS(ConeParams{-1.0, 1.0}.validate());
    CHECK_THROWS(ConeParams{1.0, 0.5}.validate());
  }
}
