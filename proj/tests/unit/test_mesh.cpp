#include "conecrit/fem.hpp"
#include "conecrit/mesh.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

using namespace conecrit;

namespace {

double planar_area(const Mesh& m) {
  double s = 0.0;
  for (Eigen::Index t = 0; t < m.triangle_count(); ++t) s += m.signed_area(t);
  return s;
}

Eigen::VectorXd nodal(const Mesh& m, double (*f)(double, double)) {
  Eigen::VectorXd u(m.node_count());
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = f(m.nodes[i].x(), m.nodes[i].y());
  return u;
}

// Area of the polygon formed by the boundary nodes sorted by angle.
double boundary_polygon_area(const Mesh& m) {
  std::vector<double> angles;
  for (int i : m.boundary_nodes) angles.push_back(std::atan2(m.nodes[i].y(), m.nodes[i].x()));
  std::sort(angles.begin(), angles.end());
  double s = 0.0;
  for (std::size_t k = 0; k < angles.size(); ++k) {
    const double next = k + 1 < angles.size() ? angles[k + 1] : angles[0] + 2 * std::numbers::pi;
    s += 0.5 * std::sin(next - angles[k]);
  }
  return s;
}

}  // namespace

TEST_SUITE("mesh") {
  TEST_CASE("coarse disk mesh is oriented and has a node at the tip") {
    const Mesh m = generate_disk_mesh(0.5);
    for (Eigen::Index t = 0; t < m.triangle_count(); ++t) CHECK(m.signed_area(t) > 0.0);
    CHECK(m.origin_node() >= 0);
    CHECK_NOTHROW(m.check());
  }

  TEST_CASE("fine disk mesh: area, edge length and boundary") {
    const Mesh m = generate_disk_mesh(0.05);
    CHECK(m.max_edge_length() <= 0.05);
    CHECK(std::abs(planar_area(m) - boundary_polygon_area(m)) < 1e-12);
    const double n = static_cast<double>(m.boundary_nodes.size());
    CHECK(std::abs(planar_area(m) - std::numbers::pi) < 1.01 * 2 * std::pow(std::numbers::pi, 3) / (3 * n * n));
    CHECK(std::abs(planar_area(m) - std::numbers::pi) < 1e-3);
    for (int i : m.boundary_nodes) CHECK(std::abs(m.nodes[i].squaredNorm() - 1.0) < 1e-12);
  }

  TEST_CASE("element count calibration") {
    // About 6000 triangles at target_h = h0.
    const double h0 = 0.0466;
    const Mesh m = generate_disk_mesh(0.1);
    CHECK(static_cast<double>(m.triangle_count()) >= 6000.0 * std::pow(h0 / 0.1, 2));
    CHECK(static_cast<std::size_t>(m.triangle_count()) <= kDefaultElementCap);
    const Mesh ref = generate_disk_mesh(h0);
    CHECK(ref.triangle_count() == doctest::Approx(6000).epsilon(0.1));
    CHECK_THROWS_AS(generate_disk_mesh(0.01, 1000), MeshError);
    CHECK_THROWS_AS(generate_disk_mesh(1.5), MeshError);
  }

  TEST_CASE("disk mesh is mirror symmetric") {
    const Mesh m = generate_disk_mesh(0.1);
    std::set<std::pair<long, long>> keys;
    const auto key = [](double x, double y) { return std::make_pair(std::lround(x * 1e9), std::lround(y * 1e9)); };
    for (const auto& p : m.nodes) keys.insert(key(p.x(), p.y()));
    for (const auto& p : m.nodes) {
      CHECK(keys.count(key(-p.x(), p.y())) == 1);
      CHECK(keys.count(key(p.x(), -p.y())) == 1);
    }
  }

  TEST_CASE("uniform refinement splits every triangle and conserves area") {
    const Mesh m = generate_disk_mesh(0.2);
    RefineOptions opt;
    opt.project_boundary = false;
    const Mesh r = refine(m, Eigen::VectorXd::Ones(m.triangle_count()), 1.0, opt);
    CHECK(r.triangle_count() >= 2 * m.triangle_count());
    CHECK(std::abs(planar_area(r) - planar_area(m)) < 1e-12);
    CHECK(r.generation == m.generation + 1);
    for (Eigen::Index i = 0; i < m.node_count(); ++i) CHECK(r.nodes[i] == m.nodes[i]);
    CHECK_NOTHROW(r.check());
  }

  TEST_CASE("refinement concentrates at a steep interface") {
    const double eps = 0.05;
    auto m = std::make_shared<const Mesh>(generate_disk_mesh(0.1));
    const Eigen::VectorXd u = nodal(*m, [](double x, double) { return std::tanh(x / (std::sqrt(2.0) * 0.05)); });
    const DiscreteOperators ops = assemble(m, ConeParams{0.0, 1.0});
    const Mesh r = refine(*m, gradient_indicator(u, ops), 0.1);
    int near = 0, total = 0;
    for (Eigen::Index i = m->node_count(); i < r.node_count(); ++i) {
      ++total;
      if (std::abs(r.nodes[i].x()) <= 4 * eps) ++near;
    }
    REQUIRE(total > 0);
    CHECK(near >= 0.8 * total);
  }

  TEST_CASE("conformity closure growth") {
    const Mesh m = generate_disk_mesh(0.0466);
    Eigen::VectorXd ind(m.triangle_count());
    for (Eigen::Index t = 0; t < ind.size(); ++t) ind[t] = std::sin(3.0 * t) + 2.0;
    const Mesh r = refine(m, ind, 0.25);
    const double growth = static_cast<double>(r.triangle_count()) / m.triangle_count();
    CHECK(growth >= 1.2);
    CHECK(growth <= 2.2);
    RefineOptions cap;
    cap.element_cap = m.triangle_count() + 10;
    CHECK_THROWS_AS(refine(m, ind, 0.25, cap), MeshError);
    CHECK_THROWS_AS(refine(m, Eigen::VectorXd::Ones(3), 0.25), MeshError);
  }

  TEST_CASE("transfer") {
    const Mesh m = generate_disk_mesh(0.2);
    RefineOptions opt;
    opt.project_boundary = false;
    const Mesh fine = refine(m, Eigen::VectorXd::Ones(m.triangle_count()), 1.0, opt);
    const Eigen::VectorXd c = Eigen::VectorXd::Constant(m.node_count(), 0.3);
    CHECK((transfer(c, m, fine).array() - 0.3).abs().maxCoeff() < 1e-15);
    const Eigen::VectorXd lin = nodal(m, [](double x, double y) { return x + 2 * y; });
    const Eigen::VectorXd lin_f = transfer(lin, m, fine);
    CHECK((lin_f - nodal(fine, [](double x, double y) { return x + 2 * y; })).cwiseAbs().maxCoeff() < 1e-13);
  }

  TEST_CASE("transfer round trip and range") {
    const auto f = [](double x, double) { return std::tanh(x / 0.2); };
    double prev = 0.0;
    for (double h : {0.1, 0.05}) {
      const Mesh coarse = generate_disk_mesh(h);
      const Mesh fine = refine(coarse, Eigen::VectorXd::Ones(coarse.triangle_count()), 1.0);
      const Eigen::VectorXd u = nodal(fine, f);
      const Eigen::VectorXd back = transfer(transfer(u, fine, coarse), coarse, fine);
      const double drift = (back - u).cwiseAbs().maxCoeff();
      CHECK(drift < 25.0 * h * h);
      if (prev > 0.0) CHECK(drift < prev);
      prev = drift;
      const Eigen::VectorXd down = transfer(u, fine, coarse);
      CHECK(down.maxCoeff() <= u.maxCoeff() + 1e-12);
      CHECK(down.minCoeff() >= u.minCoeff() - 1e-12);
    }
  }

  TEST_CASE("transfer changes the mass by O(h^2)") {
    const auto f = [](double x, double y) { return std::tanh((x + 0.3 * y) / 0.15); };
    for (double h : {0.1, 0.05}) {
      auto coarse = std::make_shared<const Mesh>(generate_disk_mesh(h));
      auto fine = std::make_shared<const Mesh>(refine(*coarse, Eigen::VectorXd::Ones(coarse->triangle_count()), 1.0));
      const auto oc = assemble(coarse, ConeParams{1.0, 1.05});
      const auto of = assemble(fine, ConeParams{1.0, 1.05});
      const Eigen::VectorXd u = nodal(*coarse, f);
      CHECK(std::abs(mass_average(u, oc) - mass_average(transfer(u, *coarse, *fine), of)) < 2.0 * h * h);
    }
  }

  TEST_CASE("mesh file round trip and malformed input") {
    const Mesh m = generate_disk_mesh(0.3);
    std::stringstream ss;
    write_mesh(ss, m);
    std::string header;
    std::getline(ss, header);
    CHECK(header == "nodes " + std::to_string(m.node_count()) + " triangles " + std::to_string(m.triangle_count()));
    ss.seekg(0);
    const Mesh r = read_mesh(ss);
    CHECK(r.node_count() == m.node_count());
    CHECK(r.triangle_count() == m.triangle_count());
    for (Eigen::Index i = 0; i < m.node_count(); ++i) CHECK(r.nodes[i] == m.nodes[i]);
    std::stringstream bad("nodes 3 triangles 1\n0 0\n1 0\n");
    CHECK_THROWS_AS(read_mesh(bad), MeshError);
    std::stringstream junk("points 3\n");
    CHECK_THROWS_AS(read_mesh(junk), MeshError);
  }

  TEST_CASE("rectangle mesh") {
    const Mesh m = generate_rectangle_mesh(0.0, 2.0, 0.0, 1.0, 8, 4);
    CHECK(planar_area(m) == doctest::Approx(2.0));
    CHECK_THROWS_AS(generate_rectangle_mesh(1.0, 0.0, 0.0, 1.0, 2, 2), MeshError);
  }
}
