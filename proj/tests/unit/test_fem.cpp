#include "conecrit/fem.hpp"
#include "conecrit/oracle.hpp"

#include <doctest.h>

#include <map>
#include <numbers>
#include <random>

using namespace conecrit;

namespace {

std::shared_ptr<const Mesh> disk(double h) { return std::make_shared<const Mesh>(generate_disk_mesh(h)); }

Eigen::VectorXd random_field(Eigen::Index n, unsigned seed, double scale = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(-scale, scale);
  Eigen::VectorXd v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// Index of the mirror image of every node under (x, y) -> (sx x, sy y).
std::vector<int> mirror_map(const Mesh& m, double sx, double sy) {
  std::map<std::pair<long, long>, int> index;
  const auto key = [](double x, double y) { return std::make_pair(std::lround(x * 1e9), std::lround(y * 1e9)); };
  for (Eigen::Index i = 0; i < m.node_count(); ++i) index[key(m.nodes[i].x(), m.nodes[i].y())] = static_cast<int>(i);
  std::vector<int> out(static_cast<std::size_t>(m.node_count()));
  for (Eigen::Index i = 0; i < m.node_count(); ++i) out[i] = index.at(key(sx * m.nodes[i].x(), sy * m.nodes[i].y()));
  return out;
}

double max_abs(const SparseMatrix& A) {
  double v = 0.0;
  for (Eigen::Index k = 0; k < A.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) v = std::max(v, std::abs(it.value()));
  }
  return v;
}

}  // namespace

TEST_SUITE("fem") {
  TEST_CASE("quadrature rule") {
    const auto& q = TriangleQuadrature::degree5();
    double w = 0.0;
    for (int i = 0; i < q.size; ++i) {
      w += q.weight[i];
      CHECK((q.barycentric[i].array() > 0.0).all());
      CHECK(q.barycentric[i].sum() == doctest::Approx(1.0));
    }
    CHECK(w == doctest::Approx(1.0));
  }

  TEST_CASE("operator invariants") {
    auto mesh = disk(0.1);
    for (const ConeParams cone : {ConeParams{0.0, 1.0}, ConeParams{1.0, 1.05}, ConeParams{3.0, 2.0}}) {
      const DiscreteOperators ops = assemble(mesh, cone);
      CHECK((ops.K * Eigen::VectorXd::Ones(ops.size())).cwiseAbs().maxCoeff() < 1e-10);
      CHECK(max_abs(SparseMatrix(ops.K - SparseMatrix(ops.K.transpose()))) < 1e-14);
      CHECK(max_abs(SparseMatrix(ops.M - SparseMatrix(ops.M.transpose()))) < 1e-14);
      const Eigen::VectorXd v = random_field(ops.size(), 3);
      CHECK(v.dot(ops.K * v) >= 0.0);
      CHECK(v.dot(ops.M * v) > 0.0);
      CHECK(ops.mass_column.sum() == doctest::Approx(ops.area).epsilon(1e-13));
    }
  }

  TEST_CASE("mass sum equals the cone area over the meshed polygon") {
    // For a = 1 the area density is constant in theta, so the exact area of the
    // polygonal domain is sqrt(1 + h^2) times its planar area.
    auto mesh = disk(0.05);
    double planar = 0.0;
    for (Eigen::Index t = 0; t < mesh->triangle_count(); ++t) planar += mesh->signed_area(t);
    const DiscreteOperators ops = assemble(mesh, ConeParams{1.0, 1.0});
    CHECK(ops.mass_column.sum() == doctest::Approx(planar * std::sqrt(2.0)).epsilon(1e-12));
    // Against the disk itself the gap closes like h^2.
    auto fine = disk(0.015);
    const DiscreteOperators fops = assemble(fine, ConeParams{1.0, 1.0});
    CHECK(std::abs(fops.mass_column.sum() - std::numbers::pi * std::sqrt(2.0)) < 1e-4);
  }

  TEST_CASE("flat disk stiffness reproduces the first Neumann eigenvalue") {
    const DiscreteOperators ops = assemble(disk(0.05), ConeParams{0.0, 1.0});
    SpectrumOptions opt;
    opt.min_count = 3;
    const auto sp = constrained_eigenvalues(ops.K, ops.M, ops.mass_column, opt);
    const auto exact = disk_neumann_eigenvalues(3);
    CHECK(sp.values[0] == doctest::Approx(exact[0]).epsilon(0.005));
    CHECK(sp.values[1] == doctest::Approx(exact[1]).epsilon(0.005));
    CHECK(sp.values[2] == doctest::Approx(exact[2]).epsilon(0.01));
  }

  TEST_CASE("residual at homogeneous states and pure phases") {
    auto mesh = disk(0.1);
    const DiscreteOperators ops = assemble(mesh, ConeParams{1.0, 1.05});
    const Eigen::Index n = mesh->node_count();
    for (double m : {-0.7, 0.0, 0.3}) {
      State s{Eigen::VectorXd::Constant(n, m), m * m * m - m, m, 0.15, ops.cone};
      const Residual r = residual(s, ops);
      CHECK(r.field.cwiseAbs().maxCoeff() < 1e-14);
      CHECK(std::abs(r.constraint) < 1e-14);
    }
    State pure{Eigen::VectorXd::Ones(n), 0.0, 1.0, 0.1, ops.cone};
    CHECK(residual(pure, ops).field.cwiseAbs().maxCoeff() < 1e-14);
    CHECK(std::abs(residual(pure, ops).constraint) < 1e-14);
  }

  TEST_CASE("residual is odd under u -> -u") {
    auto mesh = disk(0.1);
    const DiscreteOperators ops = assemble(mesh, ConeParams{2.0, 1.3});
    for (unsigned seed : {1u, 2u, 3u}) {
      State s{random_field(mesh->node_count(), seed), 0.37, 0.12, 0.1, ops.cone};
      State t{-s.u, -s.lambda, -s.m, s.eps, s.cone};
      const Residual a = residual(s, ops), b = residual(t, ops);
      CHECK((a.field + b.field).cwiseAbs().maxCoeff() < 1e-14);
      CHECK(std::abs(a.constraint + b.constraint) < 1e-14);
    }
  }

  TEST_CASE("residual commutes with reflections") {
    auto mesh = disk(0.1);
    const DiscreteOperators ops = assemble(mesh, ConeParams{1.5, 1.2});
    const State s{random_field(mesh->node_count(), 9), 0.1, 0.0, 0.1, ops.cone};
    const Residual r = residual(s, ops);
    for (const auto& [sx, sy] : {std::pair{-1.0, 1.0}, std::pair{1.0, -1.0}}) {
      const auto map = mirror_map(*mesh, sx, sy);
      State t = s;
      for (std::size_t i = 0; i < map.size(); ++i) t.u[map[i]] = s.u[static_cast<Eigen::Index>(i)];
      const Residual rt = residual(t, ops);
      double err = 0.0;
      for (std::size_t i = 0; i < map.size(); ++i) err = std::max(err, std::abs(rt.field[map[i]] - r.field[static_cast<Eigen::Index>(i)]));
      CHECK(err < 1e-12);
    }
  }

  TEST_CASE("jacobian matches finite differences and has a symmetric field block") {
    auto mesh = disk(0.1);
    const DiscreteOperators ops = assemble(mesh, ConeParams{1.0, 1.05});
    const Eigen::Index n = mesh->node_count();
    State s{random_field(n, 4), 0.2, 0.05, 0.15, ops.cone};
    const SparseMatrix J = jacobian(s, ops);
    const Eigen::VectorXd v = random_field(n + 1, 5);
    const double d = 1e-6;
    State sp = s;
    sp.u += d * v.head(n);
    sp.lambda += d * v[n];
    const Residual r0 = residual(s, ops), r1 = residual(sp, ops);
    Eigen::VectorXd fd(n + 1);
    fd << (r1.field - r0.field) / d, (r1.constraint - r0.constraint) / d;
    CHECK((fd - J * v).norm() <= 1e-5 * std::max(1.0, (J * v).norm()));
    const SparseMatrix H = hessian_field_block(s.u, s.eps, ops);
    CHECK(max_abs(SparseMatrix(H - SparseMatrix(H.transpose()))) < 1e-12);
    // Bordered symmetry: constraint row = -(lambda column)ᵀ / area.
    const Eigen::MatrixXd Jd(J);
    CHECK((Jd.row(n).head(n).transpose() + Jd.col(n).head(n) / ops.area).cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("linearization at u = m has eigenvalues eps^2 nu_k + 3 m^2 - 1") {
    auto mesh = disk(0.1);
    const DiscreteOperators ops = assemble(mesh, ConeParams{0.0, 1.0});
    const double m = 0.3, eps = 0.2;
    SpectrumOptions opt;
    opt.min_count = 4;
    opt.shift = -2.0;
    const auto lap = constrained_eigenvalues(ops.K, ops.M, ops.mass_column, opt);
    const auto lin = constrained_eigenvalues(
        hessian_field_block(Eigen::VectorXd::Constant(mesh->node_count(), m), eps, ops), ops.M, ops.mass_column, opt);
    for (int k = 0; k < 4; ++k) CHECK(lin.values[k] == doctest::Approx(eps * eps * lap.values[k] + 3 * m * m - 1));
  }

  TEST_CASE("energy") {
    auto mesh = disk(0.05);
    const DiscreteOperators ops = assemble(mesh, ConeParams{1.0, 1.0});
    const Eigen::Index n = mesh->node_count();
    CHECK(std::abs(energy(State{Eigen::VectorXd::Ones(n), 0, 1, 0.1, ops.cone}, ops)) < 1e-12);
    CHECK(std::abs(energy(State{-Eigen::VectorXd::Ones(n), 0, -1, 0.1, ops.cone}, ops)) < 1e-12);
    const double e0 = energy(State{Eigen::VectorXd::Zero(n), 0, 0, 0.1, ops.cone}, ops);
    CHECK(e0 == doctest::Approx(ops.area * 0.25 / (2 * kSigma * 0.1)).epsilon(1e-12));
    CHECK(e0 == doctest::Approx(11.78).epsilon(2e-3));
    CHECK(energy(State{random_field(n, 8), 0, 0, 0.1, ops.cone}, ops) > 0.0);
  }

  TEST_CASE("energy gradient equals the residual field part") {
    auto mesh = disk(0.15);
    const DiscreteOperators ops = assemble(mesh, ConeParams{1.0, 1.05});
    const Eigen::Index n = mesh->node_count();
    const double eps = 0.2;
    State s{random_field(n, 11), 0.0, 0.0, eps, ops.cone};
    const Eigen::VectorXd v = random_field(n, 12);
    const double d = 1e-6;
    State p = s, q = s;
    p.u += d * v;
    q.u -= d * v;
    const double dE = (energy(p, ops) - energy(q, ops)) / (2 * d);
    // E = (1 / (2 sigma eps)) (eps^2/2 uᵀKu + integral W), so dE = field · v / (2 sigma eps).
    CHECK(dE == doctest::Approx(residual(s, ops).field.dot(v) / (2 * kSigma * eps)).epsilon(1e-6));
  }

  TEST_CASE("level set lengths") {
    auto mesh = disk(0.05);
    Eigen::VectorXd x(mesh->node_count()), r2(mesh->node_count());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x[i] = mesh->nodes[i].x();
      r2[i] = mesh->nodes[i].squaredNorm() - 0.5;
    }
    CHECK(std::abs(level_set_length(x, 0.0, *mesh, ConeParams{0.0, 1.0}).length - 2.0) < 1e-3);
    for (double h : {0.5, 1.0, 2.0, 3.0}) {
      CHECK(std::abs(level_set_length(x, 0.0, *mesh, ConeParams{h, 1.0}).length - 2 * std::sqrt(1 + h * h)) < 1e-2);
    }
    const LevelSet circle = level_set_length(r2, 0.0, *mesh, ConeParams{0.0, 1.0});
    CHECK(std::abs(circle.length - 2 * std::numbers::pi * std::sqrt(0.5)) < 1e-2);
    REQUIRE(circle.polylines.size() == 1);
    CHECK(circle.polylines[0].closed);
    // A horizontal circle keeps its planar radius on the circular cone: length sqrt(2) pi = l3.
    const LevelSet cone_circle = level_set_length(r2, 0.0, *mesh, ConeParams{1.0, 1.0});
    CHECK(std::abs(cone_circle.length - l3().value) < 1e-2);
    const LevelSet empty = level_set_length(Eigen::VectorXd::Constant(x.size(), 0.3), 0.0, *mesh, ConeParams{1.0, 1.0});
    CHECK(empty.length == 0.0);
    CHECK(empty.polylines.empty());
  }
}
