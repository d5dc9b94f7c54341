#include "conecrit/fem.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>
#include <unordered_map>

namespace conecrit {

const TriangleQuadrature& TriangleQuadrature::degree5() {
  static const TriangleQuadrature rule = [] {
    TriangleQuadrature q;
    const double s15 = std::sqrt(15.0);
    const double a1 = (6.0 - s15) / 21.0;
    const double a2 = (6.0 + s15) / 21.0;
    const double w1 = (155.0 - s15) / 1200.0;
    const double w2 = (155.0 + s15) / 1200.0;
    q.barycentric[0] = Eigen::Vector3d::Constant(1.0 / 3.0);
    q.weight[0] = 9.0 / 40.0;
    q.barycentric[1] = {1.0 - 2.0 * a1, a1, a1};
    q.barycentric[2] = {a1, 1.0 - 2.0 * a1, a1};
    q.barycentric[3] = {a1, a1, 1.0 - 2.0 * a1};
    q.barycentric[4] = {1.0 - 2.0 * a2, a2, a2};
    q.barycentric[5] = {a2, 1.0 - 2.0 * a2, a2};
    q.barycentric[6] = {a2, a2, 1.0 - 2.0 * a2};
    for (int i = 1; i <= 3; ++i) q.weight[i] = w1;
    for (int i = 4; i <= 6; ++i) q.weight[i] = w2;
    return q;
  }();
  return rule;
}

namespace {

constexpr int kQ = TriangleQuadrature::size;

struct LocalGeometry {
  double area;
  Eigen::Matrix<double, 2, 3> grad;  // columns: parameter gradients of phi_0..2
};

LocalGeometry local_geometry(const Mesh& mesh, Eigen::Index t) {
  const auto& tri = mesh.triangles[t];
  const Eigen::Vector2d& p0 = mesh.nodes[tri[0]];
  const Eigen::Vector2d& p1 = mesh.nodes[tri[1]];
  const Eigen::Vector2d& p2 = mesh.nodes[tri[2]];
  const double det = (p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x();
  if (!(det > 0.0)) throw MeshError("assemble: degenerate triangle " + std::to_string(t));
  LocalGeometry g;
  g.area = 0.5 * det;
  g.grad.col(0) = Eigen::Vector2d(p1.y() - p2.y(), p2.x() - p1.x()) / det;
  g.grad.col(1) = Eigen::Vector2d(p2.y() - p0.y(), p0.x() - p2.x()) / det;
  g.grad.col(2) = Eigen::Vector2d(p0.y() - p1.y(), p1.x() - p0.x()) / det;
  return g;
}

// Scatters local 3x3 blocks computed by `local(t, block)` into a sparse matrix.
template <typename Local>
SparseMatrix assemble_matrix(const Mesh& mesh, Local&& local, int workers = 1) {
  const auto nt = mesh.triangle_count();
  workers = std::max(1, std::min<int>(workers, static_cast<int>(nt / 512 + 1)));
  std::vector<Triplets> parts(workers);
  const auto work = [&](int w) {
    const Eigen::Index begin = nt * w / workers;
    const Eigen::Index end = nt * (w + 1) / workers;
    auto& trip = parts[w];
    trip.reserve(static_cast<std::size_t>(9 * (end - begin)));
    Eigen::Matrix3d block;
    for (Eigen::Index t = begin; t < end; ++t) {
      local(t, block);
      const auto& tri = mesh.triangles[t];
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], block(i, j));
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(work, w);
    for (auto& th : threads) th.join();
  }
  // Deterministic reduction: concatenate in worker order.
  Triplets all;
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  all.reserve(total);
  for (const auto& p : parts) all.insert(all.end(), p.begin(), p.end());
  SparseMatrix A(mesh.node_count(), mesh.node_count());
  A.setFromTriplets(all.begin(), all.end());
  return A;
}

// Values of the P1 interpolant at the quadrature points of triangle t.
inline Eigen::Matrix<double, kQ, 1> at_points(const Eigen::VectorXd& u, const Eigen::Vector3i& tri) {
  const auto& rule = TriangleQuadrature::degree5();
  Eigen::Matrix<double, kQ, 1> v;
  for (int q = 0; q < kQ; ++q) {
    v[q] = rule.barycentric[q][0] * u[tri[0]] + rule.barycentric[q][1] * u[tri[1]] + rule.barycentric[q][2] * u[tri[2]];
  }
  return v;
}

}  // namespace

DiscreteOperators assemble(std::shared_ptr<const Mesh> mesh_ptr, const ConeParams& cone, int workers) {
  cone.validate();
  const Mesh& mesh = *mesh_ptr;
  const auto& rule = TriangleQuadrature::degree5();
  const auto nt = mesh.triangle_count();

  DiscreteOperators ops;
  ops.mesh = mesh_ptr;
  ops.cone = cone;
  ops.qweight.resize(nt, kQ);
  std::vector<Eigen::Matrix2d> diffusion(static_cast<std::size_t>(nt));
  for (Eigen::Index t = 0; t < nt; ++t) {
    const auto g = local_geometry(mesh, t);
    const auto& tri = mesh.triangles[t];
    Eigen::Matrix2d c = Eigen::Matrix2d::Zero();
    for (int q = 0; q < kQ; ++q) {
      const Eigen::Vector2d x = rule.barycentric[q][0] * mesh.nodes[tri[0]] +
                                rule.barycentric[q][1] * mesh.nodes[tri[1]] +
                                rule.barycentric[q][2] * mesh.nodes[tri[2]];
      const auto ms = metric(cone, x.x(), x.y());
      ops.qweight(t, q) = rule.weight[q] * g.area * std::sqrt(ms.det);
      c += rule.weight[q] * g.area * ms.diffusion();
    }
    diffusion[static_cast<std::size_t>(t)] = c;
  }

  ops.K = assemble_matrix(
      mesh,
      [&](Eigen::Index t, Eigen::Matrix3d& block) {
        const auto g = local_geometry(mesh, t);
        block = g.grad.transpose() * diffusion[static_cast<std::size_t>(t)] * g.grad;
      },
      workers);
  ops.M = assemble_matrix(
      mesh,
      [&](Eigen::Index t, Eigen::Matrix3d& block) {
        block.setZero();
        for (int q = 0; q < kQ; ++q) {
          block += ops.qweight(t, q) * rule.barycentric[q] * rule.barycentric[q].transpose();
        }
      },
      workers);
  ops.mass_column = ops.M * Eigen::VectorXd::Ones(mesh.node_count());
  ops.area = ops.mass_column.sum();
  return ops;
}

double mass_average(const Eigen::VectorXd& u, const DiscreteOperators& ops) {
  return ops.mass_column.dot(u) / ops.area;
}

Residual residual(const State& state, const DiscreteOperators& ops) {
  const Mesh& mesh = *ops.mesh;
  const auto& rule = TriangleQuadrature::degree5();
  Residual r;
  r.field = state.eps * state.eps * (ops.K * state.u);
  for (Eigen::Index t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto uq = at_points(state.u, tri);
    Eigen::Vector3d local = Eigen::Vector3d::Zero();
    for (int q = 0; q < kQ; ++q) {
      local += ops.qweight(t, q) * (double_well_d1(uq[q]) - state.lambda) * rule.barycentric[q];
    }
    for (int i = 0; i < 3; ++i) r.field[tri[i]] += local[i];
  }
  r.constraint = mass_average(state.u, ops) - state.m;
  return r;
}

SparseMatrix weighted_mass(const Eigen::VectorXd& nodal_a, const Eigen::VectorXd& nodal_b, double scale,
                           const DiscreteOperators& ops) {
  const Mesh& mesh = *ops.mesh;
  const auto& rule = TriangleQuadrature::degree5();
  return assemble_matrix(mesh, [&](Eigen::Index t, Eigen::Matrix3d& block) {
    const auto& tri = mesh.triangles[t];
    const auto aq = at_points(nodal_a, tri);
    const auto bq = at_points(nodal_b, tri);
    block.setZero();
    for (int q = 0; q < kQ; ++q) {
      block += scale * ops.qweight(t, q) * aq[q] * bq[q] * rule.barycentric[q] * rule.barycentric[q].transpose();
    }
  });
}

SparseMatrix hessian_field_block(const Eigen::VectorXd& u, double eps, const DiscreteOperators& ops) {
  const Mesh& mesh = *ops.mesh;
  const auto& rule = TriangleQuadrature::degree5();
  SparseMatrix N = assemble_matrix(mesh, [&](Eigen::Index t, Eigen::Matrix3d& block) {
    const auto uq = at_points(u, mesh.triangles[t]);
    block.setZero();
    for (int q = 0; q < kQ; ++q) {
      block += ops.qweight(t, q) * double_well_d2(uq[q]) * rule.barycentric[q] * rule.barycentric[q].transpose();
    }
  });
  return SparseMatrix(eps * eps * ops.K + N);
}

SparseMatrix jacobian(const State& state, const DiscreteOperators& ops) {
  const Eigen::Index n = ops.size();
  const SparseMatrix A = hessian_field_block(state.u, state.eps, ops);
  Eigen::MatrixXd right = -ops.mass_column;
  Eigen::MatrixXd bottom = ops.mass_column / ops.area;
  (void)n;
  return bordered(A, right, bottom, Eigen::MatrixXd::Zero(1, 1));
}

double energy(const State& state, const DiscreteOperators& ops) {
  const Mesh& mesh = *ops.mesh;
  double potential = 0.0;
  for (Eigen::Index t = 0; t < mesh.triangle_count(); ++t) {
    const auto uq = at_points(state.u, mesh.triangles[t]);
    for (int q = 0; q < kQ; ++q) potential += ops.qweight(t, q) * double_well(uq[q]);
  }
  const double gradient = state.u.dot(ops.K * state.u);
  return (0.5 * state.eps * gradient + potential / state.eps) / (2.0 * kSigma);
}

Eigen::VectorXd gradient_indicator(const Eigen::VectorXd& u, const DiscreteOperators& ops) {
  const Mesh& mesh = *ops.mesh;
  const auto& rule = TriangleQuadrature::degree5();
  Eigen::VectorXd ind(mesh.triangle_count());
  for (Eigen::Index t = 0; t < mesh.triangle_count(); ++t) {
    const auto g = local_geometry(mesh, t);
    const auto& tri = mesh.triangles[t];
    const Eigen::Vector2d grad = g.grad * Eigen::Vector3d(u[tri[0]], u[tri[1]], u[tri[2]]);
    double s = 0.0;
    for (int q = 0; q < kQ; ++q) {
      const Eigen::Vector2d x = rule.barycentric[q][0] * mesh.nodes[tri[0]] +
                                rule.barycentric[q][1] * mesh.nodes[tri[1]] +
                                rule.barycentric[q][2] * mesh.nodes[tri[2]];
      const auto ms = metric(ops.cone, x.x(), x.y());
      s += rule.weight[q] * g.area * grad.dot(ms.diffusion() * grad);
    }
    ind[t] = s;
  }
  return ind;
}

double metric_segment_length(const Eigen::Vector2d& p0, const Eigen::Vector2d& p1, const ConeParams& cone) {
  const Eigen::Vector2d d = p1 - p0;
  if (d.squaredNorm() == 0.0) return 0.0;
  // Two-point Gauss rule along the segment.
  const double off = 0.5 / std::sqrt(3.0);
  double len = 0.0;
  for (double s : {0.5 - off, 0.5 + off}) {
    Eigen::Vector2d x = p0 + s * d;
    if (cone.h != 0.0 && x.squaredNorm() == 0.0) x = p0 + (s + 1e-9) * d;
    const auto g = metric(cone, x.x(), x.y()).tensor();
    len += 0.5 * std::sqrt(d.dot(g * d));
  }
  return len;
}

LevelSet level_set_length(const Eigen::VectorXd& u, double c, const Mesh& mesh, const ConeParams& cone) {
  if (u.size() != mesh.node_count()) throw std::invalid_argument("level_set_length: field/mesh size mismatch");
  LevelSet out;
  // Crossing points are keyed by the crossed edge, or by the node when the
  // node value equals the level exactly.
  using Key = std::uint64_t;
  const auto edge_key = [](int i, int j) -> Key {
    if (i > j) std::swap(i, j);
    return (static_cast<Key>(i) << 32) | static_cast<Key>(j);
  };
  const auto node_key = [](int i) -> Key { return (static_cast<Key>(0xffffffffu) << 32) | static_cast<Key>(i); };
  std::unordered_map<Key, Eigen::Vector2d> points;
  std::vector<std::array<Key, 2>> seg_keys;

  for (const auto& tri : mesh.triangles) {
    std::array<bool, 3> above{};
    int n_above = 0;
    for (int k = 0; k < 3; ++k) {
      above[k] = u[tri[k]] >= c;
      n_above += above[k] ? 1 : 0;
    }
    if (n_above == 0 || n_above == 3) continue;
    std::array<Key, 2> keys{};
    int found = 0;
    for (int k = 0; k < 3; ++k) {
      const int i = tri[k];
      const int j = tri[(k + 1) % 3];
      if (above[k] == above[(k + 1) % 3]) continue;
      // Orient from below (lo) to above (hi).
      const int lo = above[k] ? j : i;
      const int hi = above[k] ? i : j;
      const double s = (c - u[lo]) / (u[hi] - u[lo]);
      Key key;
      Eigen::Vector2d p;
      if (u[hi] == c) {
        key = node_key(hi);
        p = mesh.nodes[hi];
      } else {
        key = edge_key(lo, hi);
        p = mesh.nodes[lo] + s * (mesh.nodes[hi] - mesh.nodes[lo]);
      }
      points.emplace(key, p);
      keys[found++] = key;
    }
    if (found == 2 && keys[0] != keys[1]) seg_keys.push_back(keys);
  }

  for (const auto& k : seg_keys) {
    const Eigen::Vector2d& a = points.at(k[0]);
    const Eigen::Vector2d& b = points.at(k[1]);
    out.segments.push_back({a, b});
    out.length += metric_segment_length(a, b, cone);
  }

  // Chain segments into polylines: open chains first (start at degree-1
  // points), then closed loops.
  std::unordered_map<Key, std::vector<int>> incident;
  for (std::size_t s = 0; s < seg_keys.size(); ++s) {
    incident[seg_keys[s][0]].push_back(static_cast<int>(s));
    incident[seg_keys[s][1]].push_back(static_cast<int>(s));
  }
  std::vector<char> used(seg_keys.size(), 0);
  const auto walk = [&](Key start, int first_seg) {
    Polyline line;
    line.points.push_back(points.at(start));
    Key cur = start;
    int seg = first_seg;
    while (seg >= 0) {
      used[seg] = 1;
      const Key next = seg_keys[seg][0] == cur ? seg_keys[seg][1] : seg_keys[seg][0];
      line.points.push_back(points.at(next));
      cur = next;
      seg = -1;
      for (int s : incident[cur]) {
        if (!used[s]) {
          seg = s;
          break;
        }
      }
    }
    line.closed = cur == start && line.points.size() > 2;
    if (line.closed) line.points.pop_back();
    out.polylines.push_back(std::move(line));
  };
  // Deterministic order: iterate segments, not the hash map.
  for (std::size_t s = 0; s < seg_keys.size(); ++s) {
    for (Key k : seg_keys[s]) {
      if (!used[s] && incident[k].size() == 1) walk(k, static_cast<int>(s));
    }
  }
  for (std::size_t s = 0; s < seg_keys.size(); ++s) {
    if (!used[s]) walk(seg_keys[s][0], static_cast<int>(s));
  }
  return out;
}

}  // namespace conecrit
