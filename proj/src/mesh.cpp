#include "conecrit/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace conecrit {

namespace {

double cross2(const Eigen::Vector2d& u, const Eigen::Vector2d& v) { return u.x() * v.y() - u.y() * v.x(); }

std::uint64_t edge_key(int i, int j) {
  if (i > j) std::swap(i, j);
  return (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint32_t>(j);
}

struct EdgeTable {
  // Edge ids per triangle, edge k is opposite local vertex k.
  std::vector<std::array<int, 3>> tri_edges;
  std::vector<std::array<int, 2>> edge_nodes;
  std::vector<std::array<int, 2>> edge_tris;
};

EdgeTable build_edges(const Mesh& mesh) {
  EdgeTable table;
  table.tri_edges.resize(mesh.triangles.size());
  std::unordered_map<std::uint64_t, int> ids;
  ids.reserve(mesh.triangles.size() * 2);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      const int i = tri[(k + 1) % 3];
      const int j = tri[(k + 2) % 3];
      const auto key = edge_key(i, j);
      auto [it, inserted] = ids.try_emplace(key, static_cast<int>(table.edge_nodes.size()));
      if (inserted) {
        table.edge_nodes.push_back({std::min(i, j), std::max(i, j)});
        table.edge_tris.push_back({static_cast<int>(t), -1});
      } else {
        table.edge_tris[it->second][1] = static_cast<int>(t);
      }
      table.tri_edges[t][k] = it->second;
    }
  }
  return table;
}

double segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  double s = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return (a + s * ab - p).norm();
}

void orient_ccw(Mesh& mesh) {
  for (auto& tri : mesh.triangles) {
    const auto& p0 = mesh.nodes[tri[0]];
    const auto& p1 = mesh.nodes[tri[1]];
    const auto& p2 = mesh.nodes[tri[2]];
    if (cross2(p1 - p0, p2 - p0) < 0.0) std::swap(tri[1], tri[2]);
  }
}

}  // namespace

double Mesh::signed_area(Eigen::Index t) const {
  const auto& tri = triangles[t];
  return 0.5 * cross2(nodes[tri[1]] - nodes[tri[0]], nodes[tri[2]] - nodes[tri[0]]);
}

double Mesh::diameter(Eigen::Index t) const {
  const auto& tri = triangles[t];
  return std::max({(nodes[tri[0]] - nodes[tri[1]]).norm(), (nodes[tri[1]] - nodes[tri[2]]).norm(),
                   (nodes[tri[2]] - nodes[tri[0]]).norm()});
}

double Mesh::total_area() const {
  double sum = 0.0;
  for (Eigen::Index t = 0; t < triangle_count(); ++t) sum += signed_area(t);
  return sum;
}

double Mesh::max_edge_length() const {
  double m = 0.0;
  for (Eigen::Index t = 0; t < triangle_count(); ++t) m = std::max(m, diameter(t));
  return m;
}

int Mesh::origin_node() const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].squaredNorm() == 0.0) return static_cast<int>(i);
  }
  return -1;
}

void Mesh::update_boundary() {
  const EdgeTable table = build_edges(*this);
  std::vector<char> on_boundary(nodes.size(), 0);
  for (std::size_t e = 0; e < table.edge_nodes.size(); ++e) {
    if (table.edge_tris[e][1] < 0) {
      on_boundary[table.edge_nodes[e][0]] = 1;
      on_boundary[table.edge_nodes[e][1]] = 1;
    }
  }
  boundary_nodes.clear();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (on_boundary[i]) boundary_nodes.push_back(static_cast<int>(i));
  }
}

void Mesh::check() const {
  const auto n = static_cast<int>(nodes.size());
  for (Eigen::Index t = 0; t < triangle_count(); ++t) {
    const auto& tri = triangles[t];
    for (int k = 0; k < 3; ++k) {
      if (tri[k] < 0 || tri[k] >= n) throw MeshError("mesh: triangle index out of range");
    }
    if (!(signed_area(t) > 0.0)) {
      throw MeshError("mesh: degenerate or inverted triangle " + std::to_string(t));
    }
  }
}

Mesh generate_disk_mesh(double target_h, std::size_t element_cap) {
  if (!(target_h > 0.0 && target_h < 1.0)) {
    throw MeshError("generate_disk_mesh: target_h must lie in (0, 1)");
  }
  // Spacing below target_h so that ring-to-ring diagonals stay within it.
  const double spacing = 0.7 * target_h;
  const int rings = static_cast<int>(std::ceil(1.0 / spacing));
  const double dr = 1.0 / rings;

  std::vector<int> quarter(rings + 1, 0);
  std::size_t estimate = 0;
  for (int k = 1; k <= rings; ++k) {
    quarter[k] = std::max(1, static_cast<int>(std::ceil(0.5 * std::numbers::pi * k * dr / spacing)));
    estimate += 4 * static_cast<std::size_t>(quarter[k] + quarter[k - 1]);
  }
  if (estimate > element_cap) {
    throw MeshError("generate_disk_mesh: element cap exceeded (" + std::to_string(estimate) + ")");
  }

  Mesh mesh;
  mesh.domain = Domain::disk;
  mesh.nodes.emplace_back(0.0, 0.0);

  // ring_start[k] is the index of node (ring k, position 0); ring k holds
  // 4 * quarter[k] nodes ordered counter-clockwise from the positive x axis.
  std::vector<int> ring_start(rings + 1, 0);
  for (int k = 1; k <= rings; ++k) {
    const int q = quarter[k];
    const double r = (k == rings) ? 1.0 : k * dr;
    std::vector<Eigen::Vector2d> first(q + 1);
    for (int j = 0; j <= q; ++j) {
      const double t = 0.5 * std::numbers::pi * j / q;
      first[j] = Eigen::Vector2d(r * std::cos(t), r * std::sin(t));
    }
    first[0] = Eigen::Vector2d(r, 0.0);
    first[q] = Eigen::Vector2d(0.0, r);
    ring_start[k] = static_cast<int>(mesh.nodes.size());
    for (int i = 0; i < 4 * q; ++i) {
      const int quad = i / q;
      const int j = i % q;
      switch (quad) {
        case 0: mesh.nodes.push_back(first[j]); break;
        case 1: mesh.nodes.emplace_back(-first[q - j].x(), first[q - j].y()); break;
        case 2: mesh.nodes.emplace_back(-first[j].x(), -first[j].y()); break;
        default: mesh.nodes.emplace_back(first[q - j].x(), -first[q - j].y()); break;
      }
    }
  }
  const auto node = [&](int k, int i) {
    if (k == 0) return 0;
    const int n = 4 * quarter[k];
    return ring_start[k] + ((i % n) + n) % n;
  };

  // Triangulate the first quadrant as index pairs (ring, position), then
  // mirror into the other three quadrants.
  struct LocalTri {
    std::array<std::pair<int, int>, 3> v;
  };
  std::vector<LocalTri> quad;
  for (int j = 0; j < quarter[1]; ++j) quad.push_back({{{{0, 0}, {1, j}, {1, j + 1}}}});
  for (int k = 1; k < rings; ++k) {
    const int qi = quarter[k];
    const int qo = quarter[k + 1];
    int a = 0;
    int b = 0;
    while (a < qi || b < qo) {
      const bool advance_inner =
          (b >= qo) || (a < qi && static_cast<double>(a + 1) / qi <= static_cast<double>(b + 1) / qo);
      if (advance_inner) {
        quad.push_back({{{{k, a}, {k + 1, b}, {k, a + 1}}}});
        ++a;
      } else {
        quad.push_back({{{{k, a}, {k + 1, b}, {k + 1, b + 1}}}});
        ++b;
      }
    }
  }
  // Position mapping of first-quadrant index j on ring k into quadrant Q.
  const auto mapped = [&](int quad_id, int k, int j) {
    if (k == 0) return 0;
    const int q = quarter[k];
    switch (quad_id) {
      case 0: return node(k, j);
      case 1: return node(k, 2 * q - j);
      case 2: return node(k, 2 * q + j);
      default: return node(k, 4 * q - j);
    }
  };
  for (int quad_id = 0; quad_id < 4; ++quad_id) {
    for (const auto& lt : quad) {
      mesh.triangles.emplace_back(mapped(quad_id, lt.v[0].first, lt.v[0].second),
                                  mapped(quad_id, lt.v[1].first, lt.v[1].second),
                                  mapped(quad_id, lt.v[2].first, lt.v[2].second));
    }
  }
  orient_ccw(mesh);
  mesh.update_boundary();
  mesh.check();
  return mesh;
}

Mesh generate_rectangle_mesh(double x0, double x1, double y0, double y1, int nx, int ny) {
  if (nx < 1 || ny < 1 || !(x1 > x0) || !(y1 > y0)) {
    throw MeshError("generate_rectangle_mesh: invalid extent or resolution");
  }
  Mesh mesh;
  mesh.domain = Domain::rectangle;
  const double hx = (x1 - x0) / nx;
  const double hy = (y1 - y0) / ny;
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) mesh.nodes.emplace_back(x0 + i * hx, y0 + j * hy);
  }
  const int grid = (nx + 1) * (ny + 1);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) mesh.nodes.emplace_back(x0 + (i + 0.5) * hx, y0 + (j + 0.5) * hy);
  }
  const auto g = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int c = grid + j * nx + i;
      mesh.triangles.emplace_back(g(i, j), g(i + 1, j), c);
      mesh.triangles.emplace_back(g(i + 1, j), g(i + 1, j + 1), c);
      mesh.triangles.emplace_back(g(i + 1, j + 1), g(i, j + 1), c);
      mesh.triangles.emplace_back(g(i, j + 1), g(i, j), c);
    }
  }
  mesh.update_boundary();
  mesh.check();
  return mesh;
}

Mesh refine(const Mesh& mesh, const Eigen::VectorXd& indicator, double fraction, const RefineOptions& options) {
  const auto nt = mesh.triangles.size();
  if (static_cast<std::size_t>(indicator.size()) != nt) {
    throw MeshError("refine: indicator length must equal the triangle count");
  }
  if (!(fraction > 0.0 && fraction <= 1.0)) throw MeshError("refine: fraction must lie in (0, 1]");

  const EdgeTable table = build_edges(mesh);
  const auto ne = table.edge_nodes.size();
  std::vector<double> edge_len(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    edge_len[e] = (mesh.nodes[table.edge_nodes[e][0]] - mesh.nodes[table.edge_nodes[e][1]]).norm();
  }
  // Local index of the longest edge; ties resolved by the node pair.
  std::vector<int> longest(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    int best = 0;
    for (int k = 1; k < 3; ++k) {
      const int e = table.tri_edges[t][k];
      const int eb = table.tri_edges[t][best];
      if (edge_len[e] > edge_len[eb] ||
          (edge_len[e] == edge_len[eb] && table.edge_nodes[e] < table.edge_nodes[eb])) {
        best = k;
      }
    }
    longest[t] = best;
  }

  std::vector<int> order(nt);
  std::iota(order.begin(), order.end(), 0);
  const auto count = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(fraction * nt)), 1, nt);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return indicator[i] > indicator[j]; });

  std::vector<char> marked(ne, 0);
  std::vector<int> queue;
  for (std::size_t i = 0; i < count; ++i) {
    const int t = order[i];
    const int e = table.tri_edges[t][longest[t]];
    if (!marked[e]) {
      marked[e] = 1;
      for (int s : table.edge_tris[e]) {
        if (s >= 0) queue.push_back(s);
      }
    }
  }
  // Closure: any triangle with a marked edge must bisect its longest edge.
  while (!queue.empty()) {
    const int t = queue.back();
    queue.pop_back();
    const int e = table.tri_edges[t][longest[t]];
    if (marked[e]) continue;
    marked[e] = 1;
    for (int s : table.edge_tris[e]) {
      if (s >= 0) queue.push_back(s);
    }
  }

  Mesh out;
  out.domain = mesh.domain;
  out.generation = mesh.generation + 1;
  out.nodes = mesh.nodes;
  std::vector<int> midpoint(ne, -1);
  for (std::size_t e = 0; e < ne; ++e) {
    if (!marked[e]) continue;
    Eigen::Vector2d p = 0.5 * (mesh.nodes[table.edge_nodes[e][0]] + mesh.nodes[table.edge_nodes[e][1]]);
    const bool boundary = table.edge_tris[e][1] < 0;
    if (boundary && mesh.domain == Domain::disk && options.project_boundary) p.normalize();
    midpoint[e] = static_cast<int>(out.nodes.size());
    out.nodes.push_back(p);
  }

  for (std::size_t t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    const int l = longest[t];
    const int e_bc = table.tri_edges[t][l];
    if (!marked[e_bc]) {
      out.triangles.push_back(tri);
      continue;
    }
    // Rotate so the longest edge is BC, opposite A.
    const int A = tri[l];
    const int B = tri[(l + 1) % 3];
    const int C = tri[(l + 2) % 3];
    const int e_ca = table.tri_edges[t][(l + 1) % 3];
    const int e_ab = table.tri_edges[t][(l + 2) % 3];
    const int M = midpoint[e_bc];
    if (marked[e_ab]) {
      const int N = midpoint[e_ab];
      out.triangles.emplace_back(A, N, M);
      out.triangles.emplace_back(N, B, M);
    } else {
      out.triangles.emplace_back(A, B, M);
    }
    if (marked[e_ca]) {
      const int P = midpoint[e_ca];
      out.triangles.emplace_back(A, M, P);
      out.triangles.emplace_back(P, M, C);
    } else {
      out.triangles.emplace_back(A, M, C);
    }
  }
  if (out.triangles.size() > options.element_cap) {
    throw MeshError("refine: element cap exceeded (" + std::to_string(out.triangles.size()) + ")");
  }
  out.update_boundary();
  out.check();
  return out;
}

Eigen::Vector3d barycentric(const Mesh& mesh, Eigen::Index t, const Eigen::Vector2d& p) {
  const auto& tri = mesh.triangles[t];
  const Eigen::Vector2d& a = mesh.nodes[tri[0]];
  const Eigen::Vector2d& b = mesh.nodes[tri[1]];
  const Eigen::Vector2d& c = mesh.nodes[tri[2]];
  const double det = cross2(b - a, c - a);
  const double l1 = cross2(p - a, c - a) / det;
  const double l2 = cross2(b - a, p - a) / det;
  return {1.0 - l1 - l2, l1, l2};
}

TriangleLocator::TriangleLocator(const Mesh& mesh) : mesh_(mesh) {
  Eigen::Vector2d lo = Eigen::Vector2d::Constant(std::numeric_limits<double>::max());
  Eigen::Vector2d hi = -lo;
  for (const auto& p : mesh.nodes) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double pad = 1e-9 + 1e-6 * (hi - lo).norm();
  lo_ = lo.array() - pad;
  hi.array() += pad;
  const double cells = std::max(1.0, std::sqrt(static_cast<double>(mesh.triangles.size())));
  nx_ = std::max(1, static_cast<int>(cells));
  ny_ = nx_;
  cell_ = Eigen::Vector2d((hi.x() - lo_.x()) / nx_, (hi.y() - lo_.y()) / ny_);
  buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    Eigen::Vector2d tlo = mesh.nodes[mesh.triangles[t][0]];
    Eigen::Vector2d thi = tlo;
    for (int k = 1; k < 3; ++k) {
      tlo = tlo.cwiseMin(mesh.nodes[mesh.triangles[t][k]]);
      thi = thi.cwiseMax(mesh.nodes[mesh.triangles[t][k]]);
    }
    const int i0 = std::clamp(static_cast<int>((tlo.x() - lo_.x()) / cell_.x()), 0, nx_ - 1);
    const int i1 = std::clamp(static_cast<int>((thi.x() - lo_.x()) / cell_.x()), 0, nx_ - 1);
    const int j0 = std::clamp(static_cast<int>((tlo.y() - lo_.y()) / cell_.y()), 0, ny_ - 1);
    const int j1 = std::clamp(static_cast<int>((thi.y() - lo_.y()) / cell_.y()), 0, ny_ - 1);
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) buckets_[static_cast<std::size_t>(j) * nx_ + i].push_back(static_cast<int>(t));
    }
  }
}

PointLocation TriangleLocator::locate(const Eigen::Vector2d& p) const {
  constexpr double kInsideTol = 1e-12;
  const int ci = std::clamp(static_cast<int>((p.x() - lo_.x()) / cell_.x()), 0, nx_ - 1);
  const int cj = std::clamp(static_cast<int>((p.y() - lo_.y()) / cell_.y()), 0, ny_ - 1);
  for (int t : buckets_[static_cast<std::size_t>(cj) * nx_ + ci]) {
    const Eigen::Vector3d bc = barycentric(mesh_, t, p);
    if (bc.minCoeff() >= -kInsideTol) return {t, bc, true};
  }
  // Nearest triangle over growing shells of buckets.
  PointLocation best;
  double best_dist = std::numeric_limits<double>::max();
  const int max_shell = std::max(nx_, ny_);
  for (int shell = 0; shell <= max_shell; ++shell) {
    for (int j = cj - shell; j <= cj + shell; ++j) {
      for (int i = ci - shell; i <= ci + shell; ++i) {
        if (i < 0 || j < 0 || i >= nx_ || j >= ny_) continue;
        if (std::max(std::abs(i - ci), std::abs(j - cj)) != shell) continue;
        for (int t : buckets_[static_cast<std::size_t>(j) * nx_ + i]) {
          const auto& tri = mesh_.triangles[t];
          double d = std::numeric_limits<double>::max();
          for (int k = 0; k < 3; ++k) {
            d = std::min(d, segment_distance(p, mesh_.nodes[tri[k]], mesh_.nodes[tri[(k + 1) % 3]]));
          }
          if (d < best_dist) {
            best_dist = d;
            best.triangle = t;
          }
        }
      }
    }
    if (best.triangle >= 0 && best_dist < (shell - 1) * std::min(cell_.x(), cell_.y())) break;
  }
  if (best.triangle >= 0) best.barycentric = barycentric(mesh_, best.triangle, p);
  return best;
}

Eigen::VectorXd transfer(const Eigen::VectorXd& u, const Mesh& from, const Mesh& to) {
  if (u.size() != from.node_count()) throw MeshError("transfer: field length must equal the source node count");
  const TriangleLocator locator(from);
  Eigen::VectorXd out(to.node_count());
  for (Eigen::Index i = 0; i < to.node_count(); ++i) {
    const auto loc = locator.locate(to.nodes[i]);
    if (loc.triangle < 0) throw MeshError("transfer: empty source mesh");
    const auto& tri = from.triangles[loc.triangle];
    out[i] = loc.barycentric[0] * u[tri[0]] + loc.barycentric[1] * u[tri[1]] + loc.barycentric[2] * u[tri[2]];
  }
  return out;
}

void write_mesh(std::ostream& os, const Mesh& mesh) {
  os << "nodes " << mesh.nodes.size() << " triangles " << mesh.triangles.size() << '\n';
  os << std::setprecision(17);
  for (const auto& p : mesh.nodes) os << p.x() << ' ' << p.y() << '\n';
  for (const auto& t : mesh.triangles) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

Mesh read_mesh(std::istream& is) {
  std::string w1, w2;
  std::size_t n = 0, nt = 0;
  if (!(is >> w1 >> n >> w2 >> nt) || w1 != "nodes" || w2 != "triangles") {
    throw MeshError("read_mesh: bad header, expected `nodes N triangles T`");
  }
  Mesh mesh;
  mesh.nodes.resize(n);
  mesh.triangles.resize(nt);
  for (auto& p : mesh.nodes) {
    if (!(is >> p.x() >> p.y())) throw MeshError("read_mesh: truncated node list");
  }
  for (auto& t : mesh.triangles) {
    if (!(is >> t[0] >> t[1] >> t[2])) throw MeshError("read_mesh: truncated triangle list");
  }
  // Infer the domain: a disk mesh has every boundary node on the unit circle.
  mesh.update_boundary();
  mesh.domain = Domain::disk;
  for (int b : mesh.boundary_nodes) {
    if (std::abs(mesh.nodes[b].squaredNorm() - 1.0) > 1e-9) {
      mesh.domain = Domain::rectangle;
      break;
    }
  }
  mesh.check();
  return mesh;
}

void save_mesh(const std::string& path, const Mesh& mesh) {
  std::ofstream os(path);
  if (!os) throw MeshError("save_mesh: cannot open " + path);
  write_mesh(os, mesh);
}

Mesh load_mesh(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw MeshError("load_mesh: cannot open " + path);
  return read_mesh(is);
}

}  // namespace conecrit
