#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace conecrit {

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameter domain of a mesh. Disk meshes project new boundary nodes back
/// onto the unit circle; rectangle meshes are the flat calibration domain.
enum class Domain { disk, rectangle };

inline constexpr std::size_t kDefaultElementCap = 200000;

struct Mesh {
  std::vector<Eigen::Vector2d> nodes;
  std::vector<Eigen::Vector3i> triangles;
  std::vector<int> boundary_nodes;
  int generation = 0;
  Domain domain = Domain::disk;

  Eigen::Index node_count() const { return static_cast<Eigen::Index>(nodes.size()); }
  Eigen::Index triangle_count() const { return static_cast<Eigen::Index>(triangles.size()); }

  /// Signed parameter-plane area of triangle t.
  double signed_area(Eigen::Index t) const;
  double diameter(Eigen::Index t) const;
  double total_area() const;
  double max_edge_length() const;

  /// Index of the node at the origin, or -1.
  int origin_node() const;

  /// Recomputes boundary_nodes from the edge structure.
  void update_boundary();

  /// Throws MeshError on non-positive triangles or out-of-range indices.
  void check() const;
};

/// Conforming, mirror-symmetric triangulation of the unit disk built from
/// concentric rings. The origin is a node. Throws if the element count would
/// exceed `element_cap`.
Mesh generate_disk_mesh(double target_h, std::size_t element_cap = kDefaultElementCap);

/// Structured criss-cross triangulation of [x0,x1] x [y0,y1].
Mesh generate_rectangle_mesh(double x0, double x1, double y0, double y1, int nx, int ny);

struct RefineOptions {
  std::size_t element_cap = kDefaultElementCap;
  bool project_boundary = true;
};

/// Marks the top `fraction` of triangles by `indicator` and refines them by
/// longest-edge bisection with conformity closure. New disk boundary nodes
/// are projected to the unit circle unless disabled. The node set of the
/// input is preserved (same indices); `generation` increments.
Mesh refine(const Mesh& mesh, const Eigen::VectorXd& indicator, double fraction,
            const RefineOptions& options = {});

/// Piecewise-linear interpolation of a nodal field from one mesh onto the
/// nodes of another. Points outside every source triangle use linear
/// extrapolation from the nearest triangle.
Eigen::VectorXd transfer(const Eigen::VectorXd& u, const Mesh& from, const Mesh& to);

/// Locates the triangle containing `p` (within tolerance) and returns its
/// index with barycentric coordinates; falls back to the nearest triangle.
struct PointLocation {
  Eigen::Index triangle = -1;
  Eigen::Vector3d barycentric = Eigen::Vector3d::Zero();
  bool inside = false;
};

class TriangleLocator {
 public:
  explicit TriangleLocator(const Mesh& mesh);
  PointLocation locate(const Eigen::Vector2d& p) const;

 private:
  const Mesh& mesh_;
  Eigen::Vector2d lo_;
  Eigen::Vector2d cell_;
  int nx_ = 1;
  int ny_ = 1;
  std::vector<std::vector<int>> buckets_;
};

Eigen::Vector3d barycentric(const Mesh& mesh, Eigen::Index t, const Eigen::Vector2d& p);

/// Plain-text mesh checkpoint: `nodes N triangles T`, then N lines `x y`,
/// then T lines `i j k` (0-based).
void write_mesh(std::ostream& os, const Mesh& mesh);
Mesh read_mesh(std::istream& is);
void save_mesh(const std::string& path, const Mesh& mesh);
Mesh load_mesh(const std::string& path);

}  // namespace conecrit
