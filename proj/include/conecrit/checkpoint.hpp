#pragma once

#include "conecrit/fem.hpp"
#include "conecrit/mesh.hpp"

#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace conecrit {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A converged nodal field with its parameters and mesh.
struct Solution {
  std::shared_ptr<const Mesh> mesh;
  std::string mesh_path;  ///< as written in the file (relative to it)
  double m = 0.0;
  double eps = 0.0;
  double h = 0.0;
  double a = 1.0;
  double lambda = 0.0;
  double energy = 0.0;
  int index = -1;
  Eigen::VectorXd u;

  ConeParams cone() const { return ConeParams{h, a}; }
};

/// Writes `mesh <mesh_path>`, the line `m eps h a lambda energy index` and
/// one nodal value per line. `mesh_path` is stored verbatim.
void save_solution(const std::filesystem::path& path, const Solution& s);

/// Reads a solution and its mesh; a relative mesh path is resolved against
/// the checkpoint's directory.
Solution load_solution(const std::filesystem::path& path);

struct ContourFile {
  double level = 0.0;
  double length = 0.0;
  std::size_t polylines = 0;
  std::filesystem::path path;
};

/// Level lines of the solution mapped into 3-space, one file per level.
/// Each file starts with `# level c length L polylines P`; every polyline
/// follows as `polyline k open|closed n` and n lines `X Y Z`.
std::vector<ContourFile> export_contours(const Solution& s, const std::vector<double>& levels,
                                         const std::filesystem::path& directory, const std::string& stem);

}  // namespace conecrit
