#include "conecrit/checkpoint.hpp"

#include "conecrit/geometry.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace conecrit {

namespace fs = std::filesystem;

void save_solution(const fs::path& path, const Solution& s) {
  std::ofstream os(path);
  if (!os) throw CheckpointError("cannot write " + path.string());
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "mesh " << s.mesh_path << '\n';
  os << s.m << ' ' << s.eps << ' ' << s.h << ' ' << s.a << ' ' << s.lambda << ' ' << s.energy << ' ' << s.index
     << '\n';
  for (Eigen::Index i = 0; i < s.u.size(); ++i) os << s.u[i] << '\n';
  if (!os) throw CheckpointError("write failed for " + path.string());
}

Solution load_solution(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw CheckpointError("cannot read " + path.string());
  Solution s;
  std::string line;
  if (!std::getline(is, line) || line.rfind("mesh ", 0) != 0) {
    throw CheckpointError(path.string() + ": first line must be 'mesh <path>'");
  }
  s.mesh_path = line.substr(5);
  fs::path mesh_file(s.mesh_path);
  if (mesh_file.is_relative()) mesh_file = path.parent_path() / mesh_file;
  try {
    s.mesh = std::make_shared<const Mesh>(load_mesh(mesh_file.string()));
  } catch (const std::exception& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }

  if (!std::getline(is, line)) throw CheckpointError(path.string() + ": missing parameter line");
  std::istringstream ps(line);
  if (!(ps >> s.m >> s.eps >> s.h >> s.a >> s.lambda >> s.energy >> s.index)) {
    throw CheckpointError(path.string() + ": parameter line must be 'm eps h a lambda energy index'");
  }

  const Eigen::Index n = s.mesh->node_count();
  s.u.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(is >> s.u[i])) {
      throw CheckpointError(path.string() + ": expected " + std::to_string(n) + " nodal values, got " +
                            std::to_string(i));
    }
  }
  double extra;
  if (is >> extra) throw CheckpointError(path.string() + ": more nodal values than mesh nodes");
  return s;
}

std::vector<ContourFile> export_contours(const Solution& s, const std::vector<double>& levels,
                                         const fs::path& directory, const std::string& stem) {
  fs::create_directories(directory);
  const ConeParams cone = s.cone();
  std::vector<ContourFile> out;
  for (double c : levels) {
    const LevelSet ls = level_set_length(s.u, c, *s.mesh, cone);
    std::ostringstream name;
    name << stem << "_level_" << c << ".txt";
    ContourFile file{c, ls.length, ls.polylines.size(), directory / name.str()};
    std::ofstream os(file.path);
    if (!os) throw CheckpointError("cannot write " + file.path.string());
    os << std::setprecision(12);
    os << "# level " << c << " length " << ls.length << " polylines " << ls.polylines.size() << '\n';
    for (std::size_t k = 0; k < ls.polylines.size(); ++k) {
      const Polyline& line = ls.polylines[k];
      os << "polyline " << k << ' ' << (line.closed ? "closed" : "open") << ' ' << line.points.size() << '\n';
      for (const auto& p : line.points) {
        // Marching-triangle points lie on mesh edges, inside the closed disk.
        const Eigen::Vector3d q = cone_map(cone, p.x(), p.y());
        os << q.x() << ' ' << q.y() << ' ' << q.z() << '\n';
      }
    }
    out.push_back(file);
  }
  return out;
}

}  // namespace conecrit
