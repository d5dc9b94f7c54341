#include "conecrit/geometry.hpp"

#include <numbers>

namespace conecrit {

namespace {

// Periodic trapezoid rule; spectrally accurate for the smooth periodic
// integrands used here.
template <typename F>
double periodic_integral(F&& f, int n) {
  const double dt = 2.0 * std::numbers::pi / n;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += f(i * dt);
  return sum * dt;
}

}  // namespace

double surface_area(const ConeParams& p) {
  p.validate();
  // Integrate sqrt(det) r dr dtheta over the disk; the density depends on
  // theta only.
  return 0.5 * periodic_integral([&](double t) { return area_density(p, t); }, 4096);
}

double cone_angle(const ConeParams& p) {
  p.validate();
  if (p.a == 1.0) return 2.0 * std::numbers::pi / p.slant_height();
  const auto speed = [&](double t) {
    const Eigen::Vector3d v(p.a * std::cos(t), std::sin(t), -p.h);
    const Eigen::Vector3d dv(-p.a * std::sin(t), std::cos(t), 0.0);
    const double n = v.norm();
    const Eigen::Vector3d d = v / n;
    return (dv - dv.dot(d) * d).norm() / n;
  };
  return periodic_integral(speed, 4096);
}

}  // namespace conecrit
