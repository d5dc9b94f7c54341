#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

namespace conecrit {

/// Truncated elliptic cone over the unit disk: base ellipse with semi-axes
/// a (along x) and 1 (along y) at z = 0, tip at (0, 0, h).
struct ConeParams {
  double h = 0.0;
  double a = 1.0;

  void validate() const {
    if (!(h >= 0.0) || !(a >= 1.0)) {
      throw std::invalid_argument("ConeParams: require h >= 0 and a >= 1");
    }
  }

  double slant_height() const { return std::sqrt(1.0 + h * h); }
};

/// First fundamental form of the cone parameterization at one point.
template <typename Scalar>
struct MetricSample {
  Scalar E{};
  Scalar F{};
  Scalar G{};
  Scalar det{};

  Eigen::Matrix<Scalar, 2, 2> tensor() const {
    Eigen::Matrix<Scalar, 2, 2> g;
    g << E, F, F, G;
    return g;
  }

  /// sqrt(det) * g^{-1}, the coefficient matrix of the divergence-form
  /// Laplace-Beltrami operator in parameter coordinates.
  Eigen::Matrix<Scalar, 2, 2> diffusion() const {
    using std::sqrt;
    const Scalar s = Scalar(1) / sqrt(det);
    Eigen::Matrix<Scalar, 2, 2> c;
    c << G * s, -F * s, -F * s, E * s;
    return c;
  }
};

/// Embedding (x, y) -> (a x, y, h (1 - r)). Throws for points outside the
/// closed unit disk.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> cone_map(const ConeParams& p, Scalar x, Scalar y) {
  using std::sqrt;
  const Scalar r2 = x * x + y * y;
  if (r2 > Scalar(1) + Scalar(1e-12)) {
    throw std::domain_error("cone_map: point outside the unit disk");
  }
  Eigen::Matrix<Scalar, 3, 1> q;
  q << Scalar(p.a) * x, y, Scalar(p.h) * (Scalar(1) - sqrt(r2));
  return q;
}

/// Metric of the cone in parameter coordinates. For h > 0 it is singular at
/// the origin and callers evaluate it only at points with r > 0.
template <typename Scalar>
MetricSample<Scalar> metric(const ConeParams& p, Scalar x, Scalar y) {
  const Scalar a2 = Scalar(p.a * p.a);
  if (p.h == 0.0) return {a2, Scalar(0), Scalar(1), a2};
  const Scalar r2 = x * x + y * y;
  if (!(r2 > Scalar(0))) {
    throw std::domain_error("metric: undefined at the cone tip");
  }
  const Scalar h2 = Scalar(p.h * p.h);
  MetricSample<Scalar> m;
  m.E = a2 + h2 * x * x / r2;
  m.F = h2 * x * y / r2;
  m.G = Scalar(1) + h2 * y * y / r2;
  // Closed form of E G - F^2; avoids cancellation.
  m.det = a2 + h2 * (x * x + a2 * y * y) / r2;
  return m;
}

/// Area element sqrt(det g) as a function of the polar angle only (the
/// metric is homogeneous of degree zero in (x, y)).
inline double area_density(const ConeParams& p, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return std::sqrt(p.a * p.a + p.h * p.h * (c * c + p.a * p.a * s * s));
}

/// Lateral surface area of the cone.
double surface_area(const ConeParams& p);

/// Angle of the conical singularity: length of the curve traced on the
/// unit sphere by the generator directions through the tip.
double cone_angle(const ConeParams& p);

}  // namespace conecrit
