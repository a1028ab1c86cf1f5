#include "geonorm/assets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace geonorm::assets {

namespace {

constexpr double kPi = std::numbers::pi;

// (1 - q)^3 for q = |x - c|^2 / R^2 < 1, with an elliptical metric.
double bump(const Vec2& x, const Vec2& c, double rx, double ry, double angle) {
  const Vec2 d = x - c;
  const double ca = std::cos(angle), sa = std::sin(angle);
  const double u = (ca * d.x() + sa * d.y()) / rx;
  const double v = (-sa * d.x() + ca * d.y()) / ry;
  const double q = u * u + v * v;
  if (q >= 1.0) return 0.0;
  const double s = 1.0 - q;
  return s * s * s;
}

double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

Raster normalized_peak(Raster r) {
  const double p = r.peak();
  return p > 0.0 ? r.scaled(1.0 / p) : r;
}

Vec3 unit(double colat_deg, double lon_deg) {
  const double t = colat_deg * kPi / 180.0, p = lon_deg * kPi / 180.0;
  return {std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t)};
}

}  // namespace

Raster blob(int n) {
  Raster r(OutGeometry::centered(n, n, 1.0));
  const double s = n / 256.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Vec2 x = r.coord(i, j) / s;
      const double v = bump(x, {-12.0, 8.0}, 32.0, 20.0, 0.4) +
                       0.8 * bump(x, {30.0, -4.0}, 15.0, 12.0, 0.3) +
                       0.6 * bump(x, {0.0, -32.0}, 12.0, 9.0, -0.2);
      r.set(i, j, v);
    }
  return normalized_peak(r);
}

Raster cross(int n) {
  Raster r(OutGeometry::centered(n, n, 1.0));
  const double s = n / 256.0;
  auto arm = [s](const Vec2& x) {
    // Arm along +x1, slightly offset so the figure is not mirror symmetric.
    const double along = x.x() / s, across = x.y() / s - 3.0;
    return smoothstep((70.0 - along) / 6.0) * smoothstep((along + 6.0) / 6.0) *
           smoothstep((8.0 - std::abs(across)) / 4.0);
  };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Vec2 x = r.coord(i, j);
      std::array<double, 4> v{arm(x), arm({x.y(), -x.x()}), arm(-x),
                              arm({-x.y(), x.x()})};
      // Sorted so all four rotated copies of a pixel sum identically.
      std::sort(v.begin(), v.end());
      r.set(i, j, std::min(1.0, ((v[0] + v[1]) + v[2]) + v[3]));
    }
  return normalized_peak(r);
}

Raster disk(int n, double radius) {
  Raster r(OutGeometry::centered(n, n, 1.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double rho = r.coord(i, j).norm();
      r.set(i, j, smoothstep((radius - rho) / 4.0 + 0.5));
    }
  return r;
}

Raster gaussian(int n, double sigma, double pitch) {
  Raster r(OutGeometry::centered(n, n, pitch));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      r.set(i, j,
            std::exp(-r.coord(i, j).squaredNorm() / (2.0 * sigma * sigma)));
  return r;
}

Raster ring(int n, double rho, double width, double pitch) {
  Raster r(OutGeometry::centered(n, n, pitch));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double d = (r.coord(i, j).norm() - rho) / width;
      r.set(i, j, std::exp(-0.5 * d * d));
    }
  return r;
}

double angular_bump(const Vec3& n, const Vec3& center, double radius) {
  const double ang = std::acos(std::clamp(n.dot(center), -1.0, 1.0));
  if (ang >= radius) return 0.0;
  const double q = ang / radius;
  const double s = 1.0 - q * q;
  return s * s * s;
}

SphericalImage sphere_blobs(int n_lat, int n_lon) {
  SphericalImage img(n_lat, n_lon, 1.0);
  const Vec3 a = unit(60.0, 40.0), b = unit(92.0, 85.0);
  const double ra = 28.0 * kPi / 180.0, rb = 18.0 * kPi / 180.0;
  for (int i = 0; i < n_lat; ++i)
    for (int j = 0; j < n_lon; ++j) {
      const Vec3 d = img.direction(i, j);
      img.set(i, j, angular_bump(d, a, ra) + 0.6 * angular_bump(d, b, rb));
    }
  return img;
}

}  // namespace geonorm::assets
