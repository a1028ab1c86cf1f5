#include "geonorm/moments.hpp"

#include <cmath>
#include <limits>

#include "geonorm/error.hpp"
#include <Eigen/LU>

#include "geonorm/exact_sum.hpp"
#include "geonorm/groups.hpp"

namespace geonorm {

namespace {

constexpr double kCentroidQuantum = 0x1p-32;

void require_mass(double m) {
  if (!(m > 0.0)) throw Error(ErrorCode::ZeroMass, "zero mass");
}

bool in_center_cell(const MassPoint& pt, const Vec2& center) {
  return (pt.pos - center).squaredNorm() < 0.25 * pt.area;
}

// Mean of log|x| over the square cell of the given area centered at d.
double cell_mean_log(const Vec2& d, double area) {
  const auto F = [](double x, double y) {
    double v = -3.0 * x * y;
    if (x != 0.0 && y != 0.0) v += x * y * std::log(x * x + y * y);
    if (x != 0.0) v += x * x * std::atan(y / x);
    if (y != 0.0) v += y * y * std::atan(x / y);
    return v;
  };
  const double h = 0.5 * std::sqrt(area);
  const double a = d.x() - h, b = d.x() + h, c = d.y() - h, e = d.y() + h;
  return 0.5 * (F(b, e) - F(a, e) - F(b, c) + F(a, c)) / area;
}

}  // namespace

MassPoints mass_points(const Raster& r) {
  MassPoints pts;
  const double area = r.pitch() * r.pitch();
  for (int i = 0; i < r.height(); ++i) {
    for (int j = 0; j < r.width(); ++j) {
      const double v = r.at(i, j);
      if (v != 0.0) pts.push_back({r.coord(i, j), v * area, area});
    }
  }
  return pts;
}

double min_inverse_denominator(const MassPoints& pts, const PlanarMap& n) {
  const PlanarMap inv = invert(n);
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& pt : pts) lo = std::min(lo, inv.denominator(pt.pos));
  return lo;
}

MassPoints pullback(const MassPoints& pts, const PlanarMap& n,
                    double min_denominator) {
  const PlanarMap inv = invert(n);
  MassPoints out;
  out.reserve(pts.size());
  if (inv.is_affine()) {
    const double jac = std::abs(inv.G().determinant());
    for (const auto& pt : pts)
      out.push_back({inv.G() * pt.pos + inv.t(), pt.mass * jac, pt.area * jac});
    return out;
  }
  for (const auto& pt : pts) {
    if (inv.denominator(pt.pos) <= min_denominator)
      throw Error(ErrorCode::DenominatorVanishes,
                  "projective denominator vanishes on the image support");
    const double jac = std::abs(inv.jacobian_det(pt.pos));
    out.push_back({inv.apply(pt.pos), pt.mass * jac, pt.area * jac});
  }
  return out;
}

double total_mass(const MassPoints& pts) {
  ExactSum s;
  for (const auto& pt : pts) s.add(pt.mass);
  return s.value();
}

Vec2 centroid(const Raster& r) {
  int ref_i = -1, ref_j = -1;
  ExactSum m, su, sv;
  for (int i = 0; i < r.height(); ++i) {
    for (int j = 0; j < r.width(); ++j) {
      const double v = r.at(i, j);
      if (v == 0.0) continue;
      if (ref_i < 0) ref_i = i, ref_j = j;
      m.add(v);
      su.add_product(static_cast<double>(j - ref_j), v);
      sv.add_product(static_cast<double>(i - ref_i), v);
    }
  }
  const double total = m.value();
  require_mass(total);
  auto quantize = [](double x) {
    return std::nearbyint(x / kCentroidQuantum) * kCentroidQuantum;
  };
  const double du = quantize(su.value() / total);
  const double dv = quantize(sv.value() / total);
  return {r.origin().x() + r.pitch() * (ref_j + du),
          r.origin().y() + r.pitch() * (ref_i + dv)};
}

Vec2 centroid(const MassPoints& pts) {
  ExactSum m, sx, sy;
  for (const auto& pt : pts) {
    m.add(pt.mass);
    sx.add_product(pt.pos.x(), pt.mass);
    sy.add_product(pt.pos.y(), pt.mass);
  }
  const double total = m.value();
  require_mass(total);
  return {sx.value() / total, sy.value() / total};
}

double CentralMoments::rms_radius() const {
  return std::sqrt((mu[2][0] + mu[0][2]) / mu[0][0]);
}

CentralMoments central_moments(const MassPoints& pts, const Vec2& center) {
  std::array<std::array<ExactSum, 4>, 4> acc;
  for (const auto& pt : pts) {
    const double dx = pt.pos.x() - center.x();
    const double dy = pt.pos.y() - center.y();
    const double xp[4] = {1.0, dx, dx * dx, dx * dx * dx};
    const double yp[4] = {1.0, dy, dy * dy, dy * dy * dy};
    for (int p = 0; p <= 3; ++p)
      for (int q = 0; p + q <= 3; ++q)
        acc[p][q].add_product(xp[p] * yp[q], pt.mass);
  }
  CentralMoments m;
  m.center = center;
  for (int p = 0; p <= 3; ++p)
    for (int q = 0; p + q <= 3; ++q) m.mu[p][q] = acc[p][q].value();
  require_mass(m.mu[0][0]);
  return m;
}

CentralMoments central_moments(const MassPoints& pts) {
  return central_moments(pts, centroid(pts));
}

CentralMoments central_moments(const Raster& r) {
  return central_moments(mass_points(r), centroid(r));
}

std::complex<double> phase_integral(const MassPoints& pts, int n,
                                    const RadialWeight& f,
                                    const Vec2& center) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "harmonic order >= 1");
  ExactSum re, im;
  for (const auto& pt : pts) {
    if (in_center_cell(pt, center)) continue;
    const Vec2 d = pt.pos - center;
    const double rho = d.norm();
    const std::complex<double> unit(d.x() / rho, d.y() / rho);
    std::complex<double> e = unit;
    for (int k = 1; k < n; ++k) e *= unit;
    const double w = f(rho);
    re.add_product(e.real() * w, pt.mass);
    im.add_product(e.imag() * w, pt.mass);
  }
  return {re.value(), im.value()};
}

std::complex<double> phase_integral(const Raster& r, int n,
                                    const RadialWeight& f,
                                    const Vec2& center) {
  return phase_integral(mass_points(r), n, f, center);
}

std::complex<double> phase_integral(const Raster& r, int n,
                                    const RadialWeight& f) {
  return phase_integral(r, n, f, centroid(r));
}

double radial_moment(const MassPoints& pts, double mu_exp,
                     const AngularWeight& g, const Vec2& center) {
  ExactSum s;
  for (const auto& pt : pts) {
    if (mu_exp < 0.0 && in_center_cell(pt, center)) continue;
    const Vec2 d = pt.pos - center;
    const double rho = d.norm();
    const double radial = mu_exp == 0.0   ? 1.0
                          : mu_exp == 2.0 ? d.squaredNorm()
                                          : std::pow(rho, mu_exp);
    s.add_product(radial * g(std::atan2(d.y(), d.x())), pt.mass);
  }
  return s.value();
}

double radial_moment(const Raster& r, double mu_exp, const AngularWeight& g) {
  return radial_moment(mass_points(r), mu_exp, g, centroid(r));
}

double log_radial_moment(const MassPoints& pts, const AngularWeight& g,
                         const Vec2& center) {
  ExactSum s;
  for (const auto& pt : pts) {
    const Vec2 d = pt.pos - center;
    const double h = 0.5 * std::sqrt(pt.area);
    // The cell holding the center is integrated exactly around the singularity.
    const double l = std::abs(d.x()) < h && std::abs(d.y()) < h
                         ? cell_mean_log(d, pt.area)
                         : std::log(d.norm());
    s.add_product(l * g(std::atan2(d.y(), d.x())), pt.mass);
  }
  return s.value();
}

double log_radial_moment(const Raster& r, const AngularWeight& g) {
  return log_radial_moment(mass_points(r), g, centroid(r));
}

AffineInvariants affine_invariants(const CentralMoments& m) {
  const double A = m.A(), B = m.B(), C = m.C();
  const double a = m.a(), b = m.b(), c = m.c(), d = m.d();
  AffineInvariants v;
  v.i1 = A * C - B * B;
  if (!(v.i1 > 1e-12 * A * C) || !(A * C > 0.0))
    throw Error(ErrorCode::DegenerateSecondMoments,
                "degenerate second moments (mass on a line)");
  v.i2 = (a * d - b * c) * (a * d - b * c) -
         4.0 * (a * c - b * b) * (b * d - c * c);
  v.i3 = A * (b * d - c * c) - B * (a * d - b * c) + C * (a * c - b * b);
  v.i4 = a * a * C * C * C - 6.0 * a * b * B * C * C +
         6.0 * a * c * C * (2.0 * B * B - A * C) +
         a * d * (6.0 * A * B * C - 8.0 * B * B * B) +
         9.0 * b * b * A * C * C - 18.0 * b * c * A * B * C +
         6.0 * b * d * A * (2.0 * B * B - A * C) + 9.0 * c * c * A * A * C -
         6.0 * c * d * A * A * B + d * d * A * A * A;
  const double m00 = m.m00();
  const double i1_2 = v.i1 * v.i1, i1_3 = i1_2 * v.i1;
  v.psi1 = m00 * m00 * v.i2 / i1_3;
  v.psi2 = m00 * v.i3 / i1_2;
  v.psi3 = m00 * v.i4 / i1_3;
  return v;
}

double reflection_functional(const CentralMoments& m, int axis) {
  if (axis == 1) return m.mu[3][0];
  if (axis == 2) return m.mu[0][3];
  throw Error(ErrorCode::InvalidArgument, "reflection axis must be 1 or 2");
}

}  // namespace geonorm
