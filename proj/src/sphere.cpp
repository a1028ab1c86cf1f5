#include "geonorm/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Geometry>

#include "geonorm/error.hpp"
#include "geonorm/exact_sum.hpp"

namespace geonorm {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSnap = 1e-9;

double snap(double u) {
  const double r = std::nearbyint(u);
  return std::abs(u - r) < kSnap ? r : u;
}

void check_grid(int n_lat, int n_lon, double radius) {
  if (n_lat < 2 || n_lon < 4)
    throw Error(ErrorCode::InvalidArgument,
                "spherical grid needs n_lat >= 2 and n_lon >= 4");
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw Error(ErrorCode::InvalidArgument, "sphere radius must be positive");
}

void check_value(double v) {
  if (!std::isfinite(v) || v < 0.0)
    throw Error(ErrorCode::InvalidArgument,
                "intensities must be finite and non-negative");
}

// Row value at continuous column v, with rows outside [0, n_lat) folded
// across the nearest pole onto the opposite meridian.
double row_sample(const SphericalImage& img, int i, double v) {
  const int n_lat = img.n_lat(), n_lon = img.n_lon();
  if (i < 0) {
    i = -1 - i;
    v += 0.5 * n_lon;
  } else if (i >= n_lat) {
    i = 2 * n_lat - 1 - i;
    v += 0.5 * n_lon;
  }
  if (i < 0 || i >= n_lat) return 0.0;
  v = std::fmod(v, static_cast<double>(n_lon));
  if (v < 0.0) v += n_lon;
  const double j0f = std::floor(v);
  const double fv = v - j0f;
  const int j0 = static_cast<int>(j0f) % n_lon;
  const double a = img.at(i, j0);
  if (fv == 0.0) return a;
  const int j1 = (j0 + 1) % n_lon;
  return a + fv * (img.at(i, j1) - a);
}

}  // namespace

SphericalImage::SphericalImage(int n_lat, int n_lon, double radius)
    : n_lat_(n_lat), n_lon_(n_lon), radius_(radius) {
  check_grid(n_lat, n_lon, radius);
  data_.assign(static_cast<std::size_t>(n_lat) * n_lon, 0.0);
}

SphericalImage::SphericalImage(int n_lat, int n_lon, double radius,
                               std::vector<double> v)
    : n_lat_(n_lat), n_lon_(n_lon), radius_(radius), data_(std::move(v)) {
  check_grid(n_lat, n_lon, radius);
  if (data_.size() != static_cast<std::size_t>(n_lat) * n_lon)
    throw Error(ErrorCode::InvalidArgument, "intensity count mismatch");
  for (double x : data_) check_value(x);
}

void SphericalImage::set(int i, int j, double v) {
  check_value(v);
  data_[static_cast<std::size_t>(i) * n_lon_ + j] = v;
}

double SphericalImage::peak() const {
  return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end());
}

double SphericalImage::colatitude(int i) const {
  return kPi * (i + 0.5) / n_lat_;
}

double SphericalImage::longitude(int j) const {
  return 2.0 * kPi * j / n_lon_;
}

Vec3 SphericalImage::direction(int i, int j) const {
  const double th = colatitude(i), ph = longitude(j);
  return {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
          std::cos(th)};
}

double SphericalImage::cell_area(int i) const {
  return std::sin(colatitude(i)) * (kPi / n_lat_) * (2.0 * kPi / n_lon_);
}

Rotation3::Rotation3(const Eigen::Matrix3d& m) : m_(m) {
  if (orthogonality_error() > 1e-12 || std::abs(m.determinant() - 1.0) > 1e-12)
    throw Error(ErrorCode::InvalidArgument, "matrix is not a proper rotation");
}

Rotation3 Rotation3::axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (!(n > 0.0))
    throw Error(ErrorCode::InvalidArgument, "rotation axis must be nonzero");
  Rotation3 r;
  r.m_ = Eigen::AngleAxisd(angle, axis / n).toRotationMatrix();
  return r;
}

Rotation3 Rotation3::about_z(double angle) {
  Rotation3 r;
  const double c = std::cos(angle), s = std::sin(angle);
  r.m_ << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return r;
}

Rotation3 Rotation3::minimal(const Vec3& from, const Vec3& to) {
  const Vec3 a = from.normalized(), b = to.normalized();
  const Vec3 axis = a.cross(b);
  const double s = axis.norm();
  const double c = a.dot(b);
  if (s < 1e-15) {
    if (c > 0.0) return identity();
    // Antiparallel: half turn about any axis orthogonal to a.
    Vec3 perp = a.cross(Vec3::UnitX());
    if (perp.norm() < 1e-6) perp = a.cross(Vec3::UnitY());
    return axis_angle(perp, kPi);
  }
  return axis_angle(axis, std::atan2(s, c));
}

Rotation3 Rotation3::operator*(const Rotation3& o) const {
  Rotation3 r;
  r.m_ = m_ * o.m_;
  return r;
}

Rotation3 Rotation3::inverse() const {
  Rotation3 r;
  r.m_ = m_.transpose();
  return r;
}

double Rotation3::orthogonality_error() const {
  return (m_.transpose() * m_ - Eigen::Matrix3d::Identity())
      .cwiseAbs()
      .maxCoeff();
}

double sample(const SphericalImage& img, const Vec3& n) {
  const double rho = std::hypot(n.x(), n.y());
  const double colat = std::atan2(rho, n.z());
  double lon = std::atan2(n.y(), n.x());
  if (lon < 0.0) lon += 2.0 * kPi;
  const double u = snap(colat * img.n_lat() / kPi - 0.5);
  const double v = snap(lon * img.n_lon() / (2.0 * kPi));
  const double i0f = std::floor(u);
  const double fu = u - i0f;
  const int i0 = static_cast<int>(i0f);
  const double a = row_sample(img, i0, v);
  if (fu == 0.0) return a;
  return a + fu * (row_sample(img, i0 + 1, v) - a);
}

SphericalImage rotate_sphere(const SphericalImage& img, const Rotation3& rot) {
  SphericalImage out(img.n_lat(), img.n_lon(), img.radius());
  for (int i = 0; i < img.n_lat(); ++i)
    for (int j = 0; j < img.n_lon(); ++j)
      out.set(i, j, std::max(0.0, sample(img, rot * img.direction(i, j))));
  return out;
}

double sphere_mass(const SphericalImage& img) {
  ExactSum m;
  for (int i = 0; i < img.n_lat(); ++i) {
    const double w = img.cell_area(i);
    for (int j = 0; j < img.n_lon(); ++j) m.add_product(img.at(i, j), w);
  }
  return m.value();
}

Discrepancy discrepancy(const SphericalImage& a, const SphericalImage& b) {
  if (a.n_lat() != b.n_lat() || a.n_lon() != b.n_lon())
    throw Error(ErrorCode::InvalidArgument, "spherical grids differ");
  Discrepancy d;
  const double peak = a.peak();
  if (peak <= 0.0) return d;
  double total = 0.0, area = 0.0;
  for (int i = 0; i < a.n_lat(); ++i) {
    const double w = a.cell_area(i);
    for (int j = 0; j < a.n_lon(); ++j) {
      const double va = a.at(i, j), vb = b.at(i, j);
      if (va == 0.0 && vb == 0.0) continue;
      const double e = std::abs(va - vb);
      total += e * w;
      area += w;
      d.max_abs = std::max(d.max_abs, e);
    }
  }
  if (area > 0.0) d.mean_abs = total / area / peak;
  d.max_abs /= peak;
  return d;
}

Vec3 sphere_center_of_mass(const SphericalImage& img) {
  ExactSum m, sx, sy, sz;
  for (int i = 0; i < img.n_lat(); ++i) {
    const double w = img.cell_area(i);
    for (int j = 0; j < img.n_lon(); ++j) {
      const double v = img.at(i, j);
      if (v == 0.0) continue;
      const Vec3 n = img.direction(i, j);
      const double mv = v * w;
      m.add(mv);
      sx.add_product(n.x(), mv);
      sy.add_product(n.y(), mv);
      sz.add_product(n.z(), mv);
    }
  }
  const double total = m.value();
  if (!(total > 0.0)) throw Error(ErrorCode::ZeroMass, "zero mass");
  const Vec3 c(sx.value(), sy.value(), sz.value());
  if (!(c.norm() > 1e-9 * total))
    throw Error(ErrorCode::UndefinedDirection,
                "spherical center of mass is undefined");
  return c.normalized();
}

std::complex<double> azimuthal_phase(const SphericalImage& img,
                                     const Rotation3& q, int n,
                                     double weight_exponent) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "harmonic order >= 1");
  const Eigen::Matrix3d qt = q.matrix().transpose();
  ExactSum re, im;
  for (int i = 0; i < img.n_lat(); ++i) {
    const double area = img.cell_area(i);
    for (int j = 0; j < img.n_lon(); ++j) {
      const double v = img.at(i, j);
      if (v == 0.0) continue;
      const Vec3 p = qt * img.direction(i, j);
      const double s = std::hypot(p.x(), p.y());
      if (s == 0.0) continue;
      const std::complex<double> unit(p.x() / s, p.y() / s);
      std::complex<double> e = unit;
      for (int k = 1; k < n; ++k) e *= unit;
      const double w = std::pow(s, weight_exponent) * v * area;
      re.add_product(e.real(), w);
      im.add_product(e.imag(), w);
    }
  }
  return {re.value(), im.value()};
}

SphereNormalization normalize_sphere(const SphericalImage& img,
                                     const SphereOptions& opts) {
  if (opts.max_symmetry_order < 1)
    throw Error(ErrorCode::InvalidArgument, "max_symmetry_order must be >= 1");
  const Vec3 c = sphere_center_of_mass(img);
  const Rotation3 pole = Rotation3::minimal(Vec3::UnitZ(), c);

  ExactSum weighted;
  const Eigen::Matrix3d pt = pole.matrix().transpose();
  for (int i = 0; i < img.n_lat(); ++i)
    for (int j = 0; j < img.n_lon(); ++j) {
      const double v = img.at(i, j);
      if (v == 0.0) continue;
      const Vec3 p = pt * img.direction(i, j);
      weighted.add_product(
          std::pow(std::hypot(p.x(), p.y()), opts.weight_exponent),
          v * img.cell_area(i));
    }
  const double threshold = opts.symmetry_eps * weighted.value();

  double azimuth = 0.0;
  std::optional<int> order;
  for (int n = 1; n <= opts.max_symmetry_order; ++n) {
    const auto z = azimuthal_phase(img, pole, n, opts.weight_exponent);
    if (std::abs(z) > threshold) {
      const double period = 2.0 * kPi / n;
      azimuth = std::arg(z) / n;
      if (azimuth < 0.0) azimuth += period;
      if (azimuth >= period) azimuth -= period;
      order = n;
      break;
    }
  }
  const Rotation3 rotation = pole * Rotation3::about_z(azimuth);
  double residual = 0.0;
  if (order)
    residual = std::arg(
        azimuthal_phase(img, rotation, *order, opts.weight_exponent));
  return {rotation, pole, azimuth, order, rotate_sphere(img, rotation),
          residual};
}

SphericalImage read_sphere(std::istream& in) {
  int n_lat = -1, n_lon = -1;
  double radius = -1.0;
  for (int k = 0; k < 3; ++k) {
    std::string line;
    if (!std::getline(in, line))
      throw Error(ErrorCode::MalformedHeader, "truncated spherical header");
    std::replace(line.begin(), line.end(), '=', ' ');
    std::istringstream ls(line);
    std::string key;
    double value = 0.0;
    if (!(ls >> key >> value))
      throw Error(ErrorCode::MalformedHeader, "bad header line: " + line);
    if (key == "n_lat") n_lat = static_cast<int>(value);
    else if (key == "n_lon") n_lon = static_cast<int>(value);
    else if (key == "radius") radius = value;
    else throw Error(ErrorCode::MalformedHeader, "unknown header key: " + key);
  }
  if (n_lat < 2 || n_lon < 4 || !(radius > 0.0))
    throw Error(ErrorCode::MalformedHeader, "invalid spherical header");
  std::vector<double> v(static_cast<std::size_t>(n_lat) * n_lon);
  for (double& x : v)
    if (!(in >> x))
      throw Error(ErrorCode::IoError, "truncated spherical intensity data");
  return SphericalImage(n_lat, n_lon, radius, std::move(v));
}

SphericalImage read_sphere(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return read_sphere(in);
}

void write_sphere(const SphericalImage& img, std::ostream& out) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", img.radius());
  out << "n_lat " << img.n_lat() << "\nn_lon " << img.n_lon() << "\nradius "
      << buf << "\n";
  for (int i = 0; i < img.n_lat(); ++i) {
    for (int j = 0; j < img.n_lon(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", img.at(i, j));
      out << (j ? " " : "") << buf;
    }
    out << "\n";
  }
}

void write_sphere(const SphericalImage& img, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  write_sphere(img, out);
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

}  // namespace geonorm
