#pragma once

#include <complex>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "geonorm/raster.hpp"

namespace geonorm {

using Vec3 = Eigen::Vector3d;

// Intensities on a colatitude/longitude grid. Cell (i, j) is centered at
// colatitude pi (i + 1/2) / n_lat and longitude 2 pi j / n_lon.
class SphericalImage {
 public:
  SphericalImage(int n_lat, int n_lon, double radius = 1.0);
  SphericalImage(int n_lat, int n_lon, double radius, std::vector<double> v);

  int n_lat() const { return n_lat_; }
  int n_lon() const { return n_lon_; }
  double radius() const { return radius_; }

  double at(int i, int j) const {
    return data_[static_cast<std::size_t>(i) * n_lon_ + j];
  }
  void set(int i, int j, double v);
  const std::vector<double>& intensities() const { return data_; }
  double peak() const;

  double colatitude(int i) const;
  double longitude(int j) const;
  Vec3 direction(int i, int j) const;
  // Solid angle of a cell in row i: sin(colat) dtheta dphi.
  double cell_area(int i) const;

 private:
  int n_lat_;
  int n_lon_;
  double radius_;
  std::vector<double> data_;
};

class Rotation3 {
 public:
  Rotation3() : m_(Eigen::Matrix3d::Identity()) {}
  // Throws InvalidArgument unless m is orthogonal with det +1 to 1e-12.
  explicit Rotation3(const Eigen::Matrix3d& m);

  static Rotation3 identity() { return {}; }
  static Rotation3 axis_angle(const Vec3& axis, double angle);
  static Rotation3 about_z(double angle);
  // Minimal rotation taking unit vector `from` to unit vector `to`.
  static Rotation3 minimal(const Vec3& from, const Vec3& to);

  const Eigen::Matrix3d& matrix() const { return m_; }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }
  Rotation3 operator*(const Rotation3& o) const;
  Rotation3 inverse() const;
  // max |R^T R - I| entry.
  double orthogonality_error() const;

 private:
  Eigen::Matrix3d m_;
};

// Bilinear in (colatitude, longitude), longitude wraps and rows continue
// across each pole onto the opposite meridian.
double sample(const SphericalImage& img, const Vec3& n);

// out(n) = img(rot * n).
SphericalImage rotate_sphere(const SphericalImage& img, const Rotation3& rot);

double sphere_mass(const SphericalImage& img);

// Area-weighted comparison over the union of both supports, relative to
// the peak of a. Grids must match.
Discrepancy discrepancy(const SphericalImage& a, const SphericalImage& b);

// Normalized sum I(n) n dOmega. Throws UndefinedDirection when its norm is
// at most 1e-9 of the total mass.
Vec3 sphere_center_of_mass(const SphericalImage& img);

struct SphereOptions {
  // Azimuthal weight f(colat) = sin(colat)^weight_exponent.
  double weight_exponent = 3.0;
  double symmetry_eps = 1e-3;
  int max_symmetry_order = 8;
};

struct SphereNormalization {
  // normalized(n) = input(rotation * n); rotation = pole * about_z(azimuth).
  Rotation3 rotation;
  Rotation3 pole;
  double azimuth = 0.0;
  std::optional<int> symmetry_order;
  SphericalImage normalized;
  // Phase of the selected harmonic after normalization.
  double residual = 0.0;
};

// sum e^{i n phi} f(colat) I dOmega of the image img(q * n).
std::complex<double> azimuthal_phase(const SphericalImage& img,
                                     const Rotation3& q, int n,
                                     double weight_exponent);

SphereNormalization normalize_sphere(const SphericalImage& img,
                                     const SphereOptions& opts = {});

SphericalImage read_sphere(std::istream& in);
SphericalImage read_sphere(const std::string& path);
void write_sphere(const SphericalImage& img, std::ostream& out);
void write_sphere(const SphericalImage& img, const std::string& path);

}  // namespace geonorm
