#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace geonorm {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

class PlanarMap;

// Sampling grid: pixel (i, j) has its center at origin + pitch * (j, i).
struct OutGeometry {
  int width = 1;
  int height = 1;
  double pitch = 1.0;
  Vec2 origin = Vec2::Zero();

  Vec2 coord(int i, int j) const {
    return {origin.x() + pitch * j, origin.y() + pitch * i};
  }

  // Grid of the given size whose center sits at (0, 0).
  static OutGeometry centered(int width, int height, double pitch);

  bool operator==(const OutGeometry& o) const {
    return width == o.width && height == o.height && pitch == o.pitch &&
           origin == o.origin;
  }
};

// Sampled non-negative intensity field on a regular grid, row-major.
class Raster {
 public:
  Raster(const OutGeometry& geometry, std::vector<double> intensities);
  explicit Raster(const OutGeometry& geometry);

  int width() const { return geom_.width; }
  int height() const { return geom_.height; }
  double pitch() const { return geom_.pitch; }
  const Vec2& origin() const { return geom_.origin; }
  const OutGeometry& geometry() const { return geom_; }

  Vec2 coord(int i, int j) const { return geom_.coord(i, j); }

  double at(int i, int j) const {
    return data_[static_cast<std::size_t>(i) * geom_.width + j];
  }
  void set(int i, int j, double v);

  std::span<const double> intensities() const { return data_; }
  double peak() const;

  // Returns a copy with every intensity multiplied by c > 0.
  Raster scaled(double c) const;
  // Same pixel values on a different grid of identical dimensions.
  Raster with_geometry(const OutGeometry& g) const;

 private:
  OutGeometry geom_;
  std::vector<double> data_;
};

// Bilinear interpolation with zero extension outside the grid.
double sample(const Raster& r, const Vec2& x);

// result(i, j) = sample(r, apply(s, g.coord(i, j))).
Raster warp(const Raster& r, const PlanarMap& s, const OutGeometry& g);
Raster warp(const Raster& r, const PlanarMap& s);

// pitch^2 * sum of intensities.
double mass(const Raster& r);

struct Discrepancy {
  double mean_abs = 0.0;  // relative to peak of the reference
  double max_abs = 0.0;
};

// Compares b against a on a's grid; b is resampled when the grids differ.
Discrepancy discrepancy(const Raster& a, const Raster& b);

}  // namespace geonorm
