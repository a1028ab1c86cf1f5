#include "geonorm/raster.hpp"

#include <algorithm>
#include <cmath>

#include "geonorm/error.hpp"
#include "geonorm/exact_sum.hpp"
#include "geonorm/groups.hpp"

namespace geonorm {

namespace {

void check_geometry(const OutGeometry& g) {
  if (g.width < 1 || g.height < 1)
    throw Error(ErrorCode::InvalidArgument, "raster needs width, height >= 1");
  if (!(g.pitch > 0.0) || !std::isfinite(g.pitch))
    throw Error(ErrorCode::InvalidArgument, "raster pitch must be positive");
  if (!g.origin.allFinite())
    throw Error(ErrorCode::InvalidArgument, "raster origin must be finite");
}

void check_intensity(double v) {
  if (!(v >= 0.0) || !std::isfinite(v))
    throw Error(ErrorCode::InvalidArgument,
                "intensities must be finite and non-negative");
}

// Continuous pixel index; snapped onto the node when within round-off so
// that sampling exactly at a pixel center reproduces the stored value.
double grid_index(double coord, double origin, double pitch) {
  const double u = (coord - origin) / pitch;
  const double r = std::nearbyint(u);
  return std::abs(u - r) < 1e-9 ? r : u;
}

}  // namespace

OutGeometry OutGeometry::centered(int width, int height, double pitch) {
  OutGeometry g;
  g.width = width;
  g.height = height;
  g.pitch = pitch;
  g.origin = {-0.5 * (width - 1) * pitch, -0.5 * (height - 1) * pitch};
  return g;
}

Raster::Raster(const OutGeometry& geometry, std::vector<double> intensities)
    : geom_(geometry), data_(std::move(intensities)) {
  check_geometry(geom_);
  if (data_.size() != static_cast<std::size_t>(geom_.width) * geom_.height)
    throw Error(ErrorCode::InvalidArgument,
                "intensity count does not match raster size");
  for (double v : data_) check_intensity(v);
}

Raster::Raster(const OutGeometry& geometry)
    : geom_(geometry),
      data_(static_cast<std::size_t>(std::max(geometry.width, 0)) *
                std::max(geometry.height, 0),
            0.0) {
  check_geometry(geom_);
}

void Raster::set(int i, int j, double v) {
  check_intensity(v);
  data_[static_cast<std::size_t>(i) * geom_.width + j] = v;
}

double Raster::peak() const {
  return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end());
}

Raster Raster::scaled(double c) const {
  std::vector<double> d(data_);
  for (double& v : d) v *= c;
  return Raster(geom_, std::move(d));
}

Raster Raster::with_geometry(const OutGeometry& g) const {
  if (g.width != geom_.width || g.height != geom_.height)
    throw Error(ErrorCode::InvalidArgument, "geometry size mismatch");
  return Raster(g, data_);
}

double sample(const Raster& r, const Vec2& x) {
  const double u = grid_index(x.x(), r.origin().x(), r.pitch());
  const double v = grid_index(x.y(), r.origin().y(), r.pitch());
  const int w = r.width(), h = r.height();
  if (!(u > -1.0 && v > -1.0 && u < w && v < h)) return 0.0;
  const double fu = std::floor(u), fv = std::floor(v);
  const int j0 = static_cast<int>(fu), i0 = static_cast<int>(fv);
  const double au = u - fu, av = v - fv;
  auto px = [&](int i, int j) {
    return (i >= 0 && j >= 0 && i < h && j < w) ? r.at(i, j) : 0.0;
  };
  if (au == 0.0 && av == 0.0) return px(i0, j0);
  double out = (1.0 - au) * (1.0 - av) * px(i0, j0);
  if (au != 0.0) out += au * (1.0 - av) * px(i0, j0 + 1);
  if (av != 0.0) out += (1.0 - au) * av * px(i0 + 1, j0);
  if (au != 0.0 && av != 0.0) out += au * av * px(i0 + 1, j0 + 1);
  return out;
}

Raster warp(const Raster& r, const PlanarMap& s, const OutGeometry& g) {
  Raster out(g);
  for (int i = 0; i < g.height; ++i) {
    for (int j = 0; j < g.width; ++j) {
      const double v = sample(r, s.apply(g.coord(i, j)));
      if (v != 0.0) out.set(i, j, v);
    }
  }
  return out;
}

Raster warp(const Raster& r, const PlanarMap& s) {
  return warp(r, s, r.geometry());
}

double mass(const Raster& r) {
  ExactSum sum;
  for (double v : r.intensities()) sum.add(v);
  return r.pitch() * r.pitch() * sum.value();
}

Discrepancy discrepancy(const Raster& a, const Raster& b) {
  const Raster bb =
      a.geometry() == b.geometry() ? b : warp(b, PlanarMap::identity(),
                                              a.geometry());
  const double peak = a.peak();
  Discrepancy d;
  if (peak <= 0.0) return d;
  // Mean over the union of both supports, so empty margins do not dilute it.
  double total = 0.0;
  std::size_t count = 0;
  const auto ia = a.intensities(), ib = bb.intensities();
  for (std::size_t k = 0; k < ia.size(); ++k) {
    if (ia[k] == 0.0 && ib[k] == 0.0) continue;
    const double e = std::abs(ia[k] - ib[k]);
    total += e;
    ++count;
    d.max_abs = std::max(d.max_abs, e);
  }
  if (count > 0) d.mean_abs = total / static_cast<double>(count) / peak;
  d.max_abs /= peak;
  return d;
}

}  // namespace geonorm
