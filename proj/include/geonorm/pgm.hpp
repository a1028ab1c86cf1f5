#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "geonorm/raster.hpp"

namespace geonorm {

struct PgmWriteOptions {
  bool binary = true;     // P5, otherwise P2
  int maxval = 65535;     // 255 or 65535 (any value in [1, 65535] works)
  // Intensity written as full scale. Unset: 1, or the peak when it
  // exceeds 1. Values other than 1 are recorded in a header comment.
  std::optional<double> scale;
};

// Portable graymap (P2 or P5, 8 or 16 bit). Intensities become v / maxval,
// times the recorded scale if any. Geometry comes from a comment line
// "# geonorm pitch=<v> origin=<x> <y>"; without it pitch is 1 and the grid
// is centered at 0.
Raster read_image(std::istream& in);
Raster read_image(const std::string& path);

void write_image(const Raster& r, std::ostream& out,
                 const PgmWriteOptions& opts = {});
void write_image(const Raster& r, const std::string& path,
                 const PgmWriteOptions& opts = {});

}  // namespace geonorm
