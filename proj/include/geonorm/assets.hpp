#pragma once

#include "geonorm/raster.hpp"
#include "geonorm/sphere.hpp"

namespace geonorm::assets {

// Three overlapping smooth lobes of different size and height, no symmetry.
// Peak 1, pitch 1, grid centered at 0.
Raster blob(int n = 256);

// Plus-shaped figure, exactly invariant under quarter turns about 0.
Raster cross(int n = 256);

// Smooth-edged disk of the given radius (pixels) centered at 0.
Raster disk(int n = 256, double radius = 40.0);

// exp(-|x|^2 / (2 sigma^2)) at the given pitch, centered at 0.
Raster gaussian(int n = 256, double sigma = 20.0, double pitch = 1.0);

// Thin Gaussian-profile ring of radius rho and width w (coordinate units).
Raster ring(int n, double rho, double width, double pitch = 1.0);

// Two unequal angular bumps on the sphere.
SphericalImage sphere_blobs(int n_lat = 128, int n_lon = 256);

// Angular bump (1 - (angle / radius)^2)^3, zero beyond `radius`.
double angular_bump(const Vec3& n, const Vec3& center, double radius);

}  // namespace geonorm::assets
