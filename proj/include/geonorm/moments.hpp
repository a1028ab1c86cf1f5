#pragma once

#include <array>
#include <complex>
#include <functional>
#include <vector>

#include "geonorm/raster.hpp"

namespace geonorm {

class PlanarMap;

// One quadrature node of an image: position, integrated intensity
// (intensity * cell area) and the cell area itself.
struct MassPoint {
  Vec2 pos;
  double mass = 0.0;
  double area = 0.0;
};
using MassPoints = std::vector<MassPoint>;

// Nonzero pixels of r in raster order.
MassPoints mass_points(const Raster& r);

// Quadrature nodes of the image x -> I(n(x)), obtained by the change of
// variables x = n^{-1}(y): positions move and masses pick up the Jacobian
// of n^{-1}. Throws DenominatorVanishes if some node of pts sits where
// n^{-1} has denominator <= min_denominator.
MassPoints pullback(const MassPoints& pts, const PlanarMap& n,
                    double min_denominator = 0.0);

// Smallest projective denominator of n^{-1} over the nodes.
double min_inverse_denominator(const MassPoints& pts, const PlanarMap& n);

double total_mass(const MassPoints& pts);

// Center of mass. The raster overload works in pixel-index space relative
// to the first nonzero pixel and rounds the fractional offset to 2^-32
// pixel, so integer-pitch shifts of the image shift the result exactly.
Vec2 centroid(const Raster& r);
Vec2 centroid(const MassPoints& pts);

struct CentralMoments {
  // mu[p][q] for p + q <= 3, about `center`.
  std::array<std::array<double, 4>, 4> mu{};
  Vec2 center = Vec2::Zero();

  double m(int p, int q) const { return mu[p][q]; }
  double m00() const { return mu[0][0]; }
  // Aliases used by the affine invariants.
  double A() const { return mu[2][0]; }
  double B() const { return mu[1][1]; }
  double C() const { return mu[0][2]; }
  double a() const { return mu[3][0]; }
  double b() const { return mu[2][1]; }
  double c() const { return mu[1][2]; }
  double d() const { return mu[0][3]; }
  // sqrt((mu20 + mu02) / mu00)
  double rms_radius() const;
};

CentralMoments central_moments(const Raster& r);
CentralMoments central_moments(const MassPoints& pts);
CentralMoments central_moments(const MassPoints& pts, const Vec2& center);

using RadialWeight = std::function<double(double)>;
using AngularWeight = std::function<double(double)>;

// sum e^{i n Phi(x)} f(|x|) I(x) dA with x measured from the centroid;
// the node closer to the center than half a cell is skipped.
std::complex<double> phase_integral(const Raster& r, int n,
                                    const RadialWeight& f);
std::complex<double> phase_integral(const Raster& r, int n,
                                    const RadialWeight& f, const Vec2& center);
std::complex<double> phase_integral(const MassPoints& pts, int n,
                                    const RadialWeight& f, const Vec2& center);

// sum |x|^mu_exp g(Phi(x)) I(x) dA about the centroid. The center node is
// skipped when mu_exp < 0.
double radial_moment(const Raster& r, double mu_exp, const AngularWeight& g);
double radial_moment(const MassPoints& pts, double mu_exp,
                     const AngularWeight& g, const Vec2& center);

// sum log|x| g(Phi(x)) I(x) dA about the centroid. The cell holding the
// center uses the exact cell average of log|x|.
double log_radial_moment(const Raster& r, const AngularWeight& g);
double log_radial_moment(const MassPoints& pts, const AngularWeight& g,
                         const Vec2& center);

struct AffineInvariants {
  double psi1 = 0, psi2 = 0, psi3 = 0;
  double i1 = 0, i2 = 0, i3 = 0, i4 = 0;
};

// Third-order affine and contrast invariants of the central moments.
// Throws DegenerateSecondMoments when mu20 mu02 - mu11^2 vanishes.
AffineInvariants affine_invariants(const CentralMoments& m);

// Odd functional that flips sign under x1 -> -x1 (axis 1: mu30) or
// x2 -> -x2 (axis 2: mu03).
double reflection_functional(const CentralMoments& m, int axis = 1);

inline double unit_weight(double) { return 1.0; }

}  // namespace geonorm
