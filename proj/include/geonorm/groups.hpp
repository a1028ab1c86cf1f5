#pragma once

#include <string>
#include <string_view>

#include <Eigen/Core>

#include "geonorm/raster.hpp"

namespace geonorm {

using Mat3 = Eigen::Matrix3d;

enum class MapKind {
  Identity,
  Translation,
  Rotation,
  Scaling,
  LowerTriangular,
  Linear,
  Affine,
  Projective,
  Reflection,
};

const char* to_string(MapKind kind);

// An element of the planar projective hierarchy
//
//   x' = (G x + t) / (1 + p . x)
//
// Every kind is stored in this promoted form; the kind tag and the
// specialized parameters (angle, scale, axis) are kept alongside so the
// algebra can report the tightest class of a result.
class PlanarMap {
 public:
  PlanarMap() = default;

  static PlanarMap identity();
  static PlanarMap translation(const Vec2& t);
  // x' = (x1 cos - x2 sin, x1 sin + x2 cos).
  static PlanarMap rotation(double theta);
  static PlanarMap scaling(double lambda);
  static PlanarMap lower_triangular(const Mat2& g);
  static PlanarMap linear(const Mat2& G);
  static PlanarMap affine(const Mat2& G, const Vec2& t);
  static PlanarMap projective(const Mat2& G, const Vec2& t, const Vec2& p);
  // x / (1 + p . x)
  static PlanarMap restricted_projective(const Vec2& p);
  // axis 1 flips x1, axis 2 flips x2.
  static PlanarMap reflection(int axis);
  // Builds from a homogeneous 3x3 representative; the tightest kind is
  // inferred from the zero pattern.
  static PlanarMap from_homogeneous(const Mat3& H);

  MapKind kind() const { return kind_; }
  const Mat2& G() const { return G_; }
  const Vec2& t() const { return t_; }
  const Vec2& p() const { return p_; }
  double theta() const { return theta_; }
  double lambda() const { return lambda_; }
  int axis() const { return axis_; }

  bool is_affine() const { return kind_ != MapKind::Projective; }
  Mat3 homogeneous() const;

  // Throws DenominatorVanishes when 1 + p . x is zero.
  Vec2 apply(const Vec2& x) const;
  // Denominator 1 + p . x.
  double denominator(const Vec2& x) const { return 1.0 + p_.dot(x); }
  // Determinant of the Jacobian of apply at x.
  double jacobian_det(const Vec2& x) const;

  // Maximum absolute difference of the promoted parameters.
  double distance(const PlanarMap& other) const;

 private:
  MapKind kind_ = MapKind::Identity;
  Mat2 G_ = Mat2::Identity();
  Vec2 t_ = Vec2::Zero();
  Vec2 p_ = Vec2::Zero();
  double theta_ = 0.0;
  double lambda_ = 1.0;
  int axis_ = 0;
};

// x -> outer(inner(x)).
PlanarMap compose(const PlanarMap& outer, const PlanarMap& inner);
PlanarMap invert(const PlanarMap& s);

struct LinearFactors {
  Mat2 g;             // lower triangular, g(0,0) > 0
  double theta = 0;   // G = g * R(theta) [* F]
  bool reflected = false;  // F = diag(-1, 1) appended when det G < 0
};
LinearFactors factor_linear(const Mat2& G);

struct UnitDetFactors {
  Mat2 gp;  // [[u, 0], [w, 1/u]]
  double lambda = 1;
  double theta = 0;  // G = gp * lambda * R(theta)
};
UnitDetFactors factor_unitdet(const Mat2& G);

struct ProjectiveFactors {
  PlanarMap restricted;  // x / (1 + p' . x)
  PlanarMap affine;      // s = restricted o affine
};
ProjectiveFactors factor_projective(const PlanarMap& s);

Mat2 rotation_matrix(double theta);

// One-line text form, e.g. "projective G11 G12 G21 G22 t1 t2 p1 p2".
std::string format_map(const PlanarMap& s);
PlanarMap parse_map(std::string_view text);

}  // namespace geonorm
