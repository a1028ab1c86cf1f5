#include "geonorm/groups.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

#include <Eigen/LU>

#include "geonorm/error.hpp"

namespace geonorm {

const char* to_string(MapKind kind) {
  switch (kind) {
    case MapKind::Identity: return "identity";
    case MapKind::Translation: return "translation";
    case MapKind::Rotation: return "rotation";
    case MapKind::Scaling: return "scaling";
    case MapKind::LowerTriangular: return "lower_triangular";
    case MapKind::Linear: return "linear";
    case MapKind::Affine: return "affine";
    case MapKind::Projective: return "projective";
    case MapKind::Reflection: return "reflection";
  }
  return "unknown";
}

Mat2 rotation_matrix(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat2 R;
  R << c, -s, s, c;
  return R;
}

namespace {

void require_nonsingular(const Mat2& G) {
  if (G.determinant() == 0.0)
    throw Error(ErrorCode::Singular, "singular linear part");
}

bool is_linear_kind(MapKind k) {
  return k == MapKind::Rotation || k == MapKind::Scaling ||
         k == MapKind::LowerTriangular || k == MapKind::Linear ||
         k == MapKind::Reflection;
}

}  // namespace

PlanarMap PlanarMap::identity() { return PlanarMap{}; }

PlanarMap PlanarMap::translation(const Vec2& t) {
  PlanarMap m;
  m.kind_ = MapKind::Translation;
  m.t_ = t;
  return m;
}

PlanarMap PlanarMap::rotation(double theta) {
  PlanarMap m;
  m.kind_ = MapKind::Rotation;
  m.theta_ = theta;
  m.G_ = rotation_matrix(theta);
  return m;
}

PlanarMap PlanarMap::scaling(double lambda) {
  if (!(lambda > 0.0))
    throw Error(ErrorCode::InvalidArgument, "scale factor must be positive");
  PlanarMap m;
  m.kind_ = MapKind::Scaling;
  m.lambda_ = lambda;
  m.G_ = lambda * Mat2::Identity();
  return m;
}

PlanarMap PlanarMap::lower_triangular(const Mat2& g) {
  if (g(0, 1) != 0.0)
    throw Error(ErrorCode::InvalidArgument,
                "lower triangular map needs g12 = 0");
  require_nonsingular(g);
  PlanarMap m;
  m.kind_ = MapKind::LowerTriangular;
  m.G_ = g;
  return m;
}

PlanarMap PlanarMap::linear(const Mat2& G) {
  require_nonsingular(G);
  PlanarMap m;
  m.kind_ = MapKind::Linear;
  m.G_ = G;
  return m;
}

PlanarMap PlanarMap::affine(const Mat2& G, const Vec2& t) {
  require_nonsingular(G);
  PlanarMap m;
  m.kind_ = MapKind::Affine;
  m.G_ = G;
  m.t_ = t;
  return m;
}

PlanarMap PlanarMap::projective(const Mat2& G, const Vec2& t, const Vec2& p) {
  require_nonsingular(G);
  PlanarMap m;
  m.kind_ = MapKind::Projective;
  m.G_ = G;
  m.t_ = t;
  m.p_ = p;
  return m;
}

PlanarMap PlanarMap::restricted_projective(const Vec2& p) {
  return projective(Mat2::Identity(), Vec2::Zero(), p);
}

PlanarMap PlanarMap::reflection(int axis) {
  if (axis != 1 && axis != 2)
    throw Error(ErrorCode::InvalidArgument, "reflection axis must be 1 or 2");
  PlanarMap m;
  m.kind_ = MapKind::Reflection;
  m.axis_ = axis;
  m.G_(axis - 1, axis - 1) = -1.0;
  return m;
}

PlanarMap PlanarMap::from_homogeneous(const Mat3& H) {
  const double w = H(2, 2);
  if (w == 0.0)
    throw Error(ErrorCode::DenominatorVanishes,
                "homogeneous matrix maps the origin to infinity");
  const Mat3 N = H / w;
  const Mat2 G = N.topLeftCorner<2, 2>();
  const Vec2 t = N.topRightCorner<2, 1>();
  const Vec2 p = N.bottomLeftCorner<1, 2>().transpose();
  if (!p.isZero(0.0)) return projective(G, t, p);
  if (!t.isZero(0.0)) {
    if (G == Mat2::Identity()) return translation(t);
    return affine(G, t);
  }
  if (G == Mat2::Identity()) return identity();
  if (G(0, 1) == 0.0) return lower_triangular(G);
  return linear(G);
}

Mat3 PlanarMap::homogeneous() const {
  Mat3 H = Mat3::Identity();
  H.topLeftCorner<2, 2>() = G_;
  H.topRightCorner<2, 1>() = t_;
  H.bottomLeftCorner<1, 2>() = p_.transpose();
  return H;
}

Vec2 PlanarMap::apply(const Vec2& x) const {
  const double d = denominator(x);
  if (d == 0.0)
    throw Error(ErrorCode::DenominatorVanishes,
                "projective denominator vanishes");
  const Vec2 num = G_ * x + t_;
  if (d == 1.0) return num;
  return num / d;
}

double PlanarMap::jacobian_det(const Vec2& x) const {
  const double d = denominator(x);
  if (is_affine()) return G_.determinant();
  return homogeneous().determinant() / (d * d * d);
}

double PlanarMap::distance(const PlanarMap& o) const {
  double d = (G_ - o.G_).cwiseAbs().maxCoeff();
  d = std::max(d, (t_ - o.t_).cwiseAbs().maxCoeff());
  d = std::max(d, (p_ - o.p_).cwiseAbs().maxCoeff());
  return d;
}

PlanarMap compose(const PlanarMap& outer, const PlanarMap& inner) {
  const MapKind a = outer.kind(), b = inner.kind();
  if (a == MapKind::Identity) return inner;
  if (b == MapKind::Identity) return outer;
  if (a == b) {
    switch (a) {
      case MapKind::Translation:
        return PlanarMap::translation(outer.t() + inner.t());
      case MapKind::Rotation:
        return PlanarMap::rotation(outer.theta() + inner.theta());
      case MapKind::Scaling:
        return PlanarMap::scaling(outer.lambda() * inner.lambda());
      case MapKind::LowerTriangular: {
        Mat2 g = outer.G() * inner.G();
        g(0, 1) = 0.0;
        return PlanarMap::lower_triangular(g);
      }
      default:
        break;
    }
  }
  if (is_linear_kind(a) && is_linear_kind(b)) {
    const Mat2 G = outer.G() * inner.G();
    const bool triangular =
        (a == MapKind::LowerTriangular || a == MapKind::Scaling) &&
        (b == MapKind::LowerTriangular || b == MapKind::Scaling);
    if (triangular) {
      Mat2 g = G;
      g(0, 1) = 0.0;
      return PlanarMap::lower_triangular(g);
    }
    return PlanarMap::linear(G);
  }
  if (outer.is_affine() && inner.is_affine()) {
    return PlanarMap::affine(outer.G() * inner.G(),
                             outer.G() * inner.t() + outer.t());
  }
  const Mat3 H = outer.homogeneous() * inner.homogeneous();
  const double w = H(2, 2);
  if (w == 0.0)
    throw Error(ErrorCode::DenominatorVanishes,
                "composition maps the origin to infinity");
  const Mat3 N = H / w;
  return PlanarMap::projective(N.topLeftCorner<2, 2>(),
                               N.topRightCorner<2, 1>(),
                               N.bottomLeftCorner<1, 2>().transpose());
}

PlanarMap invert(const PlanarMap& s) {
  switch (s.kind()) {
    case MapKind::Identity:
      return s;
    case MapKind::Translation:
      return PlanarMap::translation(-s.t());
    case MapKind::Rotation:
      return PlanarMap::rotation(-s.theta());
    case MapKind::Scaling:
      return PlanarMap::scaling(1.0 / s.lambda());
    case MapKind::Reflection:
      return s;
    default:
      break;
  }
  const Mat2& G = s.G();
  if (G.determinant() == 0.0)
    throw Error(ErrorCode::Singular, "map is not invertible");
  const Mat2 Gi = G.inverse();
  if (s.kind() == MapKind::LowerTriangular) {
    Mat2 g = Gi;
    g(0, 1) = 0.0;
    return PlanarMap::lower_triangular(g);
  }
  if (s.kind() == MapKind::Linear) return PlanarMap::linear(Gi);
  if (s.kind() == MapKind::Affine) return PlanarMap::affine(Gi, -Gi * s.t());
  const Mat3 H = s.homogeneous();
  if (H.determinant() == 0.0)
    throw Error(ErrorCode::Singular, "map is not invertible");
  const Mat3 Hi = H.inverse();
  const double w = Hi(2, 2);
  const Mat3 N = Hi / w;
  return PlanarMap::projective(N.topLeftCorner<2, 2>(),
                               N.topRightCorner<2, 1>(),
                               N.bottomLeftCorner<1, 2>().transpose());
}

LinearFactors factor_linear(const Mat2& G) {
  require_nonsingular(G);
  LinearFactors f;
  Mat2 A = G;
  if (G.determinant() < 0.0) {
    // G = A F with F = diag(-1, 1); A = G F.
    f.reflected = true;
    A.col(0) = -A.col(0);
  }
  const double n = A.row(0).norm();
  const double c = A(0, 0) / n, s = -A(0, 1) / n;
  f.theta = std::atan2(s, c);
  const Mat2 R = rotation_matrix(f.theta);
  f.g = A * R.transpose();
  f.g(0, 0) = n;
  f.g(0, 1) = 0.0;
  return f;
}

UnitDetFactors factor_unitdet(const Mat2& G) {
  const double det = G.determinant();
  if (!(det > 0.0))
    throw Error(ErrorCode::NegativeDeterminant,
                "unit-determinant factorization needs det G > 0");
  const LinearFactors lf = factor_linear(G);
  UnitDetFactors f;
  f.lambda = std::sqrt(det);
  f.theta = lf.theta;
  f.gp = lf.g / f.lambda;
  f.gp(1, 1) = 1.0 / f.gp(0, 0);
  return f;
}

ProjectiveFactors factor_projective(const PlanarMap& s) {
  if (s.is_affine()) return {PlanarMap::identity(), s};
  const Mat2& G = s.G();
  require_nonsingular(G);
  const Mat2 Gi = G.inverse();
  const Vec2 p2 = Gi.transpose() * s.p();
  const double schur = 1.0 - s.p().dot(Gi * s.t());
  if (schur == 0.0) throw Error(ErrorCode::Singular, "map is not invertible");
  const double c = 1.0 / schur;
  ProjectiveFactors f;
  f.restricted = PlanarMap::restricted_projective(p2);
  if (s.t().isZero(0.0) && G == Mat2::Identity()) {
    f.affine = PlanarMap::identity();
  } else {
    f.affine = PlanarMap::affine(c * G, c * s.t());
  }
  return f;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> parse_numbers(std::istringstream& in, std::size_t count) {
  std::vector<double> v;
  std::string tok;
  while (in >> tok) {
    double x = 0;
    const auto* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, x);
    if (ec != std::errc{} || ptr != end)
      throw Error(ErrorCode::InvalidArgument, "bad number in map: " + tok);
    v.push_back(x);
  }
  if (v.size() != count)
    throw Error(ErrorCode::InvalidArgument,
                "map expects " + std::to_string(count) + " parameters");
  return v;
}

}  // namespace

std::string format_map(const PlanarMap& s) {
  std::string out = to_string(s.kind());
  auto put = [&out](double v) { out += ' ' + num(v); };
  const Mat2& G = s.G();
  switch (s.kind()) {
    case MapKind::Identity:
      break;
    case MapKind::Translation:
      put(s.t().x()), put(s.t().y());
      break;
    case MapKind::Rotation:
      put(s.theta());
      break;
    case MapKind::Scaling:
      put(s.lambda());
      break;
    case MapKind::LowerTriangular:
      put(G(0, 0)), put(G(1, 0)), put(G(1, 1));
      break;
    case MapKind::Linear:
      put(G(0, 0)), put(G(0, 1)), put(G(1, 0)), put(G(1, 1));
      break;
    case MapKind::Affine:
      put(G(0, 0)), put(G(0, 1)), put(G(1, 0)), put(G(1, 1));
      put(s.t().x()), put(s.t().y());
      break;
    case MapKind::Projective:
      put(G(0, 0)), put(G(0, 1)), put(G(1, 0)), put(G(1, 1));
      put(s.t().x()), put(s.t().y());
      put(s.p().x()), put(s.p().y());
      break;
    case MapKind::Reflection:
      out += ' ' + std::to_string(s.axis());
      break;
  }
  return out;
}

PlanarMap parse_map(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string kind;
  if (!(in >> kind)) throw Error(ErrorCode::InvalidArgument, "empty map");
  if (kind == "identity") {
    parse_numbers(in, 0);
    return PlanarMap::identity();
  }
  if (kind == "translation") {
    auto v = parse_numbers(in, 2);
    return PlanarMap::translation({v[0], v[1]});
  }
  if (kind == "rotation") return PlanarMap::rotation(parse_numbers(in, 1)[0]);
  if (kind == "scaling") return PlanarMap::scaling(parse_numbers(in, 1)[0]);
  if (kind == "lower_triangular") {
    auto v = parse_numbers(in, 3);
    Mat2 g;
    g << v[0], 0.0, v[1], v[2];
    return PlanarMap::lower_triangular(g);
  }
  if (kind == "linear" || kind == "affine" || kind == "projective") {
    const std::size_t n = kind == "linear" ? 4 : kind == "affine" ? 6 : 8;
    auto v = parse_numbers(in, n);
    Mat2 G;
    G << v[0], v[1], v[2], v[3];
    if (n == 4) return PlanarMap::linear(G);
    if (n == 6) return PlanarMap::affine(G, {v[4], v[5]});
    return PlanarMap::projective(G, {v[4], v[5]}, {v[6], v[7]});
  }
  if (kind == "reflection") {
    auto v = parse_numbers(in, 1);
    if (v[0] != 1.0 && v[0] != 2.0)
      throw Error(ErrorCode::InvalidArgument, "reflection axis must be 1 or 2");
    return PlanarMap::reflection(static_cast<int>(v[0]));
  }
  throw Error(ErrorCode::InvalidArgument, "unknown map kind: " + kind);
}

}  // namespace geonorm
