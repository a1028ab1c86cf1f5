#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "geonorm/assets.hpp"
#include "geonorm/error.hpp"
#include "geonorm/groups.hpp"
#include "geonorm/moments.hpp"
#include "geonorm/raster.hpp"

using namespace geonorm;
using std::numbers::pi;

namespace {

Raster point_raster(int n, const std::vector<std::pair<Vec2, double>>& pts,
                    double pitch = 1.0) {
  Raster r(OutGeometry::centered(n, n, pitch));
  for (const auto& [x, v] : pts) {
    const int j = static_cast<int>(std::lround((x.x() - r.origin().x()) / pitch));
    const int i = static_cast<int>(std::lround((x.y() - r.origin().y()) / pitch));
    REQUIRE(r.coord(i, j) == x);
    r.set(i, j, v);
  }
  return r;
}

double rho(double x) { return x; }

AffineInvariants invariants(const Raster& r) {
  return affine_invariants(central_moments(r));
}

// Proper affine map about the origin with singular values in [0.6, 1.6].
Mat2 random_linear(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ang(0.0, 2.0 * pi);
  std::uniform_real_distribution<double> sv(0.6, 1.6);
  const Mat2 d = Eigen::Vector2d(sv(rng), sv(rng)).asDiagonal();
  return rotation_matrix(ang(rng)) * d * rotation_matrix(ang(rng));
}

}  // namespace

TEST_CASE("centroid") {
  CHECK(centroid(point_raster(9, {{Vec2(3, -2), 0.7}})) == Vec2(3, -2));
  CHECK(centroid(point_raster(9, {{Vec2(0, 0), 1}, {Vec2(2, 0), 1}})) ==
        Vec2(1, 0));

  const Raster disk = assets::disk(64, 20.0);
  CHECK(centroid(disk).norm() <= 1e-12);

  CHECK_THROWS_AS(centroid(Raster(OutGeometry::centered(4, 4, 1.0))), Error);
  try {
    central_moments(Raster(OutGeometry::centered(4, 4, 1.0)));
    FAIL("expected ZeroMass");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroMass);
  }
}

TEST_CASE("central moments of point sets") {
  SUBCASE("single pixel") {
    const CentralMoments m =
        central_moments(point_raster(9, {{Vec2(-2, 3), 2.5}}));
    for (int p = 0; p <= 3; ++p)
      for (int q = 0; p + q <= 3; ++q)
        CHECK(m.m(p, q) == (p + q == 0 ? 2.5 : 0.0));
  }
  SUBCASE("two pixels at (+-1, 0)") {
    const CentralMoments m =
        central_moments(point_raster(5, {{Vec2(-1, 0), 1}, {Vec2(1, 0), 1}}));
    CHECK(m.m00() == 2.0);
    CHECK(m.m(2, 0) == 2.0);
    CHECK(m.m(0, 2) == 0.0);
    CHECK(m.m(1, 1) == 0.0);
    CHECK(m.m(3, 0) == 0.0);
    CHECK(m.m(2, 1) == 0.0);
    CHECK(m.m(1, 2) == 0.0);
    CHECK(m.m(0, 3) == 0.0);
  }
  SUBCASE("pitch enters as cell area") {
    const CentralMoments m = central_moments(
        point_raster(5, {{Vec2(-0.5, 0), 1}, {Vec2(0.5, 0), 1}}, 0.5));
    CHECK(m.m00() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m.m(2, 0) == doctest::Approx(0.125).epsilon(1e-15));
  }
}

TEST_CASE("discretized unit Gaussian") {
  const Raster g = assets::gaussian(64, 1.0, 0.15);
  const CentralMoments m = central_moments(g);
  CHECK(std::abs(m.m(2, 0) / m.m00() - 1.0) <= 0.01);
  CHECK(std::abs(m.m(0, 2) / m.m00() - 1.0) <= 0.01);
  CHECK(std::abs(m.m(1, 1)) / m.m00() <= 0.01);
  CHECK(std::abs(m.m00() / (2 * pi) - 1.0) <= 0.01);

  const double r2 = radial_moment(g, 2.0, unit_weight);
  CHECK(std::abs(r2 / (2.0 * m.m00()) - 1.0) <= 0.01);
  CHECK(radial_moment(g, 0.0, unit_weight) ==
        doctest::Approx(m.m00()).epsilon(1e-12));
}

TEST_CASE("phase integral") {
  SUBCASE("radially symmetric image") {
    const Raster g = assets::gaussian(256, 20.0, 1.0);
    const double m00 = central_moments(g).m00();
    const double max_r = 128.0 * std::sqrt(2.0);
    const auto cube = [](double x) { return x * x * x; };
    for (int n = 1; n <= 8; ++n) {
      CHECK(std::abs(phase_integral(g, n, cube)) <=
            1e-6 * m00 * cube(max_r));
      // f = rho has a kink at 0 that the square lattice resolves only to
      // ~5e-6 in the harmonics it shares (multiples of 4).
      if (n % 4 != 0)
        CHECK(std::abs(phase_integral(g, n, rho)) <= 1e-6 * m00 * max_r);
    }
  }
  SUBCASE("four-fold point set") {
    const Raster r = point_raster(
        5, {{Vec2(1, 0), 1}, {Vec2(-1, 0), 1}, {Vec2(0, 1), 1}, {Vec2(0, -1), 1}});
    for (int n = 1; n <= 3; ++n)
      CHECK(std::abs(phase_integral(r, n, rho)) <= 1e-12);
    const std::complex<double> z4 = phase_integral(r, 4, rho);
    CHECK(std::abs(z4 - std::complex<double>(4.0, 0.0)) <= 1e-12);
  }
  SUBCASE("off-center point mass") {
    const Raster r = point_raster(13, {{Vec2(3, 4), 0.8}});
    const double phi = std::atan2(4.0, 3.0);
    for (int n = 1; n <= 4; ++n) {
      const std::complex<double> z = phase_integral(r, n, rho, Vec2::Zero());
      CHECK(std::abs(z - 0.8 * 5.0 * std::polar(1.0, n * phi)) <= 1e-12);
    }
    // About its own centroid the only node is excluded.
    CHECK(std::abs(phase_integral(r, 1, rho)) == 0.0);
  }
  SUBCASE("selection rule on exact symmetric point sets") {
    for (int sym : {2, 3, 5, 6}) {
      MassPoints pts;
      for (int k = 0; k < sym; ++k) {
        const double a = 0.4 + 2.0 * pi * k / sym;
        pts.push_back({Vec2(3.0 * std::cos(a), 3.0 * std::sin(a)), 1.0, 1.0});
        const double b = 1.1 + 2.0 * pi * k / sym;
        pts.push_back({Vec2(1.5 * std::cos(b), 1.5 * std::sin(b)), 0.5, 1.0});
      }
      const double scale = total_mass(pts) * 3.0;
      for (int n = 1; n <= 12; ++n) {
        const double z = std::abs(phase_integral(pts, n, rho, Vec2::Zero()));
        if (n % sym == 0)
          CHECK(z > 1e-3 * scale);
        else
          CHECK(z < 1e-6 * scale);
      }
    }
  }
}

TEST_CASE("radial moment") {
  const Raster r = point_raster(13, {{Vec2(3, 4), 0.8}});
  CHECK(radial_moment(r.scaled(1.0), 0.0, unit_weight) == doctest::Approx(0.8));
  MassPoints pts = mass_points(r);
  CHECK(radial_moment(pts, 2.0, unit_weight, Vec2::Zero()) ==
        doctest::Approx(0.8 * 25.0).epsilon(1e-14));
  CHECK(radial_moment(pts, -1.0, unit_weight, Vec2::Zero()) ==
        doctest::Approx(0.8 / 5.0).epsilon(1e-14));
  // Angular weight picks up Phi.
  const double phi = std::atan2(4.0, 3.0);
  CHECK(radial_moment(pts, 1.0, [](double a) { return std::cos(a); },
                      Vec2::Zero()) ==
        doctest::Approx(0.8 * 5.0 * std::cos(phi)).epsilon(1e-14));
}

TEST_CASE("log radial moment") {
  const auto single = [](const Vec2& x, double v) {
    OutGeometry g;
    g.origin = x;
    return Raster(g, {v});
  };
  CHECK(log_radial_moment(mass_points(single(Vec2(0, 1), 1.5)), unit_weight,
                          Vec2::Zero()) == 0.0);
  CHECK(log_radial_moment(mass_points(single(Vec2(std::exp(1.0), 0), 1.5)),
                          unit_weight, Vec2::Zero()) ==
        doctest::Approx(1.5).epsilon(1e-14));


  // A pixel over the center contributes its cell average of log|x|,
  // checked against a fine midpoint grid over the cell.
  const int n = 2000;
  double cell = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      cell += 0.5 * std::log(std::pow((i + 0.5) / n - 0.5, 2) +
                             std::pow((j + 0.5) / n - 0.5, 2));
  cell /= double(n) * n;
  for (double pitch : {1.0, 0.25, 3.0}) {
    OutGeometry g;
    g.pitch = pitch;
    const Raster centered(g, {2.0});
    CHECK(log_radial_moment(mass_points(centered), unit_weight, Vec2::Zero()) ==
          doctest::Approx(2.0 * pitch * pitch * (cell + std::log(pitch)))
              .epsilon(1e-5));
  }

  for (double rho_ring : {20.0, 45.0, 80.0}) {
    const Raster ring = assets::ring(256, rho_ring, 2.0);
    const double l = log_radial_moment(ring, unit_weight);
    CHECK(std::abs(l / (mass(ring) * std::log(rho_ring)) - 1.0) <= 0.01);
  }
}

TEST_CASE("affine invariants arithmetic") {
  CentralMoments m;
  m.mu[0][0] = 1;
  m.mu[2][0] = 1;
  m.mu[0][2] = 1;
  m.mu[3][0] = 1;
  m.mu[0][3] = 1;
  const AffineInvariants v = affine_invariants(m);
  CHECK(v.i1 == 1.0);
  CHECK(v.i2 == 1.0);
  CHECK(v.i3 == 0.0);
  CHECK(v.psi1 == 1.0);
  CHECK(v.psi2 == 0.0);

  // Independent evaluation on a generic moment set.
  CentralMoments g;
  const double A = 3, B = -0.7, C = 2, a = 0.4, b = -1.3, c = 0.9, d = 2.2;
  g.mu[0][0] = 1.7;
  g.mu[2][0] = A;
  g.mu[1][1] = B;
  g.mu[0][2] = C;
  g.mu[3][0] = a;
  g.mu[2][1] = b;
  g.mu[1][2] = c;
  g.mu[0][3] = d;
  const double I1 = A * C - B * B;
  const double I2 = (a * d - b * c) * (a * d - b * c) -
                    4.0 * (a * c - b * b) * (b * d - c * c);
  const double I3 = A * (b * d - c * c) - B * (a * d - b * c) +
                    C * (a * c - b * b);
  const AffineInvariants w = affine_invariants(g);
  CHECK(w.i1 == doctest::Approx(I1).epsilon(1e-14));
  CHECK(w.i2 == doctest::Approx(I2).epsilon(1e-14));
  CHECK(w.i3 == doctest::Approx(I3).epsilon(1e-14));
  CHECK(w.psi1 == doctest::Approx(1.7 * 1.7 * I2 / (I1 * I1 * I1)).epsilon(1e-14));
  CHECK(w.psi2 == doctest::Approx(1.7 * I3 / (I1 * I1)).epsilon(1e-14));
  CHECK(w.psi3 == doctest::Approx(1.7 * w.i4 / (I1 * I1 * I1)).epsilon(1e-14));
}

TEST_CASE("affine invariants vanish on doubly symmetric images") {
  const AffineInvariants v = invariants(assets::disk(256, 40.0));
  CHECK(v.psi1 == 0.0);
  CHECK(v.psi2 == 0.0);
  CHECK(v.psi3 == 0.0);
}

TEST_CASE("collinear mass has degenerate second moments") {
  const Raster r = point_raster(
      9, {{Vec2(-2, 0), 1}, {Vec2(0, 0), 2}, {Vec2(3, 0), 1}});
  try {
    invariants(r);
    FAIL("expected DegenerateSecondMoments");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateSecondMoments);
  }
}

TEST_CASE("affine invariants under affine maps and contrast") {
  const Raster blob = assets::blob();
  const AffineInvariants ref = invariants(blob);
  const double tol = 0.02;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> shift(-10.0, 10.0);
  std::uniform_real_distribution<double> contrast(0.2, 5.0);
  for (int k = 0; k < 10; ++k) {
    const PlanarMap s =
        PlanarMap::affine(random_linear(rng), Vec2(shift(rng), shift(rng)));
    const AffineInvariants v = invariants(warp(blob, s).scaled(contrast(rng)));
    CHECK(std::abs(v.psi1 - ref.psi1) <= tol * std::abs(ref.psi1));
    CHECK(std::abs(v.psi2 - ref.psi2) <= tol * std::abs(ref.psi2));
    CHECK(std::abs(v.psi3 - ref.psi3) <= tol * std::abs(ref.psi3));
  }

  for (double c : {0.1, 3.7}) {
    const AffineInvariants v = invariants(blob.scaled(c));
    CHECK(v.psi1 == doctest::Approx(ref.psi1).epsilon(1e-12));
    CHECK(v.psi2 == doctest::Approx(ref.psi2).epsilon(1e-12));
    CHECK(v.psi3 == doctest::Approx(ref.psi3).epsilon(1e-12));
  }
}

TEST_CASE("reflection functional") {
  const Raster two = point_raster(5, {{Vec2(1, 0), 2}, {Vec2(-1, 0), 1}});
  CHECK(reflection_functional(central_moments(two)) ==
        doctest::Approx(-48.0 / 27.0).epsilon(1e-9));

  const Raster sym = point_raster(
      9, {{Vec2(-2, 1), 1}, {Vec2(2, 1), 1}, {Vec2(0, -1), 1}, {Vec2(0, -3), 1}});
  CHECK(reflection_functional(central_moments(sym)) == 0.0);
  CHECK(reflection_functional(central_moments(sym), 2) != 0.0);

  const Raster blob = assets::blob();
  for (int axis : {1, 2}) {
    const double d = reflection_functional(central_moments(blob), axis);
    const double dr = reflection_functional(
        central_moments(warp(blob, PlanarMap::reflection(axis))), axis);
    CHECK(std::abs(dr + d) <= 1e-3 * std::abs(d));
  }
}

TEST_CASE("Schwartz inequality") {
  std::vector<Raster> rs = {assets::blob(), assets::cross(), assets::disk(),
                            assets::gaussian()};
  std::mt19937_64 rng(11);
  for (int k = 0; k < 10; ++k)
    rs.push_back(warp(assets::blob(), PlanarMap::linear(random_linear(rng))));
  for (const Raster& r : rs) {
    const CentralMoments m = central_moments(r);
    CHECK(m.m(2, 0) >= 0.0);
    CHECK(m.m(0, 2) >= 0.0);
    const double ac = m.m(2, 0) * m.m(0, 2);
    CHECK(m.m(1, 1) * m.m(1, 1) <= ac + 1e-9 * ac);
  }
}

TEST_CASE("translation covariance") {
  const Raster blob = assets::blob();
  const Vec2 c0 = centroid(blob);
  const CentralMoments m0 = central_moments(blob);
  const Vec2 shifts[] = {{7, -3}, {-20, 11}, {0, 25}, {-31, -17}};
  for (const Vec2& t : shifts) {
    const Raster moved = warp(blob, PlanarMap::translation(-t));
    CHECK(centroid(moved) == c0 + t);
    const CentralMoments m = central_moments(moved);
    for (int p = 0; p <= 3; ++p)
      for (int q = 0; p + q <= 3; ++q)
        CHECK(m.m(p, q) == m0.m(p, q));
  }
}
