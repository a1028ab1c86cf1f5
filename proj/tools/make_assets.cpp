// Regenerates the committed test images and their oracle files:
//   make_assets <asset dir>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>

#include <json.hpp>

#include "geonorm/assets.hpp"
#include "geonorm/pgm.hpp"
#include "geonorm/sphere.hpp"

using namespace geonorm;
using nlohmann::ordered_json;

namespace {

// Plain long double sums over the stored (quantized) pixels.
ordered_json brute_force_moments(const Raster& r) {
  long double m = 0, sx = 0, sy = 0;
  const long double a = static_cast<long double>(r.pitch()) * r.pitch();
  for (int i = 0; i < r.height(); ++i)
    for (int j = 0; j < r.width(); ++j) {
      const Vec2 x = r.coord(i, j);
      const long double v = r.at(i, j) * a;
      m += v;
      sx += v * x.x();
      sy += v * x.y();
    }
  const long double cx = sx / m, cy = sy / m;
  long double mu[4][4] = {};
  for (int i = 0; i < r.height(); ++i)
    for (int j = 0; j < r.width(); ++j) {
      const Vec2 x = r.coord(i, j);
      const long double v = r.at(i, j) * a;
      const long double dx = x.x() - cx, dy = x.y() - cy;
      for (int p = 0; p <= 3; ++p)
        for (int q = 0; p + q <= 3; ++q)
          mu[p][q] += v * std::pow(dx, p) * std::pow(dy, q);
    }
  ordered_json j;
  j["centroid"] = {static_cast<double>(cx), static_cast<double>(cy)};
  for (int p = 0; p <= 3; ++p)
    for (int q = 0; p + q <= 3; ++q)
      j["mu" + std::to_string(p) + std::to_string(q)] =
          static_cast<double>(mu[p][q]);
  return j;
}

void write_json(const std::string& path, const ordered_json& j) {
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_assets <asset dir>\n";
    return 1;
  }
  const std::string dir = argv[1];
  PgmWriteOptions p16;
  p16.maxval = 65535;
  PgmWriteOptions p8;
  p8.maxval = 255;

  struct Item {
    const char* name;
    Raster raster;
    PgmWriteOptions opts;
  };
  const double sigma = 20.0;
  const Item items[] = {
      {"blob", assets::blob(), p16},
      {"cross", assets::cross(), p16},
      {"disk", assets::disk(), p16},
      {"gaussian", assets::gaussian(256, sigma), p16},
  };
  for (const auto& it : items) {
    const std::string path = dir + "/" + it.name + ".pgm";
    write_image(it.raster, path, it.opts);
    ordered_json j;
    j["asset"] = std::string(it.name) + ".pgm";
    j["brute_force"] = brute_force_moments(read_image(path));
    if (std::string(it.name) == "gaussian") {
      const double mu00 = 2.0 * std::numbers::pi * sigma * sigma;
      ordered_json a;
      a["sigma"] = sigma;
      a["centroid"] = {0.0, 0.0};
      a["mu00"] = mu00;
      a["mu20"] = sigma * sigma * mu00;
      a["mu02"] = sigma * sigma * mu00;
      a["mu11"] = 0.0;
      a["odd"] = 0.0;
      a["psi"] = {0.0, 0.0, 0.0};
      // Mass of the affine-normalized image: mu00^2 / sqrt(mu20 mu02 - mu11^2)
      a["contrast_factor"] = 2.0 * std::numbers::pi;
      j["analytic"] = a;
    }
    if (std::string(it.name) == "cross") j["symmetry_order"] = 4;
    if (std::string(it.name) == "disk") {
      j["symmetry_order"] = nullptr;
      j["psi"] = {0.0, 0.0, 0.0};
    }
    write_json(dir + "/" + it.name + ".json", j);
  }
  write_image(assets::blob(), dir + "/blob_p2.pgm",
              PgmWriteOptions{false, 255, std::nullopt});
  write_image(assets::blob(), dir + "/blob_p5.pgm", p8);

  const SphericalImage sph = assets::sphere_blobs(128, 256);
  write_sphere(sph, dir + "/sphere_blobs.txt");
  long double sx = 0, sy = 0, sz = 0;
  for (int i = 0; i < sph.n_lat(); ++i)
    for (int j = 0; j < sph.n_lon(); ++j) {
      const Vec3 n = sph.direction(i, j);
      const long double w = sph.at(i, j) * sph.cell_area(i);
      sx += w * n.x();
      sy += w * n.y();
      sz += w * n.z();
    }
  const long double norm = std::sqrt(sx * sx + sy * sy + sz * sz);
  ordered_json js;
  js["asset"] = "sphere_blobs.txt";
  js["center_of_mass"] = {static_cast<double>(sx / norm),
                          static_cast<double>(sy / norm),
                          static_cast<double>(sz / norm)};
  write_json(dir + "/sphere_blobs.json", js);
  return 0;
}
