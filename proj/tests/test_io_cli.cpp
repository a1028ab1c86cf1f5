#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "geonorm/assets.hpp"
#include "geonorm/cli.hpp"
#include "geonorm/error.hpp"
#include "geonorm/groups.hpp"
#include "geonorm/moments.hpp"
#include "geonorm/pgm.hpp"
#include "geonorm/verify.hpp"

using namespace geonorm;
namespace fs = std::filesystem;

namespace {

const std::string kAssets = GEONORM_ASSET_DIR;

struct ScratchDir {
  fs::path path;
  ScratchDir()
      : path(fs::temp_directory_path() /
             ("geonorm_io_cli_" + std::to_string(::getpid()))) {
    fs::create_directories(path);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

fs::path scratch() {
  static const ScratchDir dir;
  return dir.path;
}

std::string tmp(const std::string& name) { return (scratch() / name).string(); }

std::map<std::string, std::string> parse_kv(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int code;
  std::string out, err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "geonorm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("PGM round trip") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> byte(0, 255);
  OutGeometry g;
  g.width = 37;
  g.height = 23;
  g.pitch = 0.5;
  g.origin = {1.25, -3.0};
  Raster r(g);
  for (int i = 0; i < g.height; ++i)
    for (int j = 0; j < g.width; ++j) r.set(i, j, byte(rng) / 255.0 * 0.999);

  for (bool binary : {true, false})
    for (int maxval : {255, 65535}) {
      std::stringstream ss;
      write_image(r, ss, {binary, maxval, std::nullopt});
      const Raster back = read_image(ss);
      CHECK(back.geometry() == g);
      double worst = 0.0;
      for (int i = 0; i < g.height; ++i)
        for (int j = 0; j < g.width; ++j)
          worst = std::max(worst, std::abs(back.at(i, j) - r.at(i, j)));
      CHECK(worst <= 1.0 / maxval);
    }

  SUBCASE("intensities above 1 keep their scale") {
    const Raster big = r.scaled(40.0);
    std::stringstream ss;
    write_image(big, ss);
    const Raster back = read_image(ss);
    CHECK(std::abs(back.peak() - big.peak()) <= big.peak() / 65535.0);
  }
}

TEST_CASE("P2 and P5 assets decode identically") {
  const Raster a = read_image(kAssets + "/blob_p2.pgm");
  const Raster b = read_image(kAssets + "/blob_p5.pgm");
  CHECK(a.geometry() == b.geometry());
  CHECK(std::equal(a.intensities().begin(), a.intensities().end(),
                   b.intensities().begin()));
}

TEST_CASE("PGM headers") {
  std::istringstream plain("P2\n3 2\n255\n0 255 10\n20 30 40\n");
  const Raster r = read_image(plain);
  CHECK(r.geometry() == OutGeometry::centered(3, 2, 1.0));
  CHECK(r.at(0, 1) == 1.0);

  std::istringstream bad_magic("P7\n3 2\n255\n");
  CHECK(code_of([&] { read_image(bad_magic); }) == ErrorCode::MalformedHeader);
  std::istringstream bad_size("P2\n0 2\n255\n");
  CHECK(code_of([&] { read_image(bad_size); }) == ErrorCode::MalformedHeader);
  std::istringstream bad_meta("P2\n# geonorm pitch=-1 origin=0 0\n1 1\n255\n3\n");
  CHECK(code_of([&] { read_image(bad_meta); }) == ErrorCode::MalformedHeader);
  std::istringstream truncated("P5\n4 4\n255\nabc");
  CHECK(code_of([&] { read_image(truncated); }) == ErrorCode::IoError);
  CHECK(code_of([] { read_image(std::string("/nonexistent/x.pgm")); }) ==
        ErrorCode::IoError);
}

TEST_CASE("moments command") {
  SUBCASE("two pixels") {
    Raster r(OutGeometry::centered(3, 1, 1.0));
    r.set(0, 0, 1.0);
    r.set(0, 2, 1.0);
    write_image(r, tmp("two.pgm"));
    const Run run = invoke({"moments", tmp("two.pgm")});
    const auto kv = parse_kv(run.out);
    CHECK(kv.at("mu00") == "2");
    CHECK(kv.at("mu20") == "2");
    CHECK(kv.at("mu02") == "0");
    CHECK(kv.at("centroid_x") == "0");
    // Collinear: the invariants are undefined.
    CHECK(run.code == cli::kDegenerate);
  }
  SUBCASE("zero image") {
    write_image(Raster(OutGeometry::centered(4, 4, 1.0)), tmp("zero.pgm"));
    const Run run = invoke({"moments", tmp("zero.pgm")});
    CHECK(run.code == cli::kZeroMass);
    CHECK(run.err.find("zero mass") != std::string::npos);
  }
  SUBCASE("missing file") {
    CHECK(invoke({"moments", tmp("missing.pgm")}).code == cli::kIo);
  }
  SUBCASE("Gaussian asset against its oracle") {
    const Run run = invoke({"moments", kAssets + "/gaussian.pgm"});
    REQUIRE(run.code == cli::kOk);
    const auto kv = parse_kv(run.out);
    const auto oracle = nlohmann::json::parse(slurp(kAssets + "/gaussian.json"));
    const auto& an = oracle.at("analytic");
    for (const char* k : {"mu00", "mu20", "mu02"}) {
      const double want = an.at(k).get<double>();
      CHECK(std::abs(std::stod(kv.at(k)) / want - 1.0) <= 0.01);
    }
    const double sigma = an.at("sigma").get<double>();
    const double m00 = an.at("mu00").get<double>();
    CHECK(std::abs(std::stod(kv.at("mu11"))) <= 0.01 * m00 * sigma * sigma);
    CHECK(std::abs(std::stod(kv.at("centroid_x"))) <= 0.01 * sigma);
    CHECK(std::abs(std::stod(kv.at("centroid_y"))) <= 0.01 * sigma);
    for (const char* k : {"mu30", "mu21", "mu12", "mu03"})
      CHECK(std::abs(std::stod(kv.at(k))) <= 0.01 * m00 * sigma * sigma * sigma);
  }
  SUBCASE("blob asset against its brute-force oracle") {
    const Run run = invoke({"moments", kAssets + "/blob.pgm"});
    REQUIRE(run.code == cli::kOk);
    const auto kv = parse_kv(run.out);
    const auto bf =
        nlohmann::json::parse(slurp(kAssets + "/blob.json")).at("brute_force");
    for (const char* k : {"mu00", "mu20", "mu11", "mu02", "mu30", "mu21",
                          "mu12", "mu03"}) {
      const double want = bf.at(k).get<double>();
      CHECK(std::abs(std::stod(kv.at(k)) / want - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("normalize command") {
  SUBCASE("centered input gives the identity") {
    const Run run = invoke({"normalize", kAssets + "/disk.pgm", "-g", "translation",
                         "-o", tmp("disk_n.pgm")});
    REQUIRE(run.code == cli::kOk);
    const auto kv = parse_kv(slurp(tmp("disk_n.pgm.params")));
    CHECK(parse_map(kv.at("map")).distance(PlanarMap::identity()) == 0.0);
    CHECK(kv.at("converged") == "1");
  }
  SUBCASE("normalized input normalizes to the identity") {
    REQUIRE(invoke({"normalize", kAssets + "/blob.pgm", "-o", tmp("sim1.pgm")})
                .code == cli::kOk);
    REQUIRE(invoke({"normalize", tmp("sim1.pgm"), "-o", tmp("sim2.pgm"),
                 "--params", tmp("sim2.txt")})
                .code == cli::kOk);
    const auto kv = parse_kv(slurp(tmp("sim2.txt")));
    CHECK(parse_map(kv.at("map")).distance(PlanarMap::identity()) <= 1e-2);
  }
  SUBCASE("similarity constraint closure") {
    const Run run = invoke({"normalize", kAssets + "/blob.pgm", "-g", "similarity",
                         "-o", tmp("blob_sim.pgm")});
    REQUIRE(run.code == cli::kOk);
    const auto kv = parse_kv(run.out);
    CHECK(std::stod(kv.at("max_residual")) <= 1e-6);
    CHECK(kv.at("symmetry_order") == "1");
    CHECK(kv.count("stage.translation") == 1);
    CHECK(kv.count("stage.scale") == 1);
    CHECK(kv.count("stage.rotation") == 1);
    CHECK(slurp(tmp("blob_sim.pgm.params")) == run.out);
    const Raster out = read_image(tmp("blob_sim.pgm"));
    CHECK(out.width() == 256);
  }
  SUBCASE("projective with a reference image") {
    const Raster blob = read_image(kAssets + "/blob.pgm");
    const double rms = central_moments(blob).rms_radius();
    const Raster distorted = warp(
        blob, PlanarMap::restricted_projective(Vec2(0.03, -0.02) / rms));
    write_image(distorted, tmp("distorted.pgm"));
    const Run run =
        invoke({"normalize", tmp("distorted.pgm"), "-g", "projective",
             "--reference", kAssets + "/blob.pgm", "-o", tmp("proj.pgm")});
    REQUIRE(run.code == cli::kOk);
    const auto kv = parse_kv(run.out);
    CHECK(std::stod(kv.at("max_residual")) <= 1e-6);
    CHECK(kv.at("converged") == "1");
    CHECK(parse_map(kv.at("stage.restricted_projective")).kind() ==
          MapKind::Projective);
    CHECK(kv.count("psi1") == 1);
  }
  SUBCASE("infeasible targets exit 5 with outputs written") {
    const Run run =
        invoke({"normalize", kAssets + "/blob.pgm", "-g", "projective",
             "--targets", "500", "0", "--max-iter", "10", "-o", tmp("bad.pgm")});
    CHECK(run.code == cli::kNoConvergence);
    CHECK(fs::exists(tmp("bad.pgm")));
    CHECK(parse_kv(slurp(tmp("bad.pgm.params"))).at("converged") == "0");
  }
  SUBCASE("projective without targets is a usage error") {
    CHECK(invoke({"normalize", kAssets + "/blob.pgm", "-g", "projective", "-o",
               tmp("x.pgm")})
              .code == cli::kUsage);
  }
  SUBCASE("collinear input") {
    Raster r(OutGeometry::centered(9, 9, 1.0));
    for (int k = 0; k < 9; ++k) r.set(k, k, 1.0);
    write_image(r, tmp("line.pgm"));
    CHECK(invoke({"normalize", tmp("line.pgm"), "-g", "affine", "-o", tmp("l.pgm")})
              .code == cli::kDegenerate);
  }
}

TEST_CASE("configuration") {
  SUBCASE("JSON keys") {
    cli::RunConfig cfg;
    cli::apply_json(cfg, R"({"group": "affine", "reflection": true,
                             "scale_mode": "power", "mu": 3, "tol": 1e-8,
                             "targets": [0.5, 0.1], "seed": 99, "trials": 7})");
    CHECK(cfg.group == "affine");
    CHECK(cfg.options.reflection);
    CHECK(cfg.options.scale.mode == ScaleMode::Power);
    CHECK(cfg.options.scale.mu == 3.0);
    CHECK(cfg.options.solver.tol == 1e-8);
    CHECK(cfg.targets->psi1 == 0.5);
    CHECK(cfg.seed == 99);
    CHECK(cfg.trials == 7);
    CHECK(code_of([&] { cli::apply_json(cfg, R"({"colour": 1})"); }) ==
          ErrorCode::InvalidArgument);
    CHECK(code_of([&] { cli::apply_json(cfg, R"({"tol": "small"})"); }) ==
          ErrorCode::InvalidArgument);
    CHECK(code_of([&] { cli::apply_json(cfg, "[1, 2]"); }) ==
          ErrorCode::InvalidArgument);
  }
  SUBCASE("flags override the config file") {
    std::ofstream(tmp("cfg.json")) << R"({"group": "rotation"})";
    const Run a = invoke({"normalize", kAssets + "/blob.pgm", "--config",
                       tmp("cfg.json"), "-o", tmp("c1.pgm")});
    CHECK(parse_kv(a.out).at("group") == "rotation");
    const Run b = invoke({"normalize", kAssets + "/blob.pgm", "--config",
                       tmp("cfg.json"), "-g", "translation", "-o", tmp("c2.pgm")});
    CHECK(parse_kv(b.out).at("group") == "translation");
  }
  SUBCASE("usage errors") {
    CHECK(invoke({}).code == cli::kUsage);
    CHECK(invoke({"normalize", kAssets + "/blob.pgm"}).code == cli::kUsage);
    CHECK(invoke({"normalize", kAssets + "/blob.pgm", "-g", "conformal", "-o",
               tmp("u.pgm")})
              .code == cli::kUsage);
    CHECK(invoke({"normalize", kAssets + "/blob.pgm", "--damping", "2", "-o",
               tmp("u.pgm")})
              .code == cli::kUsage);
  }
}

TEST_CASE("verify command") {
  SUBCASE("identity range has zero discrepancy") {
    const Run run = invoke({"verify", kAssets + "/blob.pgm", "-g", "similarity",
                         "--trials", "1", "--identity-range", "--csv",
                         tmp("id.csv")});
    REQUIRE(run.code == cli::kOk);
    const auto kv = parse_kv(run.out);
    CHECK(std::stod(kv.at("max_mean_abs")) == 0.0);
    CHECK(kv.at("result") == "PASS");
  }
  SUBCASE("determinism") {
    const std::vector<std::string> base = {"verify", kAssets + "/blob.pgm",
                                           "-g", "affine", "--trials", "4",
                                           "--seed", "17"};
    auto with = [&](std::vector<std::string> extra) {
      std::vector<std::string> a = base;
      a.insert(a.end(), extra.begin(), extra.end());
      return a;
    };
    REQUIRE(invoke(with({"--csv", tmp("a.csv")})).code == cli::kOk);
    REQUIRE(invoke(with({"--csv", tmp("b.csv")})).code == cli::kOk);
    REQUIRE(invoke(with({"--csv", tmp("c.csv"), "--threads", "3"})).code ==
            cli::kOk);
    const std::string a = slurp(tmp("a.csv"));
    CHECK(!a.empty());
    CHECK(a == slurp(tmp("b.csv")));
    CHECK(a == slurp(tmp("c.csv")));
    REQUIRE(invoke({"verify", kAssets + "/blob.pgm", "-g", "affine", "--trials",
                    "4", "--seed", "18", "--csv", tmp("d.csv")})
                .code == cli::kOk);
    CHECK(a != slurp(tmp("d.csv")));

    std::istringstream in(a);
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "trial,group,params,mean_abs,max_abs,law_residual,pass,status");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 4);
  }
  SUBCASE("trial streams") {
    TrialRng a(5, 0), b(5, 0), c(5, 1);
    bool all_equal = true, any_diff = false;
    for (int k = 0; k < 100; ++k) {
      const double x = a.uniform(), y = b.uniform(), z = c.uniform();
      all_equal = all_equal && x == y;
      any_diff = any_diff || x != z;
      CHECK(x >= 0.0);
      CHECK(x < 1.0);
    }
    CHECK(all_equal);
    CHECK(any_diff);
    TrialRng d(5, 2);
    for (int k = 0; k < 1000; ++k) {
      const auto v = d.integer(-3, 3);
      CHECK(v >= -3);
      CHECK(v <= 3);
    }
  }
}

TEST_CASE("sphere-normalize command") {
  const Run run = invoke({"sphere-normalize", kAssets + "/sphere_blobs.txt", "-o",
                       tmp("sph.txt")});
  REQUIRE(run.code == cli::kOk);
  const auto kv = parse_kv(run.out);
  std::istringstream cm(kv.at("center_of_mass"));
  Vec3 c;
  cm >> c.x() >> c.y() >> c.z();
  const auto oracle =
      nlohmann::json::parse(slurp(kAssets + "/sphere_blobs.json"));
  const auto want = oracle.at("center_of_mass").get<std::vector<double>>();
  CHECK((c - Vec3(want[0], want[1], want[2])).norm() <= 1e-9);
  const SphericalImage out = read_sphere(tmp("sph.txt"));
  CHECK((sphere_center_of_mass(out) - Vec3::UnitZ()).norm() <= 1e-2);

  SphericalImage pair(16, 32);
  pair.set(3, 0, 1.0);
  pair.set(12, 16, 1.0);
  write_sphere(pair, tmp("pair.txt"));
  CHECK(invoke({"sphere-normalize", tmp("pair.txt"), "-o", tmp("p.txt")}).code ==
        cli::kDegenerate);
}
