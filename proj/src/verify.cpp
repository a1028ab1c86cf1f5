#include "geonorm/verify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include <Eigen/LU>

#include "geonorm/error.hpp"
#include "geonorm/moments.hpp"

namespace geonorm {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxDraws = 1000;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Signed difference folded into (-period/2, period/2].
double wrap(double d, double period) {
  d = std::fmod(d, period);
  if (d > period / 2) d -= period;
  if (d <= -period / 2) d += period;
  return d;
}

// Whether the warped copy keeps every nonzero pixel of r on the grid with a
// one-pixel margin, and the map stays away from its projective pole.
bool fits(const Raster& r, const MassPoints& pts, const PlanarMap& s) {
  const OutGeometry& g = r.geometry();
  const double lo_x = g.origin.x() + g.pitch, lo_y = g.origin.y() + g.pitch;
  const double hi_x = g.origin.x() + (g.width - 2) * g.pitch;
  const double hi_y = g.origin.y() + (g.height - 2) * g.pitch;
  for (int ci = 0; ci < 2; ++ci)
    for (int cj = 0; cj < 2; ++cj) {
      const Vec2 corner = g.coord(ci * (g.height - 1), cj * (g.width - 1));
      if (s.denominator(corner) < 0.1) return false;
    }
  const PlanarMap inv = invert(s);
  for (const auto& pt : pts) {
    if (inv.denominator(pt.pos) < 0.1) return false;
    const Vec2 x = inv.apply(pt.pos);
    if (x.x() < lo_x || x.x() > hi_x || x.y() < lo_y || x.y() > hi_y)
      return false;
  }
  return true;
}

Mat2 whitening_part(const NormalizationResult& n) {
  Mat2 w = Mat2::Identity();
  for (const auto& s : n.stages)
    if (s.name == "pre_rotation" || s.name == "whitening" || s.name == "scale")
      w = w * s.map.G();
  return w;
}

double rotation_law(const NormalizationResult& ni,
                    const NormalizationResult& nj, double theta) {
  if (!ni.symmetry_order) return 0.0;
  const double period = 2.0 * kPi / *ni.symmetry_order;
  const double ti = ni.stage("rotation")->theta();
  const double tj = nj.stage("rotation")->theta();
  return std::abs(wrap(tj - (ti - theta), period));
}

double scale_law(const NormalizationResult& ni, const NormalizationResult& nj,
                 double lambda) {
  const double li = ni.stage("scale")->lambda();
  const double lj = nj.stage("scale")->lambda();
  return std::abs(lj * lambda / li - 1.0);
}

// Parameters of a similarity map G = lambda R(theta).
void similarity_params(const PlanarMap& s, double& lambda, double& theta) {
  lambda = std::sqrt(std::abs(s.G().determinant()));
  theta = std::atan2(s.G()(1, 0), s.G()(0, 0));
}

double law_residual(Group g, const PlanarMap& s, const NormalizationResult& ni,
                    const NormalizationResult& nj) {
  switch (g) {
    case Group::Translation: {
      const Vec2 ti = ni.stage("translation")->t();
      const Vec2 tj = nj.stage("translation")->t();
      return (tj - (ti - s.t())).cwiseAbs().maxCoeff();
    }
    case Group::Rotation:
      return rotation_law(ni, nj, s.theta());
    case Group::Scale:
      return scale_law(ni, nj, s.lambda());
    case Group::Similarity: {
      double lambda = 1.0, theta = 0.0;
      similarity_params(s, lambda, theta);
      return std::max(rotation_law(ni, nj, theta), scale_law(ni, nj, lambda));
    }
    case Group::Affine:
    case Group::AffineUnitDet: {
      const Mat2 q = whitening_part(ni).inverse() * s.G() * whitening_part(nj);
      return (q.transpose() * q - Mat2::Identity()).cwiseAbs().maxCoeff();
    }
    case Group::Projective:
      return nj.residual_trace.empty() ? 0.0 : nj.residual_trace.back();
  }
  return 0.0;
}

}  // namespace

TrialRng::TrialRng(std::uint64_t seed, std::uint64_t trial)
    : engine_(splitmix64(splitmix64(seed) ^ trial)) {}

double TrialRng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1p-53;
}

double TrialRng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

std::int64_t TrialRng::integer(std::int64_t lo, std::int64_t hi) {
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % span);
  std::uint64_t x;
  do x = engine_(); while (x >= limit);
  return lo + static_cast<std::int64_t>(x % span);
}

double default_tolerance(Group g) {
  switch (g) {
    case Group::Translation: return 0.0;
    case Group::Rotation:
    case Group::Scale:
    case Group::Similarity: return 0.02;
    case Group::Affine:
    case Group::AffineUnitDet: return 0.03;
    case Group::Projective: return 0.04;
  }
  return 0.0;
}

double default_law_tolerance(Group g) {
  switch (g) {
    case Group::Translation: return 0.0;
    case Group::Rotation: return 1e-3;
    case Group::Scale:
    case Group::Similarity:
    case Group::Affine:
    case Group::AffineUnitDet: return 1e-2;
    case Group::Projective: return 1e-6;
  }
  return 0.0;
}

PlanarMap sample_map(Group g, const SamplingRanges& ranges, const Raster& r,
                     TrialRng& rng) {
  if (ranges.identity) return PlanarMap::identity();
  auto shift = [&] {
    const auto k = static_cast<std::int64_t>(
        std::floor(ranges.translation_fraction * r.width()));
    return Vec2(r.pitch() * static_cast<double>(rng.integer(-k, k)),
                r.pitch() * static_cast<double>(rng.integer(-k, k)));
  };
  auto log_scale = [&] {
    return std::exp(rng.uniform(std::log(ranges.scale_min),
                                std::log(ranges.scale_max)));
  };
  switch (g) {
    case Group::Translation:
      return PlanarMap::translation(shift());
    case Group::Rotation:
      return PlanarMap::rotation(rng.uniform(0.0, 2.0 * kPi));
    case Group::Scale:
      return PlanarMap::scaling(log_scale());
    case Group::Similarity: {
      const Vec2 t = shift();
      const double lambda = log_scale();
      const double theta = rng.uniform(0.0, 2.0 * kPi);
      return PlanarMap::affine(lambda * rotation_matrix(theta), t);
    }
    case Group::Affine:
    case Group::AffineUnitDet: {
      const double u = rng.uniform(ranges.shear_u_min, ranges.shear_u_max);
      const double w = rng.uniform(-ranges.shear_w, ranges.shear_w);
      Mat2 gp;
      gp << u, 0.0, w, 1.0 / u;
      const Vec2 t = shift();
      const double lambda = log_scale();
      const double theta = rng.uniform(0.0, 2.0 * kPi);
      return PlanarMap::affine(gp * lambda * rotation_matrix(theta), t);
    }
    case Group::Projective: {
      const CentralMoments m = central_moments(r);
      const double bound = ranges.projective / m.rms_radius();
      const double rad = bound * std::sqrt(rng.uniform());
      const double ang = rng.uniform(0.0, 2.0 * kPi);
      return PlanarMap::restricted_projective(
          Vec2(rad * std::cos(ang), rad * std::sin(ang)));
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown group");
}

VerifyReport run_verify(const Raster& input, const VerifyConfig& cfg) {
  if (cfg.trials < 1)
    throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
  if (cfg.threads < 1)
    throw Error(ErrorCode::InvalidArgument, "threads must be >= 1");
  cfg.options.solver.validate();

  std::optional<ProjectiveTargets> targets = cfg.targets;
  if (cfg.group == Group::Projective && !targets)
    targets = targets_from(input);
  const NormalizationResult base =
      normalize(input, cfg.group, cfg.options, targets);
  const MassPoints support = mass_points(input);

  VerifyReport report;
  report.tolerance = cfg.tolerance.value_or(default_tolerance(cfg.group));
  report.law_tolerance =
      cfg.law_tolerance.value_or(default_law_tolerance(cfg.group));
  report.trials.resize(static_cast<std::size_t>(cfg.trials));

  auto run_trial = [&](int k) {
    TrialResult& tr = report.trials[static_cast<std::size_t>(k)];
    tr.trial = k;
    tr.group = to_string(cfg.group);
    try {
      TrialRng rng(cfg.seed, static_cast<std::uint64_t>(k));
      PlanarMap s;
      int draws = 0;
      do {
        if (++draws > kMaxDraws)
          throw Error(ErrorCode::InvalidArgument,
                      "no sampled map keeps the image on the grid");
        s = sample_map(cfg.group, cfg.ranges, input, rng);
      } while (!fits(input, support, s));
      tr.params = format_map(s);
      const Raster warped = warp(input, s, input.geometry());
      const NormalizationResult nj =
          normalize(warped, cfg.group, cfg.options, targets);
      const Discrepancy d = discrepancy(base.normalized, nj.normalized);
      tr.mean_abs = d.mean_abs;
      tr.max_abs = d.max_abs;
      tr.law_residual = law_residual(cfg.group, s, base, nj);
      tr.pass = tr.mean_abs <= report.tolerance &&
                tr.law_residual <= report.law_tolerance;
      tr.status = "ok";
    } catch (const Error& e) {
      tr.pass = false;
      tr.status = to_string(e.code());
    }
  };

  if (cfg.threads == 1) {
    for (int k = 0; k < cfg.trials; ++k) run_trial(k);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    const int n = std::min(cfg.threads, cfg.trials);
    for (int w = 0; w < n; ++w)
      pool.emplace_back([&] {
        for (int k = next++; k < cfg.trials; k = next++) run_trial(k);
      });
    for (auto& t : pool) t.join();
  }

  report.pass = true;
  for (const auto& tr : report.trials) {
    report.max_mean_abs = std::max(report.max_mean_abs, tr.mean_abs);
    report.max_law_residual = std::max(report.max_law_residual, tr.law_residual);
    report.pass = report.pass && tr.pass;
  }
  return report;
}

void write_csv(const VerifyReport& report, std::ostream& out) {
  out << "trial,group,params,mean_abs,max_abs,law_residual,pass,status\n";
  for (const auto& tr : report.trials)
    out << tr.trial << "," << tr.group << "," << tr.params << ","
        << fmt(tr.mean_abs) << "," << fmt(tr.max_abs) << ","
        << fmt(tr.law_residual) << "," << (tr.pass ? 1 : 0) << ","
        << tr.status << "\n";
}

std::string summarize(const VerifyReport& report) {
  const auto passed = std::count_if(report.trials.begin(), report.trials.end(),
                                    [](const TrialResult& t) { return t.pass; });
  std::ostringstream ss;
  ss << "trials=" << report.trials.size() << "\n"
     << "passed=" << passed << "\n"
     << "max_mean_abs=" << fmt(report.max_mean_abs) << "\n"
     << "max_law_residual=" << fmt(report.max_law_residual) << "\n"
     << "tolerance=" << fmt(report.tolerance) << "\n"
     << "law_tolerance=" << fmt(report.law_tolerance) << "\n"
     << "result=" << (report.pass ? "PASS" : "FAIL") << "\n";
  return ss.str();
}

}  // namespace geonorm
