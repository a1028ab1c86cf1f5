#include "geonorm/normalize.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/LU>

#include "geonorm/exact_sum.hpp"

namespace geonorm {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kProjectiveMargin = 0.05;

double rms_about(const MassPoints& pts, const Vec2& center) {
  ExactSum m, s;
  for (const auto& pt : pts) {
    m.add(pt.mass);
    s.add_product((pt.pos - center).squaredNorm(), pt.mass);
  }
  const double total = m.value();
  if (!(total > 0.0)) throw Error(ErrorCode::ZeroMass, "zero mass");
  return std::sqrt(s.value() / total);
}

MassPoints input_points(const Raster& r) {
  MassPoints pts = mass_points(r);
  if (pts.empty()) throw Error(ErrorCode::ZeroMass, "image has zero mass");
  return pts;
}

// Running composition N = s1 o s2 o ... together with the quadrature nodes
// of I o N, so every constraint is checked on the image it applies to.
struct Pipeline {
  MassPoints pts;
  PlanarMap map;
  std::vector<Stage> stages;
  std::vector<double> residuals;
  std::optional<int> order;
  bool reflected = false;

  void push(const std::string& name, const PlanarMap& s) {
    map = compose(map, s);
    pts = pullback(pts, s);
    stages.push_back({name, s});
  }
};

void translation_stage(Pipeline& pl, const std::optional<Vec2>& exact) {
  const Vec2 c = exact ? *exact : centroid(pl.pts);
  pl.push("translation", PlanarMap::translation(c));
  const Vec2 after = centroid(pl.pts);
  pl.residuals.push_back(after.x());
  pl.residuals.push_back(after.y());
}

// Mass-weighted mean of log|x - c|.
double mean_log_radius(const MassPoints& pts, const Vec2& c) {
  ExactSum total, outside;
  for (const auto& pt : pts) {
    total.add(pt.mass);
    if ((pt.pos - c).squaredNorm() >= 0.25 * pt.area) outside.add(pt.mass);
  }
  if (!(outside.value() > 0.0))
    throw Error(ErrorCode::DegenerateRadius,
                "all mass sits at the center of mass");
  return log_radial_moment(pts, unit_weight, c) / total.value();
}

double scale_residual(const MassPoints& pts, const ScaleOptions& opts) {
  const Vec2 c = Vec2::Zero();
  if (opts.mode == ScaleMode::Log) return mean_log_radius(pts, c);
  return radial_moment(pts, opts.mu, unit_weight, c) /
             radial_moment(pts, opts.nu, unit_weight, c) -
         1.0;
}

void scale_stage(Pipeline& pl, const ScaleOptions& opts) {
  pl.push("scale", PlanarMap::scaling(solve_scale(pl.pts, opts)));
  pl.residuals.push_back(scale_residual(pl.pts, opts));
}

void rotation_stage(Pipeline& pl, const NormalizeOptions& opts) {
  const RotationSolution sol = solve_rotation(pl.pts, opts);
  pl.order = sol.order;
  pl.push("rotation", PlanarMap::rotation(sol.theta));
  if (!sol.order) {
    pl.residuals.push_back(0.0);
    return;
  }
  const double k = opts.phase_exponent;
  const auto z = phase_integral(
      pl.pts, *sol.order, [k](double rho) { return std::pow(rho, k); },
      Vec2::Zero());
  pl.residuals.push_back(std::arg(z));
}

void whitening_residuals(Pipeline& pl) {
  const CentralMoments m = central_moments(pl.pts);
  pl.residuals.push_back(m.A() / m.m00() - 1.0);
  pl.residuals.push_back(m.C() / m.m00() - 1.0);
  pl.residuals.push_back(m.B() / m.m00());
}

Mat2 whitening_with_fallback(Pipeline& pl) {
  CentralMoments m = central_moments(pl.pts);
  const double rms2 = m.rms_radius() * m.rms_radius();
  if (m.A() / m.m00() < 1e-9 * rms2) {
    pl.push("pre_rotation", PlanarMap::rotation(kPi / 2));
    m = central_moments(pl.pts);
  }
  return whitening_matrix(m);
}

void whitening_stage(Pipeline& pl) {
  const Mat2 g = whitening_with_fallback(pl);
  pl.push("whitening", PlanarMap::lower_triangular(g));
  whitening_residuals(pl);
}

void unitdet_stage(Pipeline& pl) {
  CentralMoments m = central_moments(pl.pts);
  const double rms2 = m.rms_radius() * m.rms_radius();
  if (m.A() / m.m00() < 1e-9 * rms2) {
    pl.push("pre_rotation", PlanarMap::rotation(kPi / 2));
    m = central_moments(pl.pts);
  }
  pl.push("whitening", PlanarMap::lower_triangular(unitdet_whitening_matrix(m)));
  const CentralMoments after = central_moments(pl.pts);
  const double trace = after.A() + after.C();
  pl.residuals.push_back((after.A() - after.C()) / trace);
  pl.residuals.push_back(2.0 * after.B() / trace);
}

void reflection_stage(Pipeline& pl) {
  const CentralMoments m = central_moments(pl.pts);
  const double rms = m.rms_radius();
  const double d = reflection_functional(m, 2);
  if (d < -1e-9 * m.m00() * rms * rms * rms) {
    pl.push("reflection", PlanarMap::reflection(2));
    pl.reflected = true;
  }
}

void affine_stages(Pipeline& pl, const std::optional<Vec2>& exact,
                   const NormalizeOptions& opts, bool reflect) {
  translation_stage(pl, exact);
  whitening_stage(pl);
  rotation_stage(pl, opts);
  if (reflect) reflection_stage(pl);
}

bool scale_preserving(Group g) {
  return g == Group::Translation || g == Group::Rotation;
}

OutGeometry output_geometry(const Raster& input, const MassPoints& pts,
                            bool keep_scale, const NormalizeOptions& opts) {
  if (opts.geometry) return *opts.geometry;
  const double rms = rms_about(pts, Vec2::Zero());
  const double half = opts.support_factor * rms;
  if (keep_scale) {
    const double n_raw = 2.0 * std::ceil(half / input.pitch());
    const int n = static_cast<int>(
        std::min<double>(n_raw, static_cast<double>(opts.max_grid_size)));
    // Grow by whole pixel pairs so a centered grid keeps its alignment.
    const auto grow = [n](int w) { return w >= n ? w : w + (n - w + 1) / 2 * 2; };
    return OutGeometry::centered(grow(input.width()), grow(input.height()),
                                 input.pitch());
  }
  if (!(rms > 0.0))
    throw Error(ErrorCode::DegenerateRadius, "normalized image has zero extent");
  const int n = opts.grid_size;
  return OutGeometry::centered(n, n, 2.0 * half / n);
}

NormalizationResult finish(const Raster& r, Pipeline pl, Group group,
                           const NormalizeOptions& opts) {
  const PlanarMap full = compose(pl.map, opts.residual_map);
  if (opts.residual_map.kind() != MapKind::Identity) {
    pl.pts = pullback(pl.pts, opts.residual_map);
    pl.stages.push_back({"residual", opts.residual_map});
  }
  const OutGeometry geom =
      output_geometry(r, pl.pts, scale_preserving(group), opts);
  NormalizationResult res{full, warp(r, full, geom)};
  res.symmetry_order = pl.order;
  res.residuals = std::move(pl.residuals);
  res.reflected = pl.reflected;
  res.stages = std::move(pl.stages);
  res.input_geometry = r.geometry();
  if (opts.contrast) {
    const double factor = mass(res.normalized);
    if (!(factor > 0.0))
      throw Error(ErrorCode::ZeroMass, "normalized image has zero mass");
    res.normalized = res.normalized.scaled(1.0 / factor);
    res.contrast_factor = factor;
  }
  return res;
}

Vec2 psi_residual(const MassPoints& pts, const ProjectiveTargets& t) {
  const AffineInvariants v = affine_invariants(central_moments(pts));
  return {v.psi1 - t.psi1, v.psi2 - t.psi2};
}

}  // namespace

void SolverConfig::validate() const {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be > 0");
  if (max_iter < 1)
    throw Error(ErrorCode::InvalidArgument, "max_iter must be >= 1");
  if (fd_step && !(*fd_step > 0.0))
    throw Error(ErrorCode::InvalidArgument, "fd_step must be > 0");
  if (!(damping > 0.0 && damping <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "damping must be in (0, 1]");
}

const char* to_string(Group g) {
  switch (g) {
    case Group::Translation: return "translation";
    case Group::Rotation: return "rotation";
    case Group::Scale: return "scale";
    case Group::Similarity: return "similarity";
    case Group::Affine: return "affine";
    case Group::AffineUnitDet: return "affine-unitdet";
    case Group::Projective: return "projective";
  }
  return "unknown";
}

Group parse_group(const std::string& name) {
  for (Group g : {Group::Translation, Group::Rotation, Group::Scale,
                  Group::Similarity, Group::Affine, Group::AffineUnitDet,
                  Group::Projective})
    if (name == to_string(g)) return g;
  throw Error(ErrorCode::InvalidArgument, "unknown group: " + name);
}

const PlanarMap* NormalizationResult::stage(const std::string& name) const {
  for (const auto& s : stages)
    if (s.name == name) return &s.map;
  return nullptr;
}

RotationSolution solve_rotation(const MassPoints& pts,
                                const NormalizeOptions& opts) {
  if (opts.max_symmetry_order < 1)
    throw Error(ErrorCode::InvalidArgument, "max_symmetry_order must be >= 1");
  const Vec2 c = Vec2::Zero();
  const double m00 = total_mass(pts);
  const double rms = rms_about(pts, c);
  const double k = opts.phase_exponent;
  const auto f = [k](double rho) { return std::pow(rho, k); };
  const double threshold = opts.symmetry_eps * m00 * std::pow(rms, k);
  RotationSolution sol;
  for (int n = 1; n <= opts.max_symmetry_order; ++n) {
    const auto z = phase_integral(pts, n, f, c);
    if (std::abs(z) > threshold) {
      double theta = std::arg(z) / n;
      const double period = 2.0 * kPi / n;
      if (theta < 0.0) theta += period;
      if (theta >= period) theta -= period;
      sol.theta = theta;
      sol.order = n;
      sol.phase = z;
      return sol;
    }
  }
  return sol;
}

double solve_scale(const MassPoints& pts, const ScaleOptions& scale) {
  const Vec2 c = Vec2::Zero();
  if (scale.mode == ScaleMode::Log) return std::exp(mean_log_radius(pts, c));
  if (scale.mu == scale.nu)
    throw Error(ErrorCode::InvalidArgument, "scale exponents must differ");
  const double rm = radial_moment(pts, scale.mu, unit_weight, c);
  const double rn = radial_moment(pts, scale.nu, unit_weight, c);
  if (!(rm > 0.0) || !(rn > 0.0) || !std::isfinite(rm) || !std::isfinite(rn))
    throw Error(ErrorCode::DegenerateRadius, "radial moment vanishes");
  return std::pow(rm / rn, 1.0 / (scale.mu - scale.nu));
}

Mat2 whitening_matrix(const CentralMoments& m) {
  const double m00 = m.m00(), A = m.A(), B = m.B(), C = m.C();
  const double det = A * C - B * B;
  if (!(A > 0.0) || !(det > 1e-12 * A * C))
    throw Error(ErrorCode::DegenerateSecondMoments,
                "degenerate second moments (mass on a line)");
  Mat2 g;
  g << std::sqrt(A / m00), 0.0, B / std::sqrt(A * m00),
      std::sqrt(det / (A * m00));
  return g;
}

Mat2 unitdet_whitening_matrix(const CentralMoments& m) {
  const Mat2 g = whitening_matrix(m);
  return std::sqrt(g.determinant()) * g;
}

NormalizationResult normalize_translation(const Raster& r,
                                          const NormalizeOptions& opts) {
  Pipeline pl{input_points(r)};
  translation_stage(pl, centroid(r));
  return finish(r, std::move(pl), Group::Translation, opts);
}

NormalizationResult normalize_rotation(const Raster& r,
                                       const NormalizeOptions& opts) {
  Pipeline pl{input_points(r)};
  rotation_stage(pl, opts);
  if (opts.reflection) reflection_stage(pl);
  return finish(r, std::move(pl), Group::Rotation, opts);
}

NormalizationResult normalize_scale(const Raster& r,
                                    const NormalizeOptions& opts) {
  Pipeline pl{input_points(r)};
  scale_stage(pl, opts.scale);
  return finish(r, std::move(pl), Group::Scale, opts);
}

NormalizationResult normalize_similarity(const Raster& r,
                                         const NormalizeOptions& opts) {
  Pipeline pl{input_points(r)};
  translation_stage(pl, centroid(r));
  scale_stage(pl, opts.scale);
  rotation_stage(pl, opts);
  if (opts.reflection) reflection_stage(pl);
  return finish(r, std::move(pl), Group::Similarity, opts);
}

AffinePartial affine_partial(const Raster& r, const NormalizeOptions& opts) {
  Pipeline pl{input_points(r)};
  const Mat2 g = whitening_with_fallback(pl);
  const bool pre = !pl.stages.empty();
  pl.push("whitening", PlanarMap::lower_triangular(g));
  const OutGeometry geom = output_geometry(r, pl.pts, false, opts);
  return {g, pl.map, pre, warp(r, pl.map, geom)};
}

NormalizationResult normalize_affine(const Raster& r, AffineVariant variant,
                                     const NormalizeOptions& opts) {
  Pipeline pl{input_points(r)};
  if (variant == AffineVariant::Triangular) {
    affine_stages(pl, centroid(r), opts, opts.reflection);
    return finish(r, std::move(pl), Group::Affine, opts);
  }
  translation_stage(pl, centroid(r));
  unitdet_stage(pl);
  ScaleOptions log_scale;
  scale_stage(pl, log_scale);
  rotation_stage(pl, opts);
  if (opts.reflection) reflection_stage(pl);
  return finish(r, std::move(pl), Group::AffineUnitDet, opts);
}

std::pair<Raster, double> normalize_contrast(const Raster& r) {
  const double m = mass(r);
  if (!(m > 0.0)) throw Error(ErrorCode::ZeroMass, "image has zero mass");
  return {r.scaled(1.0 / m), m};
}

ProjectiveTargets targets_from(const Raster& reference) {
  const AffineInvariants v = affine_invariants(central_moments(reference));
  return {v.psi1, v.psi2};
}

NormalizationResult normalize_projective(const Raster& r,
                                         const ProjectiveTargets& targets,
                                         const NormalizeOptions& opts) {
  opts.solver.validate();
  Pipeline pl{input_points(r)};
  if (opts.pre_affine) {
    Pipeline pre{pl.pts};
    affine_stages(pre, centroid(r), opts, false);
    pl.push("pre_affine", pre.map);
  }
  const MassPoints base = pl.pts;
  const double h =
      opts.solver.fd_step ? *opts.solver.fd_step
                          : 1e-4 / rms_about(base, centroid(base));

  auto residual = [&](const Vec2& p) {
    return psi_residual(
        pullback(base, PlanarMap::restricted_projective(p), kProjectiveMargin),
        targets);
  };

  Vec2 p = Vec2::Zero();
  Vec2 fp = residual(p);
  std::vector<double> trace{fp.norm()};
  int iterations = 0;
  std::string failure;
  while (fp.norm() > opts.solver.tol) {
    if (iterations >= opts.solver.max_iter) {
      failure = "iteration limit reached";
      break;
    }
    Mat2 jac;
    try {
      for (int k = 0; k < 2; ++k) {
        Vec2 e = Vec2::Zero();
        e[k] = h;
        jac.col(k) = (residual(p + e) - residual(p - e)) / (2.0 * h);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DenominatorVanishes) throw;
      failure = "denominator vanishes near the current estimate";
      break;
    }
    const double det = jac.determinant();
    if (!std::isfinite(det) || det == 0.0) {
      failure = "singular Jacobian";
      break;
    }
    const Vec2 step = -jac.inverse() * fp;
    double alpha = opts.solver.damping;
    bool accepted = false;
    for (int tries = 0; tries < 60 && !accepted; ++tries, alpha *= 0.5) {
      const Vec2 cand = p + alpha * step;
      Vec2 fc;
      try {
        fc = residual(cand);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::DenominatorVanishes ||
            e.code() == ErrorCode::DegenerateSecondMoments)
          continue;
        throw;
      }
      if (fc.norm() < fp.norm()) {
        p = cand;
        fp = fc;
        accepted = true;
      }
    }
    if (!accepted) {
      failure = "stalled";
      break;
    }
    ++iterations;
    trace.push_back(fp.norm());
  }

  pl.push("restricted_projective", PlanarMap::restricted_projective(p));
  Pipeline post{pl.pts};
  affine_stages(post, std::nullopt, opts, opts.reflection);
  pl.push("final_affine", post.map);
  pl.order = post.order;
  pl.reflected = post.reflected;
  pl.residuals = {fp.x(), fp.y()};
  const AffineInvariants inv = affine_invariants(central_moments(pl.pts));

  NormalizationResult res = finish(r, std::move(pl), Group::Projective, opts);
  res.iterations = iterations;
  res.residual_trace = std::move(trace);
  res.invariants = inv;
  res.converged = fp.norm() <= opts.solver.tol;
  if (!res.converged)
    throw NoConvergenceError("projective normalization did not converge (" +
                                 failure + "), residual " +
                                 std::to_string(fp.norm()),
                             std::move(res));
  return res;
}

NormalizationResult normalize(const Raster& r, Group group,
                              const NormalizeOptions& opts,
                              const std::optional<ProjectiveTargets>& targets) {
  switch (group) {
    case Group::Translation: return normalize_translation(r, opts);
    case Group::Rotation: return normalize_rotation(r, opts);
    case Group::Scale: return normalize_scale(r, opts);
    case Group::Similarity: return normalize_similarity(r, opts);
    case Group::Affine:
      return normalize_affine(r, AffineVariant::Triangular, opts);
    case Group::AffineUnitDet:
      return normalize_affine(r, AffineVariant::UnitDet, opts);
    case Group::Projective:
      if (!targets)
        throw Error(ErrorCode::InvalidArgument,
                    "projective normalization needs invariant targets");
      return normalize_projective(r, *targets, opts);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown group");
}

Raster reconstruct(const NormalizationResult& result) {
  Raster back = warp(result.normalized, invert(result.map),
                     result.input_geometry);
  if (result.contrast_factor) back = back.scaled(*result.contrast_factor);
  return back;
}

}  // namespace geonorm
