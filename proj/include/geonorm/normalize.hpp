#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "geonorm/error.hpp"
#include "geonorm/groups.hpp"
#include "geonorm/moments.hpp"
#include "geonorm/raster.hpp"

namespace geonorm {

struct SolverConfig {
  double tol = 1e-6;
  int max_iter = 50;
  // Central-difference step; unset means 1e-4 / (RMS radius).
  std::optional<double> fd_step;
  // Initial step fraction of every Newton iteration.
  double damping = 1.0;

  void validate() const;
};

enum class ScaleMode { Log, Power };

struct ScaleOptions {
  ScaleMode mode = ScaleMode::Log;
  double mu = 2.0;
  double nu = 0.0;
};

enum class AffineVariant { Triangular, UnitDet };

enum class Group {
  Translation,
  Rotation,
  Scale,
  Similarity,
  Affine,
  AffineUnitDet,
  Projective,
};

const char* to_string(Group g);
Group parse_group(const std::string& name);

struct NormalizeOptions {
  SolverConfig solver;
  ScaleOptions scale;
  bool reflection = false;
  bool contrast = false;
  // Projective only: affine-normalize before solving for p.
  bool pre_affine = true;

  // Rotation phase weight f(rho) = rho^phase_exponent.
  double phase_exponent = 3.0;
  double symmetry_eps = 1e-3;
  int max_symmetry_order = 8;

  // Output grid. When unset: centered at 0, half-width support_factor times
  // the RMS radius of the normalized mass. Groups that keep the scale use
  // the input pitch; the others use grid_size pixels across.
  std::optional<OutGeometry> geometry;
  int grid_size = 256;
  int max_grid_size = 2048;
  double support_factor = 4.0;

  // Fixed residual map M, composed as N o M.
  PlanarMap residual_map;
};

struct Stage {
  std::string name;
  PlanarMap map;
};

struct NormalizationResult {
  // N_I composed with the residual map; normalized(x) = input(map(x)).
  PlanarMap map;
  Raster normalized;
  std::optional<int> symmetry_order;
  std::vector<double> residuals;
  int iterations = 0;
  std::optional<double> contrast_factor;

  bool converged = true;
  bool reflected = false;
  // Constituent maps in application order; map is their composition.
  std::vector<Stage> stages;
  // Projective only: residual norm after each accepted Newton step.
  std::vector<double> residual_trace;
  std::optional<AffineInvariants> invariants;
  OutGeometry input_geometry;

  const PlanarMap* stage(const std::string& name) const;
};

// Thrown by the projective normalizer; carries the best-effort result.
class NoConvergenceError : public Error {
 public:
  NoConvergenceError(const std::string& what, NormalizationResult best)
      : Error(ErrorCode::NoConvergence, what), best_(std::move(best)) {}
  const NormalizationResult& best() const { return best_; }

 private:
  NormalizationResult best_;
};

struct RotationSolution {
  double theta = 0.0;
  std::optional<int> order;
  std::complex<double> phase;
};

// Rotation and scale act about the coordinate origin, so their functionals
// are measured about it; for centered images that is the centroid.

// Smallest N whose phase integral clears the symmetry threshold, and the
// angle in [0, 2 pi / N) that makes it real and positive.
RotationSolution solve_rotation(const MassPoints& pts,
                                const NormalizeOptions& opts = {});
double solve_scale(const MassPoints& pts, const ScaleOptions& scale);
// Lower-triangular g with g g^T = second moments / mu00.
Mat2 whitening_matrix(const CentralMoments& m);
// (det g)^{1/2} g with g = whitening_matrix(m).
Mat2 unitdet_whitening_matrix(const CentralMoments& m);

NormalizationResult normalize_translation(const Raster& r,
                                          const NormalizeOptions& opts = {});
NormalizationResult normalize_rotation(const Raster& r,
                                       const NormalizeOptions& opts = {});
NormalizationResult normalize_scale(const Raster& r,
                                    const NormalizeOptions& opts = {});
NormalizationResult normalize_similarity(const Raster& r,
                                         const NormalizeOptions& opts = {});

struct AffinePartial {
  Mat2 g;               // whitening matrix of the (possibly pre-rotated) image
  PlanarMap map;        // g, or R(pi/2) o g after the mu20 = 0 fallback
  bool pre_rotated = false;
  Raster partial;
};
AffinePartial affine_partial(const Raster& r,
                             const NormalizeOptions& opts = {});

NormalizationResult normalize_affine(const Raster& r, AffineVariant variant,
                                     const NormalizeOptions& opts = {});

std::pair<Raster, double> normalize_contrast(const Raster& r);

struct ProjectiveTargets {
  double psi1 = 0.0;
  double psi2 = 0.0;
};
ProjectiveTargets targets_from(const Raster& reference);

NormalizationResult normalize_projective(const Raster& r,
                                         const ProjectiveTargets& targets,
                                         const NormalizeOptions& opts = {});

NormalizationResult normalize(const Raster& r, Group group,
                              const NormalizeOptions& opts = {},
                              const std::optional<ProjectiveTargets>&
                                  targets = std::nullopt);

// warp(normalized, invert(map)) on the input grid, contrast undone.
Raster reconstruct(const NormalizationResult& result);

}  // namespace geonorm
