#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "geonorm/groups.hpp"
#include "geonorm/normalize.hpp"
#include "geonorm/raster.hpp"

namespace geonorm {

struct SamplingRanges {
  // Per-component bound on integer-pitch shifts, as a fraction of width.
  double translation_fraction = 0.25;
  double scale_min = 0.5;
  double scale_max = 2.0;
  double shear_u_min = 0.7;
  double shear_u_max = 1.4;
  double shear_w = 0.5;
  // Bound on |p| times the RMS radius of the input.
  double projective = 0.05;
  // Every sampled map is the identity.
  bool identity = false;
};

struct VerifyConfig {
  Group group = Group::Similarity;
  NormalizeOptions options;
  // Projective targets; taken from the input itself when unset.
  std::optional<ProjectiveTargets> targets;
  std::uint64_t seed = 1;
  int trials = 10;
  int threads = 1;
  SamplingRanges ranges;
  // Pass thresholds; unset picks the per-group default.
  std::optional<double> tolerance;
  std::optional<double> law_tolerance;
};

struct TrialResult {
  int trial = 0;
  std::string group;
  std::string params;  // sampled map in the text format
  double mean_abs = 0.0;
  double max_abs = 0.0;
  double law_residual = 0.0;
  bool pass = false;
  std::string status;  // "ok" or the error name
};

struct VerifyReport {
  std::vector<TrialResult> trials;
  double max_mean_abs = 0.0;
  double max_law_residual = 0.0;
  double tolerance = 0.0;
  double law_tolerance = 0.0;
  bool pass = false;
};

double default_tolerance(Group g);
double default_law_tolerance(Group g);

// Per-trial stream: mt19937_64 seeded from splitmix64(seed, trial). The
// conversions to doubles and integers are spelled out so the draws do not
// depend on the standard library's distribution implementations.
class TrialRng {
 public:
  TrialRng(std::uint64_t seed, std::uint64_t trial);
  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  std::int64_t integer(std::int64_t lo, std::int64_t hi);  // inclusive

 private:
  std::mt19937_64 engine_;
};

// Draws a map for the group. The caller rejects draws that push the
// support off the grid.
PlanarMap sample_map(Group g, const SamplingRanges& ranges, const Raster& r,
                     TrialRng& rng);

VerifyReport run_verify(const Raster& input, const VerifyConfig& cfg);

void write_csv(const VerifyReport& report, std::ostream& out);
std::string summarize(const VerifyReport& report);

}  // namespace geonorm
