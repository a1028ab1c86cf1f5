#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "geonorm/error.hpp"
#include "geonorm/normalize.hpp"
#include "geonorm/verify.hpp"

namespace geonorm::cli {

// Stable process exit codes.
enum Exit : int {
  kOk = 0,
  kUsage = 1,
  kIo = 2,
  kZeroMass = 3,
  kDegenerate = 4,
  kNoConvergence = 5,
};

int exit_code(ErrorCode code);

struct RunConfig {
  std::string group = "similarity";
  NormalizeOptions options;
  std::optional<ProjectiveTargets> targets;
  std::string reference;  // image whose invariants become the targets
  std::uint64_t seed = 1;
  int trials = 10;
  int threads = 1;
  SamplingRanges ranges;
  std::optional<double> tolerance;
  std::optional<double> law_tolerance;
};

// Applies the keys present in a JSON object to cfg. Throws InvalidArgument
// on unknown keys or wrong types.
void apply_json(RunConfig& cfg, const std::string& json_text);

int cmd_moments(const std::string& input, std::ostream& out, std::ostream& err);

// Writes the normalized raster to `output` and the parameter file to
// `params` (default: output + ".params").
int cmd_normalize(const std::string& input, const RunConfig& cfg,
                  const std::string& output, const std::string& params,
                  std::ostream& out, std::ostream& err);

// Prints the summary; writes the per-trial CSV when csv is nonempty.
int cmd_verify(const std::string& input, const RunConfig& cfg,
               const std::string& csv, std::ostream& out, std::ostream& err);

int cmd_sphere_normalize(const std::string& input, const RunConfig& cfg,
                         const std::string& output, const std::string& params,
                         std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

}  // namespace geonorm::cli
