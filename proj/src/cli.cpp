#include "geonorm/cli.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "geonorm/moments.hpp"
#include "geonorm/pgm.hpp"
#include "geonorm/sphere.hpp"

namespace geonorm::cli {

namespace {

using nlohmann::json;

std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int report(const Error& e, std::ostream& err) {
  err << "error: " << e.what() << "\n";
  return exit_code(e.code());
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

ScaleMode parse_scale_mode(const std::string& s) {
  if (s == "log") return ScaleMode::Log;
  if (s == "power") return ScaleMode::Power;
  throw Error(ErrorCode::InvalidArgument, "scale mode must be log or power");
}

std::string params_text(const std::string& group,
                        const NormalizationResult& r) {
  std::ostringstream ss;
  ss << "group=" << group << "\n";
  ss << "map=" << format_map(r.map) << "\n";
  ss << "symmetry_order="
     << (r.symmetry_order ? std::to_string(*r.symmetry_order) : "none")
     << "\n";
  ss << "iterations=" << r.iterations << "\n";
  ss << "residuals=";
  double worst = 0.0;
  for (std::size_t k = 0; k < r.residuals.size(); ++k) {
    ss << (k ? " " : "") << fmt17(r.residuals[k]);
    worst = std::max(worst, std::abs(r.residuals[k]));
  }
  ss << "\nmax_residual=" << fmt17(worst) << "\n";
  ss << "contrast_factor="
     << (r.contrast_factor ? fmt17(*r.contrast_factor) : "none") << "\n";
  ss << "reflected=" << (r.reflected ? 1 : 0) << "\n";
  ss << "converged=" << (r.converged ? 1 : 0) << "\n";
  for (const auto& s : r.stages)
    ss << "stage." << s.name << "=" << format_map(s.map) << "\n";
  if (r.invariants)
    ss << "psi1=" << fmt17(r.invariants->psi1) << "\npsi2="
       << fmt17(r.invariants->psi2) << "\npsi3=" << fmt17(r.invariants->psi3)
       << "\n";
  return ss.str();
}

std::optional<ProjectiveTargets> resolve_targets(const RunConfig& cfg) {
  if (cfg.targets) return cfg.targets;
  if (!cfg.reference.empty()) return targets_from(read_image(cfg.reference));
  return std::nullopt;
}

template <class T>
T get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::InvalidArgument,
                std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return kUsage;
    case ErrorCode::IoError:
    case ErrorCode::MalformedHeader: return kIo;
    case ErrorCode::ZeroMass: return kZeroMass;
    case ErrorCode::DegenerateSecondMoments:
    case ErrorCode::DegenerateRadius:
    case ErrorCode::DenominatorVanishes:
    case ErrorCode::Singular:
    case ErrorCode::NegativeDeterminant:
    case ErrorCode::UndefinedDirection: return kDegenerate;
    case ErrorCode::NoConvergence: return kNoConvergence;
  }
  return kUsage;
}

void apply_json(RunConfig& cfg, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument,
                std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object())
    throw Error(ErrorCode::InvalidArgument, "config must be a JSON object");
  NormalizeOptions& o = cfg.options;
  SamplingRanges& rg = cfg.ranges;
  for (const auto& [key, value] : j.items()) {
    const char* k = key.c_str();
    if (key == "group") cfg.group = get<std::string>(j, k);
    else if (key == "scale_mode") o.scale.mode = parse_scale_mode(get<std::string>(j, k));
    else if (key == "mu") o.scale.mu = get<double>(j, k);
    else if (key == "nu") o.scale.nu = get<double>(j, k);
    else if (key == "reflection") o.reflection = get<bool>(j, k);
    else if (key == "contrast") o.contrast = get<bool>(j, k);
    else if (key == "pre_affine") o.pre_affine = get<bool>(j, k);
    else if (key == "tol") o.solver.tol = get<double>(j, k);
    else if (key == "max_iter") o.solver.max_iter = get<int>(j, k);
    else if (key == "fd_step") o.solver.fd_step = get<double>(j, k);
    else if (key == "damping") o.solver.damping = get<double>(j, k);
    else if (key == "symmetry_eps") o.symmetry_eps = get<double>(j, k);
    else if (key == "max_symmetry_order") o.max_symmetry_order = get<int>(j, k);
    else if (key == "phase_exponent") o.phase_exponent = get<double>(j, k);
    else if (key == "grid_size") o.grid_size = get<int>(j, k);
    else if (key == "support_factor") o.support_factor = get<double>(j, k);
    else if (key == "residual_map") o.residual_map = parse_map(get<std::string>(j, k));
    else if (key == "targets") {
      const auto t = get<std::vector<double>>(j, k);
      if (t.size() != 2)
        throw Error(ErrorCode::InvalidArgument, "targets needs two values");
      cfg.targets = ProjectiveTargets{t[0], t[1]};
    } else if (key == "reference") cfg.reference = get<std::string>(j, k);
    else if (key == "seed") cfg.seed = get<std::uint64_t>(j, k);
    else if (key == "trials") cfg.trials = get<int>(j, k);
    else if (key == "threads") cfg.threads = get<int>(j, k);
    else if (key == "identity_range") rg.identity = get<bool>(j, k);
    else if (key == "translation_fraction") rg.translation_fraction = get<double>(j, k);
    else if (key == "scale_min") rg.scale_min = get<double>(j, k);
    else if (key == "scale_max") rg.scale_max = get<double>(j, k);
    else if (key == "shear_u_min") rg.shear_u_min = get<double>(j, k);
    else if (key == "shear_u_max") rg.shear_u_max = get<double>(j, k);
    else if (key == "shear_w") rg.shear_w = get<double>(j, k);
    else if (key == "projective_range") rg.projective = get<double>(j, k);
    else if (key == "tolerance") cfg.tolerance = get<double>(j, k);
    else if (key == "law_tolerance") cfg.law_tolerance = get<double>(j, k);
    else throw Error(ErrorCode::InvalidArgument, "unknown config key: " + key);
  }
}

int cmd_moments(const std::string& input, std::ostream& out,
                std::ostream& err) {
  try {
    const Raster r = read_image(input);
    const CentralMoments m = central_moments(r);
    out << "centroid_x=" << fmt12(m.center.x()) << "\n";
    out << "centroid_y=" << fmt12(m.center.y()) << "\n";
    for (int order = 0; order <= 3; ++order)
      for (int p = order; p >= 0; --p) {
        const int q = order - p;
        out << "mu" << p << q << "=" << fmt12(m.m(p, q)) << "\n";
      }
    const AffineInvariants v = affine_invariants(m);
    out << "psi1=" << fmt12(v.psi1) << "\npsi2=" << fmt12(v.psi2)
        << "\npsi3=" << fmt12(v.psi3) << "\n";
    out << "i1=" << fmt12(v.i1) << "\ni2=" << fmt12(v.i2) << "\ni3="
        << fmt12(v.i3) << "\ni4=" << fmt12(v.i4) << "\n";
    return kOk;
  } catch (const Error& e) {
    return report(e, err);
  }
}

int cmd_normalize(const std::string& input, const RunConfig& cfg,
                  const std::string& output, const std::string& params,
                  std::ostream& out, std::ostream& err) {
  const std::string params_path = params.empty() ? output + ".params" : params;
  try {
    cfg.options.solver.validate();
    const Group group = parse_group(cfg.group);
    const Raster r = read_image(input);
    std::optional<ProjectiveTargets> targets;
    if (group == Group::Projective) {
      targets = resolve_targets(cfg);
      if (!targets)
        throw Error(ErrorCode::InvalidArgument,
                    "projective normalization needs --targets or --reference");
    }
    try {
      const NormalizationResult res = normalize(r, group, cfg.options, targets);
      write_image(res.normalized, output);
      const std::string text = params_text(cfg.group, res);
      write_text(params_path, text);
      out << text;
      return kOk;
    } catch (const NoConvergenceError& e) {
      write_image(e.best().normalized, output);
      const std::string text = params_text(cfg.group, e.best());
      write_text(params_path, text);
      out << text;
      return report(e, err);
    }
  } catch (const Error& e) {
    return report(e, err);
  }
}

int cmd_verify(const std::string& input, const RunConfig& cfg,
               const std::string& csv, std::ostream& out, std::ostream& err) {
  try {
    VerifyConfig vc;
    vc.group = parse_group(cfg.group);
    vc.options = cfg.options;
    vc.targets = resolve_targets(cfg);
    vc.seed = cfg.seed;
    vc.trials = cfg.trials;
    vc.threads = cfg.threads;
    vc.ranges = cfg.ranges;
    vc.tolerance = cfg.tolerance;
    vc.law_tolerance = cfg.law_tolerance;
    const VerifyReport rep = run_verify(read_image(input), vc);
    if (!csv.empty()) {
      std::ostringstream ss;
      write_csv(rep, ss);
      write_text(csv, ss.str());
    }
    out << "group=" << cfg.group << "\nseed=" << cfg.seed << "\n"
        << summarize(rep);
    return kOk;
  } catch (const Error& e) {
    return report(e, err);
  }
}

int cmd_sphere_normalize(const std::string& input, const RunConfig& cfg,
                         const std::string& output, const std::string& params,
                         std::ostream& out, std::ostream& err) {
  const std::string params_path = params.empty() ? output + ".params" : params;
  try {
    SphereOptions so;
    so.weight_exponent = cfg.options.phase_exponent;
    so.symmetry_eps = cfg.options.symmetry_eps;
    so.max_symmetry_order = cfg.options.max_symmetry_order;
    const SphericalImage img = read_sphere(input);
    const SphereNormalization res = normalize_sphere(img, so);
    write_sphere(res.normalized, output);
    std::ostringstream ss;
    ss << "group=sphere\nrotation=";
    const auto& m = res.rotation.matrix();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) ss << (i || j ? " " : "") << fmt17(m(i, j));
    const Vec3 c = res.pole * Vec3::UnitZ();
    ss << "\ncenter_of_mass=" << fmt17(c.x()) << " " << fmt17(c.y()) << " "
       << fmt17(c.z()) << "\nazimuth=" << fmt17(res.azimuth)
       << "\nsymmetry_order="
       << (res.symmetry_order ? std::to_string(*res.symmetry_order) : "none")
       << "\nresiduals=" << fmt17(res.residual) << "\n";
    write_text(params_path, ss.str());
    out << ss.str();
    return kOk;
  } catch (const Error& e) {
    return report(e, err);
  }
}

int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Geometric image normalization"};
  app.require_subcommand(1);

  std::string input, output, params, csv, config;
  std::string group, scale_mode, residual_map, reference;
  double mu = 0, nu = 0, tol = 0, fd_step = 0, damping = 0, eps = 0;
  double support = 0, tolerance = 0, law_tolerance = 0;
  int max_iter = 0, grid = 0, trials = 0, threads = 0, max_order = 0;
  std::uint64_t seed = 0;
  bool reflection = false, contrast = false, no_pre_affine = false;
  bool identity_range = false;
  std::vector<double> targets;

  auto* moments = app.add_subcommand("moments", "Print centroid, central "
                                                "moments and invariants");
  moments->add_option("input", input, "Input PGM")->required();

  auto* norm = app.add_subcommand("normalize", "Normalize an image");
  auto* verify = app.add_subcommand("verify", "Run the invariance harness");
  auto* sphere = app.add_subcommand("sphere-normalize",
                                    "Normalize a spherical image");

  std::vector<CLI::Option*> opts;
  auto common = [&](CLI::App* sub) {
    sub->add_option("input", input, "Input image")->required();
    opts.push_back(sub->add_option("--config", config, "JSON config file"));
    opts.push_back(sub->add_option("--symmetry-eps", eps, "Relative phase threshold for symmetry detection"));
    opts.push_back(sub->add_option("--max-symmetry-order", max_order, "Largest symmetry order tried"));
  };
  auto planar = [&](CLI::App* sub) {
    opts.push_back(sub->add_option("-g,--group", group,
                                   "translation | rotation | scale | "
                                   "similarity | affine | affine-unitdet | "
                                   "projective"));
    opts.push_back(sub->add_option("--scale-mode", scale_mode, "log | power"));
    opts.push_back(sub->add_option("--mu", mu, "Power-mode numerator exponent"));
    opts.push_back(sub->add_option("--nu", nu, "Power-mode denominator exponent"));
    opts.push_back(sub->add_flag("--reflection", reflection, "Also fix reflections"));
    opts.push_back(sub->add_flag("--contrast", contrast, "Divide the output by its mass"));
    opts.push_back(sub->add_flag("--no-pre-affine", no_pre_affine, "Skip the affine stage before the projective solve"));
    opts.push_back(sub->add_option("--tol", tol, "Projective residual tolerance"));
    opts.push_back(sub->add_option("--max-iter", max_iter, "Projective iteration limit"));
    opts.push_back(sub->add_option("--fd-step", fd_step, "Finite-difference step for the Jacobian"));
    opts.push_back(sub->add_option("--damping", damping, "Initial Newton step fraction in (0, 1]"));
    opts.push_back(sub->add_option("--grid-size", grid, "Output grid size for scale-changing groups"));
    opts.push_back(sub->add_option("--support-factor", support, "Output half-width in RMS radii"));
    opts.push_back(sub->add_option("--residual-map", residual_map,
                                   "Fixed map composed after normalization"));
    opts.push_back(sub->add_option("--targets", targets, "psi1 psi2")
                       ->expected(2));
    opts.push_back(sub->add_option("--reference", reference,
                                   "Image whose invariants are the targets"));
  };
  common(norm);
  planar(norm);
  norm->add_option("-o,--output", output, "Output PGM")->required();
  norm->add_option("--params", params, "Parameter file");

  common(verify);
  planar(verify);
  opts.push_back(verify->add_option("--seed", seed, "Random seed"));
  opts.push_back(verify->add_option("--trials", trials, "Number of random trials"));
  opts.push_back(verify->add_option("--threads", threads, "Worker threads"));
  opts.push_back(verify->add_flag("--identity-range", identity_range, "Sample only identity maps"));
  opts.push_back(verify->add_option("--tolerance", tolerance, "Mean abs pass threshold"));
  opts.push_back(verify->add_option("--law-tolerance", law_tolerance, "Parameter law pass threshold"));
  verify->add_option("--csv", csv, "Per-trial CSV output");

  common(sphere);
  sphere->add_option("-o,--output", output, "Output spherical image")
      ->required();
  sphere->add_option("--params", params, "Parameter file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  auto given = [&](const char* name) {
    for (auto* o : opts)
      if (o->check_name(name) && o->count() > 0) return true;
    return false;
  };

  RunConfig cfg;
  try {
    if (given("--config")) apply_json(cfg, read_text(config));
    NormalizeOptions& o = cfg.options;
    if (given("--group")) cfg.group = group;
    if (given("--scale-mode")) o.scale.mode = parse_scale_mode(scale_mode);
    if (given("--mu")) o.scale.mu = mu;
    if (given("--nu")) o.scale.nu = nu;
    if (given("--reflection")) o.reflection = true;
    if (given("--contrast")) o.contrast = true;
    if (given("--no-pre-affine")) o.pre_affine = false;
    if (given("--tol")) o.solver.tol = tol;
    if (given("--max-iter")) o.solver.max_iter = max_iter;
    if (given("--fd-step")) o.solver.fd_step = fd_step;
    if (given("--damping")) o.solver.damping = damping;
    if (given("--grid-size")) o.grid_size = grid;
    if (given("--support-factor")) o.support_factor = support;
    if (given("--symmetry-eps")) o.symmetry_eps = eps;
    if (given("--max-symmetry-order")) o.max_symmetry_order = max_order;
    if (given("--residual-map")) o.residual_map = parse_map(residual_map);
    if (given("--targets"))
      cfg.targets = ProjectiveTargets{targets.at(0), targets.at(1)};
    if (given("--reference")) cfg.reference = reference;
    if (given("--seed")) cfg.seed = seed;
    if (given("--trials")) cfg.trials = trials;
    if (given("--threads")) cfg.threads = threads;
    if (given("--identity-range")) cfg.ranges.identity = true;
    if (given("--tolerance")) cfg.tolerance = tolerance;
    if (given("--law-tolerance")) cfg.law_tolerance = law_tolerance;
    if (o.grid_size < 1 || !(o.support_factor > 0.0))
      throw Error(ErrorCode::InvalidArgument,
                  "grid size and support factor must be positive");
  } catch (const Error& e) {
    return report(e, err);
  }

  if (*moments) return cmd_moments(input, out, err);
  if (*norm) return cmd_normalize(input, cfg, output, params, out, err);
  if (*verify) return cmd_verify(input, cfg, csv, out, err);
  return cmd_sphere_normalize(input, cfg, output, params, out, err);
}

}  // namespace geonorm::cli
