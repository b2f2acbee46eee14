// ptycho: simulate, reconstruct, compare and certify blind ptychography runs.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration error,
// 3 data error, 4 certification failure.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "ptycho/errors.hpp"
#include "ptycho/experiment.hpp"
#include "ptycho/io.hpp"
#include "ptycho/metrics.hpp"
#include "ptycho/multigrid.hpp"
#include "ptycho/runner.hpp"
#include "ptycho/simd.hpp"
#include "ptycho/surrogate.hpp"

namespace fs = std::filesystem;
using namespace ptycho;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitCertify = 4;

struct CertificationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path output_dir(const std::string& flag, const std::string& fallback) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("PTYCHO_OUTPUT_DIR"); env && *env) return fs::path(env) / fallback;
  return fs::path(fallback);
}

std::string number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// ---- simulate ----

struct SimulateArgs {
  SimulationConfig config;
  double defocus = 0.0;
  std::string out;
};

int run_simulate(SimulateArgs& a, CLI::App& cmd) {
  if (cmd.count("--defocus") > 0) a.config.defocus_offset = a.defocus;
  SimulationResult result = simulate_dataset(a.config);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  const fs::path dir = output_dir(a.out, "dataset");
  save_dataset(dir, result.data, result.provenance);
  std::cout << "wrote " << dir.string() << ": " << result.data.geometry.count() << " positions, n="
            << a.config.n << " m=" << a.config.m;
  if (a.config.noise_percent > 0.0) {
    std::cout << ", noise " << std::setprecision(4) << *result.data.noise_percent << "% (target "
              << a.config.noise_percent << "%)";
  }
  std::cout << "\n";
  return 0;
}

// ---- reconstruct ----

struct ReconstructArgs {
  std::string data;
  std::string out;
  std::string algo = "emagpie";
  double alpha = 0.05;
  int levels = 1;
  std::uint64_t seed = 0;
  bool certify = false;
  int window = 5;
  int patience = 10;
  long max_iters = 100;
  double floor_factor = 0.9;
  bool floor_stop = false;
  std::string probe_init = "auto";
  double object_noise = 0.0;
  bool no_timing = false;
  bool no_png = false;
};

void write_pngs(const fs::path& dir, const ComplexField& probe, const ComplexField& object,
                const Dataset& data) {
  write_magnitude_png(dir / "object_magnitude.png", object);
  write_phase_png(dir / "object_phase.png", demean_phase(object));
  write_magnitude_png(dir / "probe_magnitude.png", probe);
  write_phase_png(dir / "probe_phase.png", demean_phase(probe));
  if (data.truth_object) {
    RealField diff(object.rows(), object.cols());
    double hi = 0.0;
    for (std::size_t i = 0; i < diff.size(); ++i) {
      diff[i] = std::abs(std::abs(object[i]) - std::abs((*data.truth_object)[i]));
      hi = std::max(hi, diff[i]);
    }
    write_png_gray(dir / "error_magnitude.png", diff, 0.0, hi);
    const RealField ours = demean_phase(object);
    const RealField truth = demean_phase(*data.truth_object);
    RealField perr(object.rows(), object.cols());
    for (std::size_t i = 0; i < perr.size(); ++i) perr[i] = wrap_phase(ours[i] - truth[i]);
    write_phase_png(dir / "error_phase.png", perr);
  }
}

int run_reconstruct(const ReconstructArgs& a) {
  Provenance data_prov;
  const Dataset data = load_dataset(a.data, &data_prov);

  SolverConfig cfg;
  cfg.algorithm = parse_algorithm(a.algo);
  cfg.reg.alpha_object = a.alpha;
  cfg.levels = a.levels;
  cfg.seed = a.seed;
  cfg.certify = a.certify;
  cfg.record_time = !a.no_timing;
  cfg.stop.window = a.window;
  cfg.stop.patience = a.patience;
  cfg.stop.max_iters = a.max_iters;
  cfg.stop.floor_factor = a.floor_factor;
  if (a.floor_stop) {
    if (!data.has_truth()) throw ConfigError("--floor-stop needs a dataset with ground truth");
    cfg.stop.noise_floor = noise_floor(data);
  }
  cfg.validate(data.geometry.probe_side());

  const std::string init_name = a.probe_init == "auto" ? (data.truth_probe ? "perturb" : "fzp") : a.probe_init;
  const InitialGuess guess = make_initial_guess(data, parse_probe_init(init_name), a.seed, a.object_noise);

  Solver solver(data, guess.probe, guess.object, cfg);
  solver.run();

  const fs::path dir = output_dir(a.out, "reconstruction");
  fs::create_directories(dir);
  Provenance identity{{"dataset", fs::weakly_canonical(a.data).string()},
                      {"algo", to_string(cfg.algorithm)},
                      {"alpha", number(a.alpha)},
                      {"levels", std::to_string(cfg.algorithm == Algorithm::emagpie ? a.levels : 0)},
                      {"seed", std::to_string(a.seed)},
                      {"probe_init", init_name}};
  if (cfg.stop.noise_floor) identity["noise_floor"] = number(*cfg.stop.noise_floor);
  write_log_csv(dir / "log.csv", solver.log(), identity);
  Reconstruction rec{solver.probe(), solver.object(), identity};
  rec.provenance["sweeps"] = std::to_string(solver.iter());
  rec.provenance["stop_reason"] = to_string(solver.log().stop_reason);
  save_reconstruction(dir / "arrays", rec);
  if (!a.no_png) write_pngs(dir, solver.probe(), solver.object(), data);

  const auto& last = solver.log().samples.back();
  std::cout << to_string(cfg.algorithm) << ": " << solver.iter() << " sweeps, stop "
            << to_string(solver.log().stop_reason) << ", residual " << std::setprecision(6)
            << last.residual;
  if (last.mag_error) std::cout << ", magnitude error " << *last.mag_error;
  std::cout << "\n";
  if (a.certify) {
    std::size_t bad = 0;
    for (const auto& c : solver.certifications()) bad += c.ok ? 0 : 1;
    std::cout << "certification: " << (bad == 0 ? "passed" : "FAILED") << " (" << bad << " of "
              << solver.certifications().size() << " sweeps failed)\n";
    if (bad > 0) throw CertificationFailure("certification failed");
  }
  return 0;
}

// ---- compare ----

struct CompareArgs {
  std::vector<std::string> logs;
  std::string gnuplot_dir;
};

int run_compare(const CompareArgs& a) {
  if (a.logs.size() < 2) throw ConfigError("compare needs at least two logs");
  std::vector<LoadedLog> logs;
  for (const auto& p : a.logs) {
    logs.push_back(read_log_csv(p));
    if (logs.back().log.samples.empty()) throw DataError(p + ": log has no samples");
  }
  const auto key = [](const LoadedLog& l, const char* k) {
    auto it = l.identity.find(k);
    return it == l.identity.end() ? std::string("?") : it->second;
  };
  const std::string dataset0 = key(logs[0], "dataset");
  for (std::size_t i = 1; i < logs.size(); ++i) {
    if (key(logs[i], "dataset") != dataset0) {
      std::cout << "warning: " << a.logs[i] << " was run on a different dataset (" << key(logs[i], "dataset")
                << " vs " << dataset0 << ")\n";
    }
  }
  const auto& ref = logs[0].log.samples.back();
  std::cout << std::left << std::setw(32) << "log" << std::setw(12) << "algo" << std::setw(8) << "sweeps"
            << std::setw(16) << "stop" << std::setw(16) << "residual" << std::setw(16) << "mag_error"
            << std::setw(14) << "d_residual" << "d_error\n";
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const auto& s = logs[i].log.samples.back();
    std::ostringstream err, derr;
    err << std::setprecision(6);
    derr << std::setprecision(4);
    if (s.mag_error) err << *s.mag_error; else err << "-";
    if (s.mag_error && ref.mag_error) derr << *s.mag_error - *ref.mag_error; else derr << "-";
    std::cout << std::left << std::setw(32) << fs::path(a.logs[i]).parent_path().filename().string() + "/" +
                                                   fs::path(a.logs[i]).filename().string()
              << std::setw(12) << key(logs[i], "algo") << std::setw(8) << s.iter << std::setw(16)
              << to_string(logs[i].log.stop_reason) << std::setw(16) << std::setprecision(6) << s.residual
              << std::setw(16) << err.str() << std::setw(14) << std::setprecision(4)
              << s.residual - ref.residual << derr.str() << "\n";
  }
  if (!a.gnuplot_dir.empty()) {
    fs::create_directories(a.gnuplot_dir);
    for (std::size_t i = 0; i < logs.size(); ++i) {
      const fs::path out = fs::path(a.gnuplot_dir) / ("series_" + std::to_string(i) + ".dat");
      std::ofstream f(out);
      f << "# " << a.logs[i] << "\n# iter residual mag_error\n" << std::setprecision(17);
      for (const auto& s : logs[i].log.samples) {
        f << s.iter << " " << s.residual << " " << (s.mag_error ? number(*s.mag_error) : "nan") << "\n";
      }
    }
    std::cout << "gnuplot data in " << a.gnuplot_dir << "\n";
  }
  return 0;
}

// ---- certify ----

struct CertifyArgs {
  std::string data;
  std::string recon;
  double alpha = 0.05;
  int levels = 0;
  int points = 50;
  double radius = 0.1;
  std::uint64_t seed = 0;
};

int run_certify(const CertifyArgs& a) {
  const Dataset data = load_dataset(a.data);
  ComplexField probe, object;
  if (!a.recon.empty()) {
    Reconstruction rec = load_reconstruction(a.recon);
    probe = std::move(rec.probe);
    object = std::move(rec.object);
  } else {
    const auto init = make_initial_guess(data, data.truth_probe ? ProbeInit::perturb : ProbeInit::fzp, a.seed);
    probe = init.probe;
    object = init.object;
  }
  if (probe.rows() != data.geometry.probe_side() || object.rows() != data.geometry.object_side()) {
    throw DataError("reconstruction does not match the dataset geometry");
  }
  check_levels(probe.rows(), a.levels);
  Regularization reg;
  reg.alpha_object = a.alpha;
  reg.validate();

  bool ok = true;
  const auto anchors = build_anchors(probe, object, data);
  const auto agreement = check_objective_agreement(probe, object, data, anchors);
  const auto gradients = check_gradient_agreement(probe, object, data, anchors);
  std::cout << to_text(agreement) << "\n" << to_text(gradients) << "\n";
  ok = ok && agreement.ok && gradients.ok;

  Rng rng(a.seed);
  const double qs = std::sqrt(norm2_squared(probe.span()) / static_cast<double>(probe.size()));
  const double zs = std::sqrt(norm2_squared(object.span()) / static_cast<double>(object.size()));
  std::vector<TestPoint> points;
  for (int i = 0; i < a.points; ++i) {
    TestPoint p{probe, object};
    const double r = a.radius * (1.0 + i % 5);  // a few distances per batch
    for (auto& v : p.probe) v += r * qs * cplx(rng.normal(), rng.normal());
    for (auto& v : p.object) v += r * zs * cplx(rng.normal(), rng.normal());
    points.push_back(std::move(p));
  }
  const auto maj = check_majorization(points, data, anchors);
  std::cout << to_text(maj) << "\n";
  ok = ok && maj.ok;

  std::size_t failures = 0;
  double worst = -1e300;
  ComplexField patch;
  for (std::size_t k = 0; k < data.geometry.count(); ++k) {
    extract_patch(object, data.geometry, k, patch);
    const auto& rev = anchors[k].revised;
    const RealField uq = object_regularizer(probe, reg.alpha_object);
    const RealField uz = probe_regularizer(patch, reg.probe_scale());
    const ComplexField zp = magpie_object_step(probe, patch, rev, uq, a.levels, reg.epsilon_floor);
    const ComplexField qp = probe_step(probe, patch, rev, uz, reg.epsilon_floor);
    const ComplexField zt = geometric_mean_aligned(patch, zp);
    const ComplexField qt = geometric_mean_aligned(probe, qp);
    const auto report = check_joint_descent(probe, patch, rev, uq, uz, zp, qp, zt, qt);
    const bool region_ok = a.levels == 0 ? report.ok : report.after <= report.before + 1e-10 * std::max(1.0, report.before);
    failures += region_ok ? 0 : 1;
    worst = std::max(worst, (report.after - report.before) / std::max(1.0, report.before));
  }
  std::cout << "joint descent" << (a.levels > 0 ? " (surrogate decrease only, levels > 0)" : "") << ": "
            << (failures == 0 ? "ok" : "FAILED") << " in " << data.geometry.count() - failures << " of "
            << data.geometry.count() << " regions, worst relative change " << worst << "\n";
  ok = ok && failures == 0;
  if (!ok) throw CertificationFailure("certification failed");
  std::cout << "certification passed\n";
  return 0;
}

// ---- fzp-probe ----

struct FzpArgs {
  FzpParams params;
  std::string out;
};

int run_fzp(const FzpArgs& a) {
  FzpProbe probe = make_fzp_probe(a.params);
  for (const auto& w : probe.warnings) std::cerr << "warning: " << w << "\n";
  const fs::path dir = output_dir(a.out, "fzp_probe");
  fs::create_directories(dir);
  Reconstruction rec{probe.probe, ComplexField(), {}};
  rec.provenance = {{"kind", "fzp-probe"},
                    {"wavelength_m", number(a.params.wavelength)},
                    {"pixel_size_m", number(a.params.effective_pixel_size())},
                    {"lens_plane_pixel_m", number(probe.lens_plane_pixel)},
                    {"focal_length_m", number(a.params.focal_length())},
                    {"defocus_offset_m", number(a.params.defocus_offset)}};
  save_reconstruction(dir / "arrays", rec);
  write_magnitude_png(dir / "probe_magnitude.png", probe.probe);
  write_phase_png(dir / "probe_phase.png", phase(probe.probe));
  std::cout << "wrote " << dir.string() << " (f = " << a.params.focal_length() << " m, sample pixel "
            << a.params.effective_pixel_size() << " m)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blind ptychography: synthetic data, rPIE and multigrid reconstructions, certification"};
  app.set_config("--config", "", "TOML/INI file with option values (command-line flags win)");
  app.require_subcommand(1);
  std::string simd_level;
  app.add_option("--simd", simd_level, "Kernel set: scalar or avx2 (default: best available)");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Build a synthetic dataset with ground truth");
  simulate->add_option("--n", sim.config.n, "Object side in pixels")->capture_default_str();
  simulate->add_option("--m", sim.config.m, "Probe side in pixels (even)")->capture_default_str();
  simulate->add_option("--overlap", sim.config.overlap, "Overlap ratio in [0, 1)")->capture_default_str();
  simulate->add_option("--noise", sim.config.noise_percent, "Poisson noise level in percent (0 = none)")
      ->capture_default_str();
  simulate->add_option("--seed", sim.config.seed, "Random seed")->capture_default_str();
  simulate->add_option("--magnitude-image", sim.config.magnitude_image, "Image file or builtin:texture")
      ->capture_default_str();
  simulate->add_option("--phase-image", sim.config.phase_image, "Image file or builtin:shapes")
      ->capture_default_str();
  simulate->add_option("--defocus", sim.defocus, "Zone-plate defocus L_s in meters (default: from --beam-fill)");
  simulate->add_option("--beam-fill", sim.config.beam_fill, "Defocused beam diameter as a fraction of the window")
      ->capture_default_str();
  simulate->add_option("--pixel-size", sim.config.pixel_size, "Sample pixel in meters (0 = automatic)")
      ->capture_default_str();
  simulate->add_option("--calibration-probes", sim.config.calibration_probes,
                       "Poisson draws averaged per calibration step")
      ->capture_default_str();
  simulate->add_option("--out", sim.out, "Output dataset directory");

  ReconstructArgs rec;
  auto* reconstruct = app.add_subcommand("reconstruct", "Run a solver on a dataset");
  reconstruct->add_option("--data", rec.data, "Dataset directory")->required();
  reconstruct->add_option("--algo", rec.algo, "rpie, rpie-joint or emagpie")->capture_default_str();
  reconstruct->add_option("--alpha", rec.alpha, "Object regularization alpha")->capture_default_str();
  reconstruct->add_option("--levels", rec.levels, "Coarse levels for emagpie")->capture_default_str();
  reconstruct->add_option("--seed", rec.seed, "Seed for scan order and initial guess")->capture_default_str();
  reconstruct->add_flag("--certify", rec.certify, "Check majorization and descent every sweep");
  reconstruct->add_option("--window", rec.window, "Moving-average window")->capture_default_str();
  reconstruct->add_option("--patience", rec.patience, "Checks without improvement before stopping")
      ->capture_default_str();
  reconstruct->add_option("--max-iters", rec.max_iters, "Sweep limit")->capture_default_str();
  reconstruct->add_option("--floor-factor", rec.floor_factor, "Noise-floor stop factor")->capture_default_str();
  reconstruct->add_flag("--floor-stop", rec.floor_stop, "Stop below floor-factor times the ground-truth misfit");
  reconstruct->add_option("--probe-init", rec.probe_init, "auto, perturb, fzp or truth")->capture_default_str();
  reconstruct->add_option("--object-noise", rec.object_noise, "Complex noise added to the constant object guess")
      ->capture_default_str();
  reconstruct->add_flag("--no-timing", rec.no_timing, "Write elapsed_s = 0 for byte-stable logs");
  reconstruct->add_flag("--no-png", rec.no_png, "Skip PNG renderings");
  reconstruct->add_option("--out", rec.out, "Output directory");

  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "Tabulate final values of two or more logs");
  compare->add_option("logs", cmp.logs, "log.csv files")->required()->expected(2, -1);
  compare->add_option("--gnuplot", cmp.gnuplot_dir, "Directory for per-log .dat series");

  CertifyArgs cert;
  auto* certify = app.add_subcommand("certify", "Check the surrogate properties at one state");
  certify->add_option("--data", cert.data, "Dataset directory")->required();
  certify->add_option("--recon", cert.recon, "Reconstruction arrays directory (default: initial guess)");
  certify->add_option("--alpha", cert.alpha, "Object regularization alpha")->capture_default_str();
  certify->add_option("--levels", cert.levels, "Coarse levels of the object step")->capture_default_str();
  certify->add_option("--points", cert.points, "Random test points for majorization")->capture_default_str();
  certify->add_option("--radius", cert.radius, "Relative size of the test perturbations")->capture_default_str();
  certify->add_option("--seed", cert.seed, "Seed for test points")->capture_default_str();

  FzpArgs fzp;
  auto* fzp_cmd = app.add_subcommand("fzp-probe", "Generate a zone-plate probe only");
  fzp_cmd->add_option("--m", fzp.params.grid_side, "Grid side (even)")->capture_default_str();
  fzp_cmd->add_option("--wavelength", fzp.params.wavelength, "Wavelength in meters")->capture_default_str();
  fzp_cmd->add_option("--pixel-size", fzp.params.pixel_size, "Sample pixel in meters (0 = automatic)")
      ->capture_default_str();
  fzp_cmd->add_option("--radius", fzp.params.outer_radius, "Outer radius R_n in meters")->capture_default_str();
  fzp_cmd->add_option("--zone-width", fzp.params.outer_zone_width, "Outermost zone width in meters")
      ->capture_default_str();
  fzp_cmd->add_option("--stop", fzp.params.central_stop_diameter, "Central stop diameter in meters")
      ->capture_default_str();
  fzp_cmd->add_option("--defocus", fzp.params.defocus_offset, "Defocus L_s in meters")->capture_default_str();
  fzp_cmd->add_option("--out", fzp.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (!simd_level.empty()) simd::set_active(simd::parse_level(simd_level));
    if (*simulate) return run_simulate(sim, *simulate);
    if (*reconstruct) return run_reconstruct(rec);
    if (*compare) return run_compare(cmp);
    if (*certify) return run_certify(cert);
    if (*fzp_cmd) return run_fzp(fzp);
  } catch (const CertificationFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCertify;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ContractError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CalibrationError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
