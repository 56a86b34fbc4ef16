#include "tpadmm/cli.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace tpadmm {
namespace {

enum class TaskKind { denoise, inpaint, derain, bench, diagnose };

struct Scene {
  ImageGrid observed;
  std::optional<Vec> reference;
};

std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(s);
  while (std::getline(in, part, delim)) parts.push_back(part);
  return parts;
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (...) {
    throw std::invalid_argument("cannot parse " + what + " '" + s + "'");
  }
}

long to_long(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (...) {
    throw std::invalid_argument("cannot parse " + what + " '" + s + "'");
  }
}

std::string fmtg(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

GridShape parse_synthetic(const std::string& s) {
  const auto parts = split(s, 'x');
  if (parts.empty() || parts.size() > 2)
    throw std::invalid_argument("--synthetic expects WxH or a single extent");
  const long w = to_long(parts[0], "--synthetic width");
  const long h =
      parts.size() == 2 ? to_long(parts[1], "--synthetic height") : w;
  if (w <= 0 || h <= 0 || w > 4096 || h > 4096)
    throw std::invalid_argument("--synthetic extents must lie in [1, 4096]");
  return GridShape{static_cast<Index>(w), static_cast<Index>(h), 1};
}

ImageGrid apply_noise(const ImageGrid& img, const std::string& spec,
                      unsigned seed) {
  if (spec.empty() || spec == "none") return img;
  const auto parts = split(spec, ':');
  if (parts.size() > 2)
    throw std::invalid_argument("--noise expects kind[:amplitude]");
  NoiseSpec ns;
  if (parts[0] == "uniform")
    ns.kind = NoiseSpec::Kind::uniform;
  else if (parts[0] == "gaussian")
    ns.kind = NoiseSpec::Kind::gaussian;
  else
    throw std::invalid_argument("unknown noise kind '" + parts[0] +
                                "' (uniform, gaussian, none)");
  ns.amplitude = parts.size() > 1 ? to_double(parts[1], "noise amplitude") : 0.2;
  return add_noise(img, ns, seed);
}

Scene load_scene(const RunConfig& cfg, TaskKind kind) {
  const bool has_in = !cfg.input_path.empty();
  const bool has_syn = !cfg.synthetic.empty();
  if (has_in == has_syn)
    throw std::invalid_argument(
        "exactly one of --in and --synthetic is required");
  Scene scene;
  std::string noise = cfg.noise;
  if (has_in) {
    scene.observed = read_image(cfg.input_path);
    if (!cfg.reference_path.empty()) {
      ImageGrid ref = read_image(cfg.reference_path);
      if (ref.shape.width != scene.observed.shape.width ||
          ref.shape.height != scene.observed.shape.height ||
          ref.shape.channels != scene.observed.shape.channels)
        throw std::invalid_argument(
            "--reference shape differs from the input image");
      scene.reference = std::move(ref.pixels);
    }
  } else {
    const GridShape shape = parse_synthetic(cfg.synthetic);
    if (kind == TaskKind::derain) {
      const ImageGrid clean = make_ramp_image(shape);
      scene.observed = add_streaks(
          clean, std::max<int>(2, static_cast<int>(shape.width / 4)), 0.5,
          cfg.seed);
      scene.reference = clean.pixels;
    } else {
      const ImageGrid clean = make_step_image(shape);
      scene.observed = clean;
      scene.reference = clean.pixels;
      if (noise.empty() &&
          (kind == TaskKind::denoise || kind == TaskKind::bench))
        noise = "uniform:0.2";
    }
  }
  scene.observed = apply_noise(scene.observed, noise, cfg.seed);
  return scene;
}

TaskModule build_module(const std::string& spec, GridShape shape,
                        unsigned seed) {
  const auto parts = split(spec, ':');
  if (parts.empty() || parts.size() > 2)
    throw std::invalid_argument("module spec '" + spec +
                                "' expects name[:parameter]");
  auto param = [&](double dflt) {
    return parts.size() > 1 ? to_double(parts[1], "module parameter") : dflt;
  };
  const std::string& name = parts[0];
  if (name == "identity") return make_identity_module();
  if (name == "exact") return make_exact_oracle_module();
  if (name == "box") return make_smoothing_module(SmoothingKind::box, shape);
  if (name == "gaussian")
    return make_smoothing_module(SmoothingKind::gaussian, shape, param(1.0));
  if (name == "median")
    return make_smoothing_module(SmoothingKind::median, shape, param(1.0));
  if (name == "adversarial")
    return make_adversarial_module(AdversarialMode::noise, param(1.0), seed);
  throw std::invalid_argument(
      "unknown module '" + name +
      "' (identity, exact, box, gaussian:s, median:r, adversarial[:a])");
}

NormMode parse_norm_mode(const std::string& s) {
  if (s == "auto") return NormMode::auto_mode;
  if (s == "bound") return NormMode::bound;
  if (s == "power") return NormMode::power;
  throw std::invalid_argument("--norm-mode must be auto, bound, or power");
}

FallbackKind parse_fallback(const std::string& s) {
  if (s == "cg-newton") return FallbackKind::cg_newton;
  if (s == "gd" || s == "gradient-descent")
    return FallbackKind::gradient_descent;
  throw std::invalid_argument("--fallback must be cg-newton or gd");
}

double resolve_eta(const std::string& s) {
  return s == "auto" ? -1.0 : to_double(s, "--eta");
}

BaselineConfig to_baseline(const RunConfig& cfg, double tau,
                           const Scene& scene) {
  BaselineConfig bc;
  bc.beta = cfg.beta;
  bc.tau = tau;
  bc.max_outer = cfg.max_outer;
  bc.tol_violation = cfg.tol_violation;
  bc.tol_change = cfg.tol_change;
  bc.psnr_reference = scene.reference;
  return bc;
}

TpadmmConfig to_tpadmm(const RunConfig& cfg, Index n, const Scene& scene) {
  TpadmmConfig tc;
  tc.beta = cfg.beta;
  if (cfg.tau > 0.0) tc.weight = ProximalWeight::scaled_identity(n, cfg.tau);
  tc.eta = resolve_eta(cfg.eta);
  tc.zeta0 = cfg.zeta0;
  tc.blend_c = cfg.blend_c;
  tc.t_max = cfg.t_max;
  tc.xi0 = cfg.xi0;
  tc.max_outer = cfg.max_outer;
  tc.tol_violation = cfg.tol_violation;
  tc.tol_change = cfg.tol_change;
  tc.norm_mode = parse_norm_mode(cfg.norm_mode);
  tc.fallback = parse_fallback(cfg.fallback);
  tc.psnr_reference = scene.reference;
  return tc;
}

SolveTrace run_solver(const RunConfig& cfg, const SeparableProblem& problem,
                      GridShape shape, const Scene& scene, std::ostream& out) {
  if (cfg.solver != SolverKind::tpadmm && cfg.module != "identity")
    throw std::invalid_argument("--module applies to the tpadmm solver only");
  const IterateW init = IterateW::zeros(problem);
  switch (cfg.solver) {
    case SolverKind::admm:
      return admm_solve(problem, init, to_baseline(cfg, cfg.tau, scene));
    case SolverKind::ladmm: {
      double tau = cfg.tau;
      if (tau <= 0.0) {
        tau = 1.05 * std::max(operator_norm_sq(problem.A).value, 1e-12);
        out << "note: --tau unset for ladmm; using 1.05 * ||A||_2^2 = "
            << fmtg(tau) << "\n";
      }
      return ladmm_solve(problem, init, to_baseline(cfg, tau, scene));
    }
    case SolverKind::padmm:
      return proximal_admm_solve(
          problem, init, to_baseline(cfg, cfg.tau > 0.0 ? cfg.tau : 1.0, scene));
    case SolverKind::tpadmm: {
      const TaskModule module = build_module(cfg.module, shape, cfg.seed);
      return tpadmm_solve(problem, init, module,
                          to_tpadmm(cfg, problem.n(), scene));
    }
  }
  throw std::logic_error("unhandled solver kind");
}

void print_summary(std::ostream& out, const std::string& task,
                   const SolveTrace& trace) {
  out << task << ": solver=" << trace.solver
      << " iterations=" << trace.records.size()
      << " termination=" << termination_name(trace.termination);
  if (!trace.records.empty()) {
    const TraceRecord& last = trace.records.back();
    out << " objective=" << fmtg(last.objective)
        << " violation=" << fmtg(last.violation);
    if (last.psnr) out << " psnr=" << fmtg(*last.psnr);
  }
  out << "\n";
}

int finish_run(const RunConfig& cfg, const std::string& task, GridShape shape,
               const SolveTrace& trace, const Vec& solution, std::ostream& out,
               std::ostream& err) {
  if (!cfg.out_path.empty())
    write_image(ImageGrid::from_vec(shape, solution, true), cfg.out_path);
  if (!cfg.trace_path.empty()) write_trace(trace, cfg.trace_path);
  print_summary(out, task, trace);
  if (trace.termination != Termination::tol_met) {
    err << "error: " << task << " stopped at max_outer=" << cfg.max_outer
        << " without meeting --tol-violation/--tol-change\n";
    return 3;
  }
  return 0;
}

int run_denoise(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Scene scene = load_scene(cfg, TaskKind::denoise);
  const SeparableProblem problem = build_tv_denoise(scene.observed, cfg.mu);
  const SolveTrace trace =
      run_solver(cfg, problem, scene.observed.shape, scene, out);
  return finish_run(cfg, "denoise", scene.observed.shape, trace,
                    trace.final_w.x, out, err);
}

int run_inpaint(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Scene scene = load_scene(cfg, TaskKind::inpaint);
  const std::string spec = cfg.mask.empty() ? "ratio:0.4" : cfg.mask;
  const auto parts = split(spec, ':');
  if (parts.size() < 2 || parts.size() > 3 || parts[0] != "ratio")
    throw std::invalid_argument("--mask expects ratio:R[:seed]");
  const double ratio = to_double(parts[1], "mask ratio");
  const unsigned mask_seed =
      parts.size() == 3
          ? static_cast<unsigned>(to_long(parts[2], "mask seed"))
          : cfg.seed;
  const auto keep =
      random_missing_mask(scene.observed.size(), ratio, mask_seed);
  const SeparableProblem problem =
      build_inpaint(scene.observed, keep, cfg.mu);
  const SolveTrace trace =
      run_solver(cfg, problem, scene.observed.shape, scene, out);
  return finish_run(cfg, "inpaint", scene.observed.shape, trace,
                    trace.final_w.x, out, err);
}

int run_derain(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Scene scene = load_scene(cfg, TaskKind::derain);
  const GridShape shape = scene.observed.shape;
  const TaskModule module_b = build_module(cfg.module, shape, cfg.seed);
  const TaskModule module_r = make_identity_module();
  const MultiblockResult result =
      multiblock_rain_solve(scene.observed, cfg.mu1, cfg.mu2,
                            to_tpadmm(cfg, shape.size(), scene), module_b,
                            module_r);
  if (!cfg.rain_path.empty()) write_image(result.rain, cfg.rain_path);
  return finish_run(cfg, "derain", shape, result.trace,
                    result.background.pixels, out, err);
}

int run_bench(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Scene scene = load_scene(cfg, TaskKind::bench);
  const SeparableProblem problem = build_tv_denoise(scene.observed, cfg.mu);
  struct Cell {
    std::string name;
    SolverKind solver;
    std::string module;
  };
  const std::vector<Cell> cells = {
      {"admm", SolverKind::admm, "identity"},
      {"ladmm", SolverKind::ladmm, "identity"},
      {"padmm", SolverKind::padmm, "identity"},
      {"tpadmm-identity", SolverKind::tpadmm, "identity"},
      {"tpadmm-exact", SolverKind::tpadmm, "exact"},
      {"tpadmm-box", SolverKind::tpadmm, "box"},
      {"tpadmm-gaussian-1", SolverKind::tpadmm, "gaussian:1"},
      {"tpadmm-median-1", SolverKind::tpadmm, "median:1"},
  };
  if (!cfg.out_dir.empty())
    std::filesystem::create_directories(cfg.out_dir);

  out << std::left << std::setw(20) << "cell" << std::right << std::setw(7)
      << "iters" << "  " << std::left << std::setw(9) << "term" << std::right
      << std::setw(14) << "objective" << std::setw(12) << "violation"
      << std::setw(8) << "psnr" << std::setw(12) << "wall_ms" << "\n";
  bool all_converged = true;
  std::vector<std::string> stalled;
  for (const Cell& cell : cells) {
    RunConfig c = cfg;
    c.solver = cell.solver;
    c.module = cell.module;
    const SolveTrace trace =
        run_solver(c, problem, scene.observed.shape, scene, out);
    if (!cfg.out_dir.empty())
      write_trace(trace, (std::filesystem::path(cfg.out_dir) /
                          (cell.name + ".csv"))
                             .string());
    double wall = 0.0;
    for (const TraceRecord& r : trace.records) wall += r.wall_ms;
    const TraceRecord& last = trace.records.back();
    out << std::left << std::setw(20) << cell.name << std::right
        << std::setw(7) << trace.records.size() << "  " << std::left
        << std::setw(9) << termination_name(trace.termination) << std::right
        << std::setw(14) << fmtg(last.objective) << std::setw(12)
        << fmtg(last.violation) << std::setw(8)
        << (last.psnr ? fmtg(*last.psnr) : std::string("-")) << std::setw(12)
        << fmtg(wall) << "\n";
    if (trace.termination != Termination::tol_met) {
      all_converged = false;
      stalled.push_back(cell.name);
    }
  }
  if (!all_converged) {
    err << "error: cells stopped at max_outer:";
    for (const auto& name : stalled) err << " " << name;
    err << "\n";
    return 3;
  }
  return 0;
}

int run_diagnose(const RunConfig& cfg, std::ostream& out) {
  const Scene scene = load_scene(cfg, TaskKind::diagnose);
  const SeparableProblem problem = build_tv_denoise(scene.observed, cfg.mu);
  const Index n = problem.n();
  if (!(cfg.beta > 0.0)) throw std::invalid_argument("--beta must be positive");
  const double tau = cfg.tau > 0.0 ? cfg.tau : std::sqrt(2.0);
  const ProximalWeight weight = ProximalWeight::scaled_identity(n, tau);
  const double beta = cfg.beta;

  const double a_norm_sq = operator_norm_sq(problem.A).value;
  SpdSystem prox_system;
  prox_system.op = LinearMap{
      n, n,
      [weight, beta, A = problem.A](const Vec& x) {
        return (weight.wbar_apply(x) + beta * A.apply_adjoint(A.apply(x)))
            .eval();
      },
      [weight, beta, A = problem.A](const Vec& x) {
        return (weight.wbar_apply(x) + beta * A.apply_adjoint(A.apply(x)))
            .eval();
      },
      "WtW+beta*AtA"};
  prox_system.label = "WtW+beta*AtA";
  prox_system.analytic_min_eig = tau * tau;
  const double lam_min = min_eig_lower_bound(prox_system);
  const double n_power =
      std::sqrt(operator_norm_sq(normal_composite_map(problem, weight, beta))
                    .value);

  out << std::setprecision(12);
  out << "instance: n=" << n << " l=" << problem.l() << " beta=" << beta
      << " W=" << tau << "*I\n";
  out << "||A||_2^2 (power estimate): " << a_norm_sq << "\n";
  out << "lambda_min lower bound of W^T W + beta A^T A: " << lam_min << "\n";
  out << "||N||_2 (bound mode): " << 1.0 / std::sqrt(lam_min) << "\n";
  out << "||N||_2 (power estimate): " << n_power << "\n";
  try {
    out << "eta_max (bound mode): "
        << eta_upper_bound(problem, weight, beta, NormMode::bound) << "\n";
  } catch (const std::invalid_argument& e) {
    out << "eta_max (bound mode): unavailable (" << e.what() << ")\n";
  }
  out << "eta_max (power mode): "
      << eta_upper_bound(problem, weight, beta, NormMode::power) << "\n";
  return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err) {
  CLI::App app{"Error-controlled ADMM toolkit for separable imaging problems"};
  app.name("tpadmm");
  app.require_subcommand(1);
  RunConfig cfg;

  const std::map<std::string, SolverKind> solver_names{
      {"admm", SolverKind::admm},
      {"ladmm", SolverKind::ladmm},
      {"padmm", SolverKind::padmm},
      {"tpadmm", SolverKind::tpadmm}};

  auto add_scene = [&](CLI::App* s, bool with_noise) {
    s->add_option("--in", cfg.input_path, "input image (PGM P2/P5, PPM P3/P6)");
    s->add_option("--synthetic", cfg.synthetic,
                  "generate a WxH test scene instead of --in");
    s->add_option("--reference", cfg.reference_path,
                  "clean image for the PSNR column");
    s->add_option("--seed", cfg.seed,
                  "seed for synthetic scenes, noise, masks, modules");
    if (with_noise)
      s->add_option("--noise", cfg.noise,
                    "kind[:amplitude] of added noise "
                    "(uniform:0.2, gaussian:0.05, none)");
  };
  auto add_solver = [&](CLI::App* s, bool with_choice) {
    if (with_choice)
      s->add_option("--solver", cfg.solver, "admm | ladmm | padmm | tpadmm")
          ->transform(CLI::CheckedTransformer(solver_names, CLI::ignore_case));
    s->add_option("--beta", cfg.beta, "penalty parameter (> 0)");
    s->add_option("--tau", cfg.tau,
                  "ladmm linearization / padmm proximal coefficient / "
                  "tpadmm weight scale");
    s->add_option("--eta", cfg.eta,
                  "acceptance factor in (0, eta_max), or 'auto'");
    s->add_option("--zeta0", cfg.zeta0, "initial blending weight in [0, 1]");
    s->add_option("--C", cfg.blend_c,
                  "geometric decay of the blending weight, in (0, 0.5]");
    s->add_option("--t-max", cfg.t_max,
                  "blending attempts before the fallback is forced");
    s->add_option("--xi0", cfg.xi0,
                  "accepted for configuration round-trips; unused");
    s->add_option("--max-outer", cfg.max_outer, "outer iteration cap");
    s->add_option("--tol-violation", cfg.tol_violation,
                  "stopping tolerance on ||Ax+By-c||");
    s->add_option("--tol-change", cfg.tol_change,
                  "stopping tolerance on the iterate-gap seminorm");
    s->add_option("--norm-mode", cfg.norm_mode,
                  "eta_max estimation: auto | bound | power");
    s->add_option("--fallback", cfg.fallback,
                  "subproblem fallback: cg-newton | gd");
  };
  auto add_module = [&](CLI::App* s) {
    s->add_option("--module", cfg.module,
                  "identity | exact | box | gaussian:s | median:r | "
                  "adversarial[:a]");
  };
  auto add_outputs = [&](CLI::App* s) {
    s->add_option("--out", cfg.out_path, "write the solution image here");
    s->add_option("--trace", cfg.trace_path,
                  "write the per-iteration CSV here");
  };

  CLI::App* denoise =
      app.add_subcommand("denoise", "total-variation denoising");
  add_scene(denoise, true);
  add_solver(denoise, true);
  add_module(denoise);
  add_outputs(denoise);
  denoise->add_option("--mu", cfg.mu, "l1 weight of the gradient term");

  CLI::App* inpaint = app.add_subcommand("inpaint", "masked reconstruction");
  add_scene(inpaint, true);
  add_solver(inpaint, true);
  add_module(inpaint);
  add_outputs(inpaint);
  inpaint->add_option("--mu", cfg.mu, "l1 weight of the gradient term");
  inpaint->add_option("--mask", cfg.mask, "erasure spec ratio:R[:seed]");

  CLI::App* derain =
      app.add_subcommand("derain", "two-block streak separation");
  add_scene(derain, true);
  add_solver(derain, false);
  add_module(derain);
  add_outputs(derain);
  derain->add_option("--mu1", cfg.mu1,
                     "l1 weight of the background gradient term");
  derain->add_option("--mu2", cfg.mu2, "l1 weight of the streak layer");
  derain->add_option("--rain", cfg.rain_path,
                     "write the separated streak image here");

  CLI::App* bench =
      app.add_subcommand("bench", "solver-by-module comparison matrix");
  add_scene(bench, true);
  add_solver(bench, false);
  bench->add_option("--mu", cfg.mu, "l1 weight of the gradient term");
  bench->add_option("--out-dir", cfg.out_dir,
                    "write one CSV trace per matrix cell");

  CLI::App* diagnose = app.add_subcommand(
      "diagnose", "print the instance's acceptance constants");
  add_scene(diagnose, false);
  diagnose->add_option("--mu", cfg.mu, "l1 weight of the gradient term");
  diagnose->add_option("--beta", cfg.beta, "penalty parameter (> 0)");
  diagnose->add_option("--tau", cfg.tau, "weight scale (default sqrt(2))");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    if (app.got_subcommand(denoise)) return run_denoise(cfg, out, err);
    if (app.got_subcommand(inpaint)) return run_inpaint(cfg, out, err);
    if (app.got_subcommand(derain)) return run_derain(cfg, out, err);
    if (app.got_subcommand(bench)) return run_bench(cfg, out, err);
    if (app.got_subcommand(diagnose)) return run_diagnose(cfg, out);
    err << "error: no subcommand selected\n";
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace tpadmm
