#pragma once

#include "tpadmm/baselines.hpp"
#include "tpadmm/image_io.hpp"
#include "tpadmm/tpadmm.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace tpadmm {

enum class SolverKind { admm, ladmm, padmm, tpadmm };

// One-to-one with the command-line flags; string fields keep their flag
// grammar (eta: "auto" or a number; module: "gaussian:1.0"; noise:
// "uniform:0.2"; mask: "ratio:0.4[:seed]"; synthetic: "WxH").
struct RunConfig {
  SolverKind solver = SolverKind::tpadmm;
  double beta = 1.0;
  // ladmm: linearization parameter (0 = estimate ||A||_2^2 and pad it);
  // padmm: proximal parameter (0 = 1); tpadmm: W = tau * identity
  // (0 = sqrt(2)).
  double tau = 0.0;
  std::string eta = "auto";
  double zeta0 = 1.0;
  double blend_c = 0.1;
  int t_max = 20;
  double xi0 = 0.0;
  double mu = 1e-4;
  double mu1 = 1e-2;
  double mu2 = 1e-1;
  int max_outer = 500;
  double tol_violation = 1e-10;
  double tol_change = 1e-10;
  std::string module = "identity";
  std::string norm_mode = "auto";
  std::string fallback = "cg-newton";
  unsigned seed = 0;
  std::string noise;
  std::string mask;
  std::string input_path;
  std::string synthetic;
  std::string reference_path;
  std::string out_path;
  std::string rain_path;
  std::string trace_path;
  std::string out_dir;
};

// The whole CLI behind main(): args exclude the program name. Subcommands
// denoise | inpaint | derain | bench | diagnose. Returns 0 on success, 2 on
// configuration or precondition errors (message on err names the violated
// precondition), 3 when a solve stops at max_outer without meeting its
// tolerances (outputs and traces are still written).
int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err);

}  // namespace tpadmm
