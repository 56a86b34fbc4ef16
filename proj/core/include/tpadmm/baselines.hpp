#pragma once

#include "tpadmm/trace.hpp"

namespace tpadmm {

enum class XInner { direct_small, cg };

struct BaselineConfig {
  double beta = 1.0;
  // ladmm: linearization parameter, validated against ||A||_2^2.
  // proximal admm: proximal parameter, any positive value. admm ignores it.
  double tau = 0.0;
  int max_outer = 500;
  double tol_violation = 1e-10;
  double tol_change = 1e-10;
  XInner x_inner = XInner::cg;
  double inner_tol = 1e-12;
  int inner_max_iter = -1;
  // When set, every record carries psnr of the current x against this vector.
  std::optional<Vec> psnr_reference;
};

// Exact two-block scheme: full x-minimization, proximal y-update, dual step
// lambda <- lambda - beta (Ax + By - c). Stops when the violation and the
// consecutive-change seminorm both fall under their tolerances.
SolveTrace admm_solve(const SeparableProblem& problem, const IterateW& init,
                      const BaselineConfig& config);

// Linearized x-update: argmin_x f(x) + (tau beta / 2) ||x - x^k + d^k/tau||^2
// with d^k = A^T (A x^k + B y^k - c - lambda^k / beta). Requires
// tau >= ||A||_2^2 so the implicit weight tau beta I - beta A^T A stays PSD.
SolveTrace ladmm_solve(const SeparableProblem& problem, const IterateW& init,
                       const BaselineConfig& config);

// x-update with an added proximal term (tau/2) ||x - x^k||^2 on top of the
// full augmented Lagrangian.
SolveTrace proximal_admm_solve(const SeparableProblem& problem,
                               const IterateW& init,
                               const BaselineConfig& config);

}  // namespace tpadmm
