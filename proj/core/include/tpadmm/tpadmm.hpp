#pragma once

#include "tpadmm/modules.hpp"
#include "tpadmm/trace.hpp"

#include <utility>

namespace tpadmm {

// How the norm of the composite map
//   N = Q (W^T W + beta A^T A)^{-1} [W^T  sqrt(beta) A^T]
// is estimated when sizing the acceptance factor. `bound` uses the analytic
// estimate ||N||_2 <= 1 / sqrt(lambda_min(W^T W + beta A^T A)), valid when
// ||Q||_2 <= 1 (validated); `power` runs power iteration on N itself;
// `auto_mode` prefers the bound and falls back to power iteration when the
// bound's validity check fails.
enum class NormMode { auto_mode, bound, power };

enum class FallbackKind { cg_newton, gradient_descent };

// Acceptance machinery of the error-controlled solver. eta must stay strictly
// below eta_max; gamma = lipschitz * ||N||_2 (power estimate) accompanies the
// residual recursion check.
struct ErrorController {
  double eta = 0.0;
  double eta_max = 0.0;
  double gamma = 0.0;
  double abs_floor = 1e-12;
  std::vector<double> residual_history;
};

struct TpadmmConfig {
  double beta = 1.0;
  // Proximal weight W; defaults to sqrt(2) * identity when unset. A zero
  // weight is admitted only when beta A^T A alone is positive definite, which
  // is probed at solve time.
  std::optional<ProximalWeight> weight;
  double eta = -1.0;  // <= 0 requests auto: 0.9 * eta_max
  double zeta0 = 1.0;
  double blend_c = 0.1;  // geometric decay of the blending weight
  int t_max = 20;
  // Listed by the scheme this solver reproduces but never consumed by it;
  // accepted so configurations round-trip, ignored otherwise.
  double xi0 = 0.0;
  int max_outer = 500;
  double tol_violation = 1e-10;
  double tol_change = 1e-10;
  double abs_floor = 1e-12;
  NormMode norm_mode = NormMode::auto_mode;
  FallbackKind fallback = FallbackKind::cg_newton;
  // Inner CG runs at min(cg_tol_cap, 0.01 * eta * reference residual),
  // relative, never below cg_tol_floor.
  double cg_tol_cap = 1e-10;
  double cg_tol_floor = 1e-14;
  std::optional<Vec> psnr_reference;
};

struct InnerReport {
  std::string accepted_source;  // "module" | "blend:t" | "fallback-forced"
  int t_used = 0;
  double residual_before = 0.0;  // ||e_k(x_hat_prev)||, the acceptance reference
  double residual_after = 0.0;   // ||e_k(accepted candidate)||
};

struct FallbackResult {
  Vec x;
  double residual = 0.0;  // measured ||e_k(x)||
  int iterations = 0;
};

struct RatePoint {
  int k_count = 0;
  double gap_certificate = 0.0;       // K * min of squared gap seminorms
  double residual_certificate = 0.0;  // K * min of squared accepted residuals
};

// The closed-form factor sqrt(2 alpha) / (sqrt(2 alpha) + lipschitz * n_norm).
double eta_bound_from_norm(double alpha, double lipschitz, double n_norm);

// The composite map N itself, applications of which solve against
// W^T W + beta A^T A by CG at cg_tol.
LinearMap normal_composite_map(const SeparableProblem& problem,
                               const ProximalWeight& weight, double beta,
                               double cg_tol = 1e-12);

double eta_upper_bound(const SeparableProblem& problem,
                       const ProximalWeight& weight, double beta,
                       NormMode mode = NormMode::auto_mode);

// Builds the controller for an instance: eta_max per norm_mode, gamma from the
// power estimate, eta from the request (or 0.9 * eta_max when unset). Throws
// std::invalid_argument when the requested eta is not strictly inside
// (0, eta_max), citing the admissible bound.
ErrorController make_error_controller(const SeparableProblem& problem,
                                      const ProximalWeight& weight, double beta,
                                      std::optional<double> eta_request,
                                      NormMode mode = NormMode::auto_mode,
                                      double abs_floor = 1e-12);

// s^k = beta A^T (-B y^k + c + lambda^k / beta) + W^T W x^k.
Vec compute_sk(const SeparableProblem& problem, const ProximalWeight& weight,
               double beta, const Vec& y_k, const Vec& lambda_k, const Vec& x_k);

// F^k(x) = (W^T W + beta A^T A)^{-1} (s^k - Q^T grad l(Q x)), solved by CG at
// the given relative tolerance, warm-started at x.
Vec fk_apply(const SeparableProblem& problem, const ProximalWeight& weight,
             double beta, const Vec& s_k, const Vec& x, double cg_tol = 1e-12);

// e_k(x) = grad l(Q F^k(x)) - grad l(Q x).
Vec ek_residual(const SeparableProblem& problem, const ProximalWeight& weight,
                double beta, const Vec& s_k, const Vec& x,
                double cg_tol = 1e-12);

// Solves the k-th x-subproblem until ||e_k(x)|| <= target_residual (absolute).
// Quadratic losses go through one SPD solve with the CG tolerance mapped from
// the target; otherwise damped Newton-CG or gradient descent per `kind`. The
// achieved residual is verified, tightening and retrying a few times before
// throwing std::runtime_error with the best residual reached.
FallbackResult fallback_solve(const SeparableProblem& problem,
                              const ProximalWeight& weight, double beta,
                              const Vec& s_k, const Vec& x_k,
                              double target_residual,
                              FallbackKind kind = FallbackKind::cg_newton);

// One acceptance round: evaluates the module proposal once, accepts the first
// candidate with ||e_k|| <= eta * ||e_k(x_hat_prev)||, otherwise blends the
// proposal toward the fallback solution with geometrically shrinking weight,
// and after t_max rejections returns the fallback solution itself. Appends
// the accepted residual to controller.residual_history.
std::pair<Vec, InnerReport> inner_select(
    const SeparableProblem& problem, const ProximalWeight& weight, double beta,
    const Vec& s_k, const Vec& x_k, const Vec& x_hat_prev, int k,
    const TaskModule& module, ErrorController& controller,
    const TpadmmConfig& config);

// Outer loop: s^k, module-driven acceptance, x^{k+1} = F^k(x_hat^{k+1}),
// proximal y-update, dual step. The trace's lambda_gap column is the m_norm
// of consecutive stacked iterates under the configured weight.
SolveTrace tpadmm_solve(const SeparableProblem& problem, const IterateW& init,
                        const TaskModule& module, const TpadmmConfig& config);

// Residual recursion check on accepted iterates:
//   res[k] <= eta * (res[k-1] + gamma * gap[k-1]) + 1e-9  for all k >= 1.
bool prop1_check(const SolveTrace& trace, const ErrorController& controller);

// Running certificates (K, K * min_k gap_k^2, K * min_k res_k^2) over the
// first K records, K = 1..len; both series stay bounded on convergent runs.
std::vector<RatePoint> rate_series(const SolveTrace& trace);

// lambda_bar^k = lambda^k - beta (A x^{k+1} + B y^k - c); satisfies
// lambda_bar^k = lambda^{k+1} + beta B (y^{k+1} - y^k).
Vec lambda_bar(const SeparableProblem& problem, double beta, const Vec& x_next,
               const Vec& y_k, const Vec& lambda_k);

}  // namespace tpadmm
