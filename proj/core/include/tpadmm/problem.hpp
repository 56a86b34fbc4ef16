#pragma once

#include "tpadmm/linops.hpp"

#include <array>

namespace tpadmm {

// Smooth convex loss l together with its declared moduli:
//   alpha ||z1-z2||^2 <= (z1-z2)^T (grad l(z1) - grad l(z2))
//   ||grad l(z1) - grad l(z2)|| <= lipschitz ||z1-z2||
// quadratic_shift is set when l(z) = 0.5 ||z - shift||^2; solvers use it to
// take direct normal-equation paths instead of iterating on the gradient.
struct SmoothLoss {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  double alpha = 0.0;
  double lipschitz = 0.0;
  std::optional<Vec> quadratic_shift;
};

SmoothLoss quadratic_loss(Vec shift);
// 0.5 ||z - shift||^2 + delta * sum softplus(z_i): strongly convex (alpha = 1)
// with lipschitz = 1 + delta/4, and genuinely non-quadratic. Exercises the
// gradient-based subproblem paths.
SmoothLoss softplus_augmented_loss(Vec shift, double delta);

struct ProbeReport {
  bool ok = true;
  std::string detail;
};

// Cross-checks the declared moduli and the gradient (finite differences) on
// seeded random probe pairs. Meant for tests and instance validation.
ProbeReport validate_smooth_loss(const SmoothLoss& loss, Index dim, int pairs,
                                 unsigned seed);

// Weight W of the proximal term 0.5 ||W (x - x^k)||^2. wbar_apply computes
// W^T W x. identity_scale records tau when W = tau * I, which makes
// min-eigenvalue bounds of W^T W + beta A^T A analytic.
struct ProximalWeight {
  LinearMap W;
  bool is_zero = false;
  std::optional<double> identity_scale;

  static ProximalWeight zero_weight(Index n);
  static ProximalWeight scaled_identity(Index n, double tau);
  static ProximalWeight general(LinearMap W);

  Vec w_apply(const Vec& x) const;
  Vec wbar_apply(const Vec& x) const;
};

// min_x,y  l(Qx) + g(y)  subject to  A x + B y = c.
// g enters through its value and scaled proximal map prox_{theta g}.
// btb_identity_scale holds sigma^2 when B^T B = sigma^2 I; the y-updates
// require it (they complete the square and call g_prox), and solvers reject
// problems that do not declare it.
struct SeparableProblem {
  SmoothLoss loss;
  LinearMap Q;  // R^n -> R^p
  std::function<double(const Vec&)> g_value;
  std::function<Vec(const Vec&, double)> g_prox;
  LinearMap A;  // R^n -> R^l
  LinearMap B;  // R^m -> R^l
  Vec c;        // R^l
  std::optional<double> btb_identity_scale;

  Index n() const { return A.domain_dim; }
  Index m() const { return B.domain_dim; }
  Index l() const { return c.size(); }
  Index p() const { return Q.range_dim; }

  // Dimension-chain check; throws std::invalid_argument naming the mismatch.
  void validate() const;
};

struct IterateW {
  Vec x, y, lambda;
  static IterateW zeros(const SeparableProblem& problem);
};

double objective(const SeparableProblem& problem, const Vec& x, const Vec& y);
double constraint_violation(const SeparableProblem& problem, const Vec& x,
                            const Vec& y);
double aug_lagrangian(const SeparableProblem& problem, const IterateW& w,
                      double beta);

// Seminorm sqrt(||W x||^2 + beta ||B y||^2 + ||lambda||^2 / beta) of the
// stacked iterate; beta must be positive.
double m_norm(const IterateW& w, const ProximalWeight& weight, double beta,
              const LinearMap& B);

// Blocks of the variational-inequality operator at w:
//   (Q^T grad l(Qx) - A^T lambda, -B^T lambda, A x + B y - c).
std::array<Vec, 3> vi_operator_f(const SeparableProblem& problem,
                                 const IterateW& w);

// Shared y-update: argmin_y g(y) - lambda^T (Ax + By - c)
//                         + (beta/2) ||Ax + By - c||^2,
// evaluated as g_prox(B^T t / sigma^2, 1/(beta sigma^2)) with
// t = c - A x + lambda / beta. Requires btb_identity_scale.
Vec prox_y_step(const SeparableProblem& problem, double beta, const Vec& x,
                const Vec& lambda);

}  // namespace tpadmm
