#pragma once

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <string>

namespace tpadmm {

using Vec = Eigen::VectorXd;
using Index = Eigen::Index;

// Matrix-free linear operator: a forward/adjoint closure pair plus explicit
// dimensions. Operators are immutable after construction; the closures must be
// pure, so a constructed map is safe to share across threads.
struct LinearMap {
  Index domain_dim = 0;
  Index range_dim = 0;
  std::function<Vec(const Vec&)> forward;
  std::function<Vec(const Vec&)> adjoint;
  std::string tag;

  // Dimension-checked application. Throws std::invalid_argument on mismatch.
  Vec apply(const Vec& u) const;
  Vec apply_adjoint(const Vec& v) const;
};

LinearMap identity_map(Index n);
LinearMap zero_map(Index domain, Index range);
LinearMap diagonal_map(Vec d);
LinearMap scaled_map(double alpha, LinearMap inner);
// outer * inner; inner.range_dim must equal outer.domain_dim.
LinearMap compose_maps(LinearMap outer, LinearMap inner);
LinearMap from_dense(Eigen::MatrixXd M);

// Materialize by probing unit basis vectors. Guarded to domain and range
// dimensions <= 1024; intended for small direct solves and diagnostics, not
// for the iterative paths.
Eigen::MatrixXd materialize_dense(const LinearMap& map);

struct NormEstimate {
  double value = 0.0;  // estimate of ||A||_2^2
  int iterations = 0;
  bool converged = false;
};

// Power iteration on A^T A from a fixed seeded start vector, so repeated calls
// are bit-reproducible. Stops when the Rayleigh quotient is stable to a
// relative tol over consecutive sweeps; an exactly zero operator returns 0.
NormEstimate operator_norm_sq(const LinearMap& map, double tol = 1e-12,
                              int max_iter = 50000);

// Symmetric positive definite operator plus what is known about its spectrum
// from construction. analytic_min_eig, when set, is a certified lower bound
// on the smallest eigenvalue (not the eigenvalue itself).
struct SpdSystem {
  LinearMap op;
  std::string label;
  std::optional<double> analytic_min_eig;
};

SpdSystem spd_from_diagonal(Vec d, std::string label = "diagonal");

struct CgResult {
  Vec x;
  int iterations = 0;
  double residual = 0.0;  // final ||rhs - S x||
  bool converged = false;
};

// Unpreconditioned conjugate gradients; `precondition` hooks in a diagonal (or
// any SPD) preconditioner when provided. tol is relative to ||rhs|| with a
// tiny absolute floor so rhs = 0 terminates immediately. max_iter < 0 picks
// 10 n + 100.
CgResult cg_solve(const SpdSystem& system, const Vec& rhs, double tol = 1e-12,
                  int max_iter = -1, const Vec* x0 = nullptr,
                  const std::function<Vec(const Vec&)>* precondition = nullptr);

// Certified lower bound on the smallest eigenvalue. Returns the analytic
// value when the construction recorded one; otherwise runs inverse power
// iteration (CG inside) and scales the final Rayleigh quotient by 0.99.
// Throws std::runtime_error when the operator is found to be singular or
// indefinite along the way.
double min_eig_lower_bound(const SpdSystem& system, double tol = 1e-8,
                           int max_iter = 500);

}  // namespace tpadmm
