#pragma once

#include "tpadmm/problem.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <memory>

namespace tpadmm {
namespace detail {

struct InnerStats {
  int iterations = 0;
  double residual = 0.0;  // linear-solve residual, or final gradient norm
  bool converged = true;
};

// Shared x-subproblem engine:
//   minimize  phi(x) = l(Q x) + 0.5 x^T P x - s^T x
// with P symmetric positive semidefinite and phi strongly convex (callers
// guarantee this through the loss or through P). Constructed once per outer
// solve; s changes every iteration, everything else is fixed, so the normal
// operator and any dense factorization are cached here.
class XSubproblem {
 public:
  XSubproblem(const SeparableProblem& problem, SpdSystem P, bool direct_small)
      : problem_(problem), P_(std::move(P)) {
    const LinearMap& Q = problem_.Q;
    auto p_op = P_.op;
    auto q_fwd = Q.forward, q_adj = Q.adjoint;
    LinearMap normal_op{
        Q.domain_dim, Q.domain_dim,
        [p_op, q_fwd, q_adj](const Vec& u) {
          return Vec(q_adj(q_fwd(u)) + p_op.forward(u));
        },
        [p_op, q_fwd, q_adj](const Vec& u) {
          return Vec(q_adj(q_fwd(u)) + p_op.forward(u));
        },
        "QtQ+" + P_.label};
    normal_ = SpdSystem{std::move(normal_op), "QtQ+" + P_.label,
                        P_.analytic_min_eig};
    if (problem_.loss.quadratic_shift) {
      qtb_ = Q.apply_adjoint(*problem_.loss.quadratic_shift);
      if (direct_small && Q.domain_dim <= 1024) {
        Eigen::MatrixXd M = materialize_dense(normal_.op);
        factor_ = std::make_shared<Eigen::LDLT<Eigen::MatrixXd>>(M);
        if (factor_->info() != Eigen::Success) {
          throw std::runtime_error("XSubproblem: dense factorization failed");
        }
      }
    }
  }

  bool quadratic() const { return problem_.loss.quadratic_shift.has_value(); }
  const SpdSystem& normal_system() const { return normal_; }
  const Vec& qtb() const { return qtb_; }

  Vec grad_phi(const Vec& x, const Vec& s) const {
    return problem_.Q.apply_adjoint(problem_.loss.gradient(problem_.Q.apply(x))) +
           P_.op.apply(x) - s;
  }

  double phi(const Vec& x, const Vec& s) const {
    return problem_.loss.value(problem_.Q.apply(x)) +
           0.5 * x.dot(P_.op.apply(x)) - s.dot(x);
  }

  // Quadratic-loss path: (Q^T Q + P) x = Q^T b + s, by cached dense
  // factorization or CG at a relative tolerance.
  Vec solve_quadratic(const Vec& s, double rel_tol, InnerStats* stats,
                      const Vec* warm = nullptr, int max_iter = -1) const {
    if (!quadratic()) {
      throw std::logic_error("XSubproblem: quadratic path on a non-quadratic loss");
    }
    Vec rhs = qtb_ + s;
    if (factor_) {
      Vec x = factor_->solve(rhs);
      if (stats) {
        stats->iterations = 0;
        stats->residual = (rhs - normal_.op.apply(x)).norm();
        stats->converged = true;
      }
      return x;
    }
    CgResult r = cg_solve(normal_, rhs, rel_tol, max_iter, warm);
    if (stats) {
      stats->iterations = r.iterations;
      stats->residual = r.residual;
      stats->converged = r.converged;
    }
    return r.x;
  }

  // General path: damped Newton with finite-difference Hessian products and a
  // CG inner solve, run until ||grad phi|| <= grad_target.
  Vec minimize_newton(const Vec& s, double grad_target, InnerStats* stats,
                      const Vec* warm = nullptr, int max_iter = 200) const {
    Vec x = warm ? *warm : Vec(Vec::Zero(problem_.n()));
    double gn = 0.0;
    int it = 0;
    for (; it < max_iter; ++it) {
      Vec g = grad_phi(x, s);
      gn = g.norm();
      if (gn <= grad_target) break;
      Vec d = newton_direction(x, s, g);
      double slope = g.dot(d);
      if (slope >= 0.0) d = -g, slope = -gn * gn;  // fall back to steepest descent
      double base = phi(x, s);
      double step = 1.0;
      for (int ls = 0; ls < 40; ++ls) {
        if (phi(x + step * d, s) <= base + 1e-4 * step * slope) break;
        step *= 0.5;
      }
      x += step * d;
    }
    if (stats) {
      stats->iterations = it;
      stats->residual = gn;
      stats->converged = gn <= grad_target;
    }
    return x;
  }

  // Fixed-step gradient descent at 1/L_phi, the cheap robust alternative.
  Vec minimize_gradient(const Vec& s, double grad_target, InnerStats* stats,
                        const Vec* warm = nullptr, int max_iter = 200000) const {
    double step = 1.0 / lipschitz_phi();
    Vec x = warm ? *warm : Vec(Vec::Zero(problem_.n()));
    double gn = 0.0;
    int it = 0;
    for (; it < max_iter; ++it) {
      Vec g = grad_phi(x, s);
      gn = g.norm();
      if (gn <= grad_target) break;
      x -= step * g;
    }
    if (stats) {
      stats->iterations = it;
      stats->residual = gn;
      stats->converged = gn <= grad_target;
    }
    return x;
  }

  double lipschitz_phi() const {
    if (lip_phi_ == 0.0) {
      lip_phi_ = problem_.loss.lipschitz * operator_norm_sq(problem_.Q).value +
                 operator_norm_sq(P_.op).value;
      if (lip_phi_ <= 0.0) lip_phi_ = 1.0;
    }
    return lip_phi_;
  }

 private:
  Vec newton_direction(const Vec& x, const Vec& s, const Vec& g) const {
    // Finite-difference Hessian-vector products around x.
    double xscale = 1.0 + x.norm();
    auto hv = [this, &x, &s, &g, xscale](const Vec& v) {
      double vn = v.norm();
      if (vn == 0.0) return Vec(Vec::Zero(v.size()));
      double eps = std::sqrt(2.2e-16) * xscale / vn;
      return Vec((grad_phi(x + eps * v, s) - g) / eps);
    };
    SpdSystem H{LinearMap{x.size(), x.size(), hv, hv, "fd-hessian"},
                "fd-hessian", std::nullopt};
    double forcing = std::min(0.5, std::sqrt(g.norm()));
    try {
      return cg_solve(H, -g, std::max(forcing, 1e-8), 60).x;
    } catch (const std::runtime_error&) {
      // Finite-difference noise can fake negative curvature; steepest descent
      // keeps the damped iteration going.
      return Vec(-g);
    }
  }

  const SeparableProblem& problem_;
  SpdSystem P_;
  SpdSystem normal_;
  std::shared_ptr<Eigen::LDLT<Eigen::MatrixXd>> factor_;
  Vec qtb_;
  mutable double lip_phi_ = 0.0;
};

}  // namespace detail
}  // namespace tpadmm
