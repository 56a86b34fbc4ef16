#include "tpadmm/baselines.hpp"

#include "subproblem_detail.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace tpadmm {

double psnr_value(const Vec& a, const Vec& ref) {
  if (a.size() != ref.size() || a.size() == 0) {
    throw std::invalid_argument("psnr_value: size mismatch");
  }
  double mse = (a - ref).squaredNorm() / double(a.size());
  if (mse <= 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

namespace {

enum class Kind { admm, ladmm, padmm };

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::admm: return "admm";
    case Kind::ladmm: return "ladmm";
    default: return "padmm";
  }
}

void check_init(const SeparableProblem& problem, const IterateW& init) {
  if (init.x.size() != problem.n() || init.y.size() != problem.m() ||
      init.lambda.size() != problem.l()) {
    throw std::invalid_argument("baseline solve: initial iterate dimensions do "
                                "not match the problem");
  }
}

SolveTrace baseline_solve(Kind kind, const SeparableProblem& problem,
                          const IterateW& init, const BaselineConfig& config) {
  problem.validate();
  check_init(problem, init);
  if (config.beta <= 0.0) throw std::invalid_argument("baseline solve: beta must be positive");
  if (!problem.btb_identity_scale) {
    throw std::invalid_argument("baseline solve: B^T B must be declared (scaled) "
                                "identity for the proximal y-update");
  }
  const double beta = config.beta;
  const Index n = problem.n();

  double a_norm_sq = 0.0;
  if (kind == Kind::ladmm) {
    a_norm_sq = operator_norm_sq(problem.A).value;
    if (config.tau < a_norm_sq * (1.0 - 1e-9)) {
      throw std::invalid_argument(
          "ladmm_solve: tau = " + std::to_string(config.tau) +
          " is below the required bound ||A||_2^2 ~= " + std::to_string(a_norm_sq));
    }
  }
  if (kind != Kind::admm && config.tau <= 0.0) {
    throw std::invalid_argument(std::string(kind_name(kind)) +
                                "_solve: tau must be positive");
  }

  // Quadratic add-on P of the x-subproblem, fixed across iterations.
  SpdSystem P = [&] {
    auto a_fwd = problem.A.forward, a_adj = problem.A.adjoint;
    switch (kind) {
      case Kind::admm: {
        auto op = [a_fwd, a_adj, beta](const Vec& u) { return Vec(beta * a_adj(a_fwd(u))); };
        return SpdSystem{LinearMap{n, n, op, op, "beta*AtA"}, "beta*AtA", std::nullopt};
      }
      case Kind::ladmm: {
        double scale = config.tau * beta;
        auto op = [scale](const Vec& u) { return Vec(scale * u); };
        return SpdSystem{LinearMap{n, n, op, op, "tau*beta*I"}, "tau*beta*I", scale};
      }
      default: {
        double tau = config.tau;
        auto op = [a_fwd, a_adj, beta, tau](const Vec& u) {
          return Vec(beta * a_adj(a_fwd(u)) + tau * u);
        };
        return SpdSystem{LinearMap{n, n, op, op, "beta*AtA+tau*I"},
                         "beta*AtA+tau*I", tau};
      }
    }
  }();

  detail::XSubproblem sub(problem, std::move(P),
                          config.x_inner == XInner::direct_small);

  SolveTrace trace;
  trace.solver = kind_name(kind);
  Vec x = init.x, y = init.y, lambda = init.lambda;

  for (int k = 0; k < config.max_outer; ++k) {
    auto t0 = std::chrono::steady_clock::now();

    Vec s(n);
    switch (kind) {
      case Kind::admm: {
        Vec t = problem.c - problem.B.apply(y) + lambda / beta;
        s = beta * problem.A.apply_adjoint(t);
        break;
      }
      case Kind::ladmm: {
        Vec d = problem.A.apply_adjoint(problem.A.apply(x) + problem.B.apply(y) -
                                        problem.c - lambda / beta);
        s = config.tau * beta * x - beta * d;
        break;
      }
      default: {
        Vec t = problem.c - problem.B.apply(y) + lambda / beta;
        s = beta * problem.A.apply_adjoint(t) + config.tau * x;
        break;
      }
    }

    detail::InnerStats stats;
    Vec x_next;
    if (sub.quadratic()) {
      x_next = sub.solve_quadratic(s, config.inner_tol, &stats, &x,
                                   config.inner_max_iter);
    } else {
      x_next = sub.minimize_newton(s, config.inner_tol * (1.0 + s.norm()),
                                   &stats, &x);
    }
    if (!stats.converged) trace.inner_flagged = true;

    Vec y_next = prox_y_step(problem, beta, x_next, lambda);
    Vec r = problem.A.apply(x_next) + problem.B.apply(y_next) - problem.c;
    Vec lambda_next = lambda - beta * r;

    // Consecutive-change seminorm in this solver's own proximal geometry.
    Vec dx = x_next - x, dy = y_next - y, dl = lambda_next - lambda;
    double x_term = 0.0;
    if (kind == Kind::ladmm) {
      x_term = std::max(0.0, config.tau * beta * dx.squaredNorm() -
                                 beta * problem.A.apply(dx).squaredNorm());
    } else if (kind == Kind::padmm) {
      x_term = config.tau * dx.squaredNorm();
    }
    double gap = std::sqrt(x_term + beta * problem.B.apply(dy).squaredNorm() +
                           dl.squaredNorm() / beta);
    double by_change = problem.B.apply(dy).norm();

    x = std::move(x_next);
    y = std::move(y_next);
    lambda = std::move(lambda_next);

    TraceRecord rec;
    rec.k = k;
    rec.objective = objective(problem, x, y);
    rec.violation = r.norm();
    rec.lambda_gap = gap;
    rec.ek_norm = stats.residual;
    rec.t_used = stats.iterations;
    if (config.psnr_reference) rec.psnr = psnr_value(x, *config.psnr_reference);
    rec.by_change = by_change;
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    trace.records.push_back(std::move(rec));

    if (r.norm() <= config.tol_violation && gap <= config.tol_change) {
      trace.termination = Termination::tol_met;
      break;
    }
  }

  trace.final_w = IterateW{x, y, lambda};
  return trace;
}

}  // namespace

SolveTrace admm_solve(const SeparableProblem& problem, const IterateW& init,
                      const BaselineConfig& config) {
  return baseline_solve(Kind::admm, problem, init, config);
}

SolveTrace ladmm_solve(const SeparableProblem& problem, const IterateW& init,
                       const BaselineConfig& config) {
  return baseline_solve(Kind::ladmm, problem, init, config);
}

SolveTrace proximal_admm_solve(const SeparableProblem& problem,
                               const IterateW& init,
                               const BaselineConfig& config) {
  return baseline_solve(Kind::padmm, problem, init, config);
}

}  // namespace tpadmm
