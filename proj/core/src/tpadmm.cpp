#include "tpadmm/tpadmm.hpp"

#include "subproblem_detail.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tpadmm {

double eta_bound_from_norm(double alpha, double lipschitz, double n_norm) {
  if (alpha <= 0.0 || lipschitz <= 0.0 || n_norm < 0.0) {
    throw std::invalid_argument("eta_bound_from_norm: need alpha > 0, "
                                "lipschitz > 0, n_norm >= 0");
  }
  double root = std::sqrt(2.0 * alpha);
  return root / (root + lipschitz * n_norm);
}

namespace {

ProximalWeight resolve_weight(const SeparableProblem& problem,
                              const std::optional<ProximalWeight>& weight) {
  if (weight) {
    if (weight->W.domain_dim != problem.n()) {
      throw std::invalid_argument("proximal weight dimension " +
                                  std::to_string(weight->W.domain_dim) +
                                  " does not match n = " +
                                  std::to_string(problem.n()));
    }
    return *weight;
  }
  return ProximalWeight::scaled_identity(problem.n(), std::sqrt(2.0));
}

// W^T W + beta A^T A, with the analytic floor tau^2 when W = tau I.
SpdSystem proximal_system(const SeparableProblem& problem,
                          const ProximalWeight& weight, double beta) {
  auto a_fwd = problem.A.forward, a_adj = problem.A.adjoint;
  auto op = [w = weight, a_fwd, a_adj, beta](const Vec& u) {
    return Vec(w.wbar_apply(u) + beta * a_adj(a_fwd(u)));
  };
  std::optional<double> analytic;
  if (weight.identity_scale) {
    analytic = (*weight.identity_scale) * (*weight.identity_scale);
  }
  Index n = problem.n();
  return SpdSystem{LinearMap{n, n, op, op, "Wbar+beta*AtA"}, "Wbar+beta*AtA",
                   analytic};
}

// Per-solve machinery around the fixed system W^T W + beta A^T A. Norms and
// spectral bounds are computed lazily so the cheap entry points stay cheap.
struct SubEngine {
  const SeparableProblem& problem;
  ProximalWeight weight;
  double beta;
  double cg_floor;
  SpdSystem S;
  mutable std::optional<detail::XSubproblem> sub_;
  mutable double s_min_eig_ = 0.0;
  mutable double q_norm_ = -1.0;
  mutable bool flagged = false;

  SubEngine(const SeparableProblem& p, ProximalWeight w, double b,
            double floor = 1e-14)
      : problem(p), weight(std::move(w)), beta(b), cg_floor(floor),
        S(proximal_system(p, weight, b)) {
    if (beta <= 0.0) throw std::invalid_argument("beta must be positive");
  }

  detail::XSubproblem& sub() const {
    if (!sub_) sub_.emplace(problem, S, false);
    return *sub_;
  }
  double s_min_eig() const {
    if (s_min_eig_ == 0.0) s_min_eig_ = min_eig_lower_bound(S);
    return s_min_eig_;
  }
  double q_norm() const {
    if (q_norm_ < 0.0) q_norm_ = std::sqrt(operator_norm_sq(problem.Q).value);
    return q_norm_;
  }

  Vec fk(const Vec& s_k, const Vec& x, double rel_tol) const {
    Vec rhs = s_k - problem.Q.apply_adjoint(
                        problem.loss.gradient(problem.Q.apply(x)));
    CgResult r = cg_solve(S, rhs, std::max(rel_tol, cg_floor), -1, &x);
    if (!r.converged) flagged = true;
    return r.x;
  }

  Vec ek(const Vec& s_k, const Vec& x, double rel_tol) const {
    Vec fx = fk(s_k, x, rel_tol);
    return problem.loss.gradient(problem.Q.apply(fx)) -
           problem.loss.gradient(problem.Q.apply(x));
  }

  FallbackResult fallback(const Vec& s_k, const Vec& warm, double target,
                          FallbackKind kind) const {
    if (target <= 0.0) {
      throw std::invalid_argument("fallback_solve: target residual must be positive");
    }
    double qn = std::max(q_norm(), 1e-30);
    double lam = s_min_eig();
    // Residuals are measured tightly relative to the target being verified.
    double meas_rel = std::max(
        std::min(1e-12, 0.1 * target / std::max(1.0, s_k.norm())), cg_floor);

    detail::InnerStats stats;
    int iterations = 0;
    double best = std::numeric_limits<double>::infinity();
    Vec x = warm, best_x = warm;

    if (sub().quadratic()) {
      // ||e_k(x)|| <= ||Q|| / lambda_min(S) * ||normal residual||, so the CG
      // target follows from the residual target with a 0.5 margin.
      double rhs_norm = std::max((sub().qtb() + s_k).norm(), 1e-300);
      double rel = std::max(0.5 * target * lam / (qn * rhs_norm), cg_floor);
      for (int round = 0; round < 5; ++round) {
        x = sub().solve_quadratic(s_k, std::min(rel, 0.1), &stats, &x);
        iterations += stats.iterations;
        double res = ek(s_k, x, meas_rel).norm();
        if (res <= target) return {x, res, iterations};
        if (res < best) { best = res; best_x = x; }
        rel = std::max(rel * 0.01, cg_floor);
        if (rel == cg_floor && round >= 2) break;
      }
    } else {
      double gtarget =
          0.5 * target * lam / (problem.loss.lipschitz * qn);
      for (int round = 0; round < 7; ++round) {
        x = kind == FallbackKind::cg_newton
                ? sub().minimize_newton(s_k, gtarget, &stats, &x)
                : sub().minimize_gradient(s_k, gtarget, &stats, &x);
        iterations += stats.iterations;
        double res = ek(s_k, x, meas_rel).norm();
        if (res <= target) return {x, res, iterations};
        if (res < best) { best = res; best_x = x; }
        gtarget *= 0.1;
      }
    }
    throw std::runtime_error(
        "fallback_solve: could not reach residual target " +
        std::to_string(target) + "; best achieved " + std::to_string(best));
  }
};

// The zero-weight (TADMM) variant needs beta A^T A alone to be positive
// definite; probe it up front so the failure names the remedy instead of
// surfacing as a CG breakdown.
void require_spd_system(const SubEngine& eng) {
  if (!eng.weight.is_zero) return;
  try {
    eng.s_min_eig();
  } catch (const std::runtime_error& e) {
    throw std::invalid_argument(
        std::string("x-subproblem system beta A^T A is singular (A is not "
                    "full column rank); supply a nonzero proximal weight W [") +
        e.what() + "]");
  }
}

void check_init(const SeparableProblem& problem, const IterateW& init) {
  if (init.x.size() != problem.n() || init.y.size() != problem.m() ||
      init.lambda.size() != problem.l()) {
    throw std::invalid_argument(
        "tpadmm_solve: initial iterate dimensions do not match the problem");
  }
}

std::pair<Vec, InnerReport> inner_select_impl(const SubEngine& eng,
                                              const Vec& s_k, const Vec& x_k,
                                              const Vec& x_hat_prev, int k,
                                              const TaskModule& module,
                                              ErrorController& controller,
                                              const TpadmmConfig& config) {
  const double eta = controller.eta;
  double prev = controller.residual_history.empty()
                    ? std::numeric_limits<double>::infinity()
                    : controller.residual_history.back();
  auto cg_tol = [&](double scale) {
    return std::max(std::min(config.cg_tol_cap, 0.01 * eta * scale),
                    config.cg_tol_floor);
  };

  double ref = eng.ek(s_k, x_hat_prev, cg_tol(prev)).norm();

  if (ref < controller.abs_floor) {
    // Already essentially solved; refresh to the absolute floor and move on.
    FallbackResult fb =
        eng.fallback(s_k, x_hat_prev, controller.abs_floor, config.fallback);
    controller.residual_history.push_back(fb.residual);
    return {fb.x, InnerReport{"fallback-forced", 0, ref, fb.residual}};
  }

  if (module.on_iteration) {
    module.on_iteration(
        ModuleContext{k, &eng.problem, &eng.weight, eng.beta, s_k});
  }
  Vec proposal = module.apply(k, x_k);
  if (proposal.size() != x_k.size()) {
    throw std::invalid_argument("module '" + module.label +
                                "' returned a proposal of size " +
                                std::to_string(proposal.size()) +
                                ", expected " + std::to_string(x_k.size()));
  }

  double t_cand = cg_tol(ref);
  double r0 = eng.ek(s_k, proposal, t_cand).norm();
  if (r0 <= eta * ref) {
    controller.residual_history.push_back(r0);
    return {std::move(proposal), InnerReport{"module", 0, ref, r0}};
  }

  // The fallback is solved past the acceptance threshold so that blended
  // candidates with small module weight still clear it.
  FallbackResult fb = eng.fallback(s_k, x_k, 0.5 * eta * ref, config.fallback);
  double zeta = config.zeta0;
  for (int t = 1; t <= config.t_max; ++t) {
    zeta *= config.blend_c;
    Vec cand = (1.0 - zeta) * fb.x + zeta * proposal;
    double rc = eng.ek(s_k, cand, t_cand).norm();
    if (rc <= eta * ref) {
      controller.residual_history.push_back(rc);
      return {std::move(cand),
              InnerReport{"blend:" + std::to_string(t), t, ref, rc}};
    }
  }
  controller.residual_history.push_back(fb.residual);
  return {fb.x,
          InnerReport{"fallback-forced", config.t_max + 1, ref, fb.residual}};
}

}  // namespace

LinearMap normal_composite_map(const SeparableProblem& problem,
                               const ProximalWeight& weight, double beta,
                               double cg_tol) {
  auto S = std::make_shared<SpdSystem>(proximal_system(problem, weight, beta));
  const Index n = problem.n(), l = problem.l(), p = problem.p();
  const double sq = std::sqrt(beta);
  auto q_fwd = problem.Q.forward, q_adj = problem.Q.adjoint;
  auto a_fwd = problem.A.forward, a_adj = problem.A.adjoint;
  auto fwd = [S, w = weight, q_fwd, a_adj, sq, n, l, cg_tol](const Vec& u) {
    if (u.size() != n + l) {
      throw std::invalid_argument("normal composite map: bad input size");
    }
    Vec v = w.is_zero ? Vec(Vec::Zero(n)) : Vec(w.W.adjoint(u.head(n)));
    v += sq * a_adj(u.tail(l));
    return Vec(q_fwd(cg_solve(*S, v, cg_tol).x));
  };
  auto adj = [S, w = weight, q_adj, a_fwd, sq, n, l, cg_tol](const Vec& v) {
    Vec z = cg_solve(*S, q_adj(v), cg_tol).x;
    Vec out(n + l);
    out.head(n) = w.is_zero ? Vec(Vec::Zero(n)) : Vec(w.W.forward(z));
    out.tail(l) = sq * a_fwd(z);
    return out;
  };
  return LinearMap{n + l, p, fwd, adj, "N-composite"};
}

double eta_upper_bound(const SeparableProblem& problem,
                       const ProximalWeight& weight, double beta,
                       NormMode mode) {
  problem.validate();
  if (beta <= 0.0) throw std::invalid_argument("eta_upper_bound: beta must be positive");
  const double alpha = problem.loss.alpha;
  const double lip = problem.loss.lipschitz;
  auto bound_value = [&] {
    double qn2 = operator_norm_sq(problem.Q).value;
    if (qn2 > 1.0 + 1e-8) {
      throw std::invalid_argument(
          "eta_upper_bound: the analytic bound requires ||Q||_2 <= 1, but the "
          "estimate gives ||Q||_2^2 = " + std::to_string(qn2) +
          "; use the power mode");
    }
    double lam = min_eig_lower_bound(proximal_system(problem, weight, beta));
    return eta_bound_from_norm(alpha, lip, 1.0 / std::sqrt(lam));
  };
  auto power_value = [&] {
    LinearMap N = normal_composite_map(problem, weight, beta);
    return eta_bound_from_norm(alpha, lip,
                               std::sqrt(operator_norm_sq(N).value));
  };
  switch (mode) {
    case NormMode::bound: return bound_value();
    case NormMode::power: return power_value();
    default:
      try {
        return bound_value();
      } catch (const std::invalid_argument&) {
        return power_value();
      }
  }
}

ErrorController make_error_controller(const SeparableProblem& problem,
                                      const ProximalWeight& weight, double beta,
                                      std::optional<double> eta_request,
                                      NormMode mode, double abs_floor) {
  ErrorController controller;
  controller.eta_max = eta_upper_bound(problem, weight, beta, mode);
  LinearMap N = normal_composite_map(problem, weight, beta);
  controller.gamma =
      problem.loss.lipschitz * std::sqrt(operator_norm_sq(N).value);
  controller.abs_floor = abs_floor;
  controller.eta = eta_request ? *eta_request : 0.9 * controller.eta_max;
  if (!(controller.eta > 0.0) || controller.eta >= controller.eta_max) {
    throw std::invalid_argument(
        "error controller: eta = " + std::to_string(controller.eta) +
        " must lie strictly inside (0, eta_max) with eta_max = " +
        std::to_string(controller.eta_max));
  }
  return controller;
}

Vec compute_sk(const SeparableProblem& problem, const ProximalWeight& weight,
               double beta, const Vec& y_k, const Vec& lambda_k,
               const Vec& x_k) {
  if (beta <= 0.0) throw std::invalid_argument("compute_sk: beta must be positive");
  Vec t = -problem.B.apply(y_k) + problem.c + lambda_k / beta;
  return beta * problem.A.apply_adjoint(t) + weight.wbar_apply(x_k);
}

Vec fk_apply(const SeparableProblem& problem, const ProximalWeight& weight,
             double beta, const Vec& s_k, const Vec& x, double cg_tol) {
  SubEngine eng(problem, weight, beta);
  require_spd_system(eng);
  return eng.fk(s_k, x, cg_tol);
}

Vec ek_residual(const SeparableProblem& problem, const ProximalWeight& weight,
                double beta, const Vec& s_k, const Vec& x, double cg_tol) {
  SubEngine eng(problem, weight, beta);
  require_spd_system(eng);
  return eng.ek(s_k, x, cg_tol);
}

FallbackResult fallback_solve(const SeparableProblem& problem,
                              const ProximalWeight& weight, double beta,
                              const Vec& s_k, const Vec& x_k,
                              double target_residual, FallbackKind kind) {
  SubEngine eng(problem, weight, beta);
  require_spd_system(eng);
  return eng.fallback(s_k, x_k, target_residual, kind);
}

std::pair<Vec, InnerReport> inner_select(
    const SeparableProblem& problem, const ProximalWeight& weight, double beta,
    const Vec& s_k, const Vec& x_k, const Vec& x_hat_prev, int k,
    const TaskModule& module, ErrorController& controller,
    const TpadmmConfig& config) {
  SubEngine eng(problem, weight, beta, config.cg_tol_floor);
  require_spd_system(eng);
  return inner_select_impl(eng, s_k, x_k, x_hat_prev, k, module, controller,
                           config);
}

SolveTrace tpadmm_solve(const SeparableProblem& problem, const IterateW& init,
                        const TaskModule& module, const TpadmmConfig& config) {
  problem.validate();
  check_init(problem, init);
  if (config.beta <= 0.0) throw std::invalid_argument("tpadmm_solve: beta must be positive");
  if (!problem.btb_identity_scale) {
    throw std::invalid_argument("tpadmm_solve: B^T B must be declared (scaled) "
                                "identity for the proximal y-update");
  }
  if (config.zeta0 < 0.0 || config.zeta0 > 1.0) {
    throw std::invalid_argument("tpadmm_solve: zeta0 must lie in [0, 1]");
  }
  if (config.blend_c <= 0.0 || config.blend_c > 0.5) {
    throw std::invalid_argument("tpadmm_solve: blend_c must lie in (0, 0.5]");
  }
  if (config.t_max < 0) throw std::invalid_argument("tpadmm_solve: t_max must be >= 0");

  ProximalWeight weight = resolve_weight(problem, config.weight);
  SubEngine eng(problem, weight, config.beta, config.cg_tol_floor);
  require_spd_system(eng);
  ErrorController controller = make_error_controller(
      problem, weight, config.beta,
      config.eta > 0.0 ? std::optional<double>(config.eta) : std::nullopt,
      config.norm_mode, config.abs_floor);

  SolveTrace trace;
  trace.solver = "tpadmm";
  trace.eta = controller.eta;
  trace.gamma = controller.gamma;

  Vec x = init.x, y = init.y, lambda = init.lambda;
  Vec x_hat = init.x;
  const double beta = config.beta;

  for (int k = 0; k < config.max_outer; ++k) {
    auto t0 = std::chrono::steady_clock::now();

    Vec s_k = compute_sk(problem, weight, beta, y, lambda, x);
    auto [x_hat_next, report] =
        inner_select_impl(eng, s_k, x, x_hat, k, module, controller, config);

    double step_tol =
        std::max(std::min(config.cg_tol_cap, 0.01 * controller.eta *
                                                 report.residual_before),
                 config.cg_tol_floor);
    Vec x_next = eng.fk(s_k, x_hat_next, step_tol);
    Vec y_next = prox_y_step(problem, beta, x_next, lambda);
    Vec r = problem.A.apply(x_next) + problem.B.apply(y_next) - problem.c;
    Vec lambda_next = lambda - beta * r;

    IterateW diff{x_next - x, y_next - y, lambda_next - lambda};
    double gap = m_norm(diff, weight, beta, problem.B);

    TraceRecord rec;
    rec.k = k;
    rec.objective = objective(problem, x_next, y_next);
    rec.violation = r.norm();
    rec.lambda_gap = gap;
    rec.ek_norm = report.residual_after;
    rec.accepted_source = report.accepted_source;
    rec.t_used = report.t_used;
    if (config.psnr_reference) rec.psnr = psnr_value(x_next, *config.psnr_reference);
    rec.ek_ref = report.residual_before;
    rec.by_change = problem.B.apply(diff.y).norm();
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    trace.records.push_back(std::move(rec));

    x = std::move(x_next);
    y = std::move(y_next);
    lambda = std::move(lambda_next);
    x_hat = std::move(x_hat_next);

    if (r.norm() <= config.tol_violation && gap <= config.tol_change) {
      trace.termination = Termination::tol_met;
      break;
    }
  }

  trace.inner_flagged = eng.flagged;
  trace.final_w = IterateW{x, y, lambda};
  return trace;
}

bool prop1_check(const SolveTrace& trace, const ErrorController& controller) {
  const auto& recs = trace.records;
  for (size_t k = 1; k < recs.size(); ++k) {
    double lhs = recs[k].ek_norm;
    double rhs = controller.eta * (recs[k - 1].ek_norm +
                                   controller.gamma * recs[k - 1].lambda_gap);
    if (lhs - rhs > 1e-9) return false;
  }
  return true;
}

std::vector<RatePoint> rate_series(const SolveTrace& trace) {
  std::vector<RatePoint> series;
  series.reserve(trace.records.size());
  double min_gap2 = std::numeric_limits<double>::infinity();
  double min_res2 = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < trace.records.size(); ++i) {
    const TraceRecord& rec = trace.records[i];
    min_gap2 = std::min(min_gap2, rec.lambda_gap * rec.lambda_gap);
    min_res2 = std::min(min_res2, rec.ek_norm * rec.ek_norm);
    int K = int(i) + 1;
    series.push_back(RatePoint{K, K * min_gap2, K * min_res2});
  }
  return series;
}

Vec lambda_bar(const SeparableProblem& problem, double beta, const Vec& x_next,
               const Vec& y_k, const Vec& lambda_k) {
  if (beta <= 0.0) throw std::invalid_argument("lambda_bar: beta must be positive");
  return lambda_k -
         beta * (problem.A.apply(x_next) + problem.B.apply(y_k) - problem.c);
}

}  // namespace tpadmm
