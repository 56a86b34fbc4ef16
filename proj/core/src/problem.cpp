#include "tpadmm/problem.hpp"

#include <cmath>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>

namespace tpadmm {

SmoothLoss quadratic_loss(Vec shift) {
  auto shared = std::make_shared<Vec>(std::move(shift));
  SmoothLoss loss;
  loss.value = [shared](const Vec& z) { return 0.5 * (z - *shared).squaredNorm(); };
  loss.gradient = [shared](const Vec& z) { return Vec(z - *shared); };
  loss.alpha = 1.0;
  loss.lipschitz = 1.0;
  loss.quadratic_shift = *shared;
  return loss;
}

SmoothLoss softplus_augmented_loss(Vec shift, double delta) {
  if (delta < 0.0) throw std::invalid_argument("softplus_augmented_loss: delta < 0");
  auto shared = std::make_shared<Vec>(std::move(shift));
  auto softplus = [](double t) {
    // log(1 + e^t) without overflow for large |t|.
    return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
  };
  SmoothLoss loss;
  loss.value = [shared, delta, softplus](const Vec& z) {
    double s = 0.0;
    for (Index i = 0; i < z.size(); ++i) s += softplus(z[i]);
    return 0.5 * (z - *shared).squaredNorm() + delta * s;
  };
  loss.gradient = [shared, delta](const Vec& z) {
    Vec g = z - *shared;
    for (Index i = 0; i < z.size(); ++i) g[i] += delta / (1.0 + std::exp(-z[i]));
    return g;
  };
  loss.alpha = 1.0;
  loss.lipschitz = 1.0 + delta / 4.0;
  return loss;
}

ProbeReport validate_smooth_loss(const SmoothLoss& loss, Index dim, int pairs,
                                 unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  auto draw = [&] {
    Vec z(dim);
    for (Index i = 0; i < dim; ++i) z[i] = dist(rng);
    return z;
  };
  ProbeReport report;
  for (int t = 0; t < pairs; ++t) {
    Vec z1 = draw(), z2 = draw();
    Vec g1 = loss.gradient(z1), g2 = loss.gradient(z2);
    double gap2 = (z1 - z2).squaredNorm();
    double inner = (z1 - z2).dot(g1 - g2);
    double gnorm = (g1 - g2).norm();
    double slack = 1e-9 * (1.0 + gap2);
    if (inner + slack < loss.alpha * gap2) {
      std::ostringstream os;
      os << "strong monotonicity failed on probe " << t << ": " << inner
         << " < " << loss.alpha * gap2;
      return {false, os.str()};
    }
    if (gnorm > loss.lipschitz * std::sqrt(gap2) + slack) {
      std::ostringstream os;
      os << "gradient Lipschitz bound failed on probe " << t << ": " << gnorm
         << " > " << loss.lipschitz * std::sqrt(gap2);
      return {false, os.str()};
    }
    // Central-difference check of the gradient along a random direction.
    Vec d = draw();
    d /= std::max(d.norm(), 1e-12);
    double h = 1e-6;
    double fd = (loss.value(z1 + h * d) - loss.value(z1 - h * d)) / (2.0 * h);
    if (std::abs(fd - g1.dot(d)) > 1e-5 * (1.0 + std::abs(fd))) {
      std::ostringstream os;
      os << "gradient disagrees with finite differences on probe " << t << ": "
         << fd << " vs " << g1.dot(d);
      return {false, os.str()};
    }
  }
  return report;
}

ProximalWeight ProximalWeight::zero_weight(Index n) {
  ProximalWeight w;
  w.W = zero_map(n, n);
  w.is_zero = true;
  return w;
}

ProximalWeight ProximalWeight::scaled_identity(Index n, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("scaled_identity: tau must be positive");
  ProximalWeight w;
  w.W = scaled_map(tau, identity_map(n));
  w.identity_scale = tau;
  return w;
}

ProximalWeight ProximalWeight::general(LinearMap W) {
  if (W.domain_dim != W.range_dim) {
    throw std::invalid_argument("ProximalWeight: W must be square");
  }
  ProximalWeight w;
  w.W = std::move(W);
  return w;
}

Vec ProximalWeight::w_apply(const Vec& x) const {
  if (is_zero) return Vec::Zero(x.size());
  return W.apply(x);
}

Vec ProximalWeight::wbar_apply(const Vec& x) const {
  if (is_zero) return Vec::Zero(x.size());
  if (identity_scale) return Vec((*identity_scale) * (*identity_scale) * x);
  return W.apply_adjoint(W.apply(x));
}

void SeparableProblem::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("SeparableProblem: " + msg); };
  if (Q.domain_dim != A.domain_dim) {
    fail("Q domain " + std::to_string(Q.domain_dim) + " != A domain " +
         std::to_string(A.domain_dim));
  }
  if (A.range_dim != c.size()) {
    fail("A range " + std::to_string(A.range_dim) + " != c size " +
         std::to_string(c.size()));
  }
  if (B.range_dim != c.size()) {
    fail("B range " + std::to_string(B.range_dim) + " != c size " +
         std::to_string(c.size()));
  }
  if (!loss.value || !loss.gradient) fail("loss closures are empty");
  if (!g_value || !g_prox) fail("g closures are empty");
  if (loss.alpha <= 0.0) fail("loss alpha must be positive");
  if (loss.lipschitz < loss.alpha) fail("loss lipschitz below alpha");
}

IterateW IterateW::zeros(const SeparableProblem& problem) {
  return {Vec::Zero(problem.n()), Vec::Zero(problem.m()), Vec::Zero(problem.l())};
}

double objective(const SeparableProblem& problem, const Vec& x, const Vec& y) {
  return problem.loss.value(problem.Q.apply(x)) + problem.g_value(y);
}

double constraint_violation(const SeparableProblem& problem, const Vec& x,
                            const Vec& y) {
  return (problem.A.apply(x) + problem.B.apply(y) - problem.c).norm();
}

double aug_lagrangian(const SeparableProblem& problem, const IterateW& w,
                      double beta) {
  if (beta <= 0.0) throw std::invalid_argument("aug_lagrangian: beta must be positive");
  Vec r = problem.A.apply(w.x) + problem.B.apply(w.y) - problem.c;
  return objective(problem, w.x, w.y) - w.lambda.dot(r) + 0.5 * beta * r.squaredNorm();
}

double m_norm(const IterateW& w, const ProximalWeight& weight, double beta,
              const LinearMap& B) {
  if (beta <= 0.0) throw std::invalid_argument("m_norm: beta must be positive");
  double wx = weight.w_apply(w.x).squaredNorm();
  double by = B.apply(w.y).squaredNorm();
  double lm = w.lambda.squaredNorm();
  return std::sqrt(wx + beta * by + lm / beta);
}

std::array<Vec, 3> vi_operator_f(const SeparableProblem& problem,
                                 const IterateW& w) {
  Vec grad = problem.loss.gradient(problem.Q.apply(w.x));
  Vec fx = problem.Q.apply_adjoint(grad) - problem.A.apply_adjoint(w.lambda);
  Vec fy = -problem.B.apply_adjoint(w.lambda);
  Vec fr = problem.A.apply(w.x) + problem.B.apply(w.y) - problem.c;
  return {fx, fy, fr};
}

Vec prox_y_step(const SeparableProblem& problem, double beta, const Vec& x,
                const Vec& lambda) {
  if (!problem.btb_identity_scale) {
    throw std::invalid_argument(
        "prox_y_step: B^T B is not declared (scaled) identity; the proximal "
        "y-update is unavailable for this B");
  }
  double sigma2 = *problem.btb_identity_scale;
  if (sigma2 <= 0.0) throw std::invalid_argument("prox_y_step: nonpositive B^T B scale");
  Vec t = problem.c - problem.A.apply(x) + lambda / beta;
  Vec v = problem.B.apply_adjoint(t) / sigma2;
  return problem.g_prox(v, 1.0 / (beta * sigma2));
}

}  // namespace tpadmm
