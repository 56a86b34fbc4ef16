#include "tpadmm/linops.hpp"

#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>
#include <utility>

namespace tpadmm {

namespace {

void check_dim(const char* what, Index got, Index want, const std::string& tag) {
  if (got != want) {
    throw std::invalid_argument(std::string(what) + " dimension mismatch for '" +
                                tag + "': got " + std::to_string(got) +
                                ", expected " + std::to_string(want));
  }
}

// Fixed-seed start vector so norm estimates are bit-reproducible run to run.
Vec seeded_unit_vector(Index n) {
  std::mt19937_64 rng(0x5eed0123456789ULL);
  std::normal_distribution<double> dist(0.0, 1.0);
  Vec v(n);
  for (Index i = 0; i < n; ++i) v[i] = dist(rng);
  double norm = v.norm();
  if (norm == 0.0) v.setConstant(1.0 / std::sqrt(double(n)));
  else v /= norm;
  return v;
}

}  // namespace

Vec LinearMap::apply(const Vec& u) const {
  check_dim("forward", u.size(), domain_dim, tag);
  Vec out = forward(u);
  check_dim("forward result", out.size(), range_dim, tag);
  return out;
}

Vec LinearMap::apply_adjoint(const Vec& v) const {
  check_dim("adjoint", v.size(), range_dim, tag);
  Vec out = adjoint(v);
  check_dim("adjoint result", out.size(), domain_dim, tag);
  return out;
}

LinearMap identity_map(Index n) {
  auto id = [](const Vec& u) { return u; };
  return LinearMap{n, n, id, id, "identity"};
}

LinearMap zero_map(Index domain, Index range) {
  return LinearMap{domain, range,
                   [range](const Vec&) { return Vec(Vec::Zero(range)); },
                   [domain](const Vec&) { return Vec(Vec::Zero(domain)); },
                   "zero"};
}

LinearMap diagonal_map(Vec d) {
  Index n = d.size();
  auto mul = [d = std::move(d)](const Vec& u) { return Vec(d.cwiseProduct(u)); };
  return LinearMap{n, n, mul, mul, "diagonal"};
}

LinearMap scaled_map(double alpha, LinearMap inner) {
  auto fwd = [alpha, f = inner.forward](const Vec& u) { return Vec(alpha * f(u)); };
  auto adj = [alpha, a = inner.adjoint](const Vec& v) { return Vec(alpha * a(v)); };
  return LinearMap{inner.domain_dim, inner.range_dim, fwd, adj,
                   "scaled(" + inner.tag + ")"};
}

LinearMap compose_maps(LinearMap outer, LinearMap inner) {
  if (inner.range_dim != outer.domain_dim) {
    throw std::invalid_argument("compose_maps: inner range " +
                                std::to_string(inner.range_dim) +
                                " != outer domain " +
                                std::to_string(outer.domain_dim));
  }
  auto fwd = [of = outer.forward, inf = inner.forward](const Vec& u) {
    return of(inf(u));
  };
  auto adj = [oa = outer.adjoint, ina = inner.adjoint](const Vec& v) {
    return ina(oa(v));
  };
  return LinearMap{inner.domain_dim, outer.range_dim, fwd, adj,
                   outer.tag + "*" + inner.tag};
}

LinearMap from_dense(Eigen::MatrixXd M) {
  auto shared = std::make_shared<Eigen::MatrixXd>(std::move(M));
  Index rows = shared->rows(), cols = shared->cols();
  auto fwd = [shared](const Vec& u) { return Vec(*shared * u); };
  auto adj = [shared](const Vec& v) { return Vec(shared->transpose() * v); };
  return LinearMap{cols, rows, fwd, adj, "dense"};
}

Eigen::MatrixXd materialize_dense(const LinearMap& map) {
  if (map.domain_dim > 1024 || map.range_dim > 1024) {
    throw std::invalid_argument(
        "materialize_dense: dimensions exceed the 1024 guard (" +
        std::to_string(map.range_dim) + "x" + std::to_string(map.domain_dim) + ")");
  }
  Eigen::MatrixXd M(map.range_dim, map.domain_dim);
  Vec e = Vec::Zero(map.domain_dim);
  for (Index j = 0; j < map.domain_dim; ++j) {
    e[j] = 1.0;
    M.col(j) = map.apply(e);
    e[j] = 0.0;
  }
  return M;
}

NormEstimate operator_norm_sq(const LinearMap& map, double tol, int max_iter) {
  if (map.domain_dim == 0) return {0.0, 0, true};
  Vec v = seeded_unit_vector(map.domain_dim);
  double lambda = 0.0;
  int stable = 0;
  for (int it = 1; it <= max_iter; ++it) {
    Vec z = map.apply_adjoint(map.apply(v));
    double raw = z.norm();
    if (raw <= 1e-300) return {0.0, it, true};  // v in the null space of a zero-like map
    double next = v.dot(z);                     // Rayleigh quotient of A^T A
    v = z / raw;
    double change = std::abs(next - lambda);
    lambda = next;
    // Demand stability across consecutive sweeps; one small step can be a
    // plateau rather than convergence.
    if (change <= tol * std::max(lambda, 1e-300)) {
      if (++stable >= 3) return {lambda, it, true};
    } else {
      stable = 0;
    }
  }
  return {lambda, max_iter, false};
}

SpdSystem spd_from_diagonal(Vec d, std::string label) {
  double lo = d.minCoeff();
  if (lo <= 0.0) {
    throw std::invalid_argument("spd_from_diagonal: nonpositive entry " +
                                std::to_string(lo));
  }
  return SpdSystem{diagonal_map(std::move(d)), std::move(label), lo};
}

CgResult cg_solve(const SpdSystem& system, const Vec& rhs, double tol,
                  int max_iter, const Vec* x0,
                  const std::function<Vec(const Vec&)>* precondition) {
  const LinearMap& S = system.op;
  if (S.domain_dim != S.range_dim) {
    throw std::invalid_argument("cg_solve: operator '" + S.tag + "' is not square");
  }
  check_dim("cg rhs", rhs.size(), S.domain_dim, S.tag);
  Index n = S.domain_dim;
  if (max_iter < 0) max_iter = int(10 * n + 100);

  Vec x = x0 ? *x0 : Vec(Vec::Zero(n));
  Vec r = rhs - S.apply(x);
  double target = std::max(tol * rhs.norm(), 1e-300);
  double rnorm = r.norm();
  if (rnorm <= target) return {x, 0, rnorm, true};

  auto precond = [&](const Vec& v) { return precondition ? (*precondition)(v) : v; };
  Vec z = precond(r);
  Vec p = z;
  double rz = r.dot(z);
  for (int it = 1; it <= max_iter; ++it) {
    Vec Sp = S.apply(p);
    double pSp = p.dot(Sp);
    if (pSp <= 0.0) {
      throw std::runtime_error("cg_solve: operator '" + S.tag +
                               "' produced nonpositive curvature " +
                               std::to_string(pSp));
    }
    double step = rz / pSp;
    x += step * p;
    r -= step * Sp;
    rnorm = r.norm();
    if (rnorm <= target) {
      // Recompute the true residual; accumulated recurrences drift.
      Vec true_r = rhs - S.apply(x);
      double true_norm = true_r.norm();
      if (true_norm <= target * 1.5) return {x, it, true_norm, true};
      r = true_r;
      rnorm = true_norm;
    }
    z = precond(r);
    double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  return {x, max_iter, rnorm, false};
}

double min_eig_lower_bound(const SpdSystem& system, double tol, int max_iter) {
  if (system.analytic_min_eig) {
    if (*system.analytic_min_eig <= 0.0) {
      throw std::runtime_error("min_eig_lower_bound: recorded bound for '" +
                               system.label + "' is not positive");
    }
    return *system.analytic_min_eig;
  }
  const LinearMap& S = system.op;
  if (S.domain_dim != S.range_dim) {
    throw std::invalid_argument("min_eig_lower_bound: operator is not square");
  }
  Vec v = seeded_unit_vector(S.domain_dim);
  double theta = v.dot(S.apply(v));
  if (theta <= 0.0) {
    throw std::runtime_error("min_eig_lower_bound: '" + system.label +
                             "' is indefinite (Rayleigh quotient " +
                             std::to_string(theta) + ")");
  }
  for (int it = 1; it <= max_iter; ++it) {
    CgResult step = cg_solve(system, v, 1e-12);
    if (!step.converged && step.residual > 1e-6 * v.norm()) {
      throw std::runtime_error(
          "min_eig_lower_bound: inverse iteration solve stalled on '" +
          system.label + "' (residual " + std::to_string(step.residual) +
          "); the composition looks singular");
    }
    double znorm = step.x.norm();
    if (!(znorm > 0.0) || !std::isfinite(znorm)) {
      throw std::runtime_error("min_eig_lower_bound: inverse iteration broke down");
    }
    v = step.x / znorm;
    double next = v.dot(S.apply(v));
    if (next <= 0.0) {
      throw std::runtime_error("min_eig_lower_bound: '" + system.label +
                               "' is indefinite");
    }
    double change = std::abs(next - theta);
    theta = next;
    if (change <= tol * theta) break;
  }
  return 0.99 * theta;
}

}  // namespace tpadmm
