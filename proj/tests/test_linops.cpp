#include "doctest.h"

#include "tpadmm/imaging.hpp"
#include "tpadmm/linops.hpp"

#include "support/oracles.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace tpadmm;
using oracle::Mat;

namespace {

// Adjoint consistency |<Au,v> - <u,A^T v>| <= 1e-10 * (||u|| ||v|| * norm est)
// on random probe pairs.
void check_adjoint(const LinearMap& map, int probes, unsigned seed) {
  auto gen = oracle::rng(seed);
  double scale = std::sqrt(std::max(operator_norm_sq(map).value, 1.0));
  for (int t = 0; t < probes; ++t) {
    Vec u = oracle::random_vec(map.domain_dim, gen);
    Vec v = oracle::random_vec(map.range_dim, gen);
    double lhs = map.apply(u).dot(v);
    double rhs = u.dot(map.apply_adjoint(v));
    CHECK(std::abs(lhs - rhs) <=
          1e-10 * std::max(u.norm() * v.norm() * scale, 1e-30));
  }
}

void check_linearity(const LinearMap& map, unsigned seed) {
  auto gen = oracle::rng(seed);
  for (int t = 0; t < 20; ++t) {
    Vec u = oracle::random_vec(map.domain_dim, gen);
    Vec v = oracle::random_vec(map.domain_dim, gen);
    double a = 1.7, b = -0.3;
    Vec lhs = map.apply(a * u + b * v);
    Vec rhs = a * map.apply(u) + b * map.apply(v);
    CHECK((lhs - rhs).norm() <= 1e-12 * std::max(rhs.norm(), 1.0));
  }
}

}  // namespace

TEST_SUITE("linops") {

TEST_CASE("adjoint and linearity hold for every shipped operator") {
  Vec d(4);
  d << 1.0, -2.0, 0.5, 3.0;
  std::vector<LinearMap> ops;
  ops.push_back(identity_map(6));
  ops.push_back(zero_map(5, 3));
  ops.push_back(diagonal_map(d));
  ops.push_back(scaled_map(-2.5, identity_map(4)));
  auto gen = oracle::rng(7);
  ops.push_back(from_dense(oracle::random_mat(5, 3, gen)));
  ops.push_back(compose_maps(from_dense(oracle::random_mat(4, 5, gen)),
                             from_dense(oracle::random_mat(5, 3, gen))));
  ops.push_back(gradient_operator({4, 4, 1}));
  ops.push_back(gradient_operator({5, 3, 2}));
  ops.push_back(mask_operator({1, 0, 1, 1, 0, 1}));
  unsigned seed = 100;
  for (const auto& op : ops) {
    check_adjoint(op, 100, seed);
    check_linearity(op, seed + 1);
    seed += 2;
  }
}

TEST_CASE("apply rejects mismatched dimensions") {
  LinearMap id = identity_map(3);
  CHECK_THROWS_AS(id.apply(Vec::Zero(4)), std::invalid_argument);
  CHECK_THROWS_AS(id.apply_adjoint(Vec::Zero(2)), std::invalid_argument);
  CHECK_THROWS_AS(
      compose_maps(identity_map(3), from_dense(Mat::Identity(4, 4))),
      std::invalid_argument);
}

TEST_CASE("spd systems are symmetric with positive-definite witness") {
  GridShape shape{4, 4, 1};
  LinearMap grad = gradient_operator(shape);
  auto op = [grad](const Vec& u) {
    return Vec(2.0 * u + grad.apply_adjoint(grad.apply(u)));
  };
  SpdSystem S{LinearMap{16, 16, op, op, "2I+GtG"}, "2I+GtG", 2.0};
  auto gen = oracle::rng(21);
  for (int t = 0; t < 25; ++t) {
    Vec u = oracle::random_vec(16, gen);
    Vec v = oracle::random_vec(16, gen);
    CHECK(std::abs(S.op.apply(u).dot(v) - u.dot(S.op.apply(v))) <=
          1e-10 * u.norm() * v.norm() * 10.0);
    CHECK(S.op.apply(u).dot(u) > 0.0);
  }
}

TEST_CASE("operator_norm_sq on the identity over R^5 is 1") {
  NormEstimate est = operator_norm_sq(identity_map(5));
  CHECK(est.converged);
  CHECK(est.value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("operator_norm_sq of diag(1,2,3) is 9") {
  Vec d(3);
  d << 1.0, 2.0, 3.0;
  NormEstimate est = operator_norm_sq(diagonal_map(d));
  CHECK(est.converged);
  CHECK(est.value == doctest::Approx(9.0).epsilon(1e-10));
}

TEST_CASE("operator_norm_sq of the 4x4 grid differences matches dense eigenvalues") {
  LinearMap grad = gradient_operator({4, 4, 1});
  Mat G = oracle::to_dense(grad);
  double truth = oracle::top_eig_sym(Mat(G.transpose() * G));
  NormEstimate est = operator_norm_sq(grad);
  CHECK(est.converged);
  CHECK(std::abs(est.value - truth) <= 1e-8);
}

TEST_CASE("operator_norm_sq of the zero operator is 0 and flags non-convergence honestly") {
  NormEstimate zero = operator_norm_sq(zero_map(6, 4));
  CHECK(zero.converged);
  CHECK(zero.value == 0.0);

  NormEstimate starved = operator_norm_sq(gradient_operator({8, 8, 1}), 1e-12, 2);
  CHECK_FALSE(starved.converged);
  CHECK(starved.value > 0.0);  // best estimate still reported
}

TEST_CASE("operator_norm_sq is monotone under composition with contractions") {
  auto gen = oracle::rng(33);
  LinearMap M = from_dense(oracle::random_mat(6, 6, gen));
  Vec shrink = oracle::random_vec(6, gen, 0.0, 1.0);
  LinearMap P = diagonal_map(shrink);  // ||P||_2 <= 1
  double whole = operator_norm_sq(M).value;
  double composed = operator_norm_sq(compose_maps(M, P)).value;
  CHECK(composed <= whole * (1.0 + 1e-9) + 1e-12);
}

TEST_CASE("cg_solve with the identity system returns rhs") {
  Vec b(4);
  b << 1.0, -2.0, 0.25, 4.0;
  SpdSystem S{identity_map(4), "identity", 1.0};
  CgResult r = cg_solve(S, b);
  CHECK(r.converged);
  CHECK((r.x - b).norm() <= 1e-12);
}

TEST_CASE("cg_solve with diag(2) and rhs 4 returns 2") {
  Vec d(1), b(1);
  d << 2.0;
  b << 4.0;
  CgResult r = cg_solve(spd_from_diagonal(d), b);
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("cg_solve on a random 5x5 SPD matrix matches Gaussian elimination") {
  auto gen = oracle::rng(5);
  Mat S = oracle::random_spd(5, gen);
  Vec b = oracle::random_vec(5, gen);
  LinearMap op = from_dense(S);
  SpdSystem sys{op, "random-spd", std::nullopt};
  CgResult r = cg_solve(sys, b, 1e-13);
  CHECK(r.converged);
  Vec truth = oracle::dense_solve(S, b);
  CHECK((r.x - truth).norm() <= 1e-8);
  // Residual contract: ||S z - rhs|| <= tol * max(1, ||rhs||).
  CHECK((S * r.x - b).norm() <= 1e-13 * std::max(1.0, b.norm()) * 1.5);
}

TEST_CASE("cg_solve reports exhaustion instead of lying about convergence") {
  auto gen = oracle::rng(6);
  Mat S = oracle::random_spd(12, gen);
  Vec b = oracle::random_vec(12, gen);
  CgResult r = cg_solve(SpdSystem{from_dense(S), "starved", std::nullopt}, b,
                        1e-14, 1);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 1);
}

TEST_CASE("cg_solve reproduces dense solves on a 256-dim composition") {
  GridShape shape{16, 16, 1};
  LinearMap grad = gradient_operator(shape);
  auto op = [grad](const Vec& u) {
    return Vec(2.0 * u + grad.apply_adjoint(grad.apply(u)));
  };
  SpdSystem S{LinearMap{256, 256, op, op, "2I+GtG"}, "2I+GtG", 2.0};
  Mat D = oracle::to_dense(S.op);
  auto gen = oracle::rng(77);
  Vec b = oracle::random_vec(256, gen);
  CgResult r = cg_solve(S, b, 1e-12);
  CHECK(r.converged);
  Vec truth = oracle::dense_solve(D, b);
  CHECK((r.x - truth).norm() <= 1e-7 * truth.norm());
}

TEST_CASE("min_eig_lower_bound returns the recorded analytic floor") {
  // W = sqrt(2) * identity contributes W^T W = 2 I; any PSD A^T A on top keeps
  // 2 as a certified lower bound, which the construction records.
  GridShape shape{4, 4, 1};
  LinearMap grad = gradient_operator(shape);
  auto op = [grad](const Vec& u) {
    return Vec(2.0 * u + grad.apply_adjoint(grad.apply(u)));
  };
  SpdSystem S{LinearMap{16, 16, op, op, "2I+GtG"}, "2I+GtG", 2.0};
  CHECK(min_eig_lower_bound(S) == 2.0);

  Vec ones = Vec::Ones(7);
  CHECK(min_eig_lower_bound(spd_from_diagonal(ones)) == 1.0);

  Vec d(2);
  d << 2.0, 5.0;
  CHECK(min_eig_lower_bound(spd_from_diagonal(d)) == 2.0);
}

TEST_CASE("min_eig_lower_bound certifies from below without an analytic record") {
  Vec d(3);
  d << 3.0, 0.5, 8.0;
  LinearMap op = diagonal_map(d);
  SpdSystem S{op, "diag-no-record", std::nullopt};
  double bound = min_eig_lower_bound(S);
  CHECK(bound <= 0.5 + 1e-9);
  CHECK(bound >= 0.5 * 0.9);
  Mat D = oracle::to_dense(op);
  CHECK(bound <= oracle::bottom_eig_sym(D) + 1e-9);
}

TEST_CASE("min_eig_lower_bound rejects indefinite compositions") {
  Vec d(3);
  d << 1.0, -1.0, 2.0;
  LinearMap op = diagonal_map(d);
  SpdSystem S{op, "indefinite", std::nullopt};
  CHECK_THROWS_AS(min_eig_lower_bound(S), std::runtime_error);
  CHECK_THROWS_AS(spd_from_diagonal(d), std::invalid_argument);
}

TEST_CASE("materialize_dense matches basis probing and guards its size") {
  auto gen = oracle::rng(9);
  Mat M = oracle::random_mat(6, 4, gen);
  LinearMap op = from_dense(M);
  Mat probed = oracle::to_dense(op);
  CHECK((materialize_dense(op) - probed).norm() == 0.0);
  CHECK((probed - M).norm() == 0.0);
  CHECK_THROWS_AS(materialize_dense(identity_map(2000)), std::invalid_argument);
}

TEST_CASE("power iteration is deterministic across repeated calls") {
  LinearMap grad = gradient_operator({6, 5, 1});
  NormEstimate a = operator_norm_sq(grad);
  NormEstimate b = operator_norm_sq(grad);
  CHECK(a.value == b.value);
  CHECK(a.iterations == b.iterations);
}

}  // TEST_SUITE
