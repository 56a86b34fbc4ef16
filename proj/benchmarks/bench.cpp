#include "tpadmm/imaging.hpp"
#include "tpadmm/tpadmm.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace tpadmm;

ImageGrid noisy_step(Index side, unsigned seed) {
  NoiseSpec spec;
  spec.kind = NoiseSpec::Kind::uniform;
  spec.amplitude = 0.2;
  return add_noise(make_step_image(GridShape{side, side, 1}), spec, seed);
}

void BM_GradientApply(benchmark::State& state) {
  const Index side = state.range(0);
  const LinearMap grad = gradient_operator(GridShape{side, side, 1});
  const Vec x = make_ramp_image(GridShape{side, side, 1}).pixels;
  for (auto _ : state) benchmark::DoNotOptimize(grad.apply(x));
}
BENCHMARK(BM_GradientApply)->Arg(32)->Arg(128);

void BM_CgGridSolve(benchmark::State& state) {
  const Index side = state.range(0);
  const GridShape shape{side, side, 1};
  const Index n = shape.size();
  const LinearMap grad = gradient_operator(shape);
  SpdSystem system;
  system.op = LinearMap{
      n, n,
      [grad](const Vec& x) {
        return (2.0 * x + grad.apply_adjoint(grad.apply(x))).eval();
      },
      [grad](const Vec& x) {
        return (2.0 * x + grad.apply_adjoint(grad.apply(x))).eval();
      },
      "2I+GtG"};
  system.label = "2I+GtG";
  system.analytic_min_eig = 2.0;
  const Vec rhs = noisy_step(side, 7).pixels;
  for (auto _ : state)
    benchmark::DoNotOptimize(cg_solve(system, rhs, 1e-10));
}
BENCHMARK(BM_CgGridSolve)->Arg(16)->Arg(64);

void BM_OperatorNormSq(benchmark::State& state) {
  const Index side = state.range(0);
  const LinearMap grad = gradient_operator(GridShape{side, side, 1});
  for (auto _ : state)
    benchmark::DoNotOptimize(operator_norm_sq(grad, 1e-10));
}
BENCHMARK(BM_OperatorNormSq)->Arg(16)->Arg(64);

void BM_GaussianModule(benchmark::State& state) {
  const Index side = state.range(0);
  const GridShape shape{side, side, 1};
  const TaskModule module =
      make_smoothing_module(SmoothingKind::gaussian, shape, 1.0);
  const Vec x = noisy_step(side, 11).pixels;
  for (auto _ : state) benchmark::DoNotOptimize(module.apply(0, x));
}
BENCHMARK(BM_GaussianModule)->Arg(64)->Arg(256);

void BM_MedianModule(benchmark::State& state) {
  const Index side = state.range(0);
  const GridShape shape{side, side, 1};
  const TaskModule module =
      make_smoothing_module(SmoothingKind::median, shape, 1.0);
  const Vec x = noisy_step(side, 11).pixels;
  for (auto _ : state) benchmark::DoNotOptimize(module.apply(0, x));
}
BENCHMARK(BM_MedianModule)->Arg(64)->Arg(256);

void BM_SoftThreshold(benchmark::State& state) {
  const Index n = state.range(0);
  Vec v(n);
  for (Index i = 0; i < n; ++i) v[i] = std::sin(0.37 * static_cast<double>(i));
  for (auto _ : state) benchmark::DoNotOptimize(soft_threshold(v, 0.25));
}
BENCHMARK(BM_SoftThreshold)->Arg(1 << 12)->Arg(1 << 16);

void BM_DenoiseOuterIterations(benchmark::State& state) {
  const Index side = state.range(0);
  const ImageGrid observed = noisy_step(side, 3);
  const SeparableProblem problem = build_tv_denoise(observed, 1e-4);
  TpadmmConfig config;
  config.max_outer = 5;
  config.tol_violation = 0.0;
  config.tol_change = 0.0;
  const TaskModule module = make_smoothing_module(
      SmoothingKind::gaussian, observed.shape, 1.0);
  const IterateW init = IterateW::zeros(problem);
  for (auto _ : state)
    benchmark::DoNotOptimize(tpadmm_solve(problem, init, module, config));
}
BENCHMARK(BM_DenoiseOuterIterations)->Arg(8)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
