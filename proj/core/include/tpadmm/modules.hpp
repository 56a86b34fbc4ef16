#pragma once

#include "tpadmm/problem.hpp"

#include <utility>
#include <vector>

namespace tpadmm {

struct GridShape {
  Index width = 0;
  Index height = 0;
  Index channels = 1;
  Index size() const { return width * height * channels; }
};

// Published by the solver right before a module is asked for a proposal.
struct ModuleContext {
  int k = 0;
  const SeparableProblem* problem = nullptr;
  const ProximalWeight* weight = nullptr;
  double beta = 0.0;
  Vec s_k;
};

// Plug-in proposal map. apply must be deterministic in (k, x) and preserve the
// input length; the solver checks the latter. on_iteration, when set, receives
// the fresh subproblem context each outer iteration (the exact-solve oracle
// consumes it; filters ignore it).
struct TaskModule {
  std::string label;
  std::function<Vec(int k, const Vec& x)> apply;
  std::function<void(const ModuleContext&)> on_iteration;
  std::optional<GridShape> shape_hint;
};

TaskModule make_identity_module();

// Proposes the exact x-subproblem solution (residual <= target_residual).
// Requires the solver-published context; applying it without one throws.
TaskModule make_exact_oracle_module(double target_residual = 1e-10);

enum class SmoothingKind { box, gaussian, median };

// Channel-independent spatial filters with replicate boundary handling.
// box: 3x3 mean (param unused); gaussian: param = sigma, kernel truncated at
// radius ceil(3 sigma); median: param = window radius (>= 1).
TaskModule make_smoothing_module(SmoothingKind kind, GridShape shape,
                                 double param = 1.0);

enum class AdversarialMode { constant, noise };

// Deliberately unhelpful proposals for stress tests: `constant` proposes the
// all-param vector regardless of input; `noise` perturbs the input by
// param * U[-1, 1], reseeded deterministically from (seed, k).
TaskModule make_adversarial_module(AdversarialMode mode, double param,
                                   unsigned seed = 0);

// Switches between stages: the stage with the largest start <= k is active.
// Stages must be sorted by start and begin at 0.
TaskModule make_scheduled_module(std::vector<std::pair<int, TaskModule>> stages);

}  // namespace tpadmm
