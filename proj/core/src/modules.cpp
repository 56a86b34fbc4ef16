#include "tpadmm/modules.hpp"

#include "tpadmm/tpadmm.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>

namespace tpadmm {

namespace {

Index clamp_index(Index v, Index hi) { return std::min(std::max(v, Index(0)), hi); }

void check_shape(const GridShape& shape, const Vec& x, const std::string& label) {
  if (shape.width <= 0 || shape.height <= 0 || shape.channels <= 0) {
    throw std::invalid_argument(label + ": degenerate grid shape");
  }
  if (shape.size() != x.size()) {
    throw std::invalid_argument(label + ": input size " + std::to_string(x.size()) +
                                " does not match grid " + std::to_string(shape.size()));
  }
}

// Row-major, channel-interleaved layout shared with the applications.
inline Index at(const GridShape& g, Index i, Index j, Index ch) {
  return (i * g.width + j) * g.channels + ch;
}

Vec box3_filter(const GridShape& g, const Vec& x) {
  Vec out(x.size());
  for (Index ch = 0; ch < g.channels; ++ch) {
    for (Index i = 0; i < g.height; ++i) {
      for (Index j = 0; j < g.width; ++j) {
        double acc = 0.0;
        for (Index di = -1; di <= 1; ++di) {
          for (Index dj = -1; dj <= 1; ++dj) {
            acc += x[at(g, clamp_index(i + di, g.height - 1),
                        clamp_index(j + dj, g.width - 1), ch)];
          }
        }
        out[at(g, i, j, ch)] = acc / 9.0;
      }
    }
  }
  return out;
}

Vec gaussian_filter(const GridShape& g, const Vec& x, double sigma) {
  Index radius = std::max<Index>(1, Index(std::ceil(3.0 * sigma)));
  Eigen::VectorXd w(2 * radius + 1);
  for (Index d = -radius; d <= radius; ++d) {
    w[d + radius] = std::exp(-0.5 * double(d * d) / (sigma * sigma));
  }
  w /= w.sum();

  Vec mid(x.size()), out(x.size());
  for (Index ch = 0; ch < g.channels; ++ch) {
    for (Index i = 0; i < g.height; ++i) {
      for (Index j = 0; j < g.width; ++j) {
        double acc = 0.0;
        for (Index d = -radius; d <= radius; ++d) {
          acc += w[d + radius] * x[at(g, i, clamp_index(j + d, g.width - 1), ch)];
        }
        mid[at(g, i, j, ch)] = acc;
      }
    }
    for (Index i = 0; i < g.height; ++i) {
      for (Index j = 0; j < g.width; ++j) {
        double acc = 0.0;
        for (Index d = -radius; d <= radius; ++d) {
          acc += w[d + radius] * mid[at(g, clamp_index(i + d, g.height - 1), j, ch)];
        }
        out[at(g, i, j, ch)] = acc;
      }
    }
  }
  return out;
}

Vec median_filter(const GridShape& g, const Vec& x, Index radius) {
  Vec out(x.size());
  std::vector<double> window;
  window.reserve(size_t((2 * radius + 1) * (2 * radius + 1)));
  for (Index ch = 0; ch < g.channels; ++ch) {
    for (Index i = 0; i < g.height; ++i) {
      for (Index j = 0; j < g.width; ++j) {
        window.clear();
        for (Index di = -radius; di <= radius; ++di) {
          for (Index dj = -radius; dj <= radius; ++dj) {
            window.push_back(x[at(g, clamp_index(i + di, g.height - 1),
                                  clamp_index(j + dj, g.width - 1), ch)]);
          }
        }
        auto mid = window.begin() + window.size() / 2;
        std::nth_element(window.begin(), mid, window.end());
        out[at(g, i, j, ch)] = *mid;
      }
    }
  }
  return out;
}

}  // namespace

TaskModule make_identity_module() {
  TaskModule m;
  m.label = "identity";
  m.apply = [](int, const Vec& x) { return x; };
  return m;
}

TaskModule make_exact_oracle_module(double target_residual) {
  if (target_residual <= 0.0) {
    throw std::invalid_argument("exact-oracle module: target must be positive");
  }
  auto state = std::make_shared<std::optional<ModuleContext>>();
  TaskModule m;
  m.label = "exact-oracle";
  m.on_iteration = [state](const ModuleContext& ctx) { *state = ctx; };
  m.apply = [state, target_residual](int k, const Vec& x) {
    if (!state->has_value() || (*state)->k != k) {
      throw std::runtime_error(
          "exact-oracle module: no subproblem context published for iteration " +
          std::to_string(k));
    }
    const ModuleContext& ctx = **state;
    return fallback_solve(*ctx.problem, *ctx.weight, ctx.beta, ctx.s_k, x,
                          target_residual)
        .x;
  };
  return m;
}

TaskModule make_smoothing_module(SmoothingKind kind, GridShape shape,
                                 double param) {
  TaskModule m;
  m.shape_hint = shape;
  switch (kind) {
    case SmoothingKind::box:
      m.label = "box";
      m.apply = [shape](int, const Vec& x) {
        check_shape(shape, x, "box module");
        return box3_filter(shape, x);
      };
      break;
    case SmoothingKind::gaussian: {
      if (param <= 0.0) throw std::invalid_argument("gaussian module: sigma must be positive");
      m.label = "gaussian";
      m.apply = [shape, param](int, const Vec& x) {
        check_shape(shape, x, "gaussian module");
        return gaussian_filter(shape, x, param);
      };
      break;
    }
    default: {
      Index radius = Index(param);
      if (radius < 1) throw std::invalid_argument("median module: radius must be >= 1");
      m.label = "median";
      m.apply = [shape, radius](int, const Vec& x) {
        check_shape(shape, x, "median module");
        return median_filter(shape, x, radius);
      };
      break;
    }
  }
  return m;
}

TaskModule make_adversarial_module(AdversarialMode mode, double param,
                                   unsigned seed) {
  TaskModule m;
  if (mode == AdversarialMode::constant) {
    m.label = "adversarial-constant";
    m.apply = [param](int, const Vec& x) {
      return Vec(Vec::Constant(x.size(), param));
    };
  } else {
    m.label = "adversarial-noise";
    m.apply = [param, seed](int k, const Vec& x) {
      // Reseeded from (seed, k) so proposals are deterministic per iteration.
      std::mt19937_64 rng(0x9e3779b97f4a7c15ULL * (unsigned(k) + 1) + seed);
      std::uniform_real_distribution<double> dist(-1.0, 1.0);
      Vec out = x;
      for (Index i = 0; i < out.size(); ++i) out[i] += param * dist(rng);
      return out;
    };
  }
  return m;
}

TaskModule make_scheduled_module(std::vector<std::pair<int, TaskModule>> stages) {
  if (stages.empty()) throw std::invalid_argument("scheduled module: no stages");
  if (stages.front().first != 0) {
    throw std::invalid_argument("scheduled module: first stage must start at 0");
  }
  for (size_t i = 1; i < stages.size(); ++i) {
    if (stages[i].first <= stages[i - 1].first) {
      throw std::invalid_argument("scheduled module: stage starts must increase");
    }
  }
  auto shared = std::make_shared<std::vector<std::pair<int, TaskModule>>>(
      std::move(stages));
  auto active = [shared](int k) -> const TaskModule& {
    size_t pick = 0;
    for (size_t i = 0; i < shared->size(); ++i) {
      if ((*shared)[i].first <= k) pick = i;
    }
    return (*shared)[pick].second;
  };
  TaskModule m;
  m.label = "scheduled";
  m.shape_hint = shared->front().second.shape_hint;
  m.apply = [active](int k, const Vec& x) { return active(k).apply(k, x); };
  m.on_iteration = [active](const ModuleContext& ctx) {
    const TaskModule& stage = active(ctx.k);
    if (stage.on_iteration) stage.on_iteration(ctx);
  };
  return m;
}

}  // namespace tpadmm
