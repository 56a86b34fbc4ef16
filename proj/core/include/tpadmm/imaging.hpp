#pragma once

#include "tpadmm/tpadmm.hpp"

#include <cstdint>

namespace tpadmm {

// Row-major, channel-interleaved raster with values on [0,1].
struct ImageGrid {
  GridShape shape;
  Vec pixels;

  Index size() const { return shape.size(); }
  // Wraps a vector as an image; clamps into [0,1] unless told otherwise.
  static ImageGrid from_vec(GridShape shape, Vec data, bool clamp = true);
};

// Forward differences per channel, horizontal block stacked before vertical,
// zero rows at the far edges (so constants map to zero). R^{whc} -> R^{2 whc}.
LinearMap gradient_operator(GridShape shape);

// Diagonal 0/1 operator from a keep mask (1 = observed). Self-adjoint and
// idempotent by construction.
LinearMap mask_operator(std::vector<std::uint8_t> keep);

// Bernoulli(missing_ratio) erasures, deterministic in seed.
std::vector<std::uint8_t> random_missing_mask(Index n, double missing_ratio,
                                              unsigned seed);

Vec soft_threshold(const Vec& v, double theta);

// 0.5 ||x - b||^2 + mu ||u||_1 with the split grad x = u.
SeparableProblem build_tv_denoise(const ImageGrid& observed, double mu);

// 0.5 ||M x - M b||^2 + mu ||u||_1, M the keep mask; requires at least one
// observed pixel.
SeparableProblem build_inpaint(const ImageGrid& observed,
                               const std::vector<std::uint8_t>& keep,
                               double mu);

double psnr(const ImageGrid& a, const ImageGrid& ref);

struct NoiseSpec {
  enum class Kind { uniform, gaussian };
  Kind kind = Kind::uniform;
  double amplitude = 0.2;
};

ImageGrid add_noise(const ImageGrid& img, const NoiseSpec& spec, unsigned seed);

ImageGrid make_step_image(GridShape shape, double lo = 0.25, double hi = 0.75);
ImageGrid make_ramp_image(GridShape shape);
// Adds `count` bright vertical streak segments, deterministic in seed.
ImageGrid add_streaks(const ImageGrid& img, int count, double amplitude,
                      unsigned seed);

struct MultiblockResult {
  ImageGrid background;
  ImageGrid rain;
  SolveTrace trace;
};

// Two-block streak separation:
//   0.5 ||x_b + x_r - b||^2 + mu1 ||u||_1 + mu2 ||v||_1,
//   grad x_b = u, x_r = v,
// with Jacobi-style block updates at (x_b^k, x_r^k), per-block error-controlled
// acceptance (module_b / module_r), shared soft-threshold u,v updates and two
// dual steps. The single-block convergence theory does not cover this scheme;
// treat it as experimental. config.weight, when set, applies per block.
MultiblockResult multiblock_rain_solve(const ImageGrid& observed, double mu1,
                                       double mu2, const TpadmmConfig& config,
                                       const TaskModule& module_b,
                                       const TaskModule& module_r);

}  // namespace tpadmm
