#pragma once

#include "tpadmm/imaging.hpp"

#include <iosfwd>

namespace tpadmm {

enum class ImageFormat { auto_detect, pgm, ppm };

// Netpbm readers: P2/P5 (one channel) and P3/P6 (three channels), maxval in
// [1, 65535], two-byte big-endian samples above 255, header comments allowed.
// Samples are scaled to [0,1]. Throws std::runtime_error on bad magic,
// truncated payload, or out-of-range maxval.
ImageGrid read_image(const std::string& path);
ImageGrid read_image(std::istream& in);

// Writes binary P5/P6 at maxval 255, clamping to [0,1] and rounding half-up.
// auto_detect picks P5 for one channel and P6 for three.
void write_image(const ImageGrid& img, const std::string& path,
                 ImageFormat format = ImageFormat::auto_detect);
void write_image(const ImageGrid& img, std::ostream& out,
                 ImageFormat format = ImageFormat::auto_detect);

// CSV with the fixed header
//   k,objective,violation,lambda_gap,ek_norm,accepted_source,t_used,psnr,wall_ms
// one row per outer iteration, floats at 17 significant digits (so a reread
// reproduces every double bit-exactly), psnr cell empty when absent.
void write_trace(const SolveTrace& trace, const std::string& path);
void write_trace(const SolveTrace& trace, std::ostream& out);

// Reads the CSV columns back; fields outside the schema (final iterate,
// controller constants, solver label) are left at their defaults.
SolveTrace read_trace(const std::string& path);
SolveTrace read_trace(std::istream& in);

}  // namespace tpadmm
