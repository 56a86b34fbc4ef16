#pragma once

#include "tpadmm/problem.hpp"

#include <vector>

namespace tpadmm {

// One outer iteration. The first nine fields form the CSV schema of
// write_trace, in this order; the remaining fields are in-memory diagnostics.
struct TraceRecord {
  int k = 0;
  double objective = 0.0;
  double violation = 0.0;
  // Seminorm of the consecutive iterate difference, in the solver's own
  // proximal geometry (see the solver docs for which weight applies).
  double lambda_gap = 0.0;
  // Accepted x-residual norm for the error-controlled solver; final inner
  // linear-solve residual for the baselines.
  double ek_norm = 0.0;
  std::string accepted_source = "-";
  int t_used = 0;
  std::optional<double> psnr;
  double wall_ms = 0.0;

  double ek_ref = 0.0;     // reference residual the acceptance compared against
  double by_change = 0.0;  // ||B (y^k - y^{k+1})||
};

enum class Termination { tol_met, max_iter };

inline const char* termination_name(Termination t) {
  return t == Termination::tol_met ? "tol-met" : "max-iter";
}

struct SolveTrace {
  std::vector<TraceRecord> records;
  IterateW final_w;
  Termination termination = Termination::max_iter;
  bool inner_flagged = false;  // some inner linear solve failed to converge
  double eta = 0.0;            // acceptance factor (error-controlled solver only)
  double gamma = 0.0;          // lipschitz * ||N||_2 companion constant
  std::string solver;
};

// PSNR of a against ref on the [0,1] scale, capped at 99 dB. Used for the
// optional trace column; the image-level wrapper lives with the applications.
double psnr_value(const Vec& a, const Vec& ref);

}  // namespace tpadmm
