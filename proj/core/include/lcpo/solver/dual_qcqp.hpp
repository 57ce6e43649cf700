#pragma once

#include "lcpo/solver/cg.hpp"

namespace lcpo {

enum class DualFallback { None, SingleConstraint };

// Solution of  min x.v  s.t.  x'Ax <= c_a,  x'Bx <= c_b  under the span
// ansatz x = -(2 lambda_a x_a + 2 lambda_b x_b), x_a = A^-1 v, x_b = B^-1 v.
// The ansatz is exact for n = 2 (x_a, x_b span the plane); in higher
// dimensions it is a restriction, which the caller's line search absorbs.
struct DualSolution {
  double lambda_a = 0.0;
  double lambda_b = 0.0;
  double u = 0.0;  // lambda_a / lambda_b
  double t1 = 0.0, r1 = 0.0, s1 = 0.0;
  double t2 = 0.0, r2 = 0.0, s2 = 0.0;
  DualFallback fallback = DualFallback::None;
  ParamVector x;
  double objective = 0.0;          // x.v at the returned point
  double objective_alt_root = 0.0; // other admissible root, if any (else 0)
  bool had_two_roots = false;
};

// apply_A / apply_B must already include any damping; the constraint is
// evaluated against exactly these operators. c_a, c_b > 0.
DualSolution dual_qcqp(const ApplyFn& apply_A, const ApplyFn& apply_B, const ParamVector& v,
                       double c_a, double c_b, int cg_iters);

}  // namespace lcpo
