#include "lcpo/solver/cg.hpp"

#include <stdexcept>

namespace lcpo {

CgResult conjugate_gradient(const ApplyFn& apply_A, const ParamVector& v, int iters,
                            double damping) {
  if (iters <= 0) throw std::invalid_argument("conjugate_gradient: iters must be positive");
  CgResult res;
  res.x = ParamVector::Zero(v.size());
  ParamVector r = v;  // residual of (A+dI)x = v at x = 0
  ParamVector p = r;
  double rs = r.squaredNorm();
  const double tol = 1e-10 * v.norm();
  res.residual_norm = r.norm();
  for (int k = 0; k < iters && res.residual_norm > tol; ++k) {
    const ParamVector ap = apply_A(p) + damping * p;
    const double pap = p.dot(ap);
    if (!std::isfinite(pap) || pap <= 0.0) {
      // Curvature should be strictly positive for damped PSD operators; a
      // zero/negative value means p is in the null space (damping = 0) or
      // the operator is broken. Return the best iterate so far.
      if (!std::isfinite(pap)) throw std::runtime_error("conjugate_gradient: non-finite curvature");
      break;
    }
    const double alpha = rs / pap;
    res.x += alpha * p;
    r -= alpha * ap;
    if (!all_finite(res.x)) throw std::runtime_error("conjugate_gradient: non-finite iterate");
    const double rs_next = r.squaredNorm();
    p = r + (rs_next / rs) * p;
    rs = rs_next;
    res.residual_norm = r.norm();
    res.iters_used = k + 1;
  }
  return res;
}

}  // namespace lcpo
