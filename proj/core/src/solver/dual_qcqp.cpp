#include "lcpo/solver/dual_qcqp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace lcpo {
namespace {

// Quadratic a u^2 + b u + c = 0 with cancellation-safe root extraction.
// Coefficients below `tol` in magnitude are treated as exact zeros.
std::vector<double> solve_quadratic(double a, double b, double c, double tol,
                                    bool* degenerate_all_zero) {
  *degenerate_all_zero = false;
  if (std::abs(a) < tol) {
    if (std::abs(b) < tol) {
      if (std::abs(c) < tol) *degenerate_all_zero = true;
      return {};
    }
    return {-c / b};
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return {};
  const double root_disc = std::sqrt(disc);
  if (std::abs(b) < tol) return {root_disc / (2.0 * a), -root_disc / (2.0 * a)};
  const double q = -0.5 * (b + (b > 0 ? root_disc : -root_disc));
  if (std::abs(q) < tol) return {q / a};
  return {q / a, c / q};
}

}  // namespace

DualSolution dual_qcqp(const ApplyFn& apply_A, const ApplyFn& apply_B, const ParamVector& v,
                       double c_a, double c_b, int cg_iters) {
  if (c_a <= 0.0 || c_b <= 0.0) throw std::invalid_argument("dual_qcqp: budgets must be positive");
  DualSolution sol;
  sol.x = ParamVector::Zero(v.size());
  if (v.norm() == 0.0) return sol;  // x = 0 is optimal and strictly feasible

  const ParamVector x_a = conjugate_gradient(apply_A, v, cg_iters, 0.0).x;
  const ParamVector x_b = conjugate_gradient(apply_B, v, cg_iters, 0.0).x;
  const double vxa = v.dot(x_a);  // = x_a'Ax_a = x_a'Ax_b
  const double vxb = v.dot(x_b);  // = x_b'Bx_b = x_a'Bx_b
  if (vxa <= 0.0 || vxb <= 0.0) throw std::runtime_error("dual_qcqp: operators not positive");
  const double xbAxb = x_b.dot(apply_A(x_b));
  const double xaBxa = x_a.dot(apply_B(x_a));

  sol.t1 = 4.0 * vxa;
  sol.r1 = 8.0 * vxb;
  sol.s1 = 4.0 * xbAxb;
  sol.t2 = 4.0 * xaBxa;
  sol.r2 = 8.0 * vxa;
  sol.s2 = 4.0 * vxb;

  const double ratio = c_a / c_b;
  const double qa = sol.t1 - ratio * sol.t2;
  const double qb = sol.r1 - ratio * sol.r2;
  const double qc = sol.s1 - ratio * sol.s2;
  const double scale = std::max({std::abs(sol.t1), std::abs(sol.r1), std::abs(sol.s1),
                                 ratio * std::abs(sol.t2), ratio * std::abs(sol.r2),
                                 ratio * std::abs(sol.s2)});
  const double tol = 1e-12 * std::max(scale, 1e-300);

  bool any_u = false;
  std::vector<double> roots = solve_quadratic(qa, qb, qc, tol, &any_u);
  if (any_u) roots = {1.0};  // identical scaled ellipsoids: every u works

  struct Candidate {
    double u, alpha, beta, objective;
    ParamVector x;
  };
  std::vector<Candidate> candidates;
  for (double u : roots) {
    if (u < -1e-12) continue;  // negative multipliers are inadmissible
    u = std::max(u, 0.0);
    const double denom = sol.t2 * u * u + sol.r2 * u + sol.s2;
    if (denom <= 0.0) continue;
    const double beta = std::sqrt(c_b / denom);
    const double alpha = u * beta;
    Candidate cand;
    cand.u = u;
    cand.alpha = alpha;
    cand.beta = beta;
    cand.x = -(2.0 * alpha * x_a + 2.0 * beta * x_b);
    cand.objective = cand.x.dot(v);
    candidates.push_back(std::move(cand));
  }

  if (!candidates.empty()) {
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& l, const Candidate& r) { return l.objective < r.objective; });
    const Candidate& best = candidates.front();
    sol.lambda_a = best.alpha;
    sol.lambda_b = best.beta;
    sol.u = best.u;
    sol.x = best.x;
    sol.objective = best.objective;
    sol.had_two_roots = candidates.size() > 1;
    if (sol.had_two_roots) sol.objective_alt_root = candidates[1].objective;
    sol.fallback = DualFallback::None;
    return sol;
  }

  // No admissible root: one ellipsoid boundary lies inside the other along
  // the relevant directions, so a single active constraint is optimal. Try
  // the anchor ellipsoid first, then the other; leave the chosen scaling on
  // its boundary (the caller's line search enforces whatever remains).
  sol.fallback = DualFallback::SingleConstraint;
  const double scale_a = std::sqrt(c_a / vxa);
  ParamVector cand_a = -scale_a * x_a;
  if (cand_a.dot(apply_B(cand_a)) <= c_b * (1.0 + 1e-9)) {
    sol.lambda_a = 0.5 * scale_a;
    sol.lambda_b = 0.0;
    sol.x = std::move(cand_a);
    sol.objective = sol.x.dot(v);
    return sol;
  }
  const double scale_b = std::sqrt(c_b / vxb);
  ParamVector cand_b = -scale_b * x_b;
  if (cand_b.dot(apply_A(cand_b)) <= c_a * (1.0 + 1e-9)) {
    sol.lambda_a = 0.0;
    sol.lambda_b = 0.5 * scale_b;
    sol.x = std::move(cand_b);
    sol.objective = sol.x.dot(v);
    return sol;
  }
  // Numerically neither candidate clears the other constraint; keep the
  // anchor-scaled one and let the line search halve it into feasibility.
  sol.lambda_a = 0.5 * scale_a;
  sol.lambda_b = 0.0;
  sol.x = -scale_a * x_a;
  sol.objective = sol.x.dot(v);
  return sol;
}

}  // namespace lcpo
