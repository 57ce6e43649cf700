#pragma once

#include <vector>

#include "lcpo/distributions.hpp"
#include "lcpo/solver/dual_qcqp.hpp"
#include "lcpo/tensor/adam.hpp"
#include "lcpo/tensor/mlp.hpp"

namespace lcpo {

struct ConstraintSpec {
  double c_anchor = 1e-4;
  double c_recent = 0.1;
  double damping = 0.1;
  int cg_iters = 10;
  int backtrack_max = 10;

  void validate() const;
};

// Minimal view of a rollout for solver purposes. Advantages are expected to
// be normalized by the caller; behavior_log_probs are the sampling-time
// log-probabilities (ratio base for surrogates).
struct SolverBatch {
  Matrix2D obs;
  std::vector<int> actions;
  Eigen::VectorXd advantages;
  Eigen::VectorXd behavior_log_probs;

  bool empty() const { return obs.rows() == 0; }
};

struct SearchDirection {
  ParamVector delta;
  double predicted_kl_anchor = 0.0;
  double predicted_kl_recent = 0.0;
  double realized_kl_anchor = 0.0;
  double realized_kl_recent = 0.0;
  int halvings = 0;
  bool accepted = true;  // false: backtracking exhausted, delta zeroed
  double v_pg_norm = 0.0;
  double surrogate_before = 0.0;
  double surrogate_after = 0.0;
};

// Hessian-vector product of the mean KL(pi_theta0 || pi_theta) over the
// batch, evaluated at the actor's current parameters (where it equals the
// Fisher-vector product). Throws on an empty batch; callers branch first.
ParamVector kl_hvp(Mlp& actor, const Matrix2D& obs, const ParamVector& v);

// Anchored trust-region step: delta = beta (A+dI)^-1 v_pg scaled so the
// quadratic anchor-KL model hits c_anchor, then halved until the realized
// anchor KL <= c_anchor, realized recent KL <= c_recent and the surrogate
// (mean ratio-weighted advantage + alpha * entropy) does not worsen. With no
// anchors this degrades to a plain gradient step of size plain_lr. The actor
// is restored to its entry parameters; callers apply delta themselves.
SearchDirection lcpo_s_step(Mlp& actor, const ParamVector& v_pg, const SolverBatch& recent,
                            const Matrix2D& anchor_obs, const ConstraintSpec& spec,
                            double entropy_alpha, double plain_lr);

struct DualStepResult {
  SearchDirection dir;
  DualSolution dual;
};

// Doubly-constrained step via the dual of min -x.v_pg s.t. quadratic KL
// budgets on the anchor and recent batches, followed by the same halving
// line search as lcpo_s_step as a safety net.
DualStepResult lcpo_d_step(Mlp& actor, const ParamVector& v_pg, const SolverBatch& recent,
                           const Matrix2D& anchor_obs, const ConstraintSpec& spec,
                           double entropy_alpha);

// Classic single-constraint trust-region step on the recent batch
// (KL <= stepsize), no entropy term in the surrogate.
SearchDirection trpo_step(Mlp& actor, const ParamVector& v_pg, const SolverBatch& recent,
                          double stepsize, const ConstraintSpec& spec);

struct PpoSpec {
  double clip = 0.2;
  int max_iters = 30;
  double max_kl = 0.01;
  double kappa = 10.0;

  void validate() const;
};

struct PpoStepResult {
  ParamVector delta;
  int iters = 0;
  double final_kl_recent = 0.0;
  double final_kl_anchor = 0.0;
};

// Proximal variant: iterates clipped-surrogate updates with an added
// kappa-weighted cross-entropy pull toward the frozen policy on the anchor
// batch, stopping once the recent-batch KL from the frozen policy exceeds
// max_kl. The actor is left at theta0 + delta; opt is the caller's
// persistent optimizer.
PpoStepResult lcpo_p_step(Mlp& actor, Adam& opt, const SolverBatch& recent,
                          const Matrix2D& anchor_obs, const PpoSpec& spec, double entropy_alpha);

}  // namespace lcpo
