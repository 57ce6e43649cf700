#include "lcpo/solver/steps.hpp"

#include <cmath>
#include <stdexcept>

namespace lcpo {
namespace {

CategoricalBatch policy_at(Mlp& actor, const Matrix2D& obs) {
  return CategoricalBatch::from_logits(actor.forward_logits(obs));
}

double surrogate_value(const CategoricalBatch& dist, const SolverBatch& recent, double alpha) {
  const Eigen::VectorXd lp = log_prob(dist, recent.actions);
  const Eigen::VectorXd ratios = (lp - recent.behavior_log_probs).array().exp();
  double value = ratios.dot(recent.advantages) / static_cast<double>(ratios.size());
  if (alpha != 0.0) value += alpha * entropy(dist);
  return value;
}

// Frozen theta0 snapshots used to measure realized KLs and the baseline
// surrogate during backtracking.
struct Frozen {
  bool has_anchor = false;
  CategoricalBatch anchor;
  CategoricalBatch recent;
  double surrogate0 = 0.0;
};

Frozen freeze(Mlp& actor, const Matrix2D& anchor_obs, const SolverBatch& recent, double alpha) {
  Frozen f;
  if (anchor_obs.rows() > 0) {
    f.has_anchor = true;
    f.anchor = policy_at(actor, anchor_obs);
  }
  f.recent = policy_at(actor, recent.obs);
  f.surrogate0 = surrogate_value(f.recent, recent, alpha);
  return f;
}

// Halves dir.delta until all bounds hold; restores theta0 before returning.
// kl_anchor_bound <= 0 disables the anchor check (TRPO path).
void halving_line_search(Mlp& actor, const ParamVector& theta0, const Frozen& frozen,
                         const Matrix2D& anchor_obs, const SolverBatch& recent,
                         double kl_anchor_bound, double kl_recent_bound, double alpha,
                         int backtrack_max, SearchDirection& dir) {
  dir.surrogate_before = frozen.surrogate0;
  ParamVector trial = dir.delta;
  for (int k = 0; k <= backtrack_max; ++k, trial *= 0.5) {
    actor.set_params(theta0 + trial);
    const double rka =
        frozen.has_anchor ? kl(frozen.anchor, policy_at(actor, anchor_obs)) : 0.0;
    const CategoricalBatch dist_r = policy_at(actor, recent.obs);
    const double rkr = kl(frozen.recent, dist_r);
    const double sur = surrogate_value(dist_r, recent, alpha);
    const bool ok = (kl_anchor_bound <= 0.0 || rka <= kl_anchor_bound) &&
                    rkr <= kl_recent_bound && sur >= frozen.surrogate0 - 1e-12;
    if (ok) {
      dir.delta = trial;
      dir.halvings = k;
      dir.accepted = true;
      dir.realized_kl_anchor = rka;
      dir.realized_kl_recent = rkr;
      dir.surrogate_after = sur;
      actor.set_params(theta0);
      return;
    }
  }
  dir.delta.setZero();
  dir.halvings = backtrack_max;
  dir.accepted = false;
  dir.realized_kl_anchor = 0.0;
  dir.realized_kl_recent = 0.0;
  dir.surrogate_after = frozen.surrogate0;
  actor.set_params(theta0);
}

}  // namespace

void ConstraintSpec::validate() const {
  if (c_anchor <= 0.0 || c_recent <= 0.0 || damping <= 0.0 || cg_iters <= 0 || backtrack_max <= 0)
    throw std::invalid_argument("ConstraintSpec: all fields must be positive");
  if (c_anchor > c_recent)
    throw std::invalid_argument("ConstraintSpec: c_anchor must not exceed c_recent");
}

void PpoSpec::validate() const {
  if (clip <= 0.0 || max_iters <= 0 || max_kl <= 0.0 || kappa < 0.0)
    throw std::invalid_argument("PpoSpec: invalid field");
}

ParamVector kl_hvp(Mlp& actor, const Matrix2D& obs, const ParamVector& v) {
  if (obs.rows() == 0) throw std::invalid_argument("kl_hvp: empty batch");
  const CategoricalBatch p0 = policy_at(actor, obs);
  const KlAnchorFn fn(p0.probs);
  ParamVector out = gradient_vector_product(actor, obs, fn, v);
  if (!all_finite(out)) throw std::runtime_error("kl_hvp: non-finite result");
  return out;
}

SearchDirection lcpo_s_step(Mlp& actor, const ParamVector& v_pg, const SolverBatch& recent,
                            const Matrix2D& anchor_obs, const ConstraintSpec& spec,
                            double entropy_alpha, double plain_lr) {
  spec.validate();
  SearchDirection dir;
  dir.v_pg_norm = v_pg.norm();
  if (anchor_obs.rows() == 0) {
    dir.delta = plain_lr * v_pg;  // no anchors in range: plain policy gradient
    return dir;
  }
  dir.delta = ParamVector::Zero(v_pg.size());
  if (dir.v_pg_norm == 0.0) return dir;

  const ParamVector theta0 = actor.get_params();
  const auto apply_A = [&](const ParamVector& w) { return kl_hvp(actor, anchor_obs, w); };
  const ParamVector x = conjugate_gradient(apply_A, v_pg, spec.cg_iters, spec.damping).x;
  const double xax = x.dot(apply_A(x)) + spec.damping * x.squaredNorm();
  if (!(xax > 0.0) || !std::isfinite(xax)) {
    dir.accepted = false;
    return dir;
  }
  const double beta = std::sqrt(2.0 * spec.c_anchor / xax);
  dir.delta = beta * x;
  dir.predicted_kl_anchor = 0.5 * beta * beta * xax;
  dir.predicted_kl_recent =
      0.5 * (dir.delta.dot(kl_hvp(actor, recent.obs, dir.delta)) +
             spec.damping * dir.delta.squaredNorm());

  const Frozen frozen = freeze(actor, anchor_obs, recent, entropy_alpha);
  halving_line_search(actor, theta0, frozen, anchor_obs, recent, spec.c_anchor, spec.c_recent,
                      entropy_alpha, spec.backtrack_max, dir);
  return dir;
}

DualStepResult lcpo_d_step(Mlp& actor, const ParamVector& v_pg, const SolverBatch& recent,
                           const Matrix2D& anchor_obs, const ConstraintSpec& spec,
                           double entropy_alpha) {
  spec.validate();
  if (anchor_obs.rows() == 0 || recent.empty())
    throw std::invalid_argument("lcpo_d_step: both batches must be non-empty");
  DualStepResult res;
  res.dir.v_pg_norm = v_pg.norm();

  const ParamVector theta0 = actor.get_params();
  const auto apply_A = [&](const ParamVector& w) -> ParamVector {
    return kl_hvp(actor, anchor_obs, w) + spec.damping * w;
  };
  const auto apply_B = [&](const ParamVector& w) -> ParamVector {
    return kl_hvp(actor, recent.obs, w) + spec.damping * w;
  };
  // Quadratic KL budgets carry the 1/2 from the second-order expansion.
  res.dual = dual_qcqp(apply_A, apply_B, -v_pg, 2.0 * spec.c_anchor, 2.0 * spec.c_recent,
                       spec.cg_iters);
  res.dir.delta = res.dual.x;
  if (res.dir.delta.norm() == 0.0) return res;
  res.dir.predicted_kl_anchor = 0.5 * res.dir.delta.dot(apply_A(res.dir.delta));
  res.dir.predicted_kl_recent = 0.5 * res.dir.delta.dot(apply_B(res.dir.delta));

  const Frozen frozen = freeze(actor, anchor_obs, recent, entropy_alpha);
  halving_line_search(actor, theta0, frozen, anchor_obs, recent, spec.c_anchor, spec.c_recent,
                      entropy_alpha, spec.backtrack_max, res.dir);
  return res;
}

SearchDirection trpo_step(Mlp& actor, const ParamVector& v_pg, const SolverBatch& recent,
                          double stepsize, const ConstraintSpec& spec) {
  if (stepsize <= 0.0) throw std::invalid_argument("trpo_step: stepsize must be positive");
  SearchDirection dir;
  dir.v_pg_norm = v_pg.norm();
  dir.delta = ParamVector::Zero(v_pg.size());
  if (dir.v_pg_norm == 0.0) return dir;

  const ParamVector theta0 = actor.get_params();
  const auto apply_B = [&](const ParamVector& w) { return kl_hvp(actor, recent.obs, w); };
  const ParamVector x = conjugate_gradient(apply_B, v_pg, spec.cg_iters, spec.damping).x;
  const double xbx = x.dot(apply_B(x)) + spec.damping * x.squaredNorm();
  if (!(xbx > 0.0) || !std::isfinite(xbx)) {
    dir.accepted = false;
    return dir;
  }
  const double beta = std::sqrt(2.0 * stepsize / xbx);
  dir.delta = beta * x;
  dir.predicted_kl_recent = 0.5 * beta * beta * xbx;

  const Matrix2D no_anchor(0, actor.spec().input_dim);
  const Frozen frozen = freeze(actor, no_anchor, recent, 0.0);
  halving_line_search(actor, theta0, frozen, no_anchor, recent, 0.0, stepsize, 0.0,
                      spec.backtrack_max, dir);
  return dir;
}

PpoStepResult lcpo_p_step(Mlp& actor, Adam& opt, const SolverBatch& recent,
                          const Matrix2D& anchor_obs, const PpoSpec& spec,
                          double entropy_alpha) {
  spec.validate();
  if (recent.empty()) throw std::invalid_argument("lcpo_p_step: recent batch empty");
  const ParamVector theta0 = actor.get_params();
  const bool has_anchor = anchor_obs.rows() > 0;
  const CategoricalBatch p0_recent = policy_at(actor, recent.obs);
  Matrix2D p0_anchor;
  if (has_anchor) p0_anchor = policy_at(actor, anchor_obs).probs;

  const auto n_recent = static_cast<double>(recent.obs.rows());
  PpoStepResult res;
  ParamVector params = theta0;
  for (int iter = 0; iter < spec.max_iters; ++iter) {
    const CategoricalBatch dist = policy_at(actor, recent.obs);
    const Eigen::VectorXd lp = log_prob(dist, recent.actions);
    const Eigen::VectorXd ratios = (lp - recent.behavior_log_probs).array().exp();

    // Clipped surrogate: gradient flows only where the unclipped branch is
    // the active minimum.
    Matrix2D up = Matrix2D::Zero(dist.rows(), dist.cols());
    for (Eigen::Index i = 0; i < dist.rows(); ++i) {
      const double adv = recent.advantages(i);
      const double clipped = std::clamp(ratios(i), 1.0 - spec.clip, 1.0 + spec.clip);
      if (ratios(i) * adv <= clipped * adv) {
        const double coef = -adv * ratios(i) / n_recent;
        up.row(i) = -coef * dist.probs.row(i);
        up(i, recent.actions[static_cast<size_t>(i)]) += coef;
      }
    }
    if (entropy_alpha != 0.0) up -= entropy_alpha * mean_entropy_logit_grad(dist);
    ParamVector grad = actor.backward_from_logits(recent.obs, up);

    if (has_anchor && spec.kappa > 0.0) {
      const CategoricalBatch q = policy_at(actor, anchor_obs);
      const Matrix2D up_anchor =
          spec.kappa * (q.probs - p0_anchor) / static_cast<double>(anchor_obs.rows());
      grad += actor.backward_from_logits(anchor_obs, up_anchor);
    }

    opt.step(params, grad);
    actor.set_params(params);
    res.iters = iter + 1;
    res.final_kl_recent = kl(p0_recent, policy_at(actor, recent.obs));
    if (res.final_kl_recent > spec.max_kl) break;
  }
  if (has_anchor)
    res.final_kl_anchor = kl(CategoricalBatch::from_probs(p0_anchor), policy_at(actor, anchor_obs));
  res.delta = params - theta0;
  return res;
}

}  // namespace lcpo
