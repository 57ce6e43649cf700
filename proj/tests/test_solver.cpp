#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "lcpo/agents/actor_critic.hpp"
#include "lcpo/solver/cg.hpp"
#include "lcpo/solver/dual_qcqp.hpp"
#include "lcpo/solver/steps.hpp"
#include "lcpo/util/rng.hpp"

using namespace lcpo;

namespace {

Matrix2D random_batch(int rows, int cols, Rng& rng) {
  Matrix2D m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

Mlp make_actor(int obs_dim, int n_actions, Rng& rng) {
  MlpSpec spec;
  spec.input_dim = obs_dim;
  spec.hidden = {8};
  spec.output_dim = n_actions;
  spec.output_activation = OutputActivation::Softmax;
  return Mlp(spec, rng);
}

// On-policy solver batch sampled from the actor itself.
SolverBatch make_recent(Mlp& actor, int rows, Rng& rng) {
  SolverBatch b;
  b.obs = random_batch(rows, actor.spec().input_dim, rng);
  const Matrix2D probs = actor.forward(b.obs);
  b.advantages.resize(rows);
  b.behavior_log_probs.resize(rows);
  for (int i = 0; i < rows; ++i) {
    std::vector<double> row(probs.row(i).begin(), probs.row(i).end());
    const int a = rng.categorical(row);
    b.actions.push_back(a);
    b.behavior_log_probs[i] = std::log(probs(i, a));
    b.advantages[i] = rng.normal();
  }
  const double mean = b.advantages.mean();
  const double sd = std::sqrt((b.advantages.array() - mean).square().mean());
  b.advantages = ((b.advantages.array() - mean) / std::max(sd, 1e-12)).matrix();
  return b;
}

double mean_kl(const Matrix2D& p0, Mlp& actor, const Matrix2D& obs) {
  return kl(CategoricalBatch::from_probs(p0),
            CategoricalBatch::from_logits(actor.forward_logits(obs)));
}

// The ascent gradient the agents feed the solver ops; using anything else
// (e.g. random directions) voids the line search's improvement guarantee.
ParamVector surrogate_gradient(Mlp& actor, const SolverBatch& batch, double alpha) {
  const CategoricalBatch dist = CategoricalBatch::from_logits(actor.forward_logits(batch.obs));
  return ac_detail::policy_gradient(actor, dist, batch, alpha);
}

// Independent n = 2 QCQP oracle: the optimum of a linear objective over the
// intersection of two ellipsoids lies on a boundary, so enumerate the two
// single-constraint optima plus every boundary-intersection point (angle
// scan + bisection) and take the feasible minimum.
double qcqp2_oracle(const Eigen::Matrix2d& A, const Eigen::Matrix2d& B, const Eigen::Vector2d& v,
                    double ca, double cb) {
  std::vector<Eigen::Vector2d> cands;
  const auto single = [&](const Eigen::Matrix2d& M, double c) {
    const Eigen::Vector2d x = M.ldlt().solve(v);
    return Eigen::Vector2d(-std::sqrt(c / v.dot(x)) * x);
  };
  cands.push_back(single(A, ca));
  cands.push_back(single(B, cb));

  const auto g = [&](double phi) {
    const Eigen::Vector2d u(std::cos(phi), std::sin(phi));
    return ca / u.dot(A * u) * u.dot(B * u) - cb;
  };
  const int kSteps = 4000;
  double prev = g(0.0);
  for (int k = 1; k <= kSteps; ++k) {
    const double phi = 2.0 * M_PI * k / kSteps;
    const double cur = g(phi);
    if ((prev <= 0.0) != (cur <= 0.0)) {
      double lo = 2.0 * M_PI * (k - 1) / kSteps, hi = phi;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((g(mid) <= 0.0) == (g(lo) <= 0.0)) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      const Eigen::Vector2d u(std::cos(0.5 * (lo + hi)), std::sin(0.5 * (lo + hi)));
      cands.push_back(std::sqrt(ca / u.dot(A * u)) * u);
    }
    prev = cur;
  }
  double best = 0.0;  // x = 0 is always feasible
  for (const auto& x : cands) {
    if (x.dot(A * x) <= ca * (1.0 + 1e-7) && x.dot(B * x) <= cb * (1.0 + 1e-7))
      best = std::min(best, x.dot(v));
  }
  return best;
}

// Mirrors the implementation's admissibility rule so the fallback flag can be
// cross-checked from the reported quadratic coefficients.
bool has_admissible_root(const DualSolution& sol, double ratio) {
  const double qa = sol.t1 - ratio * sol.t2;
  const double qb = sol.r1 - ratio * sol.r2;
  const double qc = sol.s1 - ratio * sol.s2;
  const double scale = std::max({std::abs(sol.t1), std::abs(sol.r1), std::abs(sol.s1),
                                 ratio * std::abs(sol.t2), ratio * std::abs(sol.r2),
                                 ratio * std::abs(sol.s2)});
  const double tol = 1e-12 * std::max(scale, 1e-300);
  std::vector<double> roots;
  if (std::abs(qa) < tol && std::abs(qb) < tol && std::abs(qc) < tol) {
    roots = {1.0};
  } else if (std::abs(qa) < tol) {
    if (std::abs(qb) >= tol) roots = {-qc / qb};
  } else {
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
      roots = {(-qb + std::sqrt(disc)) / (2.0 * qa), (-qb - std::sqrt(disc)) / (2.0 * qa)};
    }
  }
  for (double u : roots) {
    if (u < -1e-12) continue;
    u = std::max(u, 0.0);
    if (sol.t2 * u * u + sol.r2 * u + sol.s2 > 0.0) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("conjugate gradient solves dense spd systems to tight residuals") {
  Rng rng(21);
  for (int inst = 0; inst < 20; ++inst) {
    const int n = 5 + rng.uniform_int(25);
    Matrix2D r = random_batch(n, n, rng);
    const Eigen::MatrixXd a = r.transpose() * r + Eigen::MatrixXd::Identity(n, n);
    ParamVector v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.normal();

    const double damping = inst % 2 == 0 ? 0.0 : 0.3;
    const ApplyFn apply = [&](const ParamVector& x) -> ParamVector { return a * x; };
    const CgResult res = conjugate_gradient(apply, v, n + 5, damping);

    const ParamVector residual =
        v - (a * res.x + damping * res.x);
    CHECK(residual.norm() < 1e-8 * v.norm());
    CHECK(res.residual_norm < 1e-8 * v.norm());
    const ParamVector direct =
        (a + damping * Eigen::MatrixXd::Identity(n, n)).ldlt().solve(v);
    CHECK((res.x - direct).norm() < 1e-6 * direct.norm());
  }
}

TEST_CASE("truncated cg still reduces the residual monotonically enough to use") {
  Rng rng(22);
  const int n = 40;
  Matrix2D r = random_batch(n, n, rng);
  const Eigen::MatrixXd a = r.transpose() * r + Eigen::MatrixXd::Identity(n, n);
  ParamVector v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  const ApplyFn apply = [&](const ParamVector& x) -> ParamVector { return a * x; };
  const double r10 = conjugate_gradient(apply, v, 10, 0.0).residual_norm;
  const double r3 = conjugate_gradient(apply, v, 3, 0.0).residual_norm;
  CHECK(r10 < r3);
  CHECK(r10 < v.norm());
}

TEST_CASE("kl_hvp matches the finite-difference hessian action") {
  Rng rng(23);
  Mlp actor = make_actor(4, 3, rng);
  const Matrix2D obs = random_batch(6, 4, rng);
  ParamVector dir(actor.param_count());
  for (int i = 0; i < dir.size(); ++i) dir[i] = rng.normal();

  const ParamVector hvp = kl_hvp(actor, obs, dir);

  // grad of theta -> mean KL(p0 || p_theta) evaluated by hand.
  const Matrix2D p0 = actor.forward(obs);
  const auto grad_at = [&](const ParamVector& theta) {
    actor.set_params(theta);
    const Matrix2D z = actor.forward_logits(obs);
    const Matrix2D q = CategoricalBatch::from_logits(z).probs;
    return actor.backward_from_logits(obs, (q - p0) / static_cast<double>(obs.rows()));
  };
  const ParamVector theta0 = actor.get_params();
  const double h = 1e-5;
  const ParamVector fd = (grad_at(theta0 + h * dir) - grad_at(theta0 - h * dir)) / (2.0 * h);
  actor.set_params(theta0);
  CHECK((hvp - fd).norm() / std::max(1e-12, fd.norm()) < 1e-3);

  const Matrix2D empty(0, 4);
  CHECK_THROWS_AS(kl_hvp(actor, empty, dir), std::invalid_argument);
}

TEST_CASE("kl_hvp is symmetric and positive semidefinite in practice") {
  Rng rng(24);
  Mlp actor = make_actor(5, 4, rng);
  const Matrix2D obs = random_batch(8, 5, rng);
  ParamVector u(actor.param_count()), w(actor.param_count());
  for (int i = 0; i < u.size(); ++i) {
    u[i] = rng.normal();
    w[i] = rng.normal();
  }
  const double uAw = u.dot(kl_hvp(actor, obs, w));
  const double wAu = w.dot(kl_hvp(actor, obs, u));
  CHECK(uAw == doctest::Approx(wAu).epsilon(1e-9));
  CHECK(u.dot(kl_hvp(actor, obs, u)) >= -1e-12);
}

TEST_CASE("lcpo_s_step with no anchors is exactly a scaled policy gradient") {
  Rng rng(25);
  Mlp actor = make_actor(4, 3, rng);
  ParamVector v_pg(actor.param_count());
  for (int i = 0; i < v_pg.size(); ++i) v_pg[i] = rng.normal();
  SolverBatch recent = make_recent(actor, 16, rng);
  const Matrix2D no_anchor(0, 4);

  const ParamVector theta0 = actor.get_params();
  const SearchDirection dir = lcpo_s_step(actor, v_pg, recent, no_anchor, {}, 0.0, 4e-4);
  CHECK(dir.delta == ParamVector(4e-4 * v_pg));
  CHECK(dir.accepted);
  CHECK(dir.halvings == 0);
  CHECK(actor.get_params() == theta0);
}

TEST_CASE("lcpo_s_step honors both kl budgets and does not move the actor") {
  Rng rng(26);
  Mlp actor = make_actor(4, 3, rng);
  SolverBatch recent = make_recent(actor, 32, rng);
  const Matrix2D anchors = random_batch(64, 4, rng);
  const ParamVector v_pg = surrogate_gradient(actor, recent, 0.01);

  ConstraintSpec spec;
  const ParamVector theta0 = actor.get_params();
  const Matrix2D anchor_p0 = actor.forward(anchors);
  const Matrix2D recent_p0 = actor.forward(recent.obs);
  const SearchDirection dir = lcpo_s_step(actor, v_pg, recent, anchors, spec, 0.01, 4e-4);

  CHECK(actor.get_params() == theta0);
  CHECK(dir.accepted);
  CHECK(dir.predicted_kl_anchor == doctest::Approx(spec.c_anchor).epsilon(1e-9));
  CHECK(dir.delta.norm() > 0.0);

  actor.set_params(theta0 + dir.delta);
  const double kla = mean_kl(anchor_p0, actor, anchors);
  const double klr = mean_kl(recent_p0, actor, recent.obs);
  CHECK(kla == doctest::Approx(dir.realized_kl_anchor).epsilon(1e-12));
  CHECK(klr == doctest::Approx(dir.realized_kl_recent).epsilon(1e-12));
  CHECK(kla <= spec.c_anchor * (1.0 + 1e-9));
  CHECK(klr <= spec.c_recent * (1.0 + 1e-9));
  CHECK(dir.surrogate_after >= dir.surrogate_before - 1e-12);
}

TEST_CASE("lcpo_s_step halves oversized directions instead of violating the budget") {
  Rng rng(27);
  Mlp actor = make_actor(4, 3, rng);
  SolverBatch recent = make_recent(actor, 32, rng);
  const Matrix2D anchors = random_batch(64, 4, rng);
  const ParamVector v_pg = surrogate_gradient(actor, recent, 0.0);

  ConstraintSpec spec;
  spec.c_anchor = 1e-6;  // very tight: the quadratic model overshoots
  spec.c_recent = 1e-5;
  const SearchDirection dir = lcpo_s_step(actor, v_pg, recent, anchors, spec, 0.0, 4e-4);
  if (dir.accepted) {
    CHECK(dir.realized_kl_anchor <= spec.c_anchor * (1.0 + 1e-9));
    CHECK(dir.realized_kl_recent <= spec.c_recent * (1.0 + 1e-9));
  } else {
    CHECK(dir.delta.norm() == 0.0);
    CHECK(dir.halvings == spec.backtrack_max);
  }
}

TEST_CASE("dual_qcqp matches a boundary-scan oracle on random 2-d instances") {
  Rng rng(28);
  int fallbacks = 0;
  for (int inst = 0; inst < 20; ++inst) {
    Eigen::Matrix2d ra, rb;
    ra << rng.normal(), rng.normal(), rng.normal(), rng.normal();
    rb << rng.normal(), rng.normal(), rng.normal(), rng.normal();
    const Eigen::Matrix2d a = ra.transpose() * ra + 0.05 * Eigen::Matrix2d::Identity();
    const Eigen::Matrix2d b = rb.transpose() * rb + 0.05 * Eigen::Matrix2d::Identity();
    const Eigen::Vector2d v(rng.normal(), rng.normal());
    const double ca = 0.1 + rng.uniform();
    const double cb = 0.1 + rng.uniform();

    const ApplyFn fa = [&](const ParamVector& x) -> ParamVector { return a * x; };
    const ApplyFn fb = [&](const ParamVector& x) -> ParamVector { return b * x; };
    const DualSolution sol = dual_qcqp(fa, fb, v, ca, cb, 50);

    // Feasibility of the returned point, fallback or not.
    const Eigen::Vector2d x = sol.x;
    CHECK(x.dot(a * x) <= ca * 1.05);
    if (sol.fallback == DualFallback::None) CHECK(x.dot(b * x) <= cb * 1.05);

    // Fallback exactly when no admissible dual root exists.
    CHECK((sol.fallback == DualFallback::SingleConstraint) ==
          !has_admissible_root(sol, ca / cb));
    if (sol.fallback == DualFallback::SingleConstraint) ++fallbacks;

    const double oracle = qcqp2_oracle(a, b, v, ca, cb);
    if (sol.fallback == DualFallback::None) {
      CHECK(sol.objective >= oracle - 1e-7 * std::abs(oracle));  // oracle is the optimum
      CHECK(std::abs(sol.objective - oracle) <= 0.01 * std::abs(oracle));
    } else {
      // The single-constraint point is optimal whenever it is feasible.
      if (x.dot(a * x) <= ca * (1.0 + 1e-7) && x.dot(b * x) <= cb * (1.0 + 1e-7))
        CHECK(std::abs(sol.objective - oracle) <= 0.01 * std::abs(oracle));
    }
  }
  INFO("fallbacks: ", fallbacks);
}

TEST_CASE("dual_qcqp handles nested identical ellipsoids via fallback") {
  // B = A with a looser budget: the anchor ball is strictly inside, the dual
  // quadratic has no admissible root, and the anchor constraint alone binds.
  Rng rng(29);
  Eigen::Matrix2d r;
  r << rng.normal(), rng.normal(), rng.normal(), rng.normal();
  const Eigen::Matrix2d a = r.transpose() * r + 0.1 * Eigen::Matrix2d::Identity();
  const Eigen::Vector2d v(1.0, -2.0);
  const ApplyFn fa = [&](const ParamVector& x) -> ParamVector { return a * x; };

  const DualSolution sol = dual_qcqp(fa, fa, v, 0.5, 2.0, 50);
  CHECK(sol.fallback == DualFallback::SingleConstraint);
  CHECK(sol.lambda_b == 0.0);
  const Eigen::Vector2d x = sol.x;
  CHECK(x.dot(a * x) == doctest::Approx(0.5).epsilon(1e-6));

  // Equal budgets degenerate to "every u works" and must not fall back.
  const DualSolution eq = dual_qcqp(fa, fa, v, 0.5, 0.5, 50);
  CHECK(eq.fallback == DualFallback::None);
  const Eigen::Vector2d xe = eq.x;
  CHECK(xe.dot(a * xe) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("dual_qcqp validates inputs") {
  const ApplyFn id = [](const ParamVector& x) { return x; };
  ParamVector v = ParamVector::Ones(2);
  CHECK_THROWS_AS(dual_qcqp(id, id, v, -1.0, 1.0, 10), std::invalid_argument);
  const DualSolution zero = dual_qcqp(id, id, ParamVector::Zero(2), 1.0, 1.0, 10);
  CHECK(zero.x.norm() == 0.0);
}

TEST_CASE("lcpo_d_step keeps both realized kls within budget on network operators") {
  Rng rng(30);
  Mlp actor = make_actor(4, 3, rng);
  SolverBatch recent = make_recent(actor, 32, rng);
  const Matrix2D anchors = random_batch(64, 4, rng);
  const ParamVector v_pg = surrogate_gradient(actor, recent, 0.01);

  ConstraintSpec spec;
  const ParamVector theta0 = actor.get_params();
  const Matrix2D anchor_p0 = actor.forward(anchors);
  const Matrix2D recent_p0 = actor.forward(recent.obs);
  const DualStepResult res = lcpo_d_step(actor, v_pg, recent, anchors, spec, 0.01);

  CHECK(actor.get_params() == theta0);
  CHECK(res.dir.accepted);
  CHECK(res.dir.delta.norm() > 0.0);
  CHECK(res.dual.lambda_a >= 0.0);
  CHECK(res.dual.lambda_b >= 0.0);

  actor.set_params(theta0 + res.dir.delta);
  CHECK(mean_kl(anchor_p0, actor, anchors) <= spec.c_anchor * (1.0 + 1e-9));
  CHECK(mean_kl(recent_p0, actor, recent.obs) <= spec.c_recent * (1.0 + 1e-9));
  actor.set_params(theta0);

  const Matrix2D empty(0, 4);
  CHECK_THROWS_AS(lcpo_d_step(actor, v_pg, recent, empty, spec, 0.0), std::invalid_argument);
}

TEST_CASE("trpo_step obeys its single recent-kl budget") {
  Rng rng(31);
  Mlp actor = make_actor(4, 3, rng);
  SolverBatch recent = make_recent(actor, 64, rng);
  const ParamVector v_pg = surrogate_gradient(actor, recent, 0.0);

  const double stepsize = 0.01;
  const ParamVector theta0 = actor.get_params();
  const Matrix2D recent_p0 = actor.forward(recent.obs);
  const SearchDirection dir = trpo_step(actor, v_pg, recent, stepsize, {});

  CHECK(actor.get_params() == theta0);
  CHECK(dir.accepted);
  CHECK(dir.predicted_kl_recent == doctest::Approx(stepsize).epsilon(1e-9));
  actor.set_params(theta0 + dir.delta);
  CHECK(mean_kl(recent_p0, actor, recent.obs) <= stepsize * (1.0 + 1e-9));
  actor.set_params(theta0);

  const SearchDirection zero = trpo_step(actor, ParamVector::Zero(v_pg.size()), recent, 0.01, {});
  CHECK(zero.delta.norm() == 0.0);
}

TEST_CASE("lcpo_p_step is stationary on zero advantages") {
  Rng rng(32);
  Mlp actor = make_actor(4, 3, rng);
  SolverBatch recent = make_recent(actor, 16, rng);
  recent.advantages.setZero();
  const Matrix2D no_anchor(0, 4);

  Adam opt({4e-4, 0.9, 0.999, 1e-8, 0.0}, actor.param_count());
  const ParamVector theta0 = actor.get_params();
  PpoSpec spec;
  const PpoStepResult res = lcpo_p_step(actor, opt, recent, no_anchor, spec, 0.0);
  CHECK(res.delta.norm() == 0.0);
  CHECK(actor.get_params() == theta0);
  CHECK(res.iters == spec.max_iters);  // the kl stop never fires
  CHECK(res.final_kl_recent == 0.0);
}

TEST_CASE("lcpo_p_step stops at the recent-kl bound and reports iterations") {
  Rng rng(33);
  Mlp actor = make_actor(4, 3, rng);
  SolverBatch recent = make_recent(actor, 32, rng);
  const Matrix2D no_anchor(0, 4);

  Adam opt({5e-3, 0.9, 0.999, 1e-8, 0.0}, actor.param_count());
  PpoSpec spec;
  const ParamVector theta0 = actor.get_params();
  const Matrix2D recent_p0 = actor.forward(recent.obs);
  const PpoStepResult res = lcpo_p_step(actor, opt, recent, no_anchor, spec, 0.0);

  CHECK(res.iters >= 1);
  CHECK(res.iters <= spec.max_iters);
  if (res.iters < spec.max_iters) CHECK(res.final_kl_recent > spec.max_kl);
  // The actor is intentionally left at theta0 + delta.
  CHECK(actor.get_params().isApprox(theta0 + res.delta));
  CHECK(mean_kl(recent_p0, actor, recent.obs) ==
        doctest::Approx(res.final_kl_recent).epsilon(1e-9));
}

TEST_CASE("the anchor pull keeps lcpo_p_step closer to the frozen policy") {
  Rng rng(34);
  Mlp actor = make_actor(4, 3, rng);
  const ParamVector theta0 = actor.get_params();
  SolverBatch recent = make_recent(actor, 32, rng);
  const Matrix2D anchors = random_batch(256, 4, rng);

  PpoSpec pulled;
  pulled.kappa = 10.0;
  Adam opt1({1e-3, 0.9, 0.999, 1e-8, 0.0}, actor.param_count());
  const PpoStepResult with_pull = lcpo_p_step(actor, opt1, recent, anchors, pulled, 0.0);

  actor.set_params(theta0);
  PpoSpec free = pulled;
  free.kappa = 0.0;
  Adam opt2({1e-3, 0.9, 0.999, 1e-8, 0.0}, actor.param_count());
  const PpoStepResult without = lcpo_p_step(actor, opt2, recent, anchors, free, 0.0);

  CHECK(with_pull.final_kl_anchor < without.final_kl_anchor);
  actor.set_params(theta0);
}

TEST_CASE("constraint and ppo specs validate") {
  ConstraintSpec c;
  c.c_anchor = 0.5;
  c.c_recent = 0.1;  // anchor budget larger than recent
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.damping = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  PpoSpec p;
  p.max_kl = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
