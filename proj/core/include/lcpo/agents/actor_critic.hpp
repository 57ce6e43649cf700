#pragma once

#include <optional>
#include <vector>

#include "lcpo/agents/agent.hpp"
#include "lcpo/agents/gae.hpp"
#include "lcpo/agents/tuner.hpp"
#include "lcpo/ood/samplers.hpp"
#include "lcpo/ood/store.hpp"
#include "lcpo/solver/steps.hpp"
#include "lcpo/tensor/adam.hpp"
#include "lcpo/tensor/mlp.hpp"

namespace lcpo {

enum class PolicyOptimizer {
  PlainPg,  // A2C: Adam on the policy gradient
  LcpoS,    // anchored trust region, conjugate gradient + line search
  LcpoD,    // anchored + recent double constraint via the dual
  LcpoP,    // proximal: clipped surrogate + cross-entropy anchor pull
};

struct ActorCriticParams {
  int obs_dim = 0;
  int n_actions = 0;
  int feature_dim = 0;  // exogenous input slice width; needed when anchored
  std::vector<int> actor_hidden{64, 64};
  std::vector<int> critic_hidden{64, 64};
  double lr_actor = 4e-4;
  double lr_critic = 1e-3;
  double weight_decay = 1e-4;
  double gamma = 0.99;
  double lambda = 0.9;
  // entropy_base <= 0 disables the bonus and the tuner (alpha fixed at 0).
  double entropy_base = 0.03;
  double entropy_target = 0.0;
  double tuner_lr = 1e-3;

  PolicyOptimizer optimizer = PolicyOptimizer::PlainPg;
  ConstraintSpec constraint;
  PpoSpec ppo;
  OodSpec ood;

  void validate() const;
};

// A2C and the three anchored variants in one implementation. The plain and
// anchored paths share every floating-point operation up to the anchor
// branch, so an anchored agent whose sampler never returns candidates tracks
// the A2C parameter trajectory bit for bit.
class ActorCriticAgent : public Agent {
 public:
  ActorCriticAgent(const ActorCriticParams& params, Rng& init_rng);

  ActResult act(const Eigen::RowVectorXd& obs, ActMode mode, Rng& rng) override;
  Eigen::VectorXd action_probs(const Eigen::RowVectorXd& obs) override;
  void observe(const Transition& t) override;
  UpdateStats update(int64_t epoch) override;
  void save(std::ostream& out) const override;
  void load(std::istream& in) override;

  const Mlp& actor() const { return actor_; }
  const Mlp& critic() const { return critic_; }
  Mlp& actor() { return actor_; }
  const ExperienceStore* experience_store() const override {
    return store_ ? &*store_ : nullptr;
  }
  double alpha() const { return tuner_ ? tuner_->alpha() : 0.0; }

 private:
  bool anchored() const { return params_.optimizer != PolicyOptimizer::PlainPg; }

  ActorCriticParams params_;
  Mlp actor_;
  Mlp critic_;
  Adam actor_opt_;
  Adam critic_opt_;
  std::optional<EntropyTuner> tuner_;
  std::optional<ExperienceStore> store_;
  RolloutBatch rollout_;
  Rng update_rng_;  // anchor-minibatch draws; forked once at construction
};

// Shared plumbing, also used by the TRPO agent.
namespace ac_detail {

ActResult sample_policy(Mlp& actor, Mlp& critic, const Eigen::RowVectorXd& obs, ActMode mode,
                        Rng& rng);

struct PreparedBatch {
  SolverBatch batch;      // obs, actions, normalized advantages, behavior log-probs
  Matrix2D features;      // exogenous slice rows aligned with batch.obs
  Eigen::VectorXd returns;
};

// Recomputes values with the current critic, runs GAE (bootstrapping from
// next_obs when the tail step did not terminate), and normalizes advantages.
PreparedBatch prepare_batch(Mlp& critic, const RolloutBatch& rollout, double gamma,
                            double lambda);

// Ascent gradient of mean(log pi(a|s) * adv) + alpha * mean entropy.
ParamVector policy_gradient(Mlp& actor, const CategoricalBatch& dist, const SolverBatch& batch,
                            double alpha);

// One Adam step on mean squared error to returns; returns the pre-step loss.
// Non-finite gradients skip the step and report success=false.
struct CriticUpdate {
  double loss = 0.0;
  bool applied = false;
};
CriticUpdate critic_update(Mlp& critic, Adam& opt, const Matrix2D& obs,
                           const Eigen::VectorXd& returns);

}  // namespace ac_detail

}  // namespace lcpo
