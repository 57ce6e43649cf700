#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>

#include "lcpo/agents/rollout.hpp"
#include "lcpo/util/rng.hpp"

namespace lcpo {

enum class ActMode {
  Explore,  // sampling / epsilon-greedy, per agent
  Greedy,   // deterministic argmax, used for evaluation and probes
};

struct ActResult {
  int action = 0;
  double log_prob = 0.0;  // behavior log-probability (0 for value-based agents)
  double value = 0.0;     // critic estimate where the agent has one
};

// Per-update diagnostics surfaced into the metrics CSV. Fields outside an
// agent's vocabulary stay at their defaults.
struct UpdateStats {
  bool updated = false;  // false: update skipped (e.g. non-finite gradients)
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;  // mean policy entropy over the update batch
  double alpha = 0.0;    // entropy coefficient in effect for this update
  double epsilon = 0.0;  // exploration rate (value-based agents)
  int64_t anchor_count = 0;
  int64_t store_size = 0;
  double v_pg_norm = 0.0;
  double kl_anchor_predicted = 0.0;
  double kl_anchor_realized = 0.0;
  double kl_recent_realized = 0.0;
  int halvings = 0;
  int ppo_iters = 0;
  double lambda_a = 0.0;
  double lambda_b = 0.0;
  bool fallback = false;      // dual solve fell back to a single constraint
  bool solver_step = false;   // an anchored trust-region step actually ran
  bool step_accepted = true;  // false: line search exhausted, step zeroed
};

// Common surface the harness drives: collect transitions via act/observe,
// then one update per epoch at the rollout boundary.
class Agent {
 public:
  virtual ~Agent() = default;

  virtual ActResult act(const Eigen::RowVectorXd& obs, ActMode mode, Rng& rng) = 0;

  // Action distribution the probe reports; must not touch training state.
  virtual Eigen::VectorXd action_probs(const Eigen::RowVectorXd& obs) = 0;

  virtual void observe(const Transition& t) = 0;

  // Runs the agent's update for the epoch that just finished collecting.
  virtual UpdateStats update(int64_t epoch) = 0;

  virtual void save(std::ostream& out) const = 0;
  virtual void load(std::istream& in) = 0;

  // Anchored agents expose their experience archive for snapshots/analysis.
  virtual const class ExperienceStore* experience_store() const { return nullptr; }
};

}  // namespace lcpo
