#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <vector>

#include "lcpo/tensor/matrix.hpp"
#include "lcpo/util/rng.hpp"

namespace lcpo {

// Request-hedging simulator: k FIFO servers, least-loaded dispatch, heavy-
// tailed (lognormal) service times driven by an exogenous workload trace.
// One decision epoch advances simulated time by 500 ms under a single
// hedging policy: action 0 never replicates, actions 1..8 replicate a
// request on the least-loaded other server once its age crosses the chosen
// timeout. Replicas are never cancelled; a request's latency is the min of
// its two completions and is recorded exactly once, when the first copy
// finishes. The reward is -p95 (in seconds) of the latencies recorded in
// the window, carrying the previous value through empty windows.
class StragglerSim {
 public:
  static constexpr int kServers = 8;
  static constexpr int kActions = 9;
  static constexpr int kObsDim = 32;
  static constexpr int kFeatureOffset = 8;
  static constexpr int kFeatureLen = 12;
  static constexpr double kWindowMs = 500.0;

  // Hedge timeouts (ms) for actions 1..8.
  static const std::array<double, 8>& timeouts();

  explicit StragglerSim(double sigma_log = 0.8);

  void reset(uint64_t seed);

  struct StepResult {
    double reward = 0.0;         // -p95 of this window's latencies, seconds
    double window_p95_ms = 0.0;  // carried forward when no completions
    int completed = 0;
    int hedged = 0;
  };
  // arrival_rate: requests/s; mean_service_ms: lognormal mean for new draws.
  StepResult step(int action, double arrival_rate, double mean_service_ms);

  Eigen::RowVectorXd observe() const;

  int64_t arrived() const { return arrived_; }
  int64_t completed() const { return completed_; }
  int64_t replicas_created() const { return replicas_; }

 private:
  struct Request {
    double arrival_ms = 0.0;
    double first_completion_ms = -1.0;  // min over copies, set once
    int copies_pending = 0;
    bool hedged = false;
    int primary_server = -1;
  };

  struct QueueEntry {
    int64_t request_id = 0;
    double service_ms = 0.0;
  };

  struct Server {
    std::deque<QueueEntry> queue;    // front is in service
    double head_finish_ms = 0.0;     // absolute finish time of the head
    double waiting_ms = 0.0;         // service time queued behind the head
    double busy_ms = 0.0;            // within the current window
  };

  int least_loaded(int exclude) const;
  void enqueue(int server, int64_t request_id, double service_ms);
  void advance_busy(double from_ms, double to_ms);
  double draw_service(double mean_service_ms);
  Request& request(int64_t id) { return requests_[static_cast<size_t>(id - base_id_)]; }

  double sigma_log_;
  double mu_log_offset_;  // ln(mean) - sigma^2/2
  Rng rng_{0};
  double now_ms_ = 0.0;
  double window_start_ms_ = 0.0;
  std::array<Server, kServers> servers_;
  // Finished prefixes are compacted away; ids below base_id_ are fully done.
  std::deque<Request> requests_;
  int64_t base_id_ = 0;
  int64_t next_id_ = 0;
  std::deque<int64_t> pending_unhedged_;  // hedge candidates, arrival order
  int64_t arrived_ = 0;
  int64_t completed_ = 0;
  int64_t replicas_ = 0;
  double last_reward_ = 0.0;
  double last_p95_ms_ = 0.0;

  // EWMA statistics at 4 time-scales (1 s, 5 s, 25 s, 125 s).
  static constexpr int kScales = 4;
  std::array<double, kScales> ewma_rate_{};
  std::array<double, kScales> ewma_mean_{};
  std::array<double, kScales> ewma_p50_{};
  std::array<double, kScales> ewma_p90_{};
  std::array<double, kServers> busy_frac_{};
};

// Linear-interpolation percentile of an unsorted sample, q in [0, 100].
double percentile(std::vector<double> values, double q);

}  // namespace lcpo
