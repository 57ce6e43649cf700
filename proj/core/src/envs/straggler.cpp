#include "lcpo/envs/straggler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace lcpo {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// EWMA time-scales in seconds; the per-window factor is 0.5 s / tau.
constexpr std::array<double, 4> kScalesSec = {1.0, 5.0, 25.0, 125.0};
constexpr double kQueueNorm = 16.0;
constexpr double kRateNorm = 200.0;
constexpr double kProcNorm = 100.0;

}  // namespace

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile: empty sample");
  if (q < 0.0 || q > 100.0) throw std::invalid_argument("percentile: q out of range");
  std::sort(values.begin(), values.end());
  const double rank = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<size_t>(rank);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = rank - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

const std::array<double, 8>& StragglerSim::timeouts() {
  static const std::array<double, 8> t = {3.0, 6.0, 12.0, 25.0, 50.0, 100.0, 600.0, 1000.0};
  return t;
}

StragglerSim::StragglerSim(double sigma_log) : sigma_log_(sigma_log) {
  if (sigma_log <= 0.0) throw std::invalid_argument("StragglerSim: sigma_log must be positive");
  mu_log_offset_ = -0.5 * sigma_log_ * sigma_log_;
  reset(0);
}

void StragglerSim::reset(uint64_t seed) {
  rng_ = Rng(seed);
  now_ms_ = 0.0;
  window_start_ms_ = 0.0;
  for (auto& s : servers_) s = Server{};
  requests_.clear();
  base_id_ = 0;
  next_id_ = 0;
  pending_unhedged_.clear();
  arrived_ = completed_ = replicas_ = 0;
  last_reward_ = 0.0;
  last_p95_ms_ = 0.0;
  ewma_rate_.fill(0.0);
  ewma_mean_.fill(0.0);
  ewma_p50_.fill(0.0);
  ewma_p90_.fill(0.0);
  busy_frac_.fill(0.0);
}

double StragglerSim::draw_service(double mean_service_ms) {
  const double mean = std::max(mean_service_ms, 0.1);
  return rng_.lognormal(std::log(mean) + mu_log_offset_, sigma_log_);
}

int StragglerSim::least_loaded(int exclude) const {
  int best = -1;
  double best_backlog = kInf;
  for (int s = 0; s < kServers; ++s) {
    if (s == exclude) continue;
    const Server& sv = servers_[static_cast<size_t>(s)];
    const double backlog =
        (sv.queue.empty() ? 0.0 : sv.head_finish_ms - now_ms_) + sv.waiting_ms;
    if (backlog < best_backlog) {
      best_backlog = backlog;
      best = s;
    }
  }
  return best;
}

void StragglerSim::enqueue(int server, int64_t request_id, double service_ms) {
  Server& sv = servers_[static_cast<size_t>(server)];
  if (sv.queue.empty()) {
    sv.head_finish_ms = now_ms_ + service_ms;
  } else {
    sv.waiting_ms += service_ms;
  }
  sv.queue.push_back({request_id, service_ms});
}

void StragglerSim::advance_busy(double from_ms, double to_ms) {
  const double span = to_ms - from_ms;
  if (span <= 0.0) return;
  for (auto& sv : servers_)
    if (!sv.queue.empty()) sv.busy_ms += span;
}

StragglerSim::StepResult StragglerSim::step(int action, double arrival_rate,
                                            double mean_service_ms) {
  if (action < 0 || action >= kActions) throw std::out_of_range("StragglerSim: bad action");
  const double timeout_ms = action == 0 ? kInf : timeouts()[static_cast<size_t>(action - 1)];
  const double window_end = window_start_ms_ + kWindowMs;

  // Pre-draw this window's Poisson arrival times so RNG consumption is
  // independent of event interleaving.
  std::vector<double> arrivals;
  if (arrival_rate > 0.0) {
    double t = window_start_ms_ + rng_.exponential(arrival_rate / 1000.0);
    while (t < window_end) {
      arrivals.push_back(t);
      t += rng_.exponential(arrival_rate / 1000.0);
    }
  }
  size_t next_arrival = 0;

  StepResult res;
  std::vector<double> latencies;
  std::vector<double> service_samples;

  const auto front_alive_unhedged = [&]() -> int64_t {
    while (!pending_unhedged_.empty()) {
      const int64_t id = pending_unhedged_.front();
      if (id >= base_id_) {
        const Request& r = request(id);
        if (!r.hedged && r.first_completion_ms < 0.0) return id;
      }
      pending_unhedged_.pop_front();
    }
    return -1;
  };

  while (true) {
    // Candidate event times: completion < hedge < arrival on ties.
    double t_comp = kInf;
    int comp_server = -1;
    for (int s = 0; s < kServers; ++s) {
      const Server& sv = servers_[static_cast<size_t>(s)];
      if (!sv.queue.empty() && sv.head_finish_ms < t_comp) {
        t_comp = sv.head_finish_ms;
        comp_server = s;
      }
    }
    double t_hedge = kInf;
    int64_t hedge_id = -1;
    if (timeout_ms < kInf) {
      hedge_id = front_alive_unhedged();
      if (hedge_id >= 0) t_hedge = std::max(request(hedge_id).arrival_ms + timeout_ms, now_ms_);
    }
    const double t_arr = next_arrival < arrivals.size() ? arrivals[next_arrival] : kInf;

    const double t = std::min({t_comp, t_hedge, t_arr});
    if (t >= window_end) break;
    advance_busy(now_ms_, t);
    now_ms_ = t;

    if (t_comp <= t_hedge && t_comp <= t_arr) {
      Server& sv = servers_[static_cast<size_t>(comp_server)];
      const QueueEntry done = sv.queue.front();
      sv.queue.pop_front();
      if (!sv.queue.empty()) {
        sv.waiting_ms -= sv.queue.front().service_ms;
        sv.head_finish_ms = now_ms_ + sv.queue.front().service_ms;
      }
      Request& r = request(done.request_id);
      --r.copies_pending;
      if (r.first_completion_ms < 0.0) {
        r.first_completion_ms = now_ms_;
        ++completed_;
        ++res.completed;
        latencies.push_back(now_ms_ - r.arrival_ms);
      }
    } else if (t_hedge <= t_arr) {
      Request& r = request(hedge_id);
      const int replica_server = least_loaded(r.primary_server);
      enqueue(replica_server, hedge_id, draw_service(mean_service_ms));
      r.hedged = true;
      ++r.copies_pending;
      ++replicas_;
      ++res.hedged;
      pending_unhedged_.pop_front();
    } else {
      const int64_t id = next_id_++;
      Request r;
      r.arrival_ms = now_ms_;
      r.copies_pending = 1;
      r.primary_server = least_loaded(-1);
      requests_.push_back(r);
      const double service = draw_service(mean_service_ms);
      service_samples.push_back(service);
      enqueue(r.primary_server, id, service);
      pending_unhedged_.push_back(id);
      ++arrived_;
      ++next_arrival;
    }
  }
  advance_busy(now_ms_, window_end);
  now_ms_ = window_end;
  window_start_ms_ = window_end;

  // Drop the fully-finished prefix so unbounded runs keep bounded state.
  while (!requests_.empty() && requests_.front().copies_pending == 0 &&
         requests_.front().first_completion_ms >= 0.0) {
    requests_.pop_front();
    ++base_id_;
  }

  // Window statistics feed the EWMAs; silent windows leave them unchanged.
  const double rate_obs = static_cast<double>(arrivals.size()) / (kWindowMs / 1000.0);
  for (size_t k = 0; k < kScales; ++k) {
    const double a = (kWindowMs / 1000.0) / kScalesSec[k];
    ewma_rate_[k] += a * (rate_obs - ewma_rate_[k]);
    if (!service_samples.empty()) {
      const double m = std::accumulate(service_samples.begin(), service_samples.end(), 0.0) /
                       static_cast<double>(service_samples.size());
      ewma_mean_[k] += a * (m - ewma_mean_[k]);
      ewma_p50_[k] += a * (percentile(service_samples, 50.0) - ewma_p50_[k]);
      ewma_p90_[k] += a * (percentile(service_samples, 90.0) - ewma_p90_[k]);
    }
  }
  for (size_t s = 0; s < kServers; ++s) {
    busy_frac_[s] = servers_[s].busy_ms / kWindowMs;
    servers_[s].busy_ms = 0.0;
  }

  if (!latencies.empty()) {
    last_p95_ms_ = percentile(latencies, 95.0);
    last_reward_ = -last_p95_ms_ / 1000.0;
  }
  res.reward = last_reward_;
  res.window_p95_ms = last_p95_ms_;
  return res;
}

Eigen::RowVectorXd StragglerSim::observe() const {
  Eigen::RowVectorXd obs(kObsDim);
  for (int s = 0; s < kServers; ++s)
    obs(s) = static_cast<double>(servers_[static_cast<size_t>(s)].queue.size()) / kQueueNorm;
  for (int k = 0; k < kScales; ++k) {
    const auto ks = static_cast<size_t>(k);
    obs(8 + k) = ewma_rate_[ks] / kRateNorm;
    obs(12 + k) = ewma_mean_[ks] / kProcNorm;
    obs(16 + k) = ewma_p50_[ks] / kProcNorm;
    obs(20 + k) = ewma_p90_[ks] / kProcNorm;
  }
  for (int s = 0; s < kServers; ++s) obs(24 + s) = busy_frac_[static_cast<size_t>(s)];
  return obs;
}

}  // namespace lcpo
