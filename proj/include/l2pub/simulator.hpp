#pragma once

// Forward simulation of the publishing MDP.
//
// Step t: the policy sees (t, P_t, Q_t) and picks N_t; the step costs
// P_t C_p(N_t) + delay of Q_t \ N_t; then H_t arrives with arrival step t and
// the price moves to P_{t+1}. Q_0 holds `initial_queue` transactions of age 0.
//
// Waiting time of a transaction is the number of steps between its first
// chance to be published (t = 0 for Q_0, t + 1 for H_t) and its publication.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "l2pub/cost_model.hpp"
#include "l2pub/policies.hpp"
#include "l2pub/price_model.hpp"

namespace l2pub {

struct SimConfig {
  double gamma = 0.9;
  std::int64_t horizon = 1;
  std::uint64_t seed = 0;
  PriceProcess price = PriceProcess::constant(1.0);
  PublishingCostParams publish;
  // Delay spec of the k-th created transaction is delay_cycle[k % size];
  // a single entry is a global delay cost.
  std::vector<DelayCostSpec> delay_cycle{DelayCostSpec::linear(1.0)};
  std::int64_t initial_queue = 1;
  // Worker threads for multi-episode runs; results do not depend on it.
  unsigned threads = 1;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

struct StepRecord {
  Step t = 0;
  double price = 0.0;
  std::size_t queue_size_before = 0;
  std::size_t published_count = 0;
  double publish_gas = 0.0;   // alpha |N| + beta [N non-empty]
  double publish_cost = 0.0;  // price * publish_gas
  double delay_cost = 0.0;
  double discounted_step_cost = 0.0;  // gamma^t (publish_cost + delay_cost)
};

struct EpisodeResult {
  std::vector<StepRecord> records;
  double total_discounted_cost = 0.0;
  std::int64_t max_wait = 0;  // max waiting time at publication
  std::map<std::int64_t, std::size_t> wait_histogram;  // waiting time -> count
  // Transactions still queued at the end, by waiting time so far. Kept apart
  // from the publication waits.
  std::map<std::int64_t, std::size_t> unpublished_ages;
  std::size_t final_queue_size = 0;
  bool truncated = false;  // historical trace ran out before the horizon
  std::vector<std::string> warnings;
};

// Runs one episode; the random stream is derived from (config.seed, episode).
// Throws InvalidActionError if the policy names ids outside the queue.
EpisodeResult run_episode(const Policy& policy, const SimConfig& config, std::uint64_t episode = 0);

// mean over episodes of (cumulative cost of b - cumulative cost of a) at each
// step, both policies driven by the same price path per episode.
std::vector<double> compare(const Policy& policy_a, const Policy& policy_b, const SimConfig& config,
                            std::int64_t episodes);

struct MonteCarloSummary {
  std::int64_t episodes = 0;
  double mean_cost = 0.0;
  double std_err = 0.0;
  double mean_max_wait = 0.0;
  std::map<std::int64_t, std::size_t> wait_histogram;  // pooled over episodes
  std::vector<double> total_costs;                     // per episode
  std::vector<std::int64_t> max_waits;                 // per episode
  std::size_t truncated_episodes = 0;
  double max_step_cost = 0.0;  // largest undiscounted step cost seen
};

MonteCarloSummary monte_carlo(const Policy& policy, const SimConfig& config, std::int64_t episodes);

// Empirical quantile (nearest rank, q in [0, 1]) of integer samples.
double quantile(std::vector<std::int64_t> samples, double q);

}  // namespace l2pub
