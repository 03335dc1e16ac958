#include "l2pub/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <thread>

#include "l2pub/error.hpp"
#include "l2pub/numeric.hpp"

namespace l2pub {

void SimConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma", "discount must lie in (0, 1)");
  if (horizon < 1) throw ConfigError("horizon", "must be >= 1");
  if (delay_cycle.empty()) throw ConfigError("delay", "at least one delay cost is required");
  if (initial_queue < 0) throw ConfigError("initial_queue", "must be >= 0");
}

namespace {

// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index writes
// only its own output slot, so the result is independent of scheduling.
void parallel_for(std::int64_t n, unsigned threads, const std::function<void(std::int64_t)>& fn) {
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::int64_t>(n, 1))));
  if (workers == 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::int64_t i = next++; i < n && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

EpisodeResult run_episode(const Policy& policy, const SimConfig& config, std::uint64_t episode) {
  config.validate();
  Rng rng(config.seed, episode);
  EpisodeResult res;
  res.records.reserve(static_cast<std::size_t>(config.horizon));

  TxQueue queue;
  TxId next_id = 0;
  const auto initial = static_cast<TxId>(config.initial_queue);
  auto spec_for = [&config](TxId id) -> const DelayCostSpec& {
    return config.delay_cycle[static_cast<std::size_t>(id % config.delay_cycle.size())];
  };
  // Initial transactions can be published at t = 0; H_t only from t + 1.
  auto first_chance = [initial](const Transaction& tx) { return tx.id < initial ? Step{0} : tx.arrival_step + 1; };

  for (; next_id < initial; ++next_id) queue.push({next_id, 0, spec_for(next_id)});

  double price = config.price.initial_price();
  double discount = 1.0;
  CompensatedSum total;
  for (Step t = 0; t < config.horizon; ++t) {
    const PolicyAction action = policy.decide({t, price, queue});

    StepRecord rec;
    rec.t = t;
    rec.price = price;
    rec.queue_size_before = queue.size();
    // step_cost validates the action against the queue.
    const double cost = step_cost(price, queue, action.publish_ids, config.publish, t);
    rec.published_count = action.publish_ids.size();
    rec.publish_gas = publishing_cost(config.publish, rec.published_count);
    rec.publish_cost = price * rec.publish_gas;
    rec.delay_cost = std::max(0.0, cost - rec.publish_cost);
    rec.discounted_step_cost = discount * cost;
    total += rec.discounted_step_cost;

    for (TxId id : action.publish_ids) {
      const Step wait = t - first_chance(*queue.find(id));
      res.max_wait = std::max(res.max_wait, wait);
      ++res.wait_histogram[wait];
    }
    queue.remove(action.publish_ids);
    queue.push({next_id, t, spec_for(next_id)});
    ++next_id;
    res.records.push_back(rec);

    if (t + 1 < config.horizon) {
      const auto next = next_price(config.price, price, t, rng);
      if (!next) {
        res.truncated = true;
        res.warnings.push_back("price trace exhausted after step " + std::to_string(t) + " of horizon " +
                               std::to_string(config.horizon));
        break;
      }
      price = *next;
    }
    discount *= config.gamma;
  }

  const Step end = res.records.empty() ? 0 : res.records.back().t + 1;
  for (const auto& tx : queue) ++res.unpublished_ages[end - first_chance(tx)];
  res.final_queue_size = queue.size();
  res.total_discounted_cost = total.value();
  return res;
}

std::vector<double> compare(const Policy& policy_a, const Policy& policy_b, const SimConfig& config,
                            std::int64_t episodes) {
  if (episodes < 1) throw PreconditionError("compare needs at least one episode");
  config.validate();
  std::vector<std::vector<double>> diffs(static_cast<std::size_t>(episodes));
  parallel_for(episodes, config.threads, [&](std::int64_t e) {
    const auto a = run_episode(policy_a, config, static_cast<std::uint64_t>(e));
    const auto b = run_episode(policy_b, config, static_cast<std::uint64_t>(e));
    const std::size_t len = std::min(a.records.size(), b.records.size());
    auto& d = diffs[static_cast<std::size_t>(e)];
    d.reserve(len);
    CompensatedSum ca;
    CompensatedSum cb;
    for (std::size_t i = 0; i < len; ++i) {
      ca += a.records[i].discounted_step_cost;
      cb += b.records[i].discounted_step_cost;
      d.push_back(cb.value() - ca.value());
    }
  });

  std::size_t len = 0;
  for (const auto& d : diffs) len = std::max(len, d.size());
  std::vector<double> mean(len, 0.0);
  for (std::size_t i = 0; i < len; ++i) {
    CompensatedSum s;
    for (const auto& d : diffs) {
      if (!d.empty()) s += i < d.size() ? d[i] : d.back();
    }
    mean[i] = s.value() / static_cast<double>(episodes);
  }
  return mean;
}

MonteCarloSummary monte_carlo(const Policy& policy, const SimConfig& config, std::int64_t episodes) {
  if (episodes < 2) throw PreconditionError("monte carlo needs at least two episodes");
  config.validate();
  std::vector<EpisodeResult> results(static_cast<std::size_t>(episodes));
  parallel_for(episodes, config.threads, [&](std::int64_t e) {
    auto r = run_episode(policy, config, static_cast<std::uint64_t>(e));
    r.records.shrink_to_fit();
    results[static_cast<std::size_t>(e)] = std::move(r);
  });

  MonteCarloSummary s;
  s.episodes = episodes;
  CompensatedSum cost_sum;
  CompensatedSum wait_sum;
  for (const auto& r : results) {
    s.total_costs.push_back(r.total_discounted_cost);
    s.max_waits.push_back(r.max_wait);
    cost_sum += r.total_discounted_cost;
    wait_sum += static_cast<double>(r.max_wait);
    for (const auto& [w, c] : r.wait_histogram) s.wait_histogram[w] += c;
    if (r.truncated) ++s.truncated_episodes;
    for (const auto& rec : r.records) s.max_step_cost = std::max(s.max_step_cost, rec.publish_cost + rec.delay_cost);
  }
  const double n = static_cast<double>(episodes);
  s.mean_cost = cost_sum.value() / n;
  s.mean_max_wait = wait_sum.value() / n;
  CompensatedSum sq;
  for (double c : s.total_costs) sq += (c - s.mean_cost) * (c - s.mean_cost);
  s.std_err = std::sqrt(sq.value() / (n - 1.0)) / std::sqrt(n);
  return s;
}

double quantile(std::vector<std::int64_t> samples, double q) {
  if (samples.empty()) throw PreconditionError("quantile of an empty sample");
  std::sort(samples.begin(), samples.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(samples.size())));
  return static_cast<double>(samples[std::clamp<std::size_t>(rank, 1, samples.size()) - 1]);
}

}  // namespace l2pub
