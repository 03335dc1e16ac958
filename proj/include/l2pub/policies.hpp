#pragma once

// Publishing decision rules and the price thresholds they are built on.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "l2pub/cost_model.hpp"

namespace l2pub {

struct PolicyInput {
  Step t = 0;
  double price = 0.0;
  const TxQueue& queue;
};

struct PolicyAction {
  std::vector<TxId> publish_ids;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual PolicyAction decide(const PolicyInput& input) const = 0;
  virtual std::string name() const = 0;
};

using PolicyPtr = std::shared_ptr<const Policy>;

// Publishes the entire queue every step.
class TrivialPolicy final : public Policy {
 public:
  PolicyAction decide(const PolicyInput& input) const override;
  std::string name() const override { return "trivial"; }
};

// Publishes the whole queue once it holds n transactions. With a phase, it
// instead publishes whenever t mod n == phase.
class FixedIntervalPolicy final : public Policy {
 public:
  explicit FixedIntervalPolicy(std::int64_t n, std::optional<std::int64_t> phase = std::nullopt);
  PolicyAction decide(const PolicyInput& input) const override;
  std::string name() const override;
  std::int64_t interval() const noexcept { return n_; }

 private:
  std::int64_t n_;
  std::optional<std::int64_t> phase_;
};

struct IntervalChoice {
  std::int64_t n = 1;
  double objective = 0.0;
  // The objective at n_max did not exceed the best value; widen the search.
  bool boundary_hit = false;
};

// argmin over n in 1..n_max of (F(n) + gamma^{n-1} beta P) / (1 - gamma^n),
// ties toward the smaller n.
IntervalChoice optimal_interval(const DelayCostSpec& spec, double gamma, double beta, double price,
                                std::int64_t n_max);

// Interval objective for a single n, evaluated the same way optimal_interval does.
double interval_objective(double aggregated_delay, std::int64_t n, double gamma, double beta, double price);

// Publishes everything iff gamma^{|Q|-1} beta P <= F(|Q| + 1). Requires a
// queue whose entries share `spec`.
class GreedyBalancePolicy final : public Policy {
 public:
  GreedyBalancePolicy(DelayCostSpec spec, double gamma, double beta, std::int64_t precompute = 4096);
  PolicyAction decide(const PolicyInput& input) const override;
  std::string name() const override { return "greedy"; }

  // Whether a queue of the given size would be published at this price.
  bool publishes(std::size_t queue_size, double price) const;

 private:
  double aggregated(std::int64_t n) const;

  DelayCostSpec spec_;
  double gamma_;
  double beta_;
  std::vector<double> f_;  // f_[k] = F(k + 1)
};

// True iff alpha P <= alpha gamma^n P E[R^n(P)]/P + sum_{i<n} gamma^i C(age + i):
// publishing now is no worse than waiting exactly n steps and publishing then.
bool publish_criterion(std::int64_t n, double price, Step age, double alpha, const DelayCostSpec& spec,
                       double gamma, const std::function<double(std::int64_t)>& expected_factor);

// Linear-delay rollup model: C(i) = 2 c i, log-normal factors, per-tx gas alpha.
struct RollupParams {
  double c = 0.0;
  double gamma = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
  double alpha = 1.0;

  // Throws PreconditionError unless c >= 0, 0 < gamma < 1, alpha > 0 and
  // mu <= -sigma^2/2 (up to kMartingaleTolerance).
  void validate() const;
};

struct RollupThresholdResult {
  double lambda = 0.0;
  std::int64_t argmin_n = 1;
  std::int64_t terms_evaluated = 0;
  // Search reached n_max before the lower bound closed it off.
  bool truncated = false;
};

// lambda(x) = 2c / (alpha (1 - gamma)) * min_{1<=n<=n_max} r_n(x), where
//   r_n(x) = ((1 - g^n)(x + g/(1-g)) - n g^n) / (1 - g^n e^{n(mu + sigma^2/2)}).
// The numerator is evaluated as (1 - g^n) x + h(n) with
// h(n) = (1-g) sum_{k<n} k g^k >= 0 accumulated term by term, and every
// 1 - g^n style quantity as -expm1(n log g). The numerator is increasing in n
// and the denominator lies in (0, 1], so the search ends once the numerator
// alone exceeds the incumbent.
RollupThresholdResult rollup_threshold_search(const RollupParams& params, Step age, std::int64_t n_max = 100000);

inline double rollup_threshold(const RollupParams& params, Step age, std::int64_t n_max = 100000) {
  return rollup_threshold_search(params, age, n_max).lambda;
}

// 2 c x / (1 - gamma): the threshold for a martingale price.
double martingale_threshold(double c, double gamma, Step age);

// 2 c x / (1 - gamma e^{mu + sigma^2/2}): waiting one step is the only alternative.
double one_step_threshold(double c, double gamma, double mu, double sigma, Step age);

// f(n) = n g^n / (1 - g^n); strictly decreasing in n.
double waiting_gain(double gamma, std::int64_t n);
// log f(n). Stays representable after g^n underflows.
double log_waiting_gain(double gamma, std::int64_t n);

struct MartingaleClosedForm {
  double c = 0.0;
  double gamma = 0.0;
};

struct RollupNumeric {
  RollupParams params;
  std::int64_t n_max = 100000;
};

struct OneStepBound {
  double c = 0.0;
  double gamma = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
};

struct ThresholdTable {
  std::vector<double> values;
  // Past the end: reuse the last entry (a floor, since thresholds are
  // monotone) or throw OutOfRangeError.
  bool clamp_beyond = true;
};

// Age-indexed price threshold lambda(x). Construction checks lambda >= 0 and
// non-decreasing over ages 0..check_ages and caches those values.
class ThresholdFn {
 public:
  using Variant = std::variant<MartingaleClosedForm, RollupNumeric, OneStepBound, ThresholdTable>;

  explicit ThresholdFn(Variant v, std::int64_t check_ages = 256);

  double operator()(Step age) const;
  const Variant& variant() const noexcept { return v_; }

 private:
  double compute(Step age) const;

  Variant v_;
  std::vector<double> cache_;
};

// Publishes {tx in Q : P <= lambda_{spec(tx)}(age)}. Transactions with equal
// delay specs share one threshold.
class ThresholdPolicy final : public Policy {
 public:
  explicit ThresholdPolicy(std::vector<std::pair<DelayCostSpec, ThresholdFn>> thresholds, std::string label = "threshold");
  PolicyAction decide(const PolicyInput& input) const override;
  std::string name() const override { return label_; }

  // Throws ConfigError when no threshold is registered for `spec`.
  const ThresholdFn& threshold_for(const DelayCostSpec& spec) const;

 private:
  std::vector<std::pair<DelayCostSpec, ThresholdFn>> thresholds_;
  std::string label_;
};

}  // namespace l2pub
