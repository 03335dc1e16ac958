#include "l2pub/policies.hpp"

#include <cmath>
#include <limits>

#include "l2pub/error.hpp"
#include "l2pub/numeric.hpp"
#include "l2pub/price_model.hpp"

namespace l2pub {

namespace {

std::vector<TxId> all_ids(const TxQueue& q) {
  std::vector<TxId> ids;
  ids.reserve(q.size());
  for (const auto& tx : q) ids.push_back(tx.id);
  return ids;
}

void require_discount(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw PreconditionError("discount gamma must lie in (0, 1)");
}

}  // namespace

PolicyAction TrivialPolicy::decide(const PolicyInput& input) const { return {all_ids(input.queue)}; }

FixedIntervalPolicy::FixedIntervalPolicy(std::int64_t n, std::optional<std::int64_t> phase) : n_(n), phase_(phase) {
  if (n < 1) throw PreconditionError("publication interval must be >= 1");
  if (phase && (*phase < 0 || *phase >= n)) throw PreconditionError("interval phase must lie in [0, n)");
}

PolicyAction FixedIntervalPolicy::decide(const PolicyInput& input) const {
  const bool now = phase_ ? (input.t % n_ == *phase_) : input.queue.size() >= static_cast<std::size_t>(n_);
  if (!now) return {};
  return {all_ids(input.queue)};
}

std::string FixedIntervalPolicy::name() const { return "interval(" + std::to_string(n_) + ")"; }

double interval_objective(double aggregated_delay, std::int64_t n, double gamma, double beta, double price) {
  const double lg = std::log1p(gamma - 1.0);
  const double publish = std::exp(static_cast<double>(n - 1) * lg) * beta * price;
  return (aggregated_delay + publish) / one_minus_pow(gamma, static_cast<double>(n));
}

IntervalChoice optimal_interval(const DelayCostSpec& spec, double gamma, double beta, double price,
                                std::int64_t n_max) {
  require_discount(gamma);
  if (!(beta >= 0.0) || !(price >= 0.0)) throw PreconditionError("beta and price must be >= 0");
  if (n_max < 1) throw PreconditionError("interval search needs n_max >= 1");
  const auto f = aggregated_delay_costs(spec, n_max, gamma);
  IntervalChoice best{1, interval_objective(f[0], 1, gamma, beta, price), false};
  double last = best.objective;
  for (std::int64_t n = 2; n <= n_max; ++n) {
    last = interval_objective(f[static_cast<std::size_t>(n - 1)], n, gamma, beta, price);
    if (last < best.objective) {
      best.n = n;
      best.objective = last;
    }
  }
  // The search is only conclusive if the objective has turned upward by n_max.
  best.boundary_hit = !(last > best.objective);
  return best;
}

GreedyBalancePolicy::GreedyBalancePolicy(DelayCostSpec spec, double gamma, double beta, std::int64_t precompute)
    : spec_(std::move(spec)), gamma_(gamma), beta_(beta) {
  require_discount(gamma);
  if (!(beta >= 0.0)) throw PreconditionError("beta must be >= 0");
  f_ = aggregated_delay_costs(spec_, std::max<std::int64_t>(precompute, 2), gamma_);
}

double GreedyBalancePolicy::aggregated(std::int64_t n) const {
  if (static_cast<std::size_t>(n) <= f_.size()) return f_[static_cast<std::size_t>(n - 1)];
  return aggregated_delay_cost(spec_, n, gamma_);
}

bool GreedyBalancePolicy::publishes(std::size_t queue_size, double price) const {
  if (queue_size == 0) return false;
  const auto q = static_cast<std::int64_t>(queue_size);
  const double lhs = std::pow(gamma_, static_cast<double>(q - 1)) * beta_ * price;
  return lhs <= aggregated(q + 1);
}

PolicyAction GreedyBalancePolicy::decide(const PolicyInput& input) const {
  const auto& q = input.queue;
  if (q.empty()) return {};
  if (!q.has_global_delay() || !(q.entries().front().delay_spec == spec_)) {
    throw ConfigError("policy.greedy", "greedy balancing needs every queued transaction to share delay cost " +
                                           spec_.describe());
  }
  if (!publishes(q.size(), input.price)) return {};
  return {all_ids(q)};
}

bool publish_criterion(std::int64_t n, double price, Step age, double alpha, const DelayCostSpec& spec, double gamma,
                       const std::function<double(std::int64_t)>& expected_factor) {
  if (n < 1) throw PreconditionError("publish criterion needs n >= 1");
  CompensatedSum wait;
  double weight = 1.0;
  for (std::int64_t i = 0; i < n; ++i) {
    wait += weight * spec(age + i);
    weight *= gamma;
  }
  const double later = alpha * std::pow(gamma, static_cast<double>(n)) * price * expected_factor(n);
  return alpha * price <= later + wait.value();
}

void RollupParams::validate() const {
  if (!(c >= 0.0) || !std::isfinite(c)) throw PreconditionError("rollup c must be finite and >= 0");
  require_discount(gamma);
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw PreconditionError("rollup alpha must be > 0");
  if (!(sigma >= 0.0) || !std::isfinite(mu)) throw PreconditionError("rollup mu must be finite and sigma >= 0");
  if (mu + 0.5 * sigma * sigma > kMartingaleTolerance) {
    throw PreconditionError("rollup threshold requires mu <= -sigma^2/2 (non-expansive prices), got mu=" +
                            format_double(mu) + " sigma=" + format_double(sigma));
  }
}

RollupThresholdResult rollup_threshold_search(const RollupParams& params, Step age, std::int64_t n_max) {
  params.validate();
  if (age < 0) throw PreconditionError("threshold age must be >= 0");
  if (n_max < 1) throw PreconditionError("threshold search needs n_max >= 1");

  const double h = 1.0 - params.gamma;
  const double lg = std::log1p(params.gamma - 1.0);
  double drift = params.mu + 0.5 * params.sigma * params.sigma;
  if (drift > 0.0) drift = 0.0;  // within the martingale tolerance
  const double x = static_cast<double>(age);

  RollupThresholdResult res;
  res.truncated = true;
  double best = std::numeric_limits<double>::infinity();
  CompensatedSum tail;  // (1-g) * sum_{k<n} k g^k
  for (std::int64_t n = 1; n <= n_max; ++n) {
    const double dn = static_cast<double>(n);
    const double one_minus_gn = -std::expm1(dn * lg);
    const double den = -std::expm1(dn * (lg + drift));
    if (!(den > 0.0)) throw PreconditionError("threshold denominator is not positive at n=" + std::to_string(n));
    const double hn = tail.value();
    const double numerator = one_minus_gn * x + hn;
    if (numerator >= best) {
      res.truncated = false;
      break;
    }
    res.terms_evaluated = n;
    const double ratio = x * (one_minus_gn / den) + hn / den;
    if (ratio < best) {
      best = ratio;
      res.argmin_n = n;
    }
    tail += h * dn * std::exp(dn * lg);
  }
  res.lambda = 2.0 * params.c / h / params.alpha * best;
  return res;
}

double martingale_threshold(double c, double gamma, Step age) {
  require_discount(gamma);
  return 2.0 * c / (1.0 - gamma) * static_cast<double>(age);
}

double one_step_threshold(double c, double gamma, double mu, double sigma, Step age) {
  const double den = -std::expm1(std::log1p(gamma - 1.0) + mu + 0.5 * sigma * sigma);
  if (!(den > 0.0)) throw PreconditionError("one-step threshold needs gamma * exp(mu + sigma^2/2) < 1");
  return 2.0 * c / den * static_cast<double>(age);
}

double waiting_gain(double gamma, std::int64_t n) {
  const double z = static_cast<double>(n) * std::log1p(gamma - 1.0);
  return static_cast<double>(n) * std::exp(z) / -std::expm1(z);
}

double log_waiting_gain(double gamma, std::int64_t n) {
  const double z = static_cast<double>(n) * std::log1p(gamma - 1.0);
  return std::log(static_cast<double>(n)) + z - std::log(-std::expm1(z));
}

ThresholdFn::ThresholdFn(Variant v, std::int64_t check_ages) : v_(std::move(v)) {
  std::visit(
      [](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, MartingaleClosedForm>) {
          require_discount(t.gamma);
          if (!(t.c >= 0.0)) throw PreconditionError("threshold c must be >= 0");
        } else if constexpr (std::is_same_v<T, RollupNumeric>) {
          t.params.validate();
        } else if constexpr (std::is_same_v<T, OneStepBound>) {
          require_discount(t.gamma);
          if (!(t.c >= 0.0)) throw PreconditionError("threshold c must be >= 0");
        } else {
          if (t.values.empty()) throw PreconditionError("threshold table must not be empty");
        }
      },
      v_);
  if (const auto* t = std::get_if<ThresholdTable>(&v_); t && !t->clamp_beyond) {
    check_ages = std::min(check_ages, static_cast<std::int64_t>(t->values.size()) - 1);
  }
  cache_.reserve(static_cast<std::size_t>(check_ages) + 1);
  for (std::int64_t a = 0; a <= check_ages; ++a) {
    const double lam = compute(a);
    if (!(lam >= 0.0)) throw PreconditionError("threshold is negative at age " + std::to_string(a));
    if (!cache_.empty() && lam < cache_.back() * (1.0 - 1e-12)) {
      throw PreconditionError("threshold decreases at age " + std::to_string(a));
    }
    cache_.push_back(lam);
  }
}

double ThresholdFn::compute(Step age) const {
  return std::visit(
      [age](const auto& t) -> double {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, MartingaleClosedForm>) {
          return martingale_threshold(t.c, t.gamma, age);
        } else if constexpr (std::is_same_v<T, RollupNumeric>) {
          return rollup_threshold(t.params, age, t.n_max);
        } else if constexpr (std::is_same_v<T, OneStepBound>) {
          return one_step_threshold(t.c, t.gamma, t.mu, t.sigma, age);
        } else {
          const auto i = static_cast<std::size_t>(age);
          if (i < t.values.size()) return t.values[i];
          if (!t.clamp_beyond) {
            throw OutOfRangeError("threshold table has " + std::to_string(t.values.size()) + " entries, age " +
                                  std::to_string(age) + " requested");
          }
          return t.values.back();
        }
      },
      v_);
}

double ThresholdFn::operator()(Step age) const {
  if (age < 0) throw PreconditionError("threshold evaluated at negative age");
  if (static_cast<std::size_t>(age) < cache_.size()) return cache_[static_cast<std::size_t>(age)];
  return compute(age);
}

ThresholdPolicy::ThresholdPolicy(std::vector<std::pair<DelayCostSpec, ThresholdFn>> thresholds, std::string label)
    : thresholds_(std::move(thresholds)), label_(std::move(label)) {
  for (std::size_t i = 0; i < thresholds_.size(); ++i) {
    for (std::size_t j = i + 1; j < thresholds_.size(); ++j) {
      if (thresholds_[i].first == thresholds_[j].first) {
        throw ConfigError("policy.thresholds", "two thresholds registered for " + thresholds_[i].first.describe());
      }
    }
  }
}

const ThresholdFn& ThresholdPolicy::threshold_for(const DelayCostSpec& spec) const {
  for (const auto& [s, fn] : thresholds_) {
    if (s == spec) return fn;
  }
  throw ConfigError("policy.thresholds", "no threshold for delay cost " + spec.describe());
}

PolicyAction ThresholdPolicy::decide(const PolicyInput& input) const {
  PolicyAction act;
  for (const auto& tx : input.queue) {
    if (input.price <= threshold_for(tx.delay_spec)(tx.age(input.t))) act.publish_ids.push_back(tx.id);
  }
  return act;
}

}  // namespace l2pub
