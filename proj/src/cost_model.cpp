#include "l2pub/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "l2pub/error.hpp"
#include "l2pub/numeric.hpp"

namespace l2pub {

PublishingCostParams::PublishingCostParams(double alpha, double beta) : alpha_(alpha), beta_(beta) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw PreconditionError("publishing alpha must be finite and >= 0");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw PreconditionError("publishing beta must be finite and >= 0");
}

double publishing_cost(const PublishingCostParams& params, std::size_t count) noexcept {
  if (count == 0) return 0.0;
  return params.alpha() * static_cast<double>(count) + params.beta();
}

DelayCostSpec DelayCostSpec::linear(double slope) {
  if (!(slope >= 0.0) || !std::isfinite(slope)) throw PreconditionError("linear delay slope must be finite and >= 0");
  return DelayCostSpec(LinearDelay{slope});
}

DelayCostSpec DelayCostSpec::exponential(double rate) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw PreconditionError("exponential delay rate must be finite and >= 0");
  return DelayCostSpec(ExponentialDelay{rate});
}

DelayCostSpec DelayCostSpec::table(std::vector<double> values) {
  if (values.empty()) throw PreconditionError("delay table must not be empty");
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw PreconditionError("delay table entries must be finite and >= 0");
  }
  return DelayCostSpec(TableDelay{std::move(values)});
}

double DelayCostSpec::operator()(Step age) const {
  if (age < 0) throw PreconditionError("delay cost evaluated at negative age");
  return std::visit(
      [age](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, LinearDelay>) {
          return d.slope * static_cast<double>(age);
        } else if constexpr (std::is_same_v<T, ExponentialDelay>) {
          return std::exp(d.rate * static_cast<double>(age));
        } else {
          if (static_cast<std::size_t>(age) >= d.values.size()) {
            throw OutOfRangeError("delay table has " + std::to_string(d.values.size()) +
                                  " entries, age " + std::to_string(age) + " requested");
          }
          return d.values[static_cast<std::size_t>(age)];
        }
      },
      v_);
}

bool DelayCostSpec::is_monotone() const noexcept {
  if (const auto* t = std::get_if<TableDelay>(&v_)) {
    return std::is_sorted(t->values.begin(), t->values.end());
  }
  return true;
}

std::string DelayCostSpec::describe() const {
  std::ostringstream os;
  std::visit(
      [&os](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, LinearDelay>) {
          os << "linear(slope=" << format_double(d.slope) << ")";
        } else if constexpr (std::is_same_v<T, ExponentialDelay>) {
          os << "exponential(rate=" << format_double(d.rate) << ")";
        } else {
          os << "table(" << d.values.size() << " entries)";
        }
      },
      v_);
  return os.str();
}

void TxQueue::push(Transaction tx) {
  if (contains(tx.id)) throw PreconditionError("duplicate transaction id " + std::to_string(tx.id));
  auto pos = std::upper_bound(entries_.begin(), entries_.end(), tx, [](const Transaction& a, const Transaction& b) {
    return a.arrival_step != b.arrival_step ? a.arrival_step < b.arrival_step : a.id < b.id;
  });
  entries_.insert(pos, std::move(tx));
}

void TxQueue::remove(std::span<const TxId> ids) {
  if (ids.empty()) return;
  std::unordered_set<TxId> drop;
  drop.reserve(ids.size());
  for (TxId id : ids) {
    if (!contains(id)) throw InvalidActionError("transaction " + std::to_string(id) + " is not in the queue");
    if (!drop.insert(id).second) throw InvalidActionError("transaction " + std::to_string(id) + " listed twice");
  }
  std::erase_if(entries_, [&drop](const Transaction& tx) { return drop.contains(tx.id); });
}

bool TxQueue::contains(TxId id) const noexcept { return find(id) != nullptr; }

const Transaction* TxQueue::find(TxId id) const noexcept {
  auto it = std::find_if(entries_.begin(), entries_.end(), [id](const Transaction& tx) { return tx.id == id; });
  return it == entries_.end() ? nullptr : &*it;
}

bool TxQueue::has_global_delay() const noexcept {
  return std::all_of(entries_.begin(), entries_.end(),
                     [this](const Transaction& tx) { return tx.delay_spec == entries_.front().delay_spec; });
}

double step_cost(double price, const TxQueue& queue, std::span<const TxId> published,
                 const PublishingCostParams& params, Step t) {
  std::unordered_set<TxId> pub;
  pub.reserve(published.size());
  for (TxId id : published) {
    if (!queue.contains(id)) throw InvalidActionError("published id " + std::to_string(id) + " is not in the queue");
    if (!pub.insert(id).second) throw InvalidActionError("published id " + std::to_string(id) + " listed twice");
  }
  CompensatedSum delay;
  for (const auto& tx : queue) {
    if (!pub.contains(tx.id)) delay += tx.delay_spec(tx.age(t));
  }
  return price * publishing_cost(params, pub.size()) + delay.value();
}

std::vector<double> aggregated_delay_costs(const DelayCostSpec& spec, std::int64_t n_max, double gamma) {
  if (n_max < 1) throw PreconditionError("aggregated delay cost needs n >= 1");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_max));
  out.push_back(0.0);  // F(1): empty outer sum
  CompensatedSum outer;
  CompensatedSum inner;
  double weight = 1.0;  // gamma^{t-1}
  for (std::int64_t t = 1; t < n_max; ++t) {
    inner += spec(t);
    outer += weight * inner.value();
    out.push_back(outer.value());
    weight *= gamma;
  }
  return out;
}

double aggregated_delay_cost(const DelayCostSpec& spec, std::int64_t n, double gamma) {
  return aggregated_delay_costs(spec, n, gamma).back();
}

SubAdditivityResult check_sub_additivity(const DelayCostSpec& spec, double gamma, double sigma, std::int64_t n_max) {
  if (n_max < 2) throw PreconditionError("sub-additivity check needs n_max >= 2");
  if (!(sigma > 0.0)) throw PreconditionError("sub-additivity factor must be > 0");
  const auto f = aggregated_delay_costs(spec, n_max, gamma);
  auto F = [&f](std::int64_t n) { return f[static_cast<std::size_t>(n - 1)]; };
  double gamma_n1 = 1.0;
  for (std::int64_t n1 = 1; n1 < n_max; ++n1) {
    gamma_n1 *= gamma;
    for (std::int64_t n2 = 1; n1 + n2 <= n_max; ++n2) {
      const double lhs = F(n1 + n2);
      const double rhs = sigma * (F(n1 + 1) + gamma_n1 * F(n2));
      if (lhs > rhs * (1.0 + 1e-12)) return SubAdditivityCounterexample{n1, n2, lhs, rhs};
    }
  }
  return SubAdditivityOk{};
}

}  // namespace l2pub
