#pragma once

// Cost functions of the publishing problem: gas spent on publication, per
// transaction delay cost, the per-step total cost, and the aggregated delay
// cost accrued between two publications.

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace l2pub {

using TxId = std::uint64_t;
using Step = std::int64_t;

// Gas charged for publishing a batch N: alpha * |N| + beta * [N non-empty].
class PublishingCostParams {
 public:
  PublishingCostParams() = default;
  PublishingCostParams(double alpha, double beta);

  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }

  friend bool operator==(const PublishingCostParams&, const PublishingCostParams&) = default;

 private:
  double alpha_ = 0.0;
  double beta_ = 0.0;
};

double publishing_cost(const PublishingCostParams& params, std::size_t count) noexcept;

struct LinearDelay {
  double slope = 0.0;
  friend bool operator==(const LinearDelay&, const LinearDelay&) = default;
};

struct ExponentialDelay {
  double rate = 0.0;
  friend bool operator==(const ExponentialDelay&, const ExponentialDelay&) = default;
};

struct TableDelay {
  std::vector<double> values;
  friend bool operator==(const TableDelay&, const TableDelay&) = default;
};

// Delay cost of a single pending transaction as a function of its age:
// slope * age, exp(rate * age), or a lookup table indexed by age.
class DelayCostSpec {
 public:
  using Variant = std::variant<LinearDelay, ExponentialDelay, TableDelay>;

  DelayCostSpec() : v_(LinearDelay{}) {}

  static DelayCostSpec linear(double slope);
  static DelayCostSpec exponential(double rate);
  // Ages past the end of the table are an error, never extrapolated.
  static DelayCostSpec table(std::vector<double> values);

  // Throws OutOfRangeError for Table lookups past the last entry.
  double operator()(Step age) const;

  // Non-decreasing in age over every age where it is defined.
  bool is_monotone() const noexcept;

  const Variant& variant() const noexcept { return v_; }
  std::string describe() const;

  friend bool operator==(const DelayCostSpec&, const DelayCostSpec&) = default;

 private:
  explicit DelayCostSpec(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

inline double delay_cost(const DelayCostSpec& spec, Step age) { return spec(age); }

struct Transaction {
  TxId id = 0;
  Step arrival_step = 0;
  DelayCostSpec delay_spec;

  Step age(Step t) const noexcept { return t - arrival_step; }
};

// Pending transactions ordered by (arrival_step, id). Ids are unique.
class TxQueue {
 public:
  TxQueue() = default;

  // Inserts keeping the order; throws PreconditionError on a duplicate id.
  void push(Transaction tx);

  // Removes the given ids; throws InvalidActionError if any is absent or repeated.
  void remove(std::span<const TxId> ids);

  bool contains(TxId id) const noexcept;
  const Transaction* find(TxId id) const noexcept;

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<Transaction>& entries() const noexcept { return entries_; }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  // True when every entry shares one delay spec (vacuously true when empty).
  bool has_global_delay() const noexcept;

 private:
  std::vector<Transaction> entries_;
};

// price * publishing gas + delay of every entry left unpublished at step t.
// Throws InvalidActionError if `published` names an id not in the queue.
double step_cost(double price, const TxQueue& queue, std::span<const TxId> published,
                 const PublishingCostParams& params, Step t);

// F(n) = sum_{t=1}^{n-1} gamma^{t-1} sum_{i=1}^{t} C(i).
//
// The outer weight is gamma^{t-1}: the delay paid over an interval that opens
// at step s is gamma^s * F(n), and closing it with a publication adds
// gamma^{s+n-1} * beta * P. Terms are accumulated in increasing t with
// compensated summation.
double aggregated_delay_cost(const DelayCostSpec& spec, std::int64_t n, double gamma);

// F(1), ..., F(n_max) in one pass; element k holds F(k + 1). Same
// accumulation order as aggregated_delay_cost, so values agree bit for bit.
std::vector<double> aggregated_delay_costs(const DelayCostSpec& spec, std::int64_t n_max, double gamma);

struct SubAdditivityOk {};

struct SubAdditivityCounterexample {
  std::int64_t n1 = 0;
  std::int64_t n2 = 0;
  double lhs = 0.0;  // F(n1 + n2)
  double rhs = 0.0;  // sigma * (F(n1 + 1) + gamma^n1 * F(n2))
};

using SubAdditivityResult = std::variant<SubAdditivityOk, SubAdditivityCounterexample>;

// Scans all n1, n2 >= 1 with n1 + n2 <= n_max in lexicographic order and
// reports the first pair with F(n1+n2) > sigma * (F(n1+1) + gamma^n1 F(n2)).
// A relative slack of 1e-12 absorbs rounding in the comparison.
SubAdditivityResult check_sub_additivity(const DelayCostSpec& spec, double gamma, double sigma,
                                         std::int64_t n_max);

}  // namespace l2pub
