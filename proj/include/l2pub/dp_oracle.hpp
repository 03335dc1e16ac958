#pragma once

// Exact finite-horizon dynamic programming on small discretized instances.
//
// Prices move on a recombining lattice: P_{t+1} = P_t * r_i with probability
// p_i. Nodes reachable at step t are merged when their log-prices agree to
// kLatticeMergeTolerance, so a two-point {u, 1/u} lattice has t + 1 nodes.
//
// Queue convention (shared with the simulator when initial_queue = 0): at
// step t a modified-MDP state with queue count q holds transactions of ages
// 1..q. A nonzero initial count q0 therefore means ages 1..q0 at t = 0.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "l2pub/cost_model.hpp"
#include "l2pub/policies.hpp"

namespace l2pub {

inline constexpr double kLatticeMergeTolerance = 1e-9;
inline constexpr std::size_t kDefaultStateLimit = 1'000'000;

struct LatticeFactor {
  double ratio = 1.0;
  double prob = 1.0;
};

class LatticePriceProcess {
 public:
  // Throws PreconditionError unless p0 > 0, ratios > 0, probabilities >= 0
  // and summing to 1 within 1e-12.
  LatticePriceProcess(double initial_price, std::vector<LatticeFactor> factors);

  // Two-point {u, 1/u} lattice with the up-probability chosen so that
  // E[ratio] = 1.
  static LatticePriceProcess martingale_two_point(double initial_price, double u);
  static LatticePriceProcess constant(double initial_price) { return {initial_price, {{1.0, 1.0}}}; }

  double initial_price() const noexcept { return p0_; }
  const std::vector<LatticeFactor>& factors() const noexcept { return factors_; }
  double expected_ratio() const;
  bool is_martingale(double tol = 1e-12) const;

 private:
  double p0_;
  std::vector<LatticeFactor> factors_;
};

struct LatticeEdge {
  std::size_t node = 0;
  double prob = 0.0;
};

// Reachable prices per step, ascending, and transitions from step t to t + 1.
struct PriceLattice {
  std::vector<std::vector<double>> prices;                   // [t][node]
  std::vector<std::vector<std::vector<LatticeEdge>>> edges;  // [t][node] for t < horizon

  std::size_t node_count() const;
};

// Builds steps 0..horizon. `work_per_node` multiplies the node count for the
// size guard, so callers can bound total DP states; SizeGuardError when the
// product would exceed `state_limit`.
PriceLattice build_lattice(const LatticePriceProcess& process, std::int64_t horizon, std::size_t work_per_node = 1,
                           std::size_t state_limit = kDefaultStateLimit);

enum class Terminal {
  Zero,   // leftover transactions cost nothing at the horizon
  Flush,  // the leftover queue is published at step `horizon` at that step's price
};

struct ModifiedMdpConfig {
  double gamma = 0.9;
  std::int64_t horizon = 1;
  LatticePriceProcess lattice = LatticePriceProcess::constant(1.0);
  PublishingCostParams publish;
  DelayCostSpec delay = DelayCostSpec::linear(1.0);
  // Must be >= initial_queue + horizon; queue counts are never clipped.
  std::int64_t q_max = 1;
  std::int64_t initial_queue = 0;
  Terminal terminal = Terminal::Zero;
  std::size_t state_limit = kDefaultStateLimit;

  void validate() const;
};

struct ModifiedMdpSolution {
  PriceLattice lattice;
  // value[t][node][q] for t in 0..horizon; q ranges over 0..q_max, entries with
  // q > initial_queue + t are unreachable and left at 0.
  std::vector<std::vector<std::vector<double>>> value;
  // Optimal publish count, [t][node][q] for t < horizon.
  std::vector<std::vector<std::vector<std::int64_t>>> action;
  std::int64_t initial_queue = 0;

  double root_value() const { return value.front().front()[static_cast<std::size_t>(initial_queue)]; }
};

// Backward induction for the queue-count MDP with step cost
//   P (alpha N + beta [N > 0]) + sum_{i=1}^{q-N} C(i).
// Ties go to the larger N (relative tolerance 1e-12). Requires a monotone
// delay spec; SizeGuardError past state_limit.
ModifiedMdpSolution solve_modified_mdp(const ModifiedMdpConfig& config);

// Exact expected discounted cost of `policy` on the lattice from the config's
// root state. The policy sees a queue of ages 1..q; its action must publish
// the oldest transactions (InvalidActionError otherwise).
double evaluate_policy(const Policy& policy, const ModifiedMdpConfig& config);

void write_oracle_csv(const ModifiedMdpSolution& solution, std::ostream& out);

struct FullTx {
  Step arrival_step = 0;  // <= 0 for transactions queued at t = 0
  DelayCostSpec delay = DelayCostSpec::linear(1.0);
};

struct FullMdpConfig {
  double gamma = 0.9;
  std::int64_t horizon = 1;
  LatticePriceProcess lattice = LatticePriceProcess::constant(1.0);
  PublishingCostParams publish;
  std::vector<FullTx> initial;  // queued at t = 0
  // H_t carries arrival_delays[t % size].
  std::vector<DelayCostSpec> arrival_delays{DelayCostSpec::linear(1.0)};
  std::size_t state_limit = kDefaultStateLimit;

  // Tiny instances only: horizon <= 8, at most 5 initial transactions and
  // at most 4 lattice factors.
  void validate() const;
};

struct FullMdpSolution {
  double value = 0.0;             // optimal over all subsets
  double restricted_value = 0.0;  // optimal over {nothing, whole queue}
  std::size_t states = 0;
  // Against the best oldest-first action: states where it was not chosen,
  // and the largest amount by which a non-FIFO subset beat it.
  std::size_t non_fifo_choices = 0;
  double worst_fifo_gap = 0.0;
  // Root action as indices: 0..k-1 initial, k + s for H_s.
  std::vector<std::size_t> root_action;
};

// Exhaustive subset-action DP over (t, node, pending set). Ties go to the
// larger subset, then to the older one.
FullMdpSolution solve_full_mdp(const FullMdpConfig& config);

struct AllOrNothingReport {
  bool holds = false;
  double full_value = 0.0;
  double restricted_value = 0.0;
};

// Requires alpha = 0 (PreconditionError otherwise). Holds when the subset DP
// and the {nothing, whole queue} DP agree to 1e-10 relative.
AllOrNothingReport verify_all_or_nothing(const FullMdpConfig& config);

struct FifoReport {
  bool holds = false;
  std::size_t states = 0;
  std::size_t non_fifo_choices = 0;
  double worst_gap = 0.0;
};

// Requires one shared monotone delay spec. Holds when every chosen action
// publishes the oldest transactions and no other subset beats the best such
// action by more than 1e-10 relative.
FifoReport verify_fifo(const FullMdpConfig& config);

struct ThresholdStructureConfig {
  double gamma = 0.9;
  std::int64_t horizon = 20;
  LatticePriceProcess lattice = LatticePriceProcess::martingale_two_point(1.0, 1.1);
  double alpha = 1.0;
  DelayCostSpec delay = DelayCostSpec::linear(1.0);
  // Reference threshold to bracket, if any.
  std::function<double(Step)> closed_form;
  // Ages checked by the per-transaction stopping DP: 0..max_age.
  Step max_age = 0;
  std::size_t state_limit = kDefaultStateLimit;
};

struct ThresholdCut {
  Step t = 0;
  Step age = 0;
  // Number of lattice nodes at step t (ascending price) where publishing is
  // optimal, and the prices on either side of the cut.
  std::size_t publish_nodes = 0;
  double last_publish_price = 0.0;  // 0 when no node publishes
  double first_wait_price = 0.0;    // +inf when every node publishes
  bool single_cut = true;
};

struct ThresholdStructureReport {
  bool is_threshold = false;      // one cut per (t, age) in both DPs
  bool monotone_in_age = false;   // cuts never move down as age grows
  bool consistent_across_queue = false;  // modified MDP: decision independent of q
  bool dps_agree = false;         // modified MDP and stopping DP give the same cuts
  std::vector<ThresholdCut> cuts; // from the stopping DP, ages 0..max_age
  // Bracketing of closed_form at interior steps (t < horizon - ceil(horizon/4))
  // and ages 1..t whose closed form lies inside the lattice price range.
  std::size_t brackets_checked = 0;
  std::size_t brackets_failed = 0;
  // Largest distance from the closed form to the bracketing interval,
  // relative to the closed form.
  double worst_bracket_gap = 0.0;
};

// Requires alpha > 0 and a monotone delay spec; beta is taken as 0.
ThresholdStructureReport verify_threshold_structure(const ThresholdStructureConfig& config);

}  // namespace l2pub
