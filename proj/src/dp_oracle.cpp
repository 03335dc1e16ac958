#include "l2pub/dp_oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <ostream>

#include "l2pub/error.hpp"
#include "l2pub/numeric.hpp"

namespace l2pub {

namespace {

constexpr double kTieTolerance = 1e-12;
constexpr double kCompareTolerance = 1e-10;

void require_discount(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw PreconditionError("discount gamma must lie in (0, 1)");
}

// True when `candidate` beats `incumbent` by more than the tie tolerance.
bool strictly_better(double candidate, double incumbent) {
  return candidate < incumbent - kTieTolerance * std::abs(incumbent);
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b)); }

// prefix[k] = sum_{i=1}^{k} C(i).
std::vector<double> delay_prefix(const DelayCostSpec& spec, std::int64_t k_max) {
  std::vector<double> out(static_cast<std::size_t>(k_max) + 1, 0.0);
  CompensatedSum s;
  for (std::int64_t i = 1; i <= k_max; ++i) {
    s += spec(i);
    out[static_cast<std::size_t>(i)] = s.value();
  }
  return out;
}

double lattice_expectation(const std::vector<LatticeEdge>& edges, const std::vector<double>& next_values,
                           std::size_t stride, std::size_t offset) {
  double ev = 0.0;
  for (const auto& e : edges) ev += e.prob * next_values[e.node * stride + offset];
  return ev;
}

}  // namespace

LatticePriceProcess::LatticePriceProcess(double initial_price, std::vector<LatticeFactor> factors)
    : p0_(initial_price), factors_(std::move(factors)) {
  if (!(p0_ > 0.0) || !std::isfinite(p0_)) throw PreconditionError("lattice initial price must be finite and > 0");
  if (factors_.empty()) throw PreconditionError("lattice needs at least one factor");
  CompensatedSum total;
  for (const auto& f : factors_) {
    if (!(f.ratio > 0.0) || !std::isfinite(f.ratio)) throw PreconditionError("lattice ratios must be finite and > 0");
    if (!(f.prob >= 0.0) || !(f.prob <= 1.0)) throw PreconditionError("lattice probabilities must lie in [0, 1]");
    total += f.prob;
  }
  if (std::abs(total.value() - 1.0) > 1e-12) {
    throw PreconditionError("lattice probabilities sum to " + format_double(total.value()) + ", not 1");
  }
}

LatticePriceProcess LatticePriceProcess::martingale_two_point(double initial_price, double u) {
  if (!(u > 1.0) || !std::isfinite(u)) throw PreconditionError("two-point lattice needs u > 1");
  // p u + (1 - p) / u = 1  =>  p = 1 / (1 + u)
  const double p = 1.0 / (1.0 + u);
  return {initial_price, {{u, p}, {1.0 / u, 1.0 - p}}};
}

double LatticePriceProcess::expected_ratio() const {
  CompensatedSum s;
  for (const auto& f : factors_) s += f.prob * f.ratio;
  return s.value();
}

bool LatticePriceProcess::is_martingale(double tol) const { return std::abs(expected_ratio() - 1.0) <= tol; }

std::size_t PriceLattice::node_count() const {
  std::size_t n = 0;
  for (const auto& p : prices) n += p.size();
  return n;
}

PriceLattice build_lattice(const LatticePriceProcess& process, std::int64_t horizon, std::size_t work_per_node,
                           std::size_t state_limit) {
  if (horizon < 0) throw PreconditionError("lattice horizon must be >= 0");
  const auto& factors = process.factors();
  std::vector<double> log_ratio;
  for (const auto& f : factors) log_ratio.push_back(std::log(f.ratio));

  PriceLattice lat;
  std::vector<double> logs{0.0};
  lat.prices.push_back({process.initial_price()});
  double states = static_cast<double>(work_per_node);
  for (std::int64_t t = 0; t < horizon; ++t) {
    struct Candidate {
      double log_price;
      std::size_t from;
      std::size_t factor;
    };
    std::vector<Candidate> cand;
    cand.reserve(logs.size() * factors.size());
    for (std::size_t i = 0; i < logs.size(); ++i) {
      for (std::size_t j = 0; j < factors.size(); ++j) {
        if (factors[j].prob > 0.0) cand.push_back({logs[i] + log_ratio[j], i, j});
      }
    }
    std::sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) { return a.log_price < b.log_price; });

    std::vector<double> next_logs;
    std::vector<std::vector<LatticeEdge>> edges(logs.size());
    double anchor = 0.0;
    for (const auto& c : cand) {
      if (next_logs.empty() || c.log_price - anchor > kLatticeMergeTolerance) {
        anchor = c.log_price;
        next_logs.push_back(c.log_price);
      }
      auto& out = edges[c.from];
      const std::size_t node = next_logs.size() - 1;
      if (!out.empty() && out.back().node == node) {
        out.back().prob += factors[c.factor].prob;
      } else {
        out.push_back({node, factors[c.factor].prob});
      }
    }
    states += static_cast<double>(next_logs.size()) * static_cast<double>(work_per_node);
    if (states > static_cast<double>(state_limit)) {
      const double remaining = static_cast<double>(horizon - t - 1);
      throw SizeGuardError(states + remaining * static_cast<double>(next_logs.size() * work_per_node),
                           static_cast<double>(state_limit));
    }
    std::vector<double> prices;
    prices.reserve(next_logs.size());
    for (double lp : next_logs) prices.push_back(process.initial_price() * std::exp(lp));
    lat.edges.push_back(std::move(edges));
    lat.prices.push_back(std::move(prices));
    logs = std::move(next_logs);
  }
  return lat;
}

void ModifiedMdpConfig::validate() const {
  require_discount(gamma);
  if (horizon < 0) throw PreconditionError("horizon must be >= 0");
  if (initial_queue < 0) throw PreconditionError("initial queue must be >= 0");
  if (q_max < initial_queue + horizon) {
    throw PreconditionError("q_max " + std::to_string(q_max) + " is below initial_queue + horizon = " +
                            std::to_string(initial_queue + horizon) + "; queue counts are never clipped");
  }
  if (!delay.is_monotone()) throw PreconditionError("the queue-count MDP needs a monotone delay cost");
}

namespace {

// Shared backward pass of solve_modified_mdp and evaluate_policy. `choose`
// returns the publish count for (t, price, q) given the cost of each count.
template <class Choose>
ModifiedMdpSolution backward(const ModifiedMdpConfig& cfg, Choose&& choose) {
  cfg.validate();
  const auto width = static_cast<std::size_t>(cfg.q_max) + 1;
  ModifiedMdpSolution sol;
  sol.lattice = build_lattice(cfg.lattice, cfg.horizon, width, cfg.state_limit);
  sol.initial_queue = cfg.initial_queue;
  const auto prefix = delay_prefix(cfg.delay, cfg.q_max);
  const auto H = static_cast<std::size_t>(cfg.horizon);

  sol.value.resize(H + 1);
  sol.action.resize(H);
  for (std::size_t t = 0; t <= H; ++t) {
    sol.value[t].assign(sol.lattice.prices[t].size(), std::vector<double>(width, 0.0));
  }
  if (cfg.terminal == Terminal::Flush) {
    const auto q_top = static_cast<std::size_t>(cfg.initial_queue) + H;
    for (std::size_t n = 0; n < sol.lattice.prices[H].size(); ++n) {
      for (std::size_t q = 0; q <= q_top; ++q) {
        sol.value[H][n][q] = sol.lattice.prices[H][n] * publishing_cost(cfg.publish, q);
      }
    }
  }

  std::vector<double> flat;
  std::vector<double> ev;
  std::vector<double> costs;
  for (std::size_t t = H; t-- > 0;) {
    const auto& prices = sol.lattice.prices[t];
    const auto& next = sol.value[t + 1];
    flat.assign(next.size() * width, 0.0);
    for (std::size_t n = 0; n < next.size(); ++n) std::copy(next[n].begin(), next[n].end(), flat.begin() + n * width);
    const std::size_t q_top = static_cast<std::size_t>(cfg.initial_queue) + t;
    sol.action[t].assign(prices.size(), std::vector<std::int64_t>(width, 0));
    for (std::size_t n = 0; n < prices.size(); ++n) {
      ev.assign(q_top + 2, 0.0);
      for (std::size_t m = 1; m <= q_top + 1; ++m) ev[m] = lattice_expectation(sol.lattice.edges[t][n], flat, width, m);
      for (std::size_t q = 0; q <= q_top; ++q) {
        costs.assign(q + 1, 0.0);
        for (std::size_t k = 0; k <= q; ++k) {
          costs[k] = prices[n] * publishing_cost(cfg.publish, k) + prefix[q - k] + cfg.gamma * ev[q - k + 1];
        }
        const std::size_t k = choose(static_cast<Step>(t), prices[n], q, costs);
        sol.action[t][n][q] = static_cast<std::int64_t>(k);
        sol.value[t][n][q] = costs[k];
      }
    }
  }
  return sol;
}

}  // namespace

ModifiedMdpSolution solve_modified_mdp(const ModifiedMdpConfig& config) {
  return backward(config, [](Step, double, std::size_t q, const std::vector<double>& costs) {
    std::size_t best = q;
    for (std::size_t k = q; k-- > 0;) {
      if (strictly_better(costs[k], costs[best])) best = k;
    }
    return best;
  });
}

double evaluate_policy(const Policy& policy, const ModifiedMdpConfig& config) {
  const auto q0 = config.initial_queue;
  const auto sol = backward(config, [&](Step t, double price, std::size_t q, const std::vector<double>&) {
    // Ages 1..q at step t, oldest first; ids are arrival steps shifted to be >= 0.
    TxQueue queue;
    for (auto a = static_cast<Step>(q); a >= 1; --a) {
      const Step arrival = t - a;
      queue.push({static_cast<TxId>(arrival + q0), arrival, config.delay});
    }
    const auto action = policy.decide({t, price, queue});
    std::vector<bool> seen(q + 1, false);
    for (TxId id : action.publish_ids) {
      const auto* tx = queue.find(id);
      if (tx == nullptr) throw InvalidActionError("policy " + policy.name() + " published an id outside the queue");
      const auto a = static_cast<std::size_t>(tx->age(t));
      if (seen[a]) throw InvalidActionError("policy " + policy.name() + " published an id twice");
      seen[a] = true;
    }
    const std::size_t k = action.publish_ids.size();
    for (std::size_t a = q; a > q - k; --a) {
      if (!seen[a]) {
        throw InvalidActionError("policy " + policy.name() + " skipped an older transaction at t=" + std::to_string(t) +
                                 "; only oldest-first actions can be evaluated on queue counts");
      }
    }
    return k;
  });
  return sol.root_value();
}

void write_oracle_csv(const ModifiedMdpSolution& solution, std::ostream& out) {
  out << "t,price,queue,action,value\n";
  for (std::size_t t = 0; t < solution.action.size(); ++t) {
    const auto q_top = static_cast<std::size_t>(solution.initial_queue) + t;
    for (std::size_t n = 0; n < solution.lattice.prices[t].size(); ++n) {
      for (std::size_t q = 0; q <= q_top; ++q) {
        out << t << ',' << format_double(solution.lattice.prices[t][n]) << ',' << q << ','
            << solution.action[t][n][q] << ',' << format_double(solution.value[t][n][q]) << '\n';
      }
    }
  }
}

void FullMdpConfig::validate() const {
  require_discount(gamma);
  if (horizon < 0 || horizon > 8) throw PreconditionError("full MDP horizon must lie in 0..8");
  if (initial.size() > 5) throw PreconditionError("full MDP allows at most 5 initial transactions");
  if (lattice.factors().size() > 4) throw PreconditionError("full MDP allows at most 4 lattice factors");
  if (arrival_delays.empty()) throw PreconditionError("full MDP needs at least one arrival delay spec");
  for (const auto& tx : initial) {
    if (tx.arrival_step > 0) throw PreconditionError("initial transactions must have arrival_step <= 0");
  }
}

namespace {

struct FullTables {
  std::size_t k = 0;  // initial count
  std::vector<Step> arrival;
  std::vector<const DelayCostSpec*> delay;
};

struct SubsetPass {
  double value = 0.0;
  std::size_t states = 0;
  std::size_t non_fifo_choices = 0;
  double worst_fifo_gap = 0.0;
  std::uint32_t root_action = 0;
};

// Dense DP over pending masks; at step t the pending set lives in bits
// 0..k+t-1. With `restricted`, only the empty and the full action are tried.
SubsetPass subset_pass(const FullMdpConfig& cfg, const PriceLattice& lat, const FullTables& tab, bool restricted) {
  const auto H = static_cast<std::size_t>(cfg.horizon);
  const std::size_t k = tab.k;
  SubsetPass out;
  std::vector<std::vector<double>> next_values;  // [node][mask] at t + 1
  next_values.assign(lat.prices[H].size(), std::vector<double>(std::size_t{1} << (k + H), 0.0));

  for (std::size_t t = H; t-- > 0;) {
    const std::size_t bits = k + t;
    const std::size_t masks = std::size_t{1} << bits;
    const std::uint32_t arriving = std::uint32_t{1} << bits;
    std::vector<double> delay(bits);
    std::vector<Step> age(bits);
    for (std::size_t i = 0; i < bits; ++i) {
      age[i] = static_cast<Step>(t) - tab.arrival[i];
      delay[i] = (*tab.delay[i])(age[i]);
    }
    // Per-mask delay sum and age extremes, built from the lowest set bit.
    std::vector<double> dsum(masks, 0.0);
    std::vector<Step> min_age(masks, std::numeric_limits<Step>::max());
    std::vector<Step> max_age(masks, std::numeric_limits<Step>::min());
    std::vector<Step> age_sum(masks, 0);
    for (std::size_t m = 1; m < masks; ++m) {
      const auto low = static_cast<std::size_t>(std::countr_zero(m));
      const std::size_t rest = m & (m - 1);
      dsum[m] = dsum[rest] + delay[low];
      min_age[m] = std::min(min_age[rest], age[low]);
      max_age[m] = std::max(max_age[rest], age[low]);
      age_sum[m] = age_sum[rest] + age[low];
    }

    std::vector<std::vector<double>> values(lat.prices[t].size(), std::vector<double>(masks, 0.0));
    std::vector<double> ev(std::size_t{1} << (bits + 1));
    for (std::size_t n = 0; n < lat.prices[t].size(); ++n) {
      const double price = lat.prices[t][n];
      for (std::size_t m = 0; m < ev.size(); ++m) {
        double e = 0.0;
        for (const auto& edge : lat.edges[t][n]) e += edge.prob * next_values[edge.node][m];
        ev[m] = e;
      }
      for (std::size_t mask = 0; mask < masks; ++mask) {
        auto cost = [&](std::size_t sub) {
          const std::size_t rest = mask & ~sub;
          return price * publishing_cost(cfg.publish, static_cast<std::size_t>(std::popcount(sub))) + dsum[rest] +
                 cfg.gamma * ev[rest | arriving];
        };
        auto is_fifo = [&](std::size_t sub) {
          const std::size_t rest = mask & ~sub;
          return sub == 0 || rest == 0 || min_age[sub] >= max_age[rest];
        };
        std::size_t best = mask;
        double best_v = cost(mask);
        double best_fifo = best_v;
        auto consider = [&](std::size_t sub) {
          const double v = cost(sub);
          if (is_fifo(sub)) best_fifo = std::min(best_fifo, v);
          if (strictly_better(v, best_v)) {
            best = sub;
            best_v = v;
          } else if (!strictly_better(best_v, v)) {
            const int pc = std::popcount(sub);
            const int pb = std::popcount(best);
            if (pc > pb || (pc == pb && age_sum[sub] > age_sum[best])) {
              best = sub;
              best_v = std::min(best_v, v);
            }
          }
        };
        if (restricted) {
          if (mask != 0) consider(0);
        } else {
          for (std::size_t sub = (mask - 1) & mask;; sub = (sub - 1) & mask) {
            consider(sub);
            if (sub == 0) break;
          }
          if (mask == 0) best_fifo = best_v;
          if (!is_fifo(best)) ++out.non_fifo_choices;
          const double gap = best_fifo - best_v;
          if (gap > 0.0) out.worst_fifo_gap = std::max(out.worst_fifo_gap, gap / std::max(std::abs(best_fifo), 1e-300));
        }
        values[n][mask] = best_v;
        if (t == 0 && n == 0 && mask == masks - 1) out.root_action = static_cast<std::uint32_t>(best);
      }
      out.states += masks;
    }
    next_values = std::move(values);
  }
  const std::size_t root_mask = (std::size_t{1} << k) - 1;
  out.value = next_values.front()[root_mask];
  if (H == 0) out.states = 1;
  return out;
}

}  // namespace

FullMdpSolution solve_full_mdp(const FullMdpConfig& config) {
  config.validate();
  const auto H = static_cast<std::size_t>(config.horizon);
  const std::size_t k = config.initial.size();
  // Dense masks: sum over t of nodes_t * 2^(k+t); bound it before building.
  double estimate = 0.0;
  {
    double nodes = 1.0;
    const double branch = static_cast<double>(config.lattice.factors().size());
    for (std::size_t t = 0; t <= H; ++t) {
      estimate += std::min(nodes, std::pow(branch, static_cast<double>(t))) * std::ldexp(1.0, static_cast<int>(k + t));
      nodes *= branch;
    }
  }
  if (estimate > static_cast<double>(config.state_limit)) {
    throw SizeGuardError(estimate, static_cast<double>(config.state_limit));
  }
  const auto lat = build_lattice(config.lattice, config.horizon, 1, config.state_limit);

  FullTables tab;
  tab.k = k;
  for (const auto& tx : config.initial) {
    tab.arrival.push_back(tx.arrival_step);
    tab.delay.push_back(&tx.delay);
  }
  for (std::size_t s = 0; s < H; ++s) {
    tab.arrival.push_back(static_cast<Step>(s));
    tab.delay.push_back(&config.arrival_delays[s % config.arrival_delays.size()]);
  }

  FullMdpSolution sol;
  if (H == 0) return sol;
  const auto full = subset_pass(config, lat, tab, false);
  const auto restricted = subset_pass(config, lat, tab, true);
  sol.value = full.value;
  sol.restricted_value = restricted.value;
  sol.states = full.states;
  sol.non_fifo_choices = full.non_fifo_choices;
  sol.worst_fifo_gap = full.worst_fifo_gap;
  for (std::size_t i = 0; i < k; ++i) {
    if (full.root_action >> i & 1u) sol.root_action.push_back(i);
  }
  return sol;
}

AllOrNothingReport verify_all_or_nothing(const FullMdpConfig& config) {
  if (config.publish.alpha() != 0.0) {
    throw PreconditionError("all-or-nothing structure needs alpha = 0, got " + format_double(config.publish.alpha()));
  }
  const auto sol = solve_full_mdp(config);
  AllOrNothingReport r;
  r.full_value = sol.value;
  r.restricted_value = sol.restricted_value;
  r.holds = sol.value == sol.restricted_value || near(sol.value, sol.restricted_value, kCompareTolerance);
  return r;
}

FifoReport verify_fifo(const FullMdpConfig& config) {
  const DelayCostSpec& spec = config.arrival_delays.front();
  bool global = spec.is_monotone();
  for (const auto& d : config.arrival_delays) global = global && d == spec;
  for (const auto& tx : config.initial) global = global && tx.delay == spec;
  if (!global) throw PreconditionError("FIFO structure needs one shared monotone delay cost");
  const auto sol = solve_full_mdp(config);
  FifoReport r;
  r.states = sol.states;
  r.non_fifo_choices = sol.non_fifo_choices;
  r.worst_gap = sol.worst_fifo_gap;
  r.holds = sol.non_fifo_choices == 0 && sol.worst_fifo_gap <= kCompareTolerance;
  return r;
}

namespace {

// Publish/wait pattern over ascending prices; returns the number of leading
// publish nodes, or nullopt when a wait node precedes a publish node.
std::optional<std::size_t> single_cut(const std::vector<bool>& publish) {
  std::size_t lead = 0;
  while (lead < publish.size() && publish[lead]) ++lead;
  for (std::size_t i = lead; i < publish.size(); ++i) {
    if (publish[i]) return std::nullopt;
  }
  return lead;
}

}  // namespace

ThresholdStructureReport verify_threshold_structure(const ThresholdStructureConfig& config) {
  require_discount(config.gamma);
  if (config.horizon < 1) throw PreconditionError("threshold structure needs horizon >= 1");
  if (!(config.alpha > 0.0)) throw PreconditionError("threshold structure needs alpha > 0");
  if (!config.delay.is_monotone()) throw PreconditionError("threshold structure needs a monotone delay cost");
  if (config.max_age < 0) throw PreconditionError("max_age must be >= 0");

  const auto H = static_cast<std::size_t>(config.horizon);
  const auto A = static_cast<std::size_t>(config.max_age);
  ThresholdStructureReport rep;
  rep.is_threshold = true;
  rep.monotone_in_age = true;
  rep.consistent_across_queue = true;
  rep.dps_agree = true;

  // Per-transaction stopping DP: W_t(a) = min(alpha P, C(a) + gamma E W_{t+1}(a + 1)),
  // W_H = 0. Ages 0..A at step t need age A + 1 at t + 1, so step t covers 0..A + t.
  const auto lat = build_lattice(config.lattice, config.horizon, A + H + 1, config.state_limit);
  std::vector<std::vector<std::vector<bool>>> stop_publish(H);  // [t][age][node]
  std::vector<std::vector<double>> next(lat.prices[H].size(), std::vector<double>(A + H + 1, 0.0));
  for (std::size_t t = H; t-- > 0;) {
    const std::size_t ages = A + t;
    const auto& prices = lat.prices[t];
    std::vector<std::vector<double>> cur(prices.size(), std::vector<double>(ages + 1, 0.0));
    stop_publish[t].assign(A + 1, std::vector<bool>(prices.size(), false));
    for (std::size_t n = 0; n < prices.size(); ++n) {
      for (std::size_t a = 0; a <= ages; ++a) {
        double ev = 0.0;
        for (const auto& e : lat.edges[t][n]) ev += e.prob * next[e.node][a + 1];
        const double wait = config.delay(static_cast<Step>(a)) + config.gamma * ev;
        const double publish = config.alpha * prices[n];
        const bool pub = !strictly_better(wait, publish);
        cur[n][a] = pub ? publish : wait;
        if (a <= A) stop_publish[t][a][n] = pub;
      }
    }
    next = std::move(cur);
  }

  for (std::size_t t = 0; t < H; ++t) {
    const auto& prices = lat.prices[t];
    std::optional<std::size_t> prev;
    for (std::size_t a = 0; a <= A; ++a) {
      ThresholdCut cut;
      cut.t = static_cast<Step>(t);
      cut.age = static_cast<Step>(a);
      const auto lead = single_cut(stop_publish[t][a]);
      cut.single_cut = lead.has_value();
      if (!lead) {
        rep.is_threshold = false;
      } else {
        cut.publish_nodes = *lead;
        cut.last_publish_price = *lead == 0 ? 0.0 : prices[*lead - 1];
        cut.first_wait_price = *lead == prices.size() ? std::numeric_limits<double>::infinity() : prices[*lead];
        if (prev && *lead < *prev) rep.monotone_in_age = false;
        prev = lead;
      }
      rep.cuts.push_back(cut);
    }
  }

  // Queue-count MDP with beta = 0: the transaction of age a is published iff
  // a > q - N. Ages 1..min(t, A) are reachable from an empty queue.
  ModifiedMdpConfig mcfg;
  mcfg.gamma = config.gamma;
  mcfg.horizon = config.horizon;
  mcfg.lattice = config.lattice;
  mcfg.publish = PublishingCostParams(config.alpha, 0.0);
  mcfg.delay = config.delay;
  mcfg.q_max = config.horizon;
  mcfg.state_limit = config.state_limit;
  const auto sol = solve_modified_mdp(mcfg);
  for (std::size_t t = 1; t < H; ++t) {
    const auto& prices = lat.prices[t];
    for (std::size_t a = 1; a <= std::min(t, A); ++a) {
      std::vector<bool> ref;
      for (std::size_t q = a; q <= t; ++q) {
        std::vector<bool> pub(prices.size());
        for (std::size_t n = 0; n < prices.size(); ++n) {
          pub[n] = static_cast<std::int64_t>(a) > static_cast<std::int64_t>(q) - sol.action[t][n][q];
        }
        if (!single_cut(pub)) rep.is_threshold = false;
        if (q == a) {
          ref = pub;
        } else if (pub != ref) {
          rep.consistent_across_queue = false;
        }
      }
      if (ref != stop_publish[t][a]) rep.dps_agree = false;
    }
  }

  if (config.closed_form) {
    const std::size_t interior = H - (H + 3) / 4;
    for (const auto& cut : rep.cuts) {
      const auto t = static_cast<std::size_t>(cut.t);
      if (t >= interior || cut.age < 1 || static_cast<std::size_t>(cut.age) > t || !cut.single_cut) continue;
      const double lam = config.closed_form(cut.age);
      const auto& prices = lat.prices[t];
      if (!(lam >= prices.front() && lam <= prices.back())) continue;
      ++rep.brackets_checked;
      double gap = 0.0;
      if (cut.last_publish_price > lam * (1.0 + kCompareTolerance)) gap = (cut.last_publish_price - lam) / lam;
      if (cut.first_wait_price < lam * (1.0 - kCompareTolerance)) gap = (lam - cut.first_wait_price) / lam;
      if (gap > 0.0) ++rep.brackets_failed;
      rep.worst_bracket_gap = std::max(rep.worst_bracket_gap, gap);
    }
  }
  return rep;
}

}  // namespace l2pub
