#include "l2pub/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "l2pub/config.hpp"
#include "l2pub/dp_oracle.hpp"
#include "l2pub/error.hpp"
#include "l2pub/numeric.hpp"
#include "l2pub/price_model.hpp"
#include "l2pub/simulator.hpp"

namespace l2pub {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> episodes;
};

std::ofstream open_output(const fs::path& dir, const std::string& name) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + (dir / name).string());
  return f;
}

RunConfig load(const Globals& g) {
  if (g.config.empty()) throw ConfigError("config", "--config is required for this command");
  auto cfg = load_run_config(g.config);
  if (g.seed) cfg.sim.seed = *g.seed;
  if (g.episodes) {
    if (*g.episodes < 1) throw ConfigError("episodes", "must be >= 1");
    cfg.episodes = *g.episodes;
  }
  return cfg;
}

std::string price_note(const PriceProcess& p) {
  const auto c = classify(p);
  return std::string(c.martingale ? "martingale" : c.non_expansive ? "non-expansive" : "unclassified") + " (" +
         c.note + ")";
}

// ---- simulate / compare ----------------------------------------------------

int cmd_simulate(const Globals& g, const std::string& policy_name, std::ostream& out, std::ostream& err) {
  const auto cfg = load(g);
  if (cfg.policies.empty()) throw ConfigError("policies", "at least one policy is required");
  const auto& spec = policy_name.empty() ? cfg.policies.front() : find_policy(cfg, policy_name);
  const auto policy = build_policy(spec, cfg.sim);
  const std::int64_t episodes = std::max<std::int64_t>(cfg.episodes, 2);
  const auto mc = monte_carlo(*policy, cfg.sim, episodes);

  const fs::path dir = g.out;
  {
    auto f = open_output(dir, "episodes.csv");
    f << "episode,total_cost,max_wait\n";
    for (std::size_t e = 0; e < mc.total_costs.size(); ++e) {
      f << e << ',' << format_double(mc.total_costs[e]) << ',' << mc.max_waits[e] << '\n';
    }
  }
  {
    auto f = open_output(dir, "wait_hist.csv");
    f << "wait,count\n";
    for (const auto& [w, c] : mc.wait_histogram) f << w << ',' << c << '\n';
  }
  {
    auto f = open_output(dir, "summary.txt");
    f << "command: simulate\n"
      << "policy: " << spec.name << '\n'
      << "episodes: " << mc.episodes << '\n'
      << "horizon: " << cfg.sim.horizon << '\n'
      << "seed: " << cfg.sim.seed << '\n'
      << "gamma: " << format_double(cfg.sim.gamma) << '\n'
      << "price: " << price_note(cfg.sim.price) << '\n'
      << "mean_cost: " << format_double(mc.mean_cost) << '\n'
      << "std_err: " << format_double(mc.std_err) << '\n'
      << "mean_max_wait: " << format_double(mc.mean_max_wait) << '\n'
      << "median_max_wait: " << format_double(quantile(mc.max_waits, 0.5)) << '\n'
      << "p95_max_wait: " << format_double(quantile(mc.max_waits, 0.95)) << '\n'
      << "max_step_cost: " << format_double(mc.max_step_cost) << '\n'
      << "truncated_episodes: " << mc.truncated_episodes << '\n';
  }
  if (mc.truncated_episodes > 0) {
    err << "warning: price trace shorter than the horizon; " << mc.truncated_episodes << " episodes truncated\n";
  }
  out << "policy " << spec.name << ": mean_cost=" << format_double(mc.mean_cost)
      << " std_err=" << format_double(mc.std_err) << " mean_max_wait=" << format_double(mc.mean_max_wait) << '\n';
  return kExitOk;
}

int cmd_compare(const Globals& g, std::string a, std::string b, std::ostream& out, std::ostream& err) {
  const auto cfg = load(g);
  if (a.empty()) a = cfg.compare_a.value_or(cfg.policies.size() > 0 ? cfg.policies[0].name : "");
  if (b.empty()) b = cfg.compare_b.value_or(cfg.policies.size() > 1 ? cfg.policies[1].name : "");
  if (a.empty() || b.empty()) throw ConfigError("compare", "two policies are required (--policy-a/--policy-b)");
  const auto pa = build_policy(find_policy(cfg, a), cfg.sim);
  const auto pb = build_policy(find_policy(cfg, b), cfg.sim);
  const auto diff = compare(*pa, *pb, cfg.sim, cfg.episodes);

  const fs::path dir = g.out;
  {
    auto f = open_output(dir, "diff_series.csv");
    f << "step,mean_cumulative_diff\n";
    for (std::size_t t = 0; t < diff.size(); ++t) f << t << ',' << format_double(diff[t]) << '\n';
  }
  const double final_diff = diff.empty() ? 0.0 : diff.back();
  {
    auto f = open_output(dir, "summary.txt");
    f << "command: compare\n"
      << "policy_a: " << a << '\n'
      << "policy_b: " << b << '\n'
      << "episodes: " << cfg.episodes << '\n'
      << "horizon: " << cfg.sim.horizon << '\n'
      << "seed: " << cfg.sim.seed << '\n'
      << "price: " << price_note(cfg.sim.price) << '\n'
      << "final_mean_cumulative_diff: " << format_double(final_diff) << '\n';
  }
  if (static_cast<std::int64_t>(diff.size()) < cfg.sim.horizon) {
    err << "warning: price trace shorter than the horizon; series has " << diff.size() << " steps\n";
  }
  out << "mean cumulative cost(" << b << ") - cost(" << a << ") at final step: " << format_double(final_diff) << '\n';
  return kExitOk;
}

// ---- thresholds / interval / check-subadd ----------------------------------

struct ScalarArgs {
  std::optional<double> gamma, c, slope, mu, sigma, alpha, beta, price, sub_sigma;
};

std::optional<RunConfig> maybe_config(const Globals& g) {
  if (g.config.empty()) return std::nullopt;
  return load(g);
}

double pick_gamma(const ScalarArgs& a, const std::optional<RunConfig>& cfg) {
  if (a.gamma) return *a.gamma;
  if (cfg) return cfg->sim.gamma;
  throw ConfigError("gamma", "pass --gamma or a config");
}

DelayCostSpec pick_delay(const ScalarArgs& a, const std::optional<RunConfig>& cfg, double fallback_slope) {
  if (a.slope) return DelayCostSpec::linear(*a.slope);
  if (cfg) {
    if (cfg->sim.delay_cycle.size() != 1) throw ConfigError("delay", "this command needs a single delay cost");
    return cfg->sim.delay_cycle.front();
  }
  return DelayCostSpec::linear(fallback_slope);
}

int cmd_thresholds(const Globals& g, const ScalarArgs& a, const std::string& kind, std::int64_t age_max,
                   std::int64_t n_max, std::ostream& out) {
  const auto cfg = maybe_config(g);
  const double gamma = pick_gamma(a, cfg);
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma", "discount must lie in (0, 1)");
  if (age_max < 0) throw ConfigError("age-max", "must be >= 0");
  double c = 0.0;
  if (a.c) {
    c = *a.c;
  } else {
    // Default delay is the (1 - gamma) i of the synthetic experiments.
    const auto d = pick_delay(a, cfg, 1.0 - gamma);
    const auto* lin = std::get_if<LinearDelay>(&d.variant());
    if (lin == nullptr) throw ConfigError("delay", "thresholds need a linear delay cost");
    c = lin->slope / 2.0;
  }
  double mu = 0.0;
  double sigma = 0.0;
  if (cfg) {
    if (const auto* ln = std::get_if<LogNormalWalk>(&cfg->sim.price.variant())) {
      mu = ln->mu;
      sigma = ln->sigma;
    }
  }
  if (a.mu) mu = *a.mu;
  if (a.sigma) sigma = *a.sigma;
  const double alpha = a.alpha.value_or(1.0);

  std::optional<ThresholdFn> fn;
  try {
    if (kind == "rollup") {
      fn.emplace(RollupNumeric{{c, gamma, mu, sigma, alpha}, n_max}, 0);
    } else if (kind == "martingale") {
      fn.emplace(MartingaleClosedForm{c, gamma}, 0);
    } else if (kind == "onestep") {
      fn.emplace(OneStepBound{c, gamma, mu, sigma}, 0);
    } else {
      throw ConfigError("kind", "unknown threshold kind '" + kind + "' (rollup, martingale, onestep)");
    }
  } catch (const PreconditionError& e) {
    throw ConfigError("thresholds", e.what());
  }
  std::ostringstream table;
  table << "age,lambda\n";
  for (std::int64_t x = 0; x <= age_max; ++x) table << x << ',' << format_double((*fn)(x)) << '\n';
  out << table.str();
  if (g.out != ".") open_output(g.out, "thresholds.csv") << table.str();
  return kExitOk;
}

int cmd_interval(const Globals& g, const ScalarArgs& a, std::int64_t n_max, std::ostream& out, std::ostream& err) {
  const auto cfg = maybe_config(g);
  const double gamma = pick_gamma(a, cfg);
  const auto delay = pick_delay(a, cfg, 6.0);
  const double beta = a.beta ? *a.beta : cfg ? cfg->sim.publish.beta() : 1.0;
  double price = 1.0;
  if (a.price) {
    price = *a.price;
  } else if (cfg) {
    price = cfg->sim.price.initial_price();
  }
  IntervalChoice ch;
  try {
    ch = optimal_interval(delay, gamma, beta, price, n_max);
  } catch (const PreconditionError& e) {
    throw ConfigError("interval", e.what());
  }
  out << "n*=" << ch.n << " objective=" << format_double(ch.objective) << '\n';
  if (ch.boundary_hit) err << "warning: minimum at the search boundary n_max=" << n_max << "; widen --n-max\n";
  return kExitOk;
}

int cmd_check_subadd(const Globals& g, const ScalarArgs& a, std::int64_t n_max, std::ostream& out) {
  const auto cfg = maybe_config(g);
  const double gamma = a.gamma ? *a.gamma : cfg ? cfg->sim.gamma : 1.0;
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma", "must lie in (0, 1]");
  const auto delay = pick_delay(a, cfg, 6.0);
  const double sigma = a.sub_sigma.value_or(4.0);
  SubAdditivityResult r;
  try {
    r = check_sub_additivity(delay, gamma, sigma, n_max);
  } catch (const PreconditionError& e) {
    throw ConfigError("check-subadd", e.what());
  }
  if (std::holds_alternative<SubAdditivityOk>(r)) {
    out << "sigma=" << format_double(sigma) << " holds for " << delay.describe() << " up to n_max=" << n_max << '\n';
  } else {
    const auto& ce = std::get<SubAdditivityCounterexample>(r);
    out << "sigma=" << format_double(sigma) << " fails at n1=" << ce.n1 << " n2=" << ce.n2
        << ": F(n1+n2)=" << format_double(ce.lhs) << " > " << format_double(ce.rhs) << '\n';
  }
  return kExitOk;
}

// ---- ingest ------------------------------------------------------------------

int cmd_ingest(const Globals& g, const std::string& input, std::int64_t resample, double wei_scale, std::size_t bins,
               std::ostream& out) {
  if (input.empty()) throw ConfigError("input", "--input is required");
  if (resample <= 0) throw ConfigError("resample", "must be > 0 seconds");
  const auto rows = read_fee_csv(input, wei_scale);
  const auto trace = ingest_trace(rows, resample);
  if (trace.prices.size() < 2) throw IngestError(0, "need at least two resampled prices to fit factors");
  const auto st = fit_factors(trace, bins);

  const fs::path dir = g.out;
  {
    auto f = open_output(dir, "trace.csv");
    f << "step,price\n";
    for (std::size_t t = 0; t < trace.prices.size(); ++t) f << t << ',' << format_double(trace.prices[t]) << '\n';
  }
  {
    auto f = open_output(dir, "factors.csv");
    f << "step,factor\n";
    for (std::size_t t = 0; t < st.factors.size(); ++t) f << t << ',' << format_double(st.factors[t]) << '\n';
  }
  {
    auto f = open_output(dir, "factor_hist.csv");
    f << "bin_lo,bin_hi,count\n";
    for (std::size_t b = 0; b < st.histogram.counts.size(); ++b) {
      const double lo = st.histogram.lo + static_cast<double>(b) * st.histogram.bin_width;
      f << format_double(lo) << ',' << format_double(lo + st.histogram.bin_width) << ',' << st.histogram.counts[b]
        << '\n';
    }
  }
  {
    auto f = open_output(dir, "fit.csv");
    f << "mu_hat,sigma_hat,factors\n"
      << format_double(st.mu_hat) << ',' << format_double(st.sigma_hat) << ',' << st.factors.size() << '\n';
  }
  out << "ingested " << rows.size() << " rows into " << trace.prices.size() << " prices; mu_hat="
      << format_double(st.mu_hat) << " sigma_hat=" << format_double(st.sigma_hat) << '\n';
  return kExitOk;
}

// ---- oracle ------------------------------------------------------------------

const json& need(const json& j, const std::string& field, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(field + "." + key, "missing");
  return j.at(key);
}

double jnum(const json& j, const std::string& field, const char* key) {
  const auto& v = need(j, field, key);
  if (!v.is_number()) throw ConfigError(field + "." + key, "expected a number");
  return v.get<double>();
}

std::int64_t jint(const json& j, const std::string& field, const char* key) {
  const auto& v = need(j, field, key);
  if (!v.is_number_integer()) throw ConfigError(field + "." + key, "expected an integer");
  return v.get<std::int64_t>();
}

PublishingCostParams jpublish(const json& j, const std::string& field) {
  const auto& p = need(j, field, "publish");
  const double alpha = p.contains("alpha") ? jnum(p, field + ".publish", "alpha") : 0.0;
  const double beta = p.contains("beta") ? jnum(p, field + ".publish", "beta") : 0.0;
  try {
    return {alpha, beta};
  } catch (const PreconditionError& e) {
    throw ConfigError(field + ".publish", e.what());
  }
}

FullMdpConfig parse_full(const json& j, const std::string& field) {
  FullMdpConfig c;
  c.gamma = jnum(j, field, "gamma");
  c.horizon = jint(j, field, "horizon");
  c.lattice = parse_lattice(need(j, field, "lattice"), field + ".lattice");
  c.publish = jpublish(j, field);
  const auto delay = parse_delay(need(j, field, "delay"), field + ".delay");
  c.arrival_delays = {delay};
  if (j.contains("initial_count")) {
    // Ages 1..k at t = 0, matching the queue-count convention.
    for (std::int64_t i = jint(j, field, "initial_count"); i >= 1; --i) c.initial.push_back({-i, delay});
  }
  return c;
}

ModifiedMdpConfig parse_modified(const json& j, const std::string& field) {
  ModifiedMdpConfig c;
  c.gamma = jnum(j, field, "gamma");
  c.horizon = jint(j, field, "horizon");
  c.lattice = parse_lattice(need(j, field, "lattice"), field + ".lattice");
  c.publish = jpublish(j, field);
  c.delay = parse_delay(need(j, field, "delay"), field + ".delay");
  c.initial_queue = j.contains("initial_count") ? jint(j, field, "initial_count") : 0;
  c.q_max = c.initial_queue + c.horizon;
  return c;
}

struct Outcome {
  std::string status;  // PASS, FAIL, SKIP, REFUSED
  std::string detail;
};

Outcome run_check(const std::string& check, const json& inst, const std::string& field, const std::string& name,
                  const std::optional<fs::path>& csv_dir) {
  auto verdict = [](bool ok, std::string detail) { return Outcome{ok ? "PASS" : "FAIL", std::move(detail)}; };
  if (check == "all-or-nothing") {
    const auto c = parse_full(inst, field);
    if (c.publish.alpha() != 0.0) return {"SKIP", "alpha != 0: structure only claimed for constant publishing cost"};
    const auto r = verify_all_or_nothing(c);
    return verdict(r.holds, "full=" + format_double(r.full_value) + " restricted=" + format_double(r.restricted_value));
  }
  if (check == "fifo") {
    const auto r = verify_fifo(parse_full(inst, field));
    return verdict(r.holds, "states=" + std::to_string(r.states) + " non_fifo=" + std::to_string(r.non_fifo_choices) +
                                " worst_gap=" + format_double(r.worst_gap));
  }
  if (check == "modified-vs-full") {
    const auto full = solve_full_mdp(parse_full(inst, field));
    const auto mod = solve_modified_mdp(parse_modified(inst, field));
    const double v = mod.root_value();
    const bool ok = std::abs(v - full.value) <= 1e-10 * std::max(std::abs(v), std::abs(full.value));
    return verdict(ok, "modified=" + format_double(v) + " full=" + format_double(full.value));
  }
  if (check == "interval-optimality") {
    auto c = parse_modified(inst, field);
    if (c.lattice.factors().size() != 1 || c.lattice.factors().front().ratio != 1.0) {
      throw ConfigError(field + ".lattice", "interval optimality needs a constant price");
    }
    const double price = c.lattice.initial_price();
    const auto ch = optimal_interval(c.delay, c.gamma, c.publish.beta(), price, 10 * c.horizon + 10);
    const auto sol = solve_modified_mdp(c);
    if (csv_dir) {
      auto f = open_output(*csv_dir, name + ".csv");
      write_oracle_csv(sol, f);
    }
    const double dp = sol.root_value();
    const double pol = evaluate_policy(FixedIntervalPolicy(ch.n), c);
    bool ok = std::abs(pol - dp) <= 1e-8 * std::abs(dp);
    for (std::int64_t n = 1; n <= 3 * ch.n; ++n) {
      ok = ok && evaluate_policy(FixedIntervalPolicy(n), c) >= pol * (1.0 - 1e-12);
    }
    return verdict(ok, "n*=" + std::to_string(ch.n) + " dp=" + format_double(dp) + " interval=" + format_double(pol));
  }
  if (check == "greedy-bound") {
    const auto c = parse_modified(inst, field);
    const double sigma = inst.contains("sigma") ? jnum(inst, field, "sigma") : 8.0;
    const auto sol = solve_modified_mdp(c);
    if (csv_dir) {
      auto f = open_output(*csv_dir, name + ".csv");
      write_oracle_csv(sol, f);
    }
    const double dp = sol.root_value();
    const double greedy = evaluate_policy(GreedyBalancePolicy(c.delay, c.gamma, c.publish.beta()), c);
    const double ratio = dp > 0.0 ? greedy / dp : (greedy == 0.0 ? 1.0 : INFINITY);
    return verdict(greedy <= sigma * dp * (1.0 + 1e-12),
                   "greedy/opt=" + format_double(ratio) + " bound=" + format_double(sigma));
  }
  if (check == "threshold") {
    ThresholdStructureConfig c;
    c.gamma = jnum(inst, field, "gamma");
    c.horizon = jint(inst, field, "horizon");
    c.lattice = parse_lattice(need(inst, field, "lattice"), field + ".lattice");
    c.alpha = inst.contains("alpha") ? jnum(inst, field, "alpha") : 1.0;
    c.delay = parse_delay(need(inst, field, "delay"), field + ".delay");
    c.max_age = inst.contains("max_age") ? jint(inst, field, "max_age") : c.horizon;
    bool bracket = inst.contains("bracket_martingale") && inst["bracket_martingale"].get<bool>();
    if (bracket) {
      const auto* lin = std::get_if<LinearDelay>(&c.delay.variant());
      if (lin == nullptr) throw ConfigError(field + ".delay", "bracketing needs a linear delay cost");
      const double cc = lin->slope / 2.0;
      const double g = c.gamma;
      const double a = c.alpha;
      c.closed_form = [cc, g, a](Step x) { return martingale_threshold(cc, g, x) / a; };
    }
    const auto r = verify_threshold_structure(c);
    const bool ok = r.is_threshold && r.monotone_in_age && r.consistent_across_queue && r.dps_agree &&
                    (!bracket || r.brackets_failed == 0);
    std::string detail = std::string("single_cut=") + (r.is_threshold ? "yes" : "no") +
                         " monotone=" + (r.monotone_in_age ? "yes" : "no");
    if (bracket) {
      detail += " brackets=" + std::to_string(r.brackets_checked - r.brackets_failed) + "/" +
                std::to_string(r.brackets_checked) + " worst_gap=" + format_double(r.worst_bracket_gap);
    }
    return verdict(ok, detail);
  }
  throw ConfigError(field + ".check", "unknown check '" + check +
                                          "' (all-or-nothing, fifo, modified-vs-full, interval-optimality, "
                                          "greedy-bound, threshold)");
}

int cmd_oracle(const Globals& g, bool export_csv, std::ostream& out) {
  const auto cfg = load(g);
  if (cfg.oracle.is_null()) throw ConfigError("oracle", "config has no oracle section");
  const auto& checks = need(cfg.oracle, "oracle", "checks");
  if (!checks.is_array()) throw ConfigError("oracle.checks", "expected an array");
  std::optional<fs::path> csv_dir;
  if (export_csv) csv_dir = fs::path(g.out);

  bool all_ok = true;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const std::string field = "oracle.checks[" + std::to_string(i) + "]";
    const auto& item = checks[i];
    const auto& check_v = need(item, field, "check");
    if (!check_v.is_string()) throw ConfigError(field + ".check", "expected a string");
    const auto check = check_v.get<std::string>();
    const std::string name = item.contains("name") ? item["name"].get<std::string>() : field;
    Outcome o;
    try {
      o = run_check(check, item, field, name, csv_dir);
    } catch (const SizeGuardError& e) {
      o = {"REFUSED", e.what()};
    } catch (const PreconditionError& e) {
      o = {"SKIP", e.what()};
    }
    if (o.status == "FAIL" || o.status == "REFUSED") all_ok = false;
    out << o.status << ' ' << name << " [" << check << "] " << o.detail << '\n';
  }
  return all_ok ? kExitOk : kExitInvalid;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Publishing strategies for layer-2 batches: simulation, thresholds and exact oracles", "l2pub"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "experiment JSON file");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--seed", g.seed, "overrides the config seed");
  app.add_option("--episodes", g.episodes, "overrides the config episode count");
  ScalarArgs sa;

  auto* sim = app.add_subcommand("simulate", "Monte-Carlo run of one policy");
  std::string policy;
  sim->add_option("--policy", policy, "policy name (default: first in config)");

  auto* cmp = app.add_subcommand("compare", "mean cumulative cost difference of two policies");
  std::string pa;
  std::string pb;
  cmp->add_option("--policy-a", pa);
  cmp->add_option("--policy-b", pb);

  auto* thr = app.add_subcommand("thresholds", "print the age,lambda table");
  std::string kind = "rollup";
  std::int64_t age_max = 20;
  std::int64_t n_max_thr = 100000;
  thr->add_option("--kind", kind, "rollup, martingale or onestep");
  thr->add_option("--age-max", age_max);
  thr->add_option("--n-max", n_max_thr);
  thr->add_option("--gamma", sa.gamma);
  thr->add_option("--c", sa.c, "delay C(i) = 2 c i");
  thr->add_option("--slope", sa.slope, "delay slope 2c");
  thr->add_option("--mu", sa.mu);
  thr->add_option("--sigma", sa.sigma);
  thr->add_option("--alpha", sa.alpha);

  auto* itv = app.add_subcommand("interval", "optimal publication interval for a constant price");
  std::int64_t n_max_itv = 1000;
  itv->add_option("--gamma", sa.gamma);
  itv->add_option("--slope", sa.slope, "linear delay slope (default 6)");
  itv->add_option("--beta", sa.beta);
  itv->add_option("--price", sa.price);
  itv->add_option("--n-max", n_max_itv);

  auto* ing = app.add_subcommand("ingest", "resample a base-fee CSV and fit log-normal factors");
  std::string input;
  std::int64_t resample = 60;
  double wei_scale = 1e-9;
  std::size_t bins = 50;
  ing->add_option("--input", input, "CSV with header timestamp_unix_s,base_fee_wei");
  ing->add_option("--resample", resample, "window length in seconds");
  ing->add_option("--wei-scale", wei_scale, "multiplier applied to base_fee_wei (default: to gwei)");
  ing->add_option("--bins", bins);

  auto* orc = app.add_subcommand("oracle", "run the exact-DP verification checks of a config");
  bool export_csv = false;
  orc->add_flag("--export", export_csv, "write t,price,queue,action,value tables under --out");

  auto* sub = app.add_subcommand("check-subadd", "test sigma-sub-additivity of the aggregated delay cost");
  std::int64_t n_max_sub = 200;
  sub->add_option("--gamma", sa.gamma, "default 1");
  sub->add_option("--slope", sa.slope, "linear delay slope (default 6)");
  sub->add_option("--sigma", sa.sub_sigma, "default 4");
  sub->add_option("--n-max", n_max_sub);

  for (auto* s : {sim, cmp, thr, itv, ing, orc, sub}) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o;
    std::ostringstream e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*sim) return cmd_simulate(g, policy, out, err);
    if (*cmp) return cmd_compare(g, pa, pb, out, err);
    if (*thr) return cmd_thresholds(g, sa, kind, age_max, n_max_thr, out);
    if (*itv) return cmd_interval(g, sa, n_max_itv, out, err);
    if (*ing) return cmd_ingest(g, input, resample, wei_scale, bins, out);
    if (*orc) return cmd_oracle(g, export_csv, out);
    if (*sub) return cmd_check_subadd(g, sa, n_max_sub, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitInvalid;
}

}  // namespace l2pub
