#include "l2pub/config.hpp"

#include <fstream>
#include <set>
#include <thread>

#include "l2pub/error.hpp"
#include "l2pub/price_model.hpp"

namespace l2pub {

using nlohmann::json;

namespace {

std::string join(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

void only_keys(const json& j, const std::string& field, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(field.empty() ? "config" : field, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) throw ConfigError(join(field, k), "unknown key");
  }
}

const json& require(const json& j, const std::string& field, const char* key) {
  if (!j.contains(key)) throw ConfigError(join(field, key), "missing");
  return j.at(key);
}

double num(const json& j, const std::string& field, const char* key) {
  const auto& v = require(j, field, key);
  if (!v.is_number()) throw ConfigError(join(field, key), "expected a number");
  return v.get<double>();
}

double num_or(const json& j, const std::string& field, const char* key, double fallback) {
  return j.contains(key) ? num(j, field, key) : fallback;
}

std::int64_t integer(const json& j, const std::string& field, const char* key) {
  const auto& v = require(j, field, key);
  if (!v.is_number_integer()) throw ConfigError(join(field, key), "expected an integer");
  return v.get<std::int64_t>();
}

std::int64_t integer_or(const json& j, const std::string& field, const char* key, std::int64_t fallback) {
  return j.contains(key) ? integer(j, field, key) : fallback;
}

std::string text(const json& j, const std::string& field, const char* key) {
  const auto& v = require(j, field, key);
  if (!v.is_string()) throw ConfigError(join(field, key), "expected a string");
  return v.get<std::string>();
}

std::vector<double> numbers(const json& j, const std::string& field, const char* key) {
  const auto& v = require(j, field, key);
  if (!v.is_array()) throw ConfigError(join(field, key), "expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError(join(field, key), "expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

// Runs `make`, relabelling precondition failures with the config field.
template <class F>
auto guarded(const std::string& field, F&& make) {
  try {
    return make();
  } catch (const PreconditionError& e) {
    throw ConfigError(field, e.what());
  }
}

PriceProcess parse_price(const json& j, const std::string& field, const std::filesystem::path& base_dir,
                         std::optional<std::filesystem::path>& trace_path) {
  const auto kind = text(j, field, "kind");
  if (kind == "constant") {
    only_keys(j, field, {"kind", "p0"});
    return guarded(field + ".p0", [&] { return PriceProcess::constant(num(j, field, "p0")); });
  }
  if (kind == "lognormal") {
    only_keys(j, field, {"kind", "p0", "mu", "sigma"});
    const double p0 = num(j, field, "p0");
    const double mu = num(j, field, "mu");
    const double sigma = num(j, field, "sigma");
    if (!(sigma >= 0.0)) throw ConfigError(field + ".sigma", "must be >= 0");
    return guarded(field, [&] { return PriceProcess::lognormal(p0, mu, sigma); });
  }
  if (kind == "trace") {
    only_keys(j, field, {"kind", "prices", "path", "resample_seconds", "wei_scale"});
    if (j.contains("prices")) {
      return guarded(field + ".prices", [&] { return PriceProcess::trace(numbers(j, field, "prices")); });
    }
    std::filesystem::path p = text(j, field, "path");
    if (p.is_relative()) p = base_dir / p;
    trace_path = p;
    const auto rows = read_fee_csv(p.string(), num_or(j, field, "wei_scale", 1e-9));
    const auto tr = ingest_trace(rows, integer_or(j, field, "resample_seconds", 60));
    return PriceProcess::trace(tr.prices);
  }
  throw ConfigError(field + ".kind", "unknown price kind '" + kind + "' (constant, lognormal, trace)");
}

std::pair<double, double> lognormal_params(const SimConfig& sim) {
  if (const auto* ln = std::get_if<LogNormalWalk>(&sim.price.variant())) return {ln->mu, ln->sigma};
  return {0.0, 0.0};
}

// One threshold per distinct delay spec in the cycle. `make` receives the
// spec and the field it came from.
template <class Make>
PolicyPtr per_spec_thresholds(const PolicySpec& spec, const SimConfig& sim, Make&& make) {
  std::vector<std::pair<DelayCostSpec, ThresholdFn>> table;
  for (const auto& d : sim.delay_cycle) {
    bool seen = false;
    for (const auto& [s, fn] : table) seen = seen || s == d;
    if (!seen) table.emplace_back(d, guarded(spec.field, [&] { return make(d); }));
  }
  return std::make_shared<ThresholdPolicy>(std::move(table), spec.name);
}

// c for a linear delay: C(i) = 2 c i, unless the policy overrides it.
double linear_c(const PolicySpec& spec, const DelayCostSpec& d, std::size_t specs) {
  if (spec.params.contains("c")) {
    if (specs > 1) throw ConfigError(spec.field + ".c", "an explicit c needs a single delay cost");
    return num(spec.params, spec.field, "c");
  }
  const auto* lin = std::get_if<LinearDelay>(&d.variant());
  if (lin == nullptr) throw ConfigError(spec.field, "threshold policy " + spec.kind + " needs linear delay costs");
  return lin->slope / 2.0;
}

}  // namespace

DelayCostSpec parse_delay(const json& j, const std::string& field) {
  const auto kind = text(j, field, "kind");
  if (kind == "linear") {
    only_keys(j, field, {"kind", "slope"});
    return guarded(field + ".slope", [&] { return DelayCostSpec::linear(num(j, field, "slope")); });
  }
  if (kind == "exponential") {
    only_keys(j, field, {"kind", "rate"});
    return guarded(field + ".rate", [&] { return DelayCostSpec::exponential(num(j, field, "rate")); });
  }
  if (kind == "table") {
    only_keys(j, field, {"kind", "values"});
    return guarded(field + ".values", [&] { return DelayCostSpec::table(numbers(j, field, "values")); });
  }
  throw ConfigError(field + ".kind", "unknown delay kind '" + kind + "' (linear, exponential, table)");
}

LatticePriceProcess parse_lattice(const json& j, const std::string& field) {
  only_keys(j, field, {"p0", "u", "factors"});
  const double p0 = num(j, field, "p0");
  if (j.contains("u")) {
    if (j.contains("factors")) throw ConfigError(field, "give either u or factors");
    return guarded(field, [&] { return LatticePriceProcess::martingale_two_point(p0, num(j, field, "u")); });
  }
  const auto& fs = require(j, field, "factors");
  if (!fs.is_array()) throw ConfigError(field + ".factors", "expected [[ratio, prob], ...]");
  std::vector<LatticeFactor> factors;
  for (const auto& f : fs) {
    if (!f.is_array() || f.size() != 2 || !f[0].is_number() || !f[1].is_number()) {
      throw ConfigError(field + ".factors", "expected [[ratio, prob], ...]");
    }
    factors.push_back({f[0].get<double>(), f[1].get<double>()});
  }
  return guarded(field, [&] { return LatticePriceProcess(p0, std::move(factors)); });
}

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
  only_keys(doc, "", {"gamma", "horizon", "seed", "episodes", "threads", "initial_queue", "price", "publish", "delay",
                      "policies", "compare", "oracle"});
  RunConfig cfg;
  auto& sim = cfg.sim;
  sim.gamma = num(doc, "", "gamma");
  if (!(sim.gamma > 0.0 && sim.gamma < 1.0)) throw ConfigError("gamma", "discount must lie in (0, 1)");
  sim.horizon = integer_or(doc, "", "horizon", 1000);
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw ConfigError("seed", "expected a non-negative integer");
    sim.seed = doc["seed"].get<std::uint64_t>();
  }
  cfg.episodes = integer_or(doc, "", "episodes", 100);
  if (cfg.episodes < 1) throw ConfigError("episodes", "must be >= 1");
  const auto threads = integer_or(doc, "", "threads", 0);
  if (threads < 0) throw ConfigError("threads", "must be >= 0 (0 = all cores)");
  sim.threads = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : static_cast<unsigned>(threads);
  sim.initial_queue = integer_or(doc, "", "initial_queue", 1);

  if (doc.contains("price")) sim.price = parse_price(doc["price"], "price", base_dir, cfg.trace_path);
  if (doc.contains("publish")) {
    const auto& p = doc["publish"];
    only_keys(p, "publish", {"alpha", "beta"});
    sim.publish = guarded("publish", [&] { return PublishingCostParams(num_or(p, "publish", "alpha", 0.0),
                                                                        num_or(p, "publish", "beta", 0.0)); });
  }
  if (doc.contains("delay")) {
    const auto& d = doc["delay"];
    sim.delay_cycle.clear();
    if (d.is_array()) {
      for (std::size_t i = 0; i < d.size(); ++i) sim.delay_cycle.push_back(parse_delay(d[i], "delay[" + std::to_string(i) + "]"));
    } else {
      sim.delay_cycle.push_back(parse_delay(d, "delay"));
    }
  }
  sim.validate();

  if (doc.contains("policies")) {
    const auto& ps = doc["policies"];
    if (!ps.is_array()) throw ConfigError("policies", "expected an array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const std::string field = "policies[" + std::to_string(i) + "]";
      PolicySpec spec;
      spec.field = field;
      spec.kind = text(ps[i], field, "kind");
      spec.name = ps[i].contains("name") ? text(ps[i], field, "name") : spec.kind;
      spec.params = ps[i];
      if (!names.insert(spec.name).second) throw ConfigError(field + ".name", "duplicate policy name " + spec.name);
      build_policy(spec, sim);  // validate eagerly
      cfg.policies.push_back(std::move(spec));
    }
  }
  if (doc.contains("compare")) {
    const auto& c = doc["compare"];
    only_keys(c, "compare", {"a", "b"});
    cfg.compare_a = text(c, "compare", "a");
    cfg.compare_b = text(c, "compare", "b");
  }
  if (doc.contains("oracle")) cfg.oracle = doc["oracle"];
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  return parse_run_config(doc, path.parent_path());
}

PolicyPtr build_policy(const PolicySpec& spec, const SimConfig& sim) {
  const auto& p = spec.params;
  const auto& f = spec.field;
  const auto& k = spec.kind;
  if (k == "trivial") {
    only_keys(p, f, {"kind", "name"});
    return std::make_shared<TrivialPolicy>();
  }
  if (k == "interval") {
    only_keys(p, f, {"kind", "name", "n", "phase"});
    const auto n = integer(p, f, "n");
    std::optional<std::int64_t> phase;
    if (p.contains("phase")) phase = integer(p, f, "phase");
    return guarded(f + ".n", [&] { return std::make_shared<FixedIntervalPolicy>(n, phase); });
  }
  if (k == "greedy") {
    only_keys(p, f, {"kind", "name"});
    if (sim.delay_cycle.size() != 1) throw ConfigError(f, "greedy needs a single global delay cost");
    return guarded(f, [&] { return std::make_shared<GreedyBalancePolicy>(sim.delay_cycle.front(), sim.gamma,
                                                                         sim.publish.beta()); });
  }
  const auto [mu_cfg, sigma_cfg] = lognormal_params(sim);
  const auto specs = sim.delay_cycle.size();
  if (k == "threshold-martingale") {
    only_keys(p, f, {"kind", "name", "c"});
    return per_spec_thresholds(spec, sim, [&](const DelayCostSpec& d) {
      return ThresholdFn(MartingaleClosedForm{linear_c(spec, d, specs), sim.gamma});
    });
  }
  if (k == "threshold-rollup") {
    only_keys(p, f, {"kind", "name", "c", "mu", "sigma", "alpha", "n_max"});
    const double mu = num_or(p, f, "mu", mu_cfg);
    const double sigma = num_or(p, f, "sigma", sigma_cfg);
    const double alpha = num_or(p, f, "alpha", sim.publish.alpha() > 0.0 ? sim.publish.alpha() : 1.0);
    const auto n_max = integer_or(p, f, "n_max", 100000);
    return per_spec_thresholds(spec, sim, [&](const DelayCostSpec& d) {
      return ThresholdFn(RollupNumeric{{linear_c(spec, d, specs), sim.gamma, mu, sigma, alpha}, n_max});
    });
  }
  if (k == "threshold-onestep") {
    only_keys(p, f, {"kind", "name", "c", "mu", "sigma"});
    const double mu = num_or(p, f, "mu", mu_cfg);
    const double sigma = num_or(p, f, "sigma", sigma_cfg);
    return per_spec_thresholds(spec, sim, [&](const DelayCostSpec& d) {
      return ThresholdFn(OneStepBound{linear_c(spec, d, specs), sim.gamma, mu, sigma});
    });
  }
  if (k == "threshold-table") {
    only_keys(p, f, {"kind", "name", "values", "clamp_beyond"});
    ThresholdTable t{numbers(p, f, "values"), true};
    if (p.contains("clamp_beyond")) {
      if (!p["clamp_beyond"].is_boolean()) throw ConfigError(f + ".clamp_beyond", "expected a boolean");
      t.clamp_beyond = p["clamp_beyond"].get<bool>();
    }
    const auto check = static_cast<std::int64_t>(t.values.size()) - 1;
    return per_spec_thresholds(spec, sim, [&](const DelayCostSpec&) { return ThresholdFn(t, check); });
  }
  throw ConfigError(f + ".kind", "unknown policy kind '" + k +
                                     "' (trivial, interval, greedy, threshold-martingale, threshold-rollup, "
                                     "threshold-onestep, threshold-table)");
}

const PolicySpec& find_policy(const RunConfig& cfg, const std::string& name) {
  for (const auto& p : cfg.policies) {
    if (p.name == name) return p;
  }
  throw ConfigError("policies", "no policy named '" + name + "'");
}

}  // namespace l2pub
