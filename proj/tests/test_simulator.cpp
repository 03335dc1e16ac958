#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "l2pub/error.hpp"
#include "l2pub/policies.hpp"
#include "l2pub/simulator.hpp"
#include "support/gen.hpp"

using namespace l2pub;

namespace {

SimConfig unit_config(std::int64_t horizon, std::int64_t initial_queue = 1) {
  SimConfig cfg;
  cfg.gamma = 0.9;
  cfg.horizon = horizon;
  cfg.price = PriceProcess::constant(1.0);
  cfg.publish = {1.0, 0.0};
  cfg.delay_cycle = {DelayCostSpec::linear(0.1)};
  cfg.initial_queue = initial_queue;
  return cfg;
}

ThresholdPolicy identity_threshold(const DelayCostSpec& spec) {
  std::vector<double> lam(64);
  for (std::size_t i = 0; i < lam.size(); ++i) lam[i] = static_cast<double>(i);
  return ThresholdPolicy({{spec, ThresholdFn(ThresholdTable{lam, false})}});
}

// Publishes one arbitrary id that does not exist.
class RoguePolicy final : public Policy {
 public:
  PolicyAction decide(const PolicyInput&) const override { return {{12345}}; }
  std::string name() const override { return "rogue"; }
};

SimConfig random_config(gen::Source& src) {
  SimConfig cfg;
  cfg.gamma = src.real(0.5, 0.999);
  cfg.horizon = src.integer(1, 60);
  cfg.seed = src.next();
  const double sigma = src.real(0.0, 0.3);
  cfg.price = PriceProcess::lognormal(src.real(0.1, 10.0), -0.5 * sigma * sigma, sigma);
  cfg.publish = {src.real(0.0, 2.0), src.real(0.0, 5.0)};
  cfg.delay_cycle = {DelayCostSpec::linear(src.real(0.0, 2.0))};
  if (src.coin()) cfg.delay_cycle.push_back(DelayCostSpec::exponential(src.real(0.0, 0.1)));
  cfg.initial_queue = src.integer(0, 3);
  return cfg;
}

}  // namespace

TEST(Simulator, TrivialHandTotals) {
  const auto r = run_episode(TrivialPolicy{}, unit_config(3));
  EXPECT_NEAR(r.total_discounted_cost, 1.0 + 0.9 + 0.81, 1e-15);
  EXPECT_EQ(r.max_wait, 0);
  EXPECT_EQ(r.wait_histogram.at(0), 3u);
  EXPECT_EQ(r.final_queue_size, 1u);
  EXPECT_EQ(r.unpublished_ages.at(0), 1u);
  ASSERT_EQ(r.records.size(), 3u);
  EXPECT_EQ(r.records[1].queue_size_before, 1u);
  EXPECT_EQ(r.records[2].discounted_step_cost, 0.81);

  // Nothing to publish at t = 0 without an initial queue.
  EXPECT_EQ(run_episode(TrivialPolicy{}, unit_config(1, 0)).total_discounted_cost, 0.0);
}

TEST(Simulator, ThresholdHandEpisode) {
  const auto cfg = unit_config(4);
  const auto r = run_episode(identity_threshold(cfg.delay_cycle[0]), cfg);
  ASSERT_EQ(r.records.size(), 4u);
  EXPECT_EQ(r.records[0].published_count, 0u);
  EXPECT_EQ(r.records[1].published_count, 2u);
  EXPECT_NEAR(r.records[1].discounted_step_cost, 1.8, 1e-15);
  EXPECT_EQ(r.max_wait, 1);
  EXPECT_EQ(r.wait_histogram.at(1), 1u);
  EXPECT_EQ(r.wait_histogram.at(0), 3u);
  EXPECT_NEAR(r.total_discounted_cost, 3.339, 1e-12);
}

TEST(Simulator, DelayCostCharged) {
  // Never publishing: queue ages 0; 1,1; 2,2,1 ... with C(i) = 0.1 i.
  FixedIntervalPolicy never(1000);
  const auto r = run_episode(never, unit_config(3));
  EXPECT_NEAR(r.records[0].delay_cost, 0.0, 1e-15);
  EXPECT_NEAR(r.records[1].delay_cost, 0.2, 1e-15);
  EXPECT_NEAR(r.records[2].delay_cost, 0.5, 1e-15);
  EXPECT_EQ(r.final_queue_size, 4u);
  EXPECT_EQ(r.max_wait, 0);
  EXPECT_TRUE(r.wait_histogram.empty());
  // Waiting so far: initial tx 3, H_0 2, H_1 1, H_2 0.
  for (std::int64_t w = 0; w <= 3; ++w) EXPECT_EQ(r.unpublished_ages.at(w), 1u);
}

TEST(Compare, GoldenSeries) {
  const auto cfg = unit_config(4);
  const auto d = compare(identity_threshold(cfg.delay_cycle[0]), TrivialPolicy{}, cfg, 3);
  const std::vector<double> want{1.0, 0.1, 0.1, 0.1};
  ASSERT_EQ(d.size(), want.size());
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(d[i], want[i], 1e-12) << i;
}

TEST(Compare, SelfComparisonIsZero) {
  SimConfig cfg = unit_config(50);
  cfg.price = PriceProcess::lognormal(1.0, -0.005, 0.1);
  cfg.threads = 4;
  const auto d = compare(TrivialPolicy{}, TrivialPolicy{}, cfg, 8);
  ASSERT_EQ(d.size(), 50u);
  for (double x : d) EXPECT_EQ(x, 0.0);
  EXPECT_THROW(compare(TrivialPolicy{}, TrivialPolicy{}, cfg, 0), PreconditionError);
}

TEST(Compare, PropertyAntisymmetric) {
  gen::Source src(40);
  for (int k = 0; k < 10; ++k) {
    auto cfg = random_config(src);
    cfg.delay_cycle.resize(1);
    GreedyBalancePolicy g(cfg.delay_cycle[0], cfg.gamma, cfg.publish.beta());
    const auto ab = compare(g, TrivialPolicy{}, cfg, 5);
    const auto ba = compare(TrivialPolicy{}, g, cfg, 5);
    ASSERT_EQ(ab.size(), ba.size());
    for (std::size_t i = 0; i < ab.size(); ++i) EXPECT_NEAR(ab[i], -ba[i], 1e-12 * (1 + std::abs(ab[i])));
  }
}

TEST(Simulator, GreedyWithZeroBetaEqualsTrivial) {
  gen::Source src(2);
  for (int k = 0; k < 20; ++k) {
    auto cfg = random_config(src);
    cfg.publish = {cfg.publish.alpha(), 0.0};
    cfg.delay_cycle.resize(1);
    GreedyBalancePolicy g(cfg.delay_cycle[0], cfg.gamma, 0.0);
    const auto a = run_episode(g, cfg, 3);
    const auto b = run_episode(TrivialPolicy{}, cfg, 3);
    EXPECT_EQ(a.total_discounted_cost, b.total_discounted_cost);
  }
}

TEST(Simulator, PropertyAccounting) {
  gen::Source src(77);
  for (int k = 0; k < 40; ++k) {
    const auto cfg = random_config(src);
    const std::vector<std::pair<DelayCostSpec, ThresholdFn>> th = [&] {
      std::vector<std::pair<DelayCostSpec, ThresholdFn>> v;
      for (const auto& s : cfg.delay_cycle) {
        bool seen = false;
        for (const auto& e : v) seen = seen || e.first == s;
        if (!seen) v.emplace_back(s, ThresholdFn(MartingaleClosedForm{src.real(0.1, 2.0), cfg.gamma}));
      }
      return v;
    }();
    ThresholdPolicy pol(th);
    const auto r = run_episode(pol, cfg, src.next() % 100);
    ASSERT_EQ(r.records.size(), static_cast<std::size_t>(cfg.horizon));
    double total = 0.0;
    double weight = 1.0;
    std::size_t published = 0;
    for (const auto& rec : r.records) {
      EXPECT_GE(rec.delay_cost, 0.0);
      EXPECT_GE(rec.publish_cost, 0.0);
      EXPECT_NEAR(rec.discounted_step_cost, weight * (rec.publish_cost + rec.delay_cost),
                  1e-12 * (1 + rec.discounted_step_cost));
      total += rec.discounted_step_cost;
      weight *= cfg.gamma;
      published += rec.published_count;
    }
    EXPECT_NEAR(r.total_discounted_cost, total, 1e-9 * (1 + total));
    // Conservation: every created transaction is published or still queued.
    EXPECT_EQ(published + r.final_queue_size, static_cast<std::size_t>(cfg.initial_queue + cfg.horizon));
    std::size_t hist = 0;
    for (const auto& [w, c] : r.wait_histogram) {
      EXPECT_GE(w, 0);
      EXPECT_LE(w, r.max_wait);
      hist += c;
    }
    EXPECT_EQ(hist, published);
    std::size_t left = 0;
    for (const auto& [w, c] : r.unpublished_ages) left += c;
    EXPECT_EQ(left, r.final_queue_size);
  }
}

TEST(Simulator, DeterministicAcrossThreadCounts) {
  SimConfig cfg = unit_config(200);
  cfg.price = PriceProcess::lognormal(5.0, -0.00125, 0.05);
  cfg.delay_cycle = {DelayCostSpec::linear(0.5)};
  ThresholdPolicy pol({{cfg.delay_cycle[0], ThresholdFn(MartingaleClosedForm{0.25, 0.9})}});
  cfg.threads = 1;
  const auto one = monte_carlo(pol, cfg, 16);
  cfg.threads = 5;
  const auto many = monte_carlo(pol, cfg, 16);
  EXPECT_EQ(one.total_costs, many.total_costs);
  EXPECT_EQ(one.max_waits, many.max_waits);
  EXPECT_EQ(one.wait_histogram, many.wait_histogram);
  EXPECT_EQ(one.mean_cost, many.mean_cost);
}

TEST(Simulator, TraceTruncationWarns) {
  SimConfig cfg = unit_config(10);
  cfg.price = PriceProcess::trace({1.0, 2.0, 3.0});
  const auto r = run_episode(TrivialPolicy{}, cfg);
  EXPECT_TRUE(r.truncated);
  EXPECT_EQ(r.records.size(), 3u);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("exhausted"), std::string::npos);
  EXPECT_EQ(r.records[2].price, 3.0);
  cfg.horizon = 3;
  EXPECT_FALSE(run_episode(TrivialPolicy{}, cfg).truncated);
}

TEST(Simulator, Validation) {
  auto cfg = unit_config(3);
  cfg.gamma = 1.5;
  try {
    run_episode(TrivialPolicy{}, cfg);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "gamma");
  }
  cfg = unit_config(0);
  EXPECT_THROW(run_episode(TrivialPolicy{}, cfg), ConfigError);
  cfg = unit_config(3, -1);
  EXPECT_THROW(run_episode(TrivialPolicy{}, cfg), ConfigError);
  cfg = unit_config(3);
  cfg.delay_cycle.clear();
  EXPECT_THROW(run_episode(TrivialPolicy{}, cfg), ConfigError);
  EXPECT_THROW(run_episode(RoguePolicy{}, unit_config(3)), InvalidActionError);
}

TEST(MonteCarlo, SummaryStatistics) {
  auto cfg = unit_config(5);
  const auto s = monte_carlo(TrivialPolicy{}, cfg, 4);
  EXPECT_EQ(s.episodes, 4);
  EXPECT_EQ(s.std_err, 0.0);
  EXPECT_NEAR(s.mean_cost, 1 + 0.9 + 0.81 + 0.729 + 0.6561, 1e-12);
  EXPECT_EQ(s.wait_histogram.at(0), 20u);
  EXPECT_EQ(s.max_step_cost, 1.0);
  EXPECT_THROW(monte_carlo(TrivialPolicy{}, cfg, 1), PreconditionError);

  cfg.price = PriceProcess::lognormal(1.0, -0.02, 0.2);
  const auto v = monte_carlo(TrivialPolicy{}, cfg, 50);
  double m = 0.0;
  for (double c : v.total_costs) m += c;
  m /= 50.0;
  double ss = 0.0;
  for (double c : v.total_costs) ss += (c - m) * (c - m);
  EXPECT_NEAR(v.mean_cost, m, 1e-12);
  EXPECT_NEAR(v.std_err, std::sqrt(ss / 49.0) / std::sqrt(50.0), 1e-12);
  EXPECT_GT(v.std_err, 0.0);
}

TEST(Quantile, NearestRank) {
  const std::vector<std::int64_t> s{5, 1, 4, 2, 3};
  EXPECT_EQ(quantile(s, 0.0), 1.0);
  EXPECT_EQ(quantile(s, 0.5), 3.0);
  EXPECT_EQ(quantile(s, 0.95), 5.0);
  EXPECT_EQ(quantile(s, 1.0), 5.0);
  EXPECT_THROW(quantile({}, 0.5), PreconditionError);
}
