#pragma once

// Gas-price fluctuation models and fee-trace ingestion.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "l2pub/rng.hpp"

namespace l2pub {

struct ConstantPrice {
  double p0 = 1.0;
};

// P_{t+1} = P_t * exp(Z), Z ~ Normal(mu, sigma^2).
struct LogNormalWalk {
  double p0 = 1.0;
  double mu = 0.0;
  double sigma = 0.0;
};

struct HistoricalTrace {
  std::vector<double> prices;
};

class PriceProcess {
 public:
  using Variant = std::variant<ConstantPrice, LogNormalWalk, HistoricalTrace>;

  static PriceProcess constant(double p0);
  static PriceProcess lognormal(double p0, double mu, double sigma);
  static PriceProcess trace(std::vector<double> prices);

  double initial_price() const;
  const Variant& variant() const noexcept { return v_; }

 private:
  explicit PriceProcess(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

// Price at step + 1 given the price at `step`. Returns nullopt once a
// historical trace is exhausted; the other variants never end.
std::optional<double> next_price(const PriceProcess& process, double current, std::int64_t step, Rng& rng);

// E[P_{t+n} / P_t] for the log-normal walk: exp(n * (mu + sigma^2 / 2)).
double expected_n_step_factor(double mu, double sigma, std::int64_t n);

struct PriceClassification {
  bool non_expansive = false;
  bool martingale = false;
  std::string note;
};

// Tolerance on mu + sigma^2/2 when deciding the martingale case.
inline constexpr double kMartingaleTolerance = 1e-12;

PriceClassification classify(const PriceProcess& process);

struct FeeRow {
  std::int64_t timestamp = 0;  // unix seconds
  double base_fee = 0.0;
};

// Buckets rows into windows [k*w, (k+1)*w) of unix time, keeps the last
// observation of each window and skips empty windows. Rows must be non-empty,
// time-ordered and strictly positive; IngestError names the first bad row.
HistoricalTrace ingest_trace(std::span<const FeeRow> rows, std::int64_t resample_seconds);

// Reads `timestamp_unix_s,base_fee_wei` CSV (header required), scaling fees
// by `wei_scale`. Throws IoError if the file cannot be opened.
std::vector<FeeRow> read_fee_csv(const std::string& path, double wei_scale = 1e-9);

struct Histogram {
  double lo = 0.0;
  double bin_width = 0.0;
  std::vector<std::size_t> counts;
};

struct FactorStats {
  std::vector<double> factors;  // P_{t+1} / P_t
  double mu_hat = 0.0;          // mean of log-factors
  double sigma_hat = 0.0;       // unbiased std of log-factors; 0 for a single factor
  Histogram histogram;          // of the factors themselves
};

FactorStats fit_factors(const HistoricalTrace& trace, std::size_t bins = 50);

}  // namespace l2pub
