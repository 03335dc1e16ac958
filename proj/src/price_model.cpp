#include "l2pub/price_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "l2pub/error.hpp"
#include "l2pub/numeric.hpp"

namespace l2pub {

namespace {

void require_positive_price(double p, const char* what) {
  if (!(p > 0.0) || !std::isfinite(p)) throw PreconditionError(std::string(what) + " must be finite and > 0");
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

PriceProcess PriceProcess::constant(double p0) {
  require_positive_price(p0, "constant price");
  return PriceProcess(ConstantPrice{p0});
}

PriceProcess PriceProcess::lognormal(double p0, double mu, double sigma) {
  require_positive_price(p0, "initial price");
  if (!std::isfinite(mu)) throw PreconditionError("log-normal drift must be finite");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw PreconditionError("log-normal sigma must be finite and >= 0");
  return PriceProcess(LogNormalWalk{p0, mu, sigma});
}

PriceProcess PriceProcess::trace(std::vector<double> prices) {
  if (prices.empty()) throw PreconditionError("historical trace must not be empty");
  for (double p : prices) require_positive_price(p, "trace price");
  return PriceProcess(HistoricalTrace{std::move(prices)});
}

double PriceProcess::initial_price() const {
  return std::visit(
      [](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, HistoricalTrace>) {
          return p.prices.front();
        } else {
          return p.p0;
        }
      },
      v_);
}

std::optional<double> next_price(const PriceProcess& process, double current, std::int64_t step, Rng& rng) {
  return std::visit(
      [&](const auto& p) -> std::optional<double> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ConstantPrice>) {
          return current;
        } else if constexpr (std::is_same_v<T, LogNormalWalk>) {
          if (p.sigma == 0.0) return current * std::exp(p.mu);
          return current * std::exp(rng.normal(p.mu, p.sigma));
        } else {
          if (step < 0 || static_cast<std::size_t>(step) + 1 >= p.prices.size()) return std::nullopt;
          return p.prices[static_cast<std::size_t>(step) + 1];
        }
      },
      process.variant());
}

double expected_n_step_factor(double mu, double sigma, std::int64_t n) {
  if (n < 0) throw PreconditionError("expected_n_step_factor needs n >= 0");
  return std::exp(static_cast<double>(n) * (mu + 0.5 * sigma * sigma));
}

PriceClassification classify(const PriceProcess& process) {
  return std::visit(
      [](const auto& p) -> PriceClassification {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ConstantPrice>) {
          return {true, true, "constant price: E[R(P)] = P"};
        } else if constexpr (std::is_same_v<T, LogNormalWalk>) {
          const double drift = p.mu + 0.5 * p.sigma * p.sigma;
          const bool martingale = std::abs(drift) <= kMartingaleTolerance;
          return {martingale || drift <= 0.0, martingale,
                  "log-factor drift mu + sigma^2/2 = " + format_double(drift)};
        } else {
          return {false, false, "not classifiable: a historical trace is a single sample path"};
        }
      },
      process.variant());
}

HistoricalTrace ingest_trace(std::span<const FeeRow> rows, std::int64_t resample_seconds) {
  if (resample_seconds <= 0) throw PreconditionError("resample interval must be > 0 seconds");
  if (rows.empty()) throw IngestError(0, "empty input");
  HistoricalTrace out;
  std::int64_t window = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (!(r.base_fee > 0.0) || !std::isfinite(r.base_fee)) throw IngestError(i + 1, "base fee must be > 0");
    if (i > 0 && r.timestamp < rows[i - 1].timestamp) throw IngestError(i + 1, "timestamp decreases");
    const std::int64_t w = floor_div(r.timestamp, resample_seconds);
    if (i == 0 || w != window) {
      out.prices.push_back(r.base_fee);
      window = w;
    } else {
      out.prices.back() = r.base_fee;
    }
  }
  return out;
}

std::vector<FeeRow> read_fee_csv(const std::string& path, double wei_scale) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open fee trace " + path);
  std::string line;
  if (!std::getline(in, line)) throw IngestError(0, "empty input: missing header");
  if (trim(line) != "timestamp_unix_s,base_fee_wei") {
    throw IngestError(0, "expected header 'timestamp_unix_s,base_fee_wei'");
  }
  std::vector<FeeRow> rows;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    const auto text = trim(line);
    if (text.empty()) continue;
    ++row;
    const auto comma = text.find(',');
    if (comma == std::string_view::npos) throw IngestError(row, "expected two columns");
    const auto ts_text = trim(text.substr(0, comma));
    const auto fee_text = trim(text.substr(comma + 1));
    FeeRow r;
    auto ts = std::from_chars(ts_text.data(), ts_text.data() + ts_text.size(), r.timestamp);
    if (ts.ec != std::errc{} || ts.ptr != ts_text.data() + ts_text.size()) {
      throw IngestError(row, "malformed timestamp");
    }
    double fee = 0.0;
    auto fr = std::from_chars(fee_text.data(), fee_text.data() + fee_text.size(), fee);
    if (fr.ec != std::errc{} || fr.ptr != fee_text.data() + fee_text.size()) {
      throw IngestError(row, "malformed base fee");
    }
    r.base_fee = fee * wei_scale;
    rows.push_back(r);
  }
  return rows;
}

FactorStats fit_factors(const HistoricalTrace& trace, std::size_t bins) {
  if (trace.prices.size() < 2) throw PreconditionError("fitting needs a trace of length >= 2");
  if (bins == 0) throw PreconditionError("histogram needs at least one bin");
  FactorStats st;
  st.factors.reserve(trace.prices.size() - 1);
  CompensatedSum log_sum;
  for (std::size_t t = 0; t + 1 < trace.prices.size(); ++t) {
    const double f = trace.prices[t + 1] / trace.prices[t];
    st.factors.push_back(f);
    log_sum += std::log(f);
  }
  const double n = static_cast<double>(st.factors.size());
  st.mu_hat = log_sum.value() / n;
  if (st.factors.size() > 1) {
    CompensatedSum sq;
    for (double f : st.factors) {
      const double d = std::log(f) - st.mu_hat;
      sq += d * d;
    }
    st.sigma_hat = std::sqrt(sq.value() / (n - 1.0));
  }

  const auto [lo_it, hi_it] = std::minmax_element(st.factors.begin(), st.factors.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  st.histogram.lo = lo;
  st.histogram.counts.assign(hi > lo ? bins : 1, 0);
  st.histogram.bin_width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 0.0;
  for (double f : st.factors) {
    std::size_t b = 0;
    if (hi > lo) b = std::min(bins - 1, static_cast<std::size_t>((f - lo) / st.histogram.bin_width));
    ++st.histogram.counts[b];
  }
  return st;
}

}  // namespace l2pub
