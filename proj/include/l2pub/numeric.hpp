#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace l2pub {

// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// 1 - gamma^n without cancellation for gamma close to 1.
inline double one_minus_pow(double gamma, double n) {
  return -std::expm1(n * std::log1p(gamma - 1.0));
}

// Shortest decimal string that parses back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace l2pub
