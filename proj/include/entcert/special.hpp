#pragma once

#include <cmath>

namespace entcert {

/// Inverse of std::erf on (-1, 1). Newton iteration with a bisection
/// safeguard; accurate to ~1e-15 relative over the usable range.
double erf_inv(double y);

/// ln(n!) for n >= 0, table-backed.
double log_factorial(int n);

/// ln(n!) in extended precision, for alternating-sum workloads where the
/// log -> exp round trip would otherwise dominate the error budget.
long double log_factorial_l(int n);

/// Double factorial n!! with (-1)!! = 0!! = 1.
double double_factorial(int n);

/// Kahan-compensated accumulator in extended precision for alternating
/// sums. Tracks the magnitude sum so callers can bound the
/// cancellation-induced absolute error.
class CompensatedSum {
 public:
  static constexpr double kUlp = 5.421010862427522e-20;  // 2^-64

  void add(long double term) {
    long double y = term - carry_;
    long double t = sum_ + y;
    carry_ = (t - sum_) - y;
    sum_ = t;
    magnitude_ += fabsl(term);
  }
  double value() const { return double(sum_); }
  long double value_l() const { return sum_; }
  double magnitude() const { return double(magnitude_); }
  /// Upper estimate of the absolute rounding error of the accumulated sum.
  double abs_error_estimate() const { return double(magnitude_) * kUlp; }

 private:
  long double sum_ = 0.0L;
  long double carry_ = 0.0L;
  long double magnitude_ = 0.0L;
};

}  // namespace entcert
