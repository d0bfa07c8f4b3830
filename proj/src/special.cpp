#include "entcert/special.hpp"

#include <array>
#include <limits>
#include <stdexcept>

namespace entcert {

namespace {

constexpr double kTwoOverSqrtPi = 1.1283791670955126;

double erf_inv_guess(double y) {
  // Winitzki's approximation, good to ~2e-3 everywhere; Newton does the rest.
  constexpr double a = 0.147;
  double ln1my2 = std::log1p(-y * y);
  double t1 = 2.0 / (M_PI * a) + 0.5 * ln1my2;
  double x = std::sqrt(std::sqrt(t1 * t1 - ln1my2 / a) - t1);
  return y < 0 ? -x : x;
}

}  // namespace

double erf_inv(double y) {
  if (!(y > -1.0 && y < 1.0)) {
    if (y == 1.0) return std::numeric_limits<double>::infinity();
    if (y == -1.0) return -std::numeric_limits<double>::infinity();
    throw std::domain_error("erf_inv: argument outside [-1, 1]");
  }
  if (y == 0.0) return 0.0;

  double x = erf_inv_guess(y);
  double lo = 0.0, hi = 7.0;  // erf(7) == 1 in double precision
  if (y < 0) std::swap(lo, hi), lo = -7.0, hi = 0.0;
  for (int it = 0; it < 60; ++it) {
    double f = std::erf(x) - y;
    if (f > 0)
      hi = x;
    else if (f < 0)
      lo = x;
    else
      break;
    double step = f / (kTwoOverSqrtPi * std::exp(-x * x));
    double next = x - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == x) break;
    x = next;
    if (std::abs(step) < 1e-17 * std::max(1.0, std::abs(x))) break;
  }
  return x;
}

long double log_factorial_l(int n) {
  if (n < 0) throw std::domain_error("log_factorial: negative argument");
  static const std::array<long double, 257> table = [] {
    std::array<long double, 257> t{};
    t[0] = 0.0L;
    for (int k = 1; k < 257; ++k) t[k] = t[k - 1] + logl((long double)k);
    return t;
  }();
  if (n < int(table.size())) return table[n];
  return lgammal((long double)n + 1.0L);
}

double log_factorial(int n) { return double(log_factorial_l(n)); }

double double_factorial(int n) {
  if (n <= 0) return 1.0;
  double p = 1.0;
  for (int k = n; k > 1; k -= 2) p *= double(k);
  return p;
}

}  // namespace entcert
