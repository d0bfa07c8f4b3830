#include "entcert/fock.hpp"

#include <cmath>
#include <limits>

#include "entcert/special.hpp"

namespace entcert {

namespace {

constexpr double kMaxCutoff = 60;
constexpr double kCancellationLimit = 1e-6;

// The monomial expansions below route unit-scale matrix elements through
// hugely cancelling terms (the high moments of tail bins dominate), so the
// whole chain runs in extended precision and every sum carries an error
// estimate.

long double boundary_term_l(long double x, int power, long double g) {
  if (std::isinf(double(x))) return 0.0L;
  if (power == 0) return expl(-x * x / g);
  return expl(-x * x / g) * powl(x, power);
}

long double erf_ext_l(long double u) {
  if (std::isinf(double(u))) return u > 0 ? 1.0L : -1.0L;
  return erfl(u);
}

void check_cancellation(const CompensatedSum& s, const char* where) {
  // Rounding of the largest cancelling terms bounds the absolute error;
  // POVM entries live on a unit scale, so compare against max(1, |value|).
  if (s.abs_error_estimate() >
      kCancellationLimit * std::max(1.0, std::abs(s.value())))
    throw PrecisionLossError(std::string(where) +
                             ": alternating-sum cancellation exceeds 1e-6");
}

std::vector<long double> lambda_table_l(int n_max, double a, double b,
                                        double gamma_param) {
  long double g = gamma_param;
  std::vector<long double> lam(n_max + 1);
  long double sg = sqrtl(g);
  lam[0] = 0.5L * sqrtl((long double)M_PI * g) *
           (erf_ext_l(b / sg) - erf_ext_l(a / sg));
  if (n_max >= 1)
    lam[1] = 0.5L * g * (boundary_term_l(a, 0, g) - boundary_term_l(b, 0, g));
  for (int n = 2; n <= n_max; ++n) {
    long double bnd =
        boundary_term_l(b, n - 1, g) - boundary_term_l(a, n - 1, g);
    lam[n] = 0.5L * g * ((long double)(n - 1) * lam[n - 2] - bnd);
  }
  return lam;
}

/// chi-tilde_q(k, sigma_n^2) for q = 0..q_max, built from the Lambda table.
std::vector<long double> chi_tilde_table(int q_max, double a, double b,
                                         const NoiseModel& noise) {
  long double st2 = noise.sigma_t2();
  long double st = sqrtl(st2);
  long double ln_sn = logl((long double)noise.sigma_n());
  long double ln_st = logl(st);
  long double ln2 = 0.6931471805599453094L;
  std::vector<long double> lam =
      lambda_table_l(q_max, a, b, 2.0 * noise.sigma_t2());
  std::vector<long double> chi(q_max + 1);
  long double prefactor = 1.0L / (sqrtl(2.0L * (long double)M_PI) * st);
  for (int q = 0; q <= q_max; ++q) {
    CompensatedSum sum;
    for (int v = 0; 2 * v <= q; ++v) {
      long double l = lam[q - 2 * v];
      if (l == 0.0L) continue;
      long double ln_mag = log_factorial_l(q) - log_factorial_l(v) -
                           log_factorial_l(q - 2 * v) + 2.0L * v * ln_sn -
                           (long double)(2 * q - 2 * v) * ln_st -
                           (long double)q * ln2 + logl(fabsl(l));
      sum.add(copysignl(expl(ln_mag), l));
    }
    check_cancellation(sum, "chi_tilde");
    chi[q] = prefactor * sum.value_l();
  }
  return chi;
}

/// Shared double-sum for matrix elements; `weights[q]` multiplies the
/// q = mu + nu - 2m - 2n contribution.
Eigen::MatrixXd assemble_matrix(int cutoff,
                                const std::vector<long double>& weights) {
  int dim = cutoff + 1;
  long double ln2 = 0.6931471805599453094L;
  Eigen::MatrixXd out(dim, dim);
  for (int mu = 0; mu < dim; ++mu) {
    for (int nu = mu; nu < dim; ++nu) {
      long double ln_front =
          0.5L * (log_factorial_l(mu) + log_factorial_l(nu)) -
          0.5L * (long double)(mu + nu) * ln2;
      CompensatedSum sum;
      for (int m = 0; 2 * m <= mu; ++m) {
        for (int n = 0; 2 * n <= nu; ++n) {
          int q = mu + nu - 2 * m - 2 * n;
          long double w = weights[q];
          if (w == 0.0L) continue;
          long double ln_mag = ln_front + (long double)q * ln2 -
                               log_factorial_l(m) - log_factorial_l(n) -
                               log_factorial_l(mu - 2 * m) -
                               log_factorial_l(nu - 2 * n) + logl(fabsl(w));
          long double sign =
              ((m + n) % 2 == 0 ? 1.0L : -1.0L) * (w > 0 ? 1.0L : -1.0L);
          sum.add(sign * expl(ln_mag));
        }
      }
      check_cancellation(sum, "povm_element");
      out(mu, nu) = sum.value();
      out(nu, mu) = sum.value();
    }
  }
  return out;
}

}  // namespace

double hermite(int k, double x) {
  if (k < 0) throw std::invalid_argument("hermite: negative degree");
  double hm1 = 1.0;  // H_0
  if (k == 0) return hm1;
  double h = 2.0 * x;  // H_1
  for (int j = 1; j < k; ++j) {
    double next = 2.0 * x * h - 2.0 * double(j) * hm1;
    hm1 = h;
    h = next;
  }
  return h;
}

double lambda_integral(int n, double a, double b, double gamma_param) {
  if (n < 0) throw std::invalid_argument("lambda_integral: negative power");
  if (!(gamma_param > 0.0))
    throw std::invalid_argument("lambda_integral: gamma_param must be > 0");
  if (!(a < b)) throw std::invalid_argument("lambda_integral: need a < b");
  long double g = gamma_param;
  auto eval_at = [&](long double x) -> long double {
    if (n % 2 == 1) {
      int m = (n - 1) / 2;
      CompensatedSum s;
      for (int i = 0; i <= m; ++i) {
        long double coef =
            expl(log_factorial_l(m) - log_factorial_l(m - i)) * powl(g, i + 1);
        s.add(-0.5L * coef * boundary_term_l(x, 2 * m - 2 * i, g));
      }
      return s.value_l();
    }
    int m = n / 2;
    CompensatedSum s;
    for (int i = 1; i <= m; ++i) {
      long double coef = (long double)double_factorial(2 * m - 1) /
                         (long double)double_factorial(2 * m - (2 * i - 1)) /
                         powl(2.0L, i) * powl(g, i);
      s.add(-coef * boundary_term_l(x, 2 * m - (2 * i - 1), g));
    }
    s.add((long double)double_factorial(2 * m - 1) / powl(2.0L, m + 1) *
          sqrtl((long double)M_PI) * sqrtl(powl(g, 2 * m + 1)) *
          erf_ext_l(x / sqrtl(g)));
    return s.value_l();
  };
  return double(eval_at(b) - eval_at(a));
}

std::vector<double> lambda_integral_table(int n_max, double a, double b,
                                          double gamma_param) {
  if (n_max < 0) throw std::invalid_argument("lambda_integral_table: n_max");
  if (!(gamma_param > 0.0))
    throw std::invalid_argument("lambda_integral_table: gamma_param");
  if (!(a < b)) throw std::invalid_argument("lambda_integral_table: a < b");
  std::vector<long double> lam = lambda_table_l(n_max, a, b, gamma_param);
  return std::vector<double>(lam.begin(), lam.end());
}

FockOperator povm_element(int k, const NoiseModel& noise,
                          const BinningScheme& bins, int cutoff) {
  if (cutoff < 0 || cutoff > kMaxCutoff)
    throw std::invalid_argument(
        "povm_element: cutoff must lie in [0, 60] (double precision bound)");
  if (k < 0 || k >= bins.outcomes())
    throw std::out_of_range("povm_element: outcome index");
  double a = bins.lower_edge(k);
  double b = bins.upper_edge(k);
  int q_max = 2 * cutoff;
  std::vector<long double> weights;
  if (noise.sigma_n() == 0.0) {
    weights = lambda_table_l(q_max, a, b, 1.0);
    long double norm = sqrtl((long double)M_PI);
    for (long double& w : weights) w /= norm;
  } else {
    weights = chi_tilde_table(q_max, a, b, noise);
  }
  return FockOperator{assemble_matrix(cutoff, weights)};
}

std::vector<FockOperator> povm_elements(const NoiseModel& noise,
                                        const BinningScheme& bins,
                                        int cutoff) {
  std::vector<FockOperator> out;
  out.reserve(bins.outcomes());
  for (int k = 0; k < bins.outcomes(); ++k)
    out.push_back(povm_element(k, noise, bins, cutoff));
  return out;
}

std::vector<FockOperator> gamma_map_operators(
    const std::vector<FockOperator>& elements, double gamma) {
  if (elements.size() % 2 != 0)
    throw std::invalid_argument("gamma_map_operators: element count must be even");
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("gamma_map_operators: gamma must lie in [0, 1]");
  std::vector<FockOperator> out(elements.size());
  for (std::size_t k = 0; k < elements.size(); k += 2) {
    out[k].matrix = elements[k].matrix + gamma * elements[k + 1].matrix;
    out[k + 1].matrix = (1.0 - gamma) * elements[k + 1].matrix;
  }
  return out;
}

Eigen::VectorXd coherent_fock_coefficients(double alpha, int cutoff) {
  if (!std::isfinite(alpha))
    throw std::invalid_argument("coherent_fock_coefficients: non-finite alpha");
  Eigen::VectorXd c(cutoff + 1);
  if (alpha == 0.0) {
    c.setZero();
    c[0] = 1.0;
    return c;
  }
  long double ln_abs_alpha = logl(fabsl((long double)alpha));
  for (int n = 0; n <= cutoff; ++n) {
    long double ln_mag = -0.5L * (long double)alpha * alpha +
                         (long double)n * ln_abs_alpha -
                         0.5L * log_factorial_l(n);
    double sign = (alpha < 0 && n % 2 == 1) ? -1.0 : 1.0;
    c[n] = sign * double(expl(ln_mag));
  }
  return c;
}

}  // namespace entcert
