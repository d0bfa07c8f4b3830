#include <doctest.h>

#include <cmath>

#include "entcert/fock.hpp"
#include "support/oracles.hpp"

using namespace entcert;

TEST_CASE("hermite recurrence reproduces known values and parity") {
  CHECK(hermite(0, 1.7) == 1.0);
  CHECK(hermite(1, 1.7) == doctest::Approx(3.4).epsilon(1e-15));
  CHECK(hermite(3, 1.0) == doctest::Approx(-4.0).epsilon(1e-14));
  CHECK(hermite(4, 0.5) == doctest::Approx(16 * 0.0625 - 48 * 0.25 + 12).epsilon(1e-13));
  for (int k = 0; k <= 12; ++k) {
    double x = 0.83;
    double sign = (k % 2 == 0) ? 1.0 : -1.0;
    CHECK(hermite(k, -x) == doctest::Approx(sign * hermite(k, x)).epsilon(1e-12));
  }
}

TEST_CASE("lambda integral closed forms against quadrature") {
  CHECK(lambda_integral(0, -INFINITY, INFINITY, 2.3) ==
        doctest::Approx(std::sqrt(M_PI * 2.3)).epsilon(1e-14));
  CHECK(lambda_integral(1, -INFINITY, INFINITY, 1.7) == doctest::Approx(0.0));
  // n=4 over (0, 1.5), gamma=1: frozen from the adaptive oracle.
  double direct = lambda_integral(4, 0.0, 1.5, 1.0);
  double expected = oracles::adaptive_simpson(
      [](double x) { return std::exp(-x * x) * x * x * x * x; }, 0.0, 1.5,
      1e-14);
  CHECK(direct == doctest::Approx(expected).epsilon(1e-10));
  CHECK(direct == doctest::Approx(0.34570597613843235).epsilon(1e-10));

  for (int n = 0; n <= 9; ++n) {
    double a = -0.7, b = 2.1, g = 1.9;
    double got = lambda_integral(n, a, b, g);
    double want = oracles::adaptive_simpson(
        [&](double x) { return std::exp(-x * x / g) * std::pow(x, n); }, a, b,
        1e-14);
    CHECK(got == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("lambda recursion equals the closed form up to n = 20") {
  for (double a : {-1.4, 0.3}) {
    for (double b : {0.9, 2.7, double(INFINITY)}) {
      std::vector<double> table = lambda_integral_table(20, a, b, 1.3);
      for (int n = 0; n <= 20; ++n) {
        double direct = lambda_integral(n, a, b, 1.3);
        double scale = std::max(1.0, std::abs(direct));
        CHECK(std::abs(table[n] - direct) / scale < 1e-12);
      }
    }
  }
}

TEST_CASE("scalar cutoff reduces to the outcome probability") {
  NoiseModel noise(0.2, 0.0);
  BinningScheme bins = BinningScheme::fixed_width(2, 1.4);
  for (int k = 0; k < 4; ++k) {
    FockOperator op = povm_element(k, noise, bins, 0);
    CHECK(op.dim() == 1);
    CHECK(op.matrix(0, 0) ==
          doctest::Approx(outcome_probability(0.0, noise, bins, k)).epsilon(1e-12));
  }
}

TEST_CASE("povm elements are symmetric, PSD and complete") {
  BinningScheme bins = BinningScheme::fixed_width(2, 1.5);
  for (double sigma_n : {0.0, 0.1, 0.45}) {
    NoiseModel noise(sigma_n, 0.0);
    int cutoff = 14;
    std::vector<FockOperator> povm = povm_elements(noise, bins, cutoff);
    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(cutoff + 1, cutoff + 1);
    for (const FockOperator& op : povm) {
      CHECK(op.symmetry_error() < 1e-12);
      CHECK(op.min_eigenvalue() > -1e-9);
      total += op.matrix;
    }
    CHECK((total - Eigen::MatrixXd::Identity(cutoff + 1, cutoff + 1))
              .cwiseAbs()
              .maxCoeff() < 1e-10);
  }
}

TEST_CASE("matrix elements match the nested quadrature oracle") {
  NoiseModel noise(0.1, 0.0);
  BinningScheme bins = BinningScheme::fixed_width(2, 1.5);
  int k = 2;
  FockOperator op = povm_element(k, noise, bins, 4);

  auto phi = [](int n, double x) {
    return hermite(n, x) * std::exp(-0.5 * x * x) /
           (std::pow(M_PI, 0.25) * std::sqrt(std::exp2(double(n)) *
                                             std::tgamma(double(n) + 1.0)));
  };
  double vn = noise.sigma_n() * noise.sigma_n();
  for (int mu = 0; mu <= 4; ++mu) {
    for (int nu = mu; nu <= 4; ++nu) {
      auto outer = [&](double x) {
        auto inner = [&](double y) {
          return phi(mu, y) * phi(nu, y) * oracles::gauss_pdf(y, x, vn);
        };
        // The noise kernel is narrow; track its support around x.
        double w = 9.0 * noise.sigma_n();
        return oracles::adaptive_simpson(inner, x - w, x + w, 1e-13);
      };
      double want = oracles::integrate_clamped(outer, bins.lower_edge(k),
                                               bins.upper_edge(k), 9.0, 1e-11);
      CHECK(op.matrix(mu, nu) == doctest::Approx(want).epsilon(1e-8));
    }
  }
}

TEST_CASE("coherent expectation agrees with the analytic probability") {
  NoiseModel noise(0.25, 0.0);
  BinningScheme bins = BinningScheme::fixed_width(3, 1.8);
  int cutoff = 30;
  std::vector<FockOperator> povm = povm_elements(noise, bins, cutoff);
  for (double alpha : {-1.0, -0.3, 0.0, 0.5, 1.0}) {
    Eigen::VectorXd c = coherent_fock_coefficients(alpha, cutoff);
    for (int k = 0; k < bins.outcomes(); ++k) {
      double want = outcome_probability(alpha, noise, bins, k);
      double got = c.dot(povm[k].matrix * c);
      CHECK(got == doctest::Approx(want).epsilon(1e-6));
    }
  }
}

TEST_CASE("noiseless construction is the small-noise limit") {
  BinningScheme bins = BinningScheme::fixed_width(2, 1.5);
  int cutoff = 10;
  for (int k = 0; k < 4; ++k) {
    FockOperator limit = povm_element(k, NoiseModel(1e-6, 0.0), bins, cutoff);
    FockOperator exact = povm_element(k, NoiseModel(0.0, 0.0), bins, cutoff);
    CHECK((limit.matrix - exact.matrix).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("operator-level gamma map mirrors the probability map") {
  NoiseModel noise(0.2, 0.0);
  BinningScheme bins = BinningScheme::fixed_width(2, 1.2);
  std::vector<FockOperator> povm = povm_elements(noise, bins, 8);

  std::vector<FockOperator> id0 = gamma_map_operators(povm, 0.0);
  for (std::size_t k = 0; k < povm.size(); ++k)
    CHECK((id0[k].matrix - povm[k].matrix).cwiseAbs().maxCoeff() == 0.0);

  std::vector<FockOperator> full = gamma_map_operators(povm, 1.0);
  CHECK((full[0].matrix - (povm[0].matrix + povm[1].matrix))
            .cwiseAbs()
            .maxCoeff() < 1e-15);
  CHECK(full[1].matrix.cwiseAbs().maxCoeff() == 0.0);

  double gamma = 0.35;
  std::vector<FockOperator> mapped = gamma_map_operators(povm, gamma);
  Eigen::MatrixXd total_in = Eigen::MatrixXd::Zero(9, 9);
  Eigen::MatrixXd total_out = total_in;
  for (std::size_t k = 0; k < povm.size(); ++k) {
    total_in += povm[k].matrix;
    total_out += mapped[k].matrix;
    Eigen::MatrixXd want =
        (k % 2 == 0) ? Eigen::MatrixXd(povm[k].matrix + gamma * povm[k + 1].matrix)
                     : Eigen::MatrixXd((1.0 - gamma) * povm[k].matrix);
    CHECK((mapped[k].matrix - want).cwiseAbs().maxCoeff() < 1e-14);
  }
  CHECK((total_in - total_out).cwiseAbs().maxCoeff() < 1e-13);

  std::vector<FockOperator> odd(povm.begin(), povm.begin() + 3);
  CHECK_THROWS_AS(gamma_map_operators(odd, 0.2), std::invalid_argument);
}

TEST_CASE("cutoff cap and precision guard") {
  NoiseModel noise(0.1, 0.0);
  BinningScheme bins = BinningScheme::fixed_width(2, 1.5);
  CHECK_THROWS_AS(povm_element(0, noise, bins, 61), std::invalid_argument);
}
