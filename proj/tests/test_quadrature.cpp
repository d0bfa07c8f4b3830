#include <doctest.h>

#include <cmath>
#include <random>

#include "entcert/quadrature.hpp"
#include "entcert/special.hpp"
#include "support/oracles.hpp"

using namespace entcert;

TEST_CASE("erf_inv inverts erf to 1e-12") {
  for (double y = -0.999; y < 0.9995; y += 0.007) {
    double x = erf_inv(y);
    CHECK(std::abs(std::erf(x) - y) < 1e-14);
  }
  CHECK(erf_inv(0.0) == 0.0);
  CHECK(std::abs(std::erf(erf_inv(1.0 - 1e-12)) - (1.0 - 1e-12)) < 1e-14);
  CHECK_THROWS_AS(erf_inv(1.5), std::domain_error);
}

TEST_CASE("fixed-width scheme matches the interval definition") {
  BinningScheme bins = BinningScheme::fixed_width(2, 1.5);
  CHECK(bins.outcomes() == 4);
  CHECK(std::isinf(bins.lower_edge(0)));
  CHECK(bins.upper_edge(0) == -1.5);
  CHECK(bins.lower_edge(3) == 1.5);
  double delta = 2.0 * 1.5 / 2.0;
  CHECK(bins.upper_edge(1) == doctest::Approx(-1.5 + delta).epsilon(1e-15));
  // Interior bin centers a_k = -R + (2k-1) delta/2.
  for (int k = 1; k <= 2; ++k) {
    double center = 0.5 * (bins.lower_edge(k) + bins.upper_edge(k));
    CHECK(center ==
          doctest::Approx(-1.5 + (2 * k - 1) * delta / 2.0).epsilon(1e-12));
  }
}

TEST_CASE("single-bit scheme degenerates to an edge at zero") {
  BinningScheme bins = BinningScheme::fixed_width(1, 2.0);
  CHECK(bins.outcomes() == 2);
  CHECK(bins.upper_edge(0) == 0.0);
  NoiseModel noiseless(0.0, 0.0);
  CHECK(outcome_probability(0.0, noiseless, bins, 0) == doctest::Approx(0.5));
  CHECK(outcome_probability(0.0, noiseless, bins, 1) == doctest::Approx(0.5));
}

TEST_CASE("bin_index uses half-open intervals with edge ties going up") {
  BinningScheme bins = BinningScheme::fixed_width(2, 1.0);
  CHECK(bins.bin_index(-1.0) == 1);  // exactly on an edge -> upper bin
  CHECK(bins.bin_index(0.0) == 2);
  CHECK(bins.bin_index(1.0) == 3);
  CHECK(bins.bin_index(-1.0000001) == 0);
  CHECK(bins.bin_index(-5.0) == 0);
  CHECK(bins.bin_index(5.0) == 3);
}

TEST_CASE("outcome probabilities match a quadrature oracle") {
  // Frozen from the midpoint oracle below (1e6 panels per bin).
  NoiseModel noise(0.1, 0.0);
  BinningScheme bins = BinningScheme::fixed_width(2, 1.5);
  double alpha = 0.5;
  double var = noise.sigma_t2();
  double mean = std::sqrt(2.0) * alpha;
  for (int k = 0; k < 4; ++k) {
    double a = std::max(bins.lower_edge(k), mean - 9.0);
    double b = std::min(bins.upper_edge(k), mean + 9.0);
    double expected = oracles::midpoint(
        [&](double x) { return oracles::gauss_pdf(x, mean, var); }, a, b,
        1000000);
    CHECK(outcome_probability(alpha, noise, bins, k) ==
          doctest::Approx(expected).epsilon(1e-8));
  }
}

TEST_CASE("analytic probabilities equal the two-stage noise convolution") {
  // Convolution of |<x|alpha>|^2 with the Gaussian noise kernel, then bin
  // integration; checks the single-Gaussian reduction used analytically.
  NoiseModel noise(0.35, 0.0);
  BinningScheme bins = BinningScheme::fixed_width(2, 1.2);
  double alpha = -0.4;
  double mean = std::sqrt(2.0) * alpha;
  auto outcome_by_convolution = [&](int k) {
    auto inner = [&](double x) {
      auto f = [&](double y) {
        return oracles::gauss_pdf(y, mean, 0.5) *
               oracles::gauss_pdf(x, y, noise.sigma_n() * noise.sigma_n());
      };
      // Integrate over the support of the narrow noise kernel around x.
      double w = 9.0 * noise.sigma_n();
      return oracles::adaptive_simpson(f, x - w, x + w, 1e-13);
    };
    return oracles::integrate_clamped(inner, bins.lower_edge(k),
                                      bins.upper_edge(k), 10.0, 1e-11);
  };
  for (int k = 0; k < 4; ++k)
    CHECK(outcome_probability(alpha, noise, bins, k) ==
          doctest::Approx(outcome_by_convolution(k)).epsilon(1e-8));
}

TEST_CASE("distributions normalize and are symmetric at zero amplitude") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> amp(-10.0, 10.0);
  NoiseModel noise(0.2, 0.0);
  for (int trial = 0; trial < 25; ++trial) {
    BinningScheme bins = BinningScheme::fixed_width(1 + trial % 4, 0.3 + 0.2 * (trial % 9));
    Eigen::VectorXd p = outcome_probabilities(amp(rng), noise, bins);
    CHECK(std::abs(p.sum() - 1.0) < 1e-12);
    CHECK(p.minCoeff() >= 0.0);
  }
  BinningScheme bins = BinningScheme::fixed_width(3, 1.7);
  Eigen::VectorXd p = outcome_probabilities(0.0, noise, bins);
  for (int k = 0; k < bins.outcomes(); ++k)
    CHECK(p[k] == doctest::Approx(p[bins.outcomes() - 1 - k]).epsilon(1e-13));
}

TEST_CASE("gamma map matches the direct evaluation") {
  Eigen::VectorXd uniform(4);
  uniform << 0.25, 0.25, 0.25, 0.25;
  Eigen::VectorXd mapped = gamma_map(uniform, 0.25);
  CHECK(mapped[0] == doctest::Approx(0.3125).epsilon(1e-15));
  CHECK(mapped[1] == doctest::Approx(0.1875).epsilon(1e-15));
  CHECK(mapped[2] == doctest::Approx(0.3125).epsilon(1e-15));
  CHECK(mapped[3] == doctest::Approx(0.1875).epsilon(1e-15));
}

TEST_CASE("gamma map endpoints and simplex preservation") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    int d = 2 << (trial % 3);
    Eigen::VectorXd p(d);
    for (int k = 0; k < d; ++k) p[k] = u(rng);
    p /= p.sum();
    double gamma = u(rng);
    Eigen::VectorXd q = gamma_map(p, gamma);
    CHECK(std::abs(q.sum() - 1.0) < 1e-12);
    CHECK(q.minCoeff() >= 0.0);
    Eigen::VectorXd q0 = gamma_map(p, 0.0);
    CHECK((q0 - p).cwiseAbs().maxCoeff() == 0.0);
    Eigen::VectorXd q1 = gamma_map(p, 1.0);
    for (int k = 0; k < d; k += 2) {
      CHECK(q1[k] == doctest::Approx(p[k] + p[k + 1]).epsilon(1e-15));
      CHECK(q1[k + 1] == 0.0);
    }
  }
  CHECK_THROWS_AS(gamma_map(Eigen::VectorXd::Ones(3) / 3.0, 0.5),
                  std::invalid_argument);
}

TEST_CASE("model distribution applies the efficiency map") {
  NoiseModel noise(0.15, 0.0);
  BinningScheme bins = BinningScheme::fixed_width(3, 1.5);
  ProbeEnsemble lossy({0.0, 0.4, 0.8}, 0.81);
  ProbeEnsemble scaled({0.0, 0.36, 0.72}, 1.0);
  OutcomeDistribution a = model_distribution(lossy, noise, bins);
  OutcomeDistribution b = model_distribution(scaled, noise, bins);
  CHECK((a.probs - b.probs).cwiseAbs().maxCoeff() < 1e-14);

  // With eta = 1 and gamma = 0 the rows are the raw probabilities.
  NoiseModel plain(0.15, 0.0);
  OutcomeDistribution c = model_distribution(scaled, plain, bins);
  Eigen::VectorXd row = outcome_probabilities(0.36, plain, bins);
  CHECK((c.probs.row(1).transpose() - row).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("equal-probability edges make every bin equiprobable for vacuum") {
  NoiseModel noise(0.3, 0.0);
  BinningScheme bins = equal_probability_edges(8, noise.sigma_t());
  for (int k = 0; k < 8; ++k)
    CHECK(outcome_probability(0.0, noise, bins, k) ==
          doctest::Approx(0.125).epsilon(1e-10));

  // d = 4 with sigma_t^2 = 1/2: interior edges -x*, 0, x* with
  // x* = sqrt(2) sigma_t erfinv(1/2).
  BinningScheme quarter = equal_probability_edges(4, std::sqrt(0.5));
  double xstar = std::sqrt(2.0) * std::sqrt(0.5) * erf_inv(0.5);
  CHECK(quarter.upper_edge(0) == doctest::Approx(-xstar).epsilon(1e-12));
  CHECK(quarter.upper_edge(1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(quarter.upper_edge(2) == doctest::Approx(xstar).epsilon(1e-12));
  NoiseModel consistent(0.0, 0.0);
  for (int k = 0; k < 4; ++k)
    CHECK(outcome_probability(0.0, consistent, quarter, k) ==
          doctest::Approx(0.25).epsilon(1e-10));

  CHECK(equal_probability_edges(2, 1.0).upper_edge(0) == 0.0);
  CHECK_THROWS_AS(equal_probability_edges(6, 1.0), std::invalid_argument);
}

TEST_CASE("invariant violations are rejected") {
  CHECK_THROWS_AS(ProbeEnsemble({0.1, 0.2}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ProbeEnsemble({0.0, 0.2, 0.2}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ProbeEnsemble({0.0, 0.2}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(NoiseModel(-0.1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(NoiseModel(0.1, 1.5), std::invalid_argument);
  NoiseModel noise(0.1, 0.0);
  BinningScheme bins = BinningScheme::fixed_width(2, 1.0);
  CHECK_THROWS_AS(
      outcome_probability(std::numeric_limits<double>::quiet_NaN(), noise, bins, 0),
      std::invalid_argument);
  CHECK_THROWS_AS(outcome_probability(0.0, noise, bins, 7), std::out_of_range);
  CHECK_THROWS_AS(BinningScheme::fixed_width(2, 0.0), std::invalid_argument);
}

TEST_CASE("counts define probabilities exactly") {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts(2, 4);
  counts << 1, 2, 3, 4, 10, 0, 0, 10;
  OutcomeDistribution dist = OutcomeDistribution::from_counts(counts);
  dist.validate();
  CHECK(dist.probs(0, 3) == 0.4);
  CHECK(dist.probs(1, 0) == 0.5);
}
