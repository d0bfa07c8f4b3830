#include <doctest.h>

#include <cmath>
#include <random>

#include "entcert/certification.hpp"

using namespace entcert;

namespace {

CertifyInputs model_inputs(double alpha_bar, int n_states, double snr_db,
                           int delta, double range, int cutoff) {
  NoiseModel noise = NoiseModel::from_snr_db(snr_db, 0.0);
  BinningScheme bins = BinningScheme::fixed_width(delta, range);
  ProbeEnsemble ens = ProbeEnsemble::equally_spaced(alpha_bar, n_states, 1.0);
  OutcomeDistribution observed = model_distribution(ens, noise, bins);
  return CertifyInputs{ens, bins, cutoff, observed, 1e-9, SolverOptions{}};
}

}  // namespace

TEST_CASE("min-entropy is the negated base-2 log") {
  CHECK(min_entropy(1.0) == 0.0);
  CHECK(min_entropy(0.5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(min_entropy(std::exp2(-0.35)) == doctest::Approx(0.35).epsilon(1e-12));
  CHECK_THROWS_AS(min_entropy(0.0), std::domain_error);
  CHECK_THROWS_AS(min_entropy(1.5), std::domain_error);
}

TEST_CASE("finite-size deviation term") {
  // sqrt(ln(1e9) / (2e6)), frozen by direct evaluation.
  CHECK(finite_size_penalty(1e-9, 1000000) ==
        doctest::Approx(3.2189490394340209e-3).epsilon(1e-12));
  // Monotone: smaller with more samples, larger with smaller epsilon.
  CHECK(finite_size_penalty(1e-9, 10000000) <
        finite_size_penalty(1e-9, 1000000));
  CHECK(finite_size_penalty(1e-12, 1000000) >
        finite_size_penalty(1e-9, 1000000));
  CHECK_THROWS_AS(finite_size_penalty(0.0, 100), std::domain_error);
  CHECK_THROWS_AS(finite_size_penalty(1e-9, 0), std::domain_error);
}

TEST_CASE("model-sourced certification produces a valid report") {
  CertifyInputs inputs = model_inputs(0.5, 2, 18.0, 2, 1.5, 10);
  CertifyOutcome out = certify(inputs);
  REQUIRE(out.status == SolveStatus::kOptimal);
  REQUIRE(out.certificate.has_value());
  out.report.validate();
  CHECK(out.report.h_min > 0.0);
  CHECK(out.report.p_g >=
        inputs.observed.probs.row(0).maxCoeff() - 1e-6);
  CHECK(out.certificate->feasibility_violation() <= 1e-7);
  // Without counts the finite-size fields collapse onto the asymptotic ones.
  CHECK(out.report.p_g_finite == out.report.p_g);

  std::string json = out.report.to_json();
  for (const char* key :
       {"p_g", "h_min", "p_g_finite", "h_min_finite", "epsilon", "r", "mode",
        "fingerprint", "samples_per_state"})
    CHECK(json.find('"' + std::string(key) + '"') != std::string::npos);
}

TEST_CASE("certificate evaluation is exact at its own data and affine") {
  CertifyInputs inputs = model_inputs(0.5, 2, 18.0, 2, 1.5, 10);
  CertifyOutcome out = certify(inputs);
  REQUIRE(out.certificate.has_value());
  const DualCertificate& cert = *out.certificate;

  OutcomeDistribution observed = inputs.observed;
  observed.context_fingerprint = cert.data_context;
  double at_optimum = evaluate_certificate(cert, observed);
  CHECK(at_optimum == doctest::Approx(cert.p_g_bound).epsilon(1e-9));

  // Perturb two bins of the second row; the bound moves by exactly the
  // nu-weighted perturbation.
  OutcomeDistribution perturbed = observed;
  double eps = 1e-3;
  perturbed.probs(1, 0) += eps;
  perturbed.probs(1, 1) -= eps;
  double moved = evaluate_certificate(cert, perturbed);
  double expected =
      at_optimum - cert.nu(0, 1) * eps + cert.nu(1, 1) * eps;
  CHECK(moved == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("certificate reuse upper-bounds re-solved instances") {
  CertifyInputs inputs = model_inputs(0.45, 2, 15.0, 2, 1.4, 10);
  CertifyOutcome base = certify(inputs);
  REQUIRE(base.certificate.has_value());

  // A second distribution from the same states: more Gaussian noise.
  NoiseModel noisier = NoiseModel::from_snr_db(8.0, 0.0);
  OutcomeDistribution other =
      model_distribution(inputs.ensemble, noisier, inputs.bins);
  other.context_fingerprint = base.certificate->data_context;
  double bound = evaluate_certificate(*base.certificate, other);

  CertifyInputs re = inputs;
  re.observed = other;
  CertifyOutcome resolved = certify(re);
  REQUIRE(resolved.status == SolveStatus::kOptimal);
  CHECK(bound >= resolved.report.p_g - 1e-6);
}

TEST_CASE("fingerprint mismatch is a hard error") {
  CertifyInputs inputs = model_inputs(0.5, 2, 18.0, 2, 1.5, 10);
  CertifyOutcome out = certify(inputs);
  REQUIRE(out.certificate.has_value());
  OutcomeDistribution foreign = inputs.observed;
  foreign.context_fingerprint = 12345;  // produced under different settings
  CHECK_THROWS_AS(evaluate_certificate(*out.certificate, foreign),
                  std::runtime_error);
  CHECK_THROWS_AS(
      finite_size_bound(*out.certificate, foreign, 1e-9),
      std::runtime_error);
}

TEST_CASE("finite-size bound inflates the asymptotic bound") {
  CertifyInputs inputs = model_inputs(0.5, 2, 18.0, 2, 1.5, 10);
  // Attach synthetic counts close to the model distribution.
  std::int64_t total = 2'000'000;
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts(
      inputs.observed.states(), inputs.observed.outcomes());
  for (int i = 0; i < inputs.observed.states(); ++i) {
    std::int64_t acc = 0;
    for (int k = 0; k < inputs.observed.outcomes() - 1; ++k) {
      counts(i, k) = std::int64_t(std::llround(
          double(total) * inputs.observed.probs(i, k)));
      acc += counts(i, k);
    }
    counts(i, inputs.observed.outcomes() - 1) = total - acc;
  }
  inputs.observed = OutcomeDistribution::from_counts(counts);

  CertifyOutcome out = certify(inputs);
  REQUIRE(out.status == SolveStatus::kOptimal);
  out.report.validate();
  CHECK(out.report.p_g_finite > out.report.p_g);
  CHECK(out.report.h_min_finite < out.report.h_min);
  CHECK(out.report.samples_per_state ==
        std::vector<std::int64_t>{total, total});

  // More samples shrink the correction.
  CertifyOutcome again = certify(inputs);
  OutcomeDistribution stamped = inputs.observed;
  stamped.context_fingerprint = again.certificate->data_context;
  CertificationReport tighter =
      finite_size_bound(*again.certificate, stamped, 1e-6);
  CHECK(tighter.p_g_finite <= out.report.p_g_finite + 1e-15);
}

TEST_CASE("amplitude audit degrades monotonically and detects r too small") {
  CertifyInputs inputs = model_inputs(0.6, 3, 15.0, 2, 1.5, 10);
  std::vector<AuditPoint> points =
      amplitude_audit(inputs, {1.0, 1.05, 1.1, 0.4});
  REQUIRE(points.size() == 4);
  CHECK_FALSE(points[0].infeasible);
  CHECK_FALSE(points[1].infeasible);
  CHECK_FALSE(points[2].infeasible);
  CHECK(points[1].h_min <= points[0].h_min + 1e-6);
  CHECK(points[2].h_min <= points[1].h_min + 1e-6);
  // Strongly under-estimated amplitudes cannot reproduce the data.
  CHECK(points[3].infeasible);

  CertifyOutcome baseline = certify(inputs, 1.0);
  CHECK(points[0].h_min ==
        doctest::Approx(baseline.report.h_min).epsilon(1e-9));
}

TEST_CASE("tomography certification reports a bound") {
  NoiseModel noise(0.2, 0.0);
  BinningScheme bins = BinningScheme::fixed_width(2, 1.5);
  std::vector<FockOperator> povm = povm_elements(noise, bins, 6);
  CertifyOutcome out = certify_tomo(povm);
  REQUIRE(out.status == SolveStatus::kOptimal);
  out.report.validate();
  CHECK(out.report.mode == "tomo-dual");
  CHECK(out.report.h_min >= 0.0);
  REQUIRE(out.certificate.has_value());
  CHECK(out.certificate->feasibility_violation() <= 1e-7);
}
