#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "entcert/quadrature.hpp"
#include "entcert/sdp_build.hpp"
#include "entcert/solver.hpp"

namespace entcert {

/// -log2 of a guessing probability in (0, 1].
double min_entropy(double p_g);

/// Chernoff-Hoeffding deviation term t(epsilon, N) = sqrt(log(1/eps)/(2N)).
double finite_size_penalty(double epsilon, std::int64_t n_samples);

/// Context hash binding a certificate to the assumed states and binning it
/// was computed for. Reuse against data from a different context is refused.
std::uint64_t data_fingerprint(const ProbeEnsemble& assumed,
                               const BinningScheme& bins);
std::string fingerprint_hex(std::uint64_t fp);

/// Optimal dual variables of a certification solve. The objective evaluated
/// on any outcome distribution from the same context upper-bounds the
/// guessing probability of that data.
struct DualCertificate {
  SdpMode mode = SdpMode::kCoherentDual;
  Eigen::MatrixXd nu;                     // d x n
  std::vector<Eigen::MatrixXd> h_blocks;  // d symmetric matrices
  std::vector<Eigen::MatrixXd> j_blocks;  // tomo mode only
  std::vector<Eigen::MatrixXd> states;    // assumed truncated probe states
  double p_g_bound = 1.0;                 // dual optimum on its own data
  std::uint64_t fingerprint = 0;          // full settings hash
  std::uint64_t data_context = 0;         // must match applied data

  int outcomes() const { return int(nu.rows()); }
  /// Largest eigenvalue over all dual feasibility LMIs; feasible
  /// certificates stay below 1e-7.
  double feasibility_violation() const;
  void validate(double eps = 1e-7) const;
};

struct CertificationReport {
  double p_g = 1.0;
  double h_min = 0.0;
  double p_g_finite = 1.0;
  double h_min_finite = 0.0;
  double epsilon = 1e-9;
  double r = 1.0;
  std::string mode;
  std::string fingerprint;
  std::vector<std::int64_t> samples_per_state;

  void validate() const;
  /// Pretty-printed JSON with stable (alphabetical) key order.
  std::string to_json() const;
};

/// -sum_{k,i} nu_k^i xi(k|rho_i); affine in the distribution. Throws on a
/// fingerprint mismatch.
double evaluate_certificate(const DualCertificate& cert,
                            const OutcomeDistribution& distribution);

/// Finite-size corrected bound: the certificate objective plus the
/// per-state Chernoff-Hoeffding penalty sum_{k,i} |nu_k^i| t(eps, N_i).
/// Requires sample counts; epsilon is passed through as stated (no
/// additional union bound over states or bins).
CertificationReport finite_size_bound(const DualCertificate& cert,
                                      const OutcomeDistribution& observed,
                                      double epsilon);

struct CertifyInputs {
  ProbeEnsemble ensemble;        // assumed amplitudes before r-scaling
  BinningScheme bins;
  int cutoff = 30;
  OutcomeDistribution observed;  // fixed data (counts enable finite-size)
  double epsilon = 1e-9;
  SolverOptions solver;
};

struct CertifyOutcome {
  SolveStatus status = SolveStatus::kNumericalFailure;
  bool infeasible = false;  // data irreproducible under the assumptions
  std::optional<DualCertificate> certificate;
  CertificationReport report;
  SolveResult solve;
};

/// Dual-route certification: build the dual for the r-scaled assumed
/// ensemble, attach the observed data, solve, and assemble the report.
CertifyOutcome certify(const CertifyInputs& inputs, double r = 1.0);

/// Tomography-mode certification for a fully specified POVM.
CertifyOutcome certify_tomo(const std::vector<FockOperator>& povm,
                            const SolverOptions& solver = {});

struct AuditPoint {
  double r = 1.0;
  bool infeasible = false;
  double h_min = 0.0;
  SolveStatus status = SolveStatus::kNumericalFailure;
};

/// Security audit over amplitude scalings: rebuilds the constraints with
/// assumed amplitudes r*alpha against the fixed observed data.
std::vector<AuditPoint> amplitude_audit(const CertifyInputs& inputs,
                                        const std::vector<double>& r_values);

}  // namespace entcert
