#include "entcert/certification.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace entcert {

namespace {

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string canonical_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string bins_signature(const BinningScheme& bins) {
  std::string kind =
      bins.kind() == BinningScheme::Kind::kFixedWidth ? "fixed" : "equalprob";
  return kind + ":" + std::to_string(bins.outcomes()) + ":" +
         canonical_double(bins.parameter());
}

}  // namespace

double min_entropy(double p_g) {
  if (!(p_g > 0.0 && p_g <= 1.0))
    throw std::domain_error("min_entropy: p_g must lie in (0, 1]");
  return -std::log2(p_g);
}

double finite_size_penalty(double epsilon, std::int64_t n_samples) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::domain_error("finite_size_penalty: epsilon must lie in (0, 1)");
  if (n_samples <= 0)
    throw std::domain_error("finite_size_penalty: need positive sample count");
  return std::sqrt(std::log(1.0 / epsilon) / (2.0 * double(n_samples)));
}

std::uint64_t data_fingerprint(const ProbeEnsemble& assumed,
                               const BinningScheme& bins) {
  std::string sig = "eta=" + canonical_double(assumed.eta()) + ";amps=";
  for (double a : assumed.amplitudes()) sig += canonical_double(a) + ",";
  sig += ";bins=" + bins_signature(bins);
  return fnv1a(sig);
}

std::string fingerprint_hex(std::uint64_t fp) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)fp);
  return buf;
}

double DualCertificate::feasibility_violation() const {
  int d = outcomes();
  int dim = int(states.at(0).rows());
  Eigen::MatrixXd rho0 = Eigen::MatrixXd::Zero(dim, dim);
  rho0(0, 0) = 1.0;
  double worst = -std::numeric_limits<double>::infinity();
  for (int lambda = 0; lambda < d; ++lambda) {
    Eigen::MatrixXd base = h_blocks.at(lambda);
    base -= (base.trace() / double(dim)) *
            Eigen::MatrixXd::Identity(dim, dim);
    for (int k = 0; k < d; ++k) {
      Eigen::MatrixXd s = base;
      if (k == lambda) s += rho0;
      if (mode == SdpMode::kTomoDual) {
        s += j_blocks.at(k);
      } else {
        for (int i = 0; i < int(states.size()); ++i)
          s += nu(k, i) * states[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s,
                                                        Eigen::EigenvaluesOnly);
      worst = std::max(worst, es.eigenvalues().maxCoeff());
    }
  }
  return worst;
}

void DualCertificate::validate(double eps) const {
  if (feasibility_violation() > eps)
    throw std::runtime_error("DualCertificate: dual feasibility violated");
}

void CertificationReport::validate() const {
  auto in_unit = [](double p) { return p > 0.0 && p <= 1.0; };
  if (!in_unit(p_g) || !in_unit(p_g_finite))
    throw std::runtime_error("CertificationReport: probability outside (0, 1]");
  if (std::abs(h_min - (-std::log2(p_g))) > 1e-9)
    throw std::runtime_error("CertificationReport: h_min != -log2(p_g)");
  if (p_g_finite < p_g - 1e-12)
    throw std::runtime_error("CertificationReport: finite-size bound below p_g");
  if (h_min_finite > h_min + 1e-12)
    throw std::runtime_error("CertificationReport: h_min_finite above h_min");
}

std::string CertificationReport::to_json() const {
  nlohmann::json j;
  j["p_g"] = p_g;
  j["h_min"] = h_min;
  j["p_g_finite"] = p_g_finite;
  j["h_min_finite"] = h_min_finite;
  j["epsilon"] = epsilon;
  j["r"] = r;
  j["mode"] = mode;
  j["fingerprint"] = fingerprint;
  j["samples_per_state"] = samples_per_state;
  j["metadata"] = {
      {"epsilon_policy",
       "per-state totals; epsilon passed through without a union bound over "
       "states or bins"},
      {"amplitude_convention", "alpha_assumed = r * alpha_estimated"}};
  return j.dump(2);
}

double evaluate_certificate(const DualCertificate& cert,
                            const OutcomeDistribution& distribution) {
  if (cert.mode == SdpMode::kTomoDual)
    throw std::invalid_argument(
        "evaluate_certificate: tomography certificates carry no nu");
  if (distribution.context_fingerprint != cert.data_context)
    throw std::runtime_error(
        "evaluate_certificate: settings fingerprint mismatch (certificate "
        "reuse requires identical assumed states and binning)");
  if (distribution.outcomes() != cert.nu.rows() ||
      distribution.states() != cert.nu.cols())
    throw std::invalid_argument("evaluate_certificate: shape mismatch");
  double acc = 0.0;
  for (int k = 0; k < cert.nu.rows(); ++k)
    for (int i = 0; i < cert.nu.cols(); ++i)
      acc -= cert.nu(k, i) * distribution.probs(i, k);
  return acc;
}

CertificationReport finite_size_bound(const DualCertificate& cert,
                                      const OutcomeDistribution& observed,
                                      double epsilon) {
  if (observed.context_fingerprint != cert.data_context)
    throw std::runtime_error(
        "finite_size_bound: settings fingerprint mismatch (certificate reuse "
        "requires identical assumed states and binning)");
  if (!observed.has_counts())
    throw std::invalid_argument(
        "finite_size_bound: observed distribution carries no sample counts");
  double p_bar = evaluate_certificate(cert, observed);

  CertificationReport report;
  report.epsilon = epsilon;
  report.mode = to_string(cert.mode);
  report.fingerprint = fingerprint_hex(cert.fingerprint);
  double penalty = 0.0;
  for (int i = 0; i < observed.states(); ++i) {
    std::int64_t total = observed.counts->row(i).sum();
    report.samples_per_state.push_back(total);
    double t = finite_size_penalty(epsilon, total);
    for (int k = 0; k < observed.outcomes(); ++k)
      penalty += std::abs(cert.nu(k, i)) * t;
  }
  report.p_g = std::min(1.0, std::max(p_bar, 1e-300));
  report.h_min = min_entropy(report.p_g);
  report.p_g_finite = std::min(1.0, std::max(report.p_g, p_bar + penalty));
  report.h_min_finite = min_entropy(report.p_g_finite);
  return report;
}

CertifyOutcome certify(const CertifyInputs& inputs, double r) {
  CertifyOutcome out;
  ProbeEnsemble assumed = inputs.ensemble.scaled(r);
  OutcomeDistribution observed = inputs.observed;
  observed.validate();
  std::uint64_t context = data_fingerprint(assumed, inputs.bins);
  observed.context_fingerprint = context;

  SdpProblem dual = build_dual(assumed, observed.outcomes(), inputs.cutoff);
  set_dual_objective(dual, observed);
  out.solve = solve_sdp(dual, inputs.solver);
  out.status = out.solve.status;
  if (out.status == SolveStatus::kDualInfeasible) {
    // The dual is unbounded below: no D-dimensional measurement on the
    // assumed states reproduces the observed data.
    out.infeasible = true;
    return out;
  }
  if (out.status != SolveStatus::kOptimal) return out;

  DualVariables vars = extract_dual_variables(dual, out.solve);
  DualCertificate cert;
  cert.mode = SdpMode::kCoherentDual;
  cert.nu = vars.nu;
  cert.h_blocks = vars.h_blocks;
  cert.states = ensemble_states(assumed, inputs.cutoff);
  cert.p_g_bound = out.solve.objective;
  cert.data_context = context;
  std::string sig = "mode=coherent-dual;cutoff=" +
                    std::to_string(inputs.cutoff) + ";" +
                    fingerprint_hex(context);
  cert.fingerprint = std::hash<std::string>{}(sig);
  cert.validate();

  CertificationReport& rep = out.report;
  if (observed.has_counts()) {
    rep = finite_size_bound(cert, observed, inputs.epsilon);
  } else {
    rep.p_g = std::min(1.0, std::max(out.solve.objective, 1e-300));
    rep.h_min = min_entropy(rep.p_g);
    rep.p_g_finite = rep.p_g;
    rep.h_min_finite = rep.h_min;
    rep.epsilon = inputs.epsilon;
    rep.mode = to_string(cert.mode);
    rep.fingerprint = fingerprint_hex(cert.fingerprint);
  }
  rep.r = r;
  rep.fingerprint = fingerprint_hex(cert.fingerprint);
  rep.validate();
  out.certificate = std::move(cert);
  return out;
}

CertifyOutcome certify_tomo(const std::vector<FockOperator>& povm,
                            const SolverOptions& solver) {
  CertifyOutcome out;
  SdpProblem dual = build_tomo_dual(povm);
  out.solve = solve_sdp(dual, solver);
  out.status = out.solve.status;
  if (out.status == SolveStatus::kDualInfeasible) {
    out.infeasible = true;
    return out;
  }
  if (out.status != SolveStatus::kOptimal) return out;

  DualVariables vars = extract_dual_variables(dual, out.solve);
  DualCertificate cert;
  cert.mode = SdpMode::kTomoDual;
  cert.h_blocks = vars.h_blocks;
  cert.j_blocks = vars.j_blocks;
  cert.nu.resize(int(povm.size()), 0);
  for (const auto& e : povm) cert.states.push_back(e.matrix);
  cert.p_g_bound = out.solve.objective;
  cert.validate();

  CertificationReport& rep = out.report;
  rep.p_g = std::min(1.0, std::max(out.solve.objective, 1e-300));
  rep.h_min = min_entropy(rep.p_g);
  rep.p_g_finite = rep.p_g;
  rep.h_min_finite = rep.h_min;
  rep.mode = to_string(cert.mode);
  rep.fingerprint = fingerprint_hex(cert.fingerprint);
  rep.validate();
  out.certificate = std::move(cert);
  return out;
}

std::vector<AuditPoint> amplitude_audit(const CertifyInputs& inputs,
                                        const std::vector<double>& r_values) {
  std::vector<AuditPoint> points;
  points.reserve(r_values.size());
  for (double r : r_values) {
    if (!(r > 0.0))
      throw std::invalid_argument("amplitude_audit: r values must be positive");
    CertifyOutcome res = certify(inputs, r);
    AuditPoint pt;
    pt.r = r;
    pt.status = res.status;
    pt.infeasible = res.infeasible;
    pt.h_min = res.infeasible ? 0.0 : res.report.h_min;
    points.push_back(pt);
  }
  return points;
}

}  // namespace entcert
