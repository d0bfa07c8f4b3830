#pragma once

#include <vector>

#include "entcert/fock.hpp"
#include "entcert/quadrature.hpp"
#include "entcert/sdp_problem.hpp"

namespace entcert {

// Certification programs over POVM-piece variables M_k^lambda (dimension
// D = cutoff + 1). Block and LMI ordering is k-major: index k*d + lambda.
//
// Primal (standard form): maximize sum_l Tr[rho0 M_l^l] subject to
//   M_k^l >= 0,  sum_k M_k^l = s_l * I  (s_l free scalars),
//   sum_l Tr[rho_i M_k^l] = p(k|rho_i).
//
// Dual (LMI form): minimize -sum_{k,i} nu_k^i p(k|rho_i) subject to
//   rho0 d_{kl} + H_l - (Tr H_l / D) I + sum_i nu_k^i rho_i <= 0,
// with free symmetric H_l (gauge-fixed traceless) and free scalars nu_k^i.
// Tomography mode replaces the data constraints with sum_l M_k^l = Sigma_k
// (dual variables J_k, objective -sum_k Tr[J_k Sigma_k]).

/// Generalized builders over arbitrary symmetric PSD state matrices; the
/// first state is the generation state entering the objective.
SdpProblem build_primal_states(const std::vector<Eigen::MatrixXd>& states,
                               const OutcomeDistribution& observed);
SdpProblem build_dual_states(const std::vector<Eigen::MatrixXd>& states,
                             int n_outcomes);

/// Coherent-probe builders; states are rank-1 outer products of truncated
/// (not re-normalized) coherent vectors at efficiency-scaled amplitudes.
SdpProblem build_primal(const ProbeEnsemble& ensemble,
                        const OutcomeDistribution& observed, int cutoff);
SdpProblem build_dual(const ProbeEnsemble& ensemble, int n_outcomes,
                      int cutoff);

/// The dual problem carries the observed data only in its objective; attach
/// (or swap) it here.
void set_dual_objective(SdpProblem& dual, const OutcomeDistribution& observed);

SdpProblem build_tomo_primal(const std::vector<FockOperator>& povm);
SdpProblem build_tomo_dual(const std::vector<FockOperator>& povm);

/// Truncated state matrices for an ensemble at a given cutoff.
std::vector<Eigen::MatrixXd> ensemble_states(const ProbeEnsemble& ensemble,
                                             int cutoff);

struct DualVariables {
  Eigen::MatrixXd nu;                      // d x n (coherent modes)
  std::vector<Eigen::MatrixXd> h_blocks;   // d matrices
  std::vector<Eigen::MatrixXd> j_blocks;   // d matrices (tomo modes)
};

DualVariables extract_dual_variables(const SdpProblem& dual,
                                     const SolveResult& result);

}  // namespace entcert
