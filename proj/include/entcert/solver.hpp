#pragma once

#include <iosfwd>

#include "entcert/sdp_problem.hpp"

namespace entcert {

struct SolverOptions {
  double feastol = 1e-7;  // scaled residual tolerance (double-precision floor)
  double reltol = 5e-8;   // relative complementarity gap
  double abstol = 1e-10;
  int max_iterations = 200;
  std::ostream* log = nullptr;  // optional per-iteration log
};

/// Primal-dual interior-point solve of a block-structured semidefinite
/// program via the homogeneous self-dual embedding. Infeasible problems are
/// classified through the embedding's tau/kappa ratio and returned with a
/// Farkas-type certificate. Deterministic: identical inputs give identical
/// results.
SolveResult solve_sdp(const SdpProblem& problem, const SolverOptions& opts = {});

struct FeasibilityResult {
  bool feasible = false;
  SolveResult detail;
};

/// Solves the problem's constraint system with a zero objective and reports
/// the classification.
FeasibilityResult check_feasibility(const SdpProblem& problem,
                                    const SolverOptions& opts = {});

}  // namespace entcert
