#include "entcert/sdp_build.hpp"

#include <stdexcept>

namespace entcert {

namespace {

using Triplet = Eigen::Triplet<double>;

void check_states(const std::vector<Eigen::MatrixXd>& states) {
  if (states.empty()) throw std::invalid_argument("no probe states");
  int dim = int(states[0].rows());
  for (const auto& s : states)
    if (s.rows() != dim || s.cols() != dim)
      throw std::invalid_argument("probe state dimension mismatch");
}

/// Scaled-identity rows: for every lambda and svec entry t of
/// sum_k M_k^lambda, one equality; diagonal entries subtract the free
/// scalar s_lambda. Row order: lambda-major, t minor.
void add_scaled_identity_rows(int d, int dim, int free_off,
                              std::vector<Triplet>& trips, int row0) {
  int len = svec_len(dim);
  for (int lambda = 0; lambda < d; ++lambda) {
    int t = 0;
    for (int q = 0; q < dim; ++q) {
      for (int p = 0; p <= q; ++p, ++t) {
        int row = row0 + lambda * len + t;
        for (int k = 0; k < d; ++k) {
          int blk = k * d + lambda;
          trips.emplace_back(row, blk * len + t, 1.0);
        }
        if (p == q) trips.emplace_back(row, free_off + lambda, -1.0);
      }
    }
  }
}

}  // namespace

std::vector<Eigen::MatrixXd> ensemble_states(const ProbeEnsemble& ensemble,
                                             int cutoff) {
  std::vector<Eigen::MatrixXd> states;
  states.reserve(ensemble.size());
  for (int i = 0; i < ensemble.size(); ++i) {
    Eigen::VectorXd c =
        coherent_fock_coefficients(ensemble.effective_amplitude(i), cutoff);
    states.push_back(c * c.transpose());
  }
  return states;
}

SdpProblem build_primal_states(const std::vector<Eigen::MatrixXd>& states,
                               const OutcomeDistribution& observed) {
  check_states(states);
  observed.validate();
  int n = int(states.size());
  if (observed.states() != n)
    throw std::invalid_argument("build_primal: observed rows != state count");
  int d = observed.outcomes();
  int dim = int(states[0].rows());
  int len = svec_len(dim);

  SdpProblem prob;
  prob.mode = SdpMode::kCoherentPrimal;
  prob.psd_dims.assign(d * d, dim);
  prob.free_scalars = d;
  int free_off = prob.free_var_offset();
  int nvars = prob.total_vars();

  std::vector<Eigen::VectorXd> rho_svec;
  for (const auto& s : states) rho_svec.push_back(mat_to_svec(s));

  int mrows = d * len + n * d;
  std::vector<Triplet> trips;
  trips.reserve(std::size_t(d) * len * (d + 1) + std::size_t(n) * d * d * len);
  add_scaled_identity_rows(d, dim, free_off, trips, 0);
  prob.eq_rhs = Eigen::VectorXd::Zero(mrows);
  for (int k = 0; k < d; ++k) {
    for (int i = 0; i < n; ++i) {
      int row = d * len + k * n + i;
      for (int lambda = 0; lambda < d; ++lambda) {
        int blk = k * d + lambda;
        for (int t = 0; t < len; ++t) {
          double v = rho_svec[i][t];
          if (v != 0.0) trips.emplace_back(row, blk * len + t, v);
        }
      }
      prob.eq_rhs[row] = observed.probs(i, k);
    }
  }
  prob.equalities.resize(mrows, nvars);
  prob.equalities.setFromTriplets(trips.begin(), trips.end());

  prob.objective = Eigen::VectorXd::Zero(nvars);
  for (int lambda = 0; lambda < d; ++lambda) {
    int blk = lambda * d + lambda;
    prob.objective.segment(blk * len, len) += rho_svec[0];
  }
  prob.maximize = true;
  return prob;
}

namespace {

/// The LMIs see only the traceless part of H_lambda, so H is gauge-fixed
/// traceless and parameterized by len-1 coordinates per block: the first
/// dim-1 are the diagonal entries (the last diagonal is minus their sum),
/// the rest are the off-diagonal svec entries in svec order. This keeps
/// the LMI map full column rank.
void add_traceless_h_rows(int lambda, int dim, int block_len,
                          std::vector<Triplet>& trips) {
  int h_off = lambda * block_len;
  int t = 0;
  int offdiag_coord = dim - 1;
  for (int q = 0; q < dim; ++q) {
    for (int p = 0; p <= q; ++p, ++t) {
      if (p == q) {
        if (p < dim - 1) {
          trips.emplace_back(t, h_off + p, 1.0);
        } else {
          for (int i = 0; i < dim - 1; ++i)
            trips.emplace_back(t, h_off + i, -1.0);
        }
      } else {
        trips.emplace_back(t, h_off + offdiag_coord, 1.0);
        ++offdiag_coord;
      }
    }
  }
}

Eigen::MatrixXd traceless_h_from_coords(
    const Eigen::Ref<const Eigen::VectorXd>& coords, int dim) {
  Eigen::VectorXd sv = Eigen::VectorXd::Zero(svec_len(dim));
  int offdiag_coord = dim - 1;
  int t = 0;
  double diag_sum = 0.0;
  for (int q = 0; q < dim; ++q) {
    for (int p = 0; p <= q; ++p, ++t) {
      if (p == q) {
        if (p < dim - 1) {
          sv[t] = coords[p];
          diag_sum += coords[p];
        } else {
          sv[t] = -diag_sum;
        }
      } else {
        sv[t] = coords[offdiag_coord++];
      }
    }
  }
  return svec_to_mat(sv, dim);
}

}  // namespace

SdpProblem build_dual_states(const std::vector<Eigen::MatrixXd>& states,
                             int n_outcomes) {
  check_states(states);
  int n = int(states.size());
  int d = n_outcomes;
  if (d < 1) throw std::invalid_argument("build_dual: need at least 1 outcome");
  int dim = int(states[0].rows());
  int len = svec_len(dim);
  int hlen = len - 1;  // traceless coordinates per H block

  SdpProblem prob;
  prob.mode = SdpMode::kCoherentDual;
  prob.free_scalars = d * hlen + d * n;  // H blocks then nu (k-major)
  int nu_off = d * hlen;
  int nvars = prob.total_vars();

  std::vector<Eigen::VectorXd> rho_svec;
  for (const auto& s : states) rho_svec.push_back(mat_to_svec(s));

  prob.lmis.resize(d * d);
  for (int k = 0; k < d; ++k) {
    for (int lambda = 0; lambda < d; ++lambda) {
      auto& lmi = prob.lmis[k * d + lambda];
      lmi.dim = dim;
      std::vector<Triplet> trips;
      add_traceless_h_rows(lambda, dim, hlen, trips);
      for (int t = 0; t < len; ++t) {
        for (int i = 0; i < n; ++i) {
          double v = rho_svec[i][t];
          if (v != 0.0) trips.emplace_back(t, nu_off + k * n + i, v);
        }
      }
      lmi.map.resize(len, nvars);
      lmi.map.setFromTriplets(trips.begin(), trips.end());
      lmi.rhs = (k == lambda) ? Eigen::VectorXd(-rho_svec[0])
                              : Eigen::VectorXd(Eigen::VectorXd::Zero(len));
    }
  }

  prob.objective = Eigen::VectorXd::Zero(nvars);
  prob.maximize = false;
  return prob;
}

SdpProblem build_primal(const ProbeEnsemble& ensemble,
                        const OutcomeDistribution& observed, int cutoff) {
  return build_primal_states(ensemble_states(ensemble, cutoff), observed);
}

SdpProblem build_dual(const ProbeEnsemble& ensemble, int n_outcomes,
                      int cutoff) {
  return build_dual_states(ensemble_states(ensemble, cutoff), n_outcomes);
}

void set_dual_objective(SdpProblem& dual, const OutcomeDistribution& observed) {
  if (dual.mode != SdpMode::kCoherentDual)
    throw std::invalid_argument("set_dual_objective: not a coherent dual");
  int d = 0;
  while (d * d < int(dual.lmis.size())) ++d;
  int dim = dual.lmis[0].dim;
  int nu_off = d * (svec_len(dim) - 1);
  int n = (dual.free_scalars - nu_off) / d;
  if (observed.outcomes() != d || observed.states() != n)
    throw std::invalid_argument("set_dual_objective: shape mismatch");
  dual.objective.setZero();
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < n; ++i)
      dual.objective[nu_off + k * n + i] = -observed.probs(i, k);
}

SdpProblem build_tomo_primal(const std::vector<FockOperator>& povm) {
  int d = int(povm.size());
  if (d < 1) throw std::invalid_argument("build_tomo_primal: empty POVM");
  int dim = povm[0].dim();
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& e : povm) total += e.matrix;
  double resid =
      (total - Eigen::MatrixXd::Identity(dim, dim)).cwiseAbs().maxCoeff();
  if (resid > 1e-8)
    throw std::invalid_argument(
        "build_tomo_primal: POVM incomplete (completeness residual > 1e-8)");

  int len = svec_len(dim);
  SdpProblem prob;
  prob.mode = SdpMode::kTomoPrimal;
  prob.psd_dims.assign(d * d, dim);
  prob.free_scalars = d;
  int free_off = prob.free_var_offset();
  int nvars = prob.total_vars();

  // For every off-diagonal entry t, the row-sum (scaled-identity) and
  // column-sum (tomography) constraints over the block array are linearly
  // dependent; the k = d-1 tomography row is implied by the others and
  // POVM completeness. Dropping it keeps the system full rank.
  std::vector<Triplet> trips;
  add_scaled_identity_rows(d, dim, free_off, trips, 0);
  int row = d * len;
  std::vector<double> rhs_tail;
  for (int k = 0; k < d; ++k) {
    Eigen::VectorXd sig = mat_to_svec(povm[k].matrix);
    int t = 0;
    for (int q = 0; q < dim; ++q) {
      for (int p = 0; p <= q; ++p, ++t) {
        if (k == d - 1 && p != q) continue;
        for (int lambda = 0; lambda < d; ++lambda)
          trips.emplace_back(row, (k * d + lambda) * len + t, 1.0);
        rhs_tail.push_back(sig[t]);
        ++row;
      }
    }
  }
  prob.eq_rhs = Eigen::VectorXd::Zero(row);
  for (std::size_t i = 0; i < rhs_tail.size(); ++i)
    prob.eq_rhs[d * len + int(i)] = rhs_tail[i];
  prob.equalities.resize(row, nvars);
  prob.equalities.setFromTriplets(trips.begin(), trips.end());

  prob.objective = Eigen::VectorXd::Zero(nvars);
  Eigen::VectorXd rho0 = Eigen::VectorXd::Zero(len);
  rho0[0] = 1.0;  // vacuum projector
  for (int lambda = 0; lambda < d; ++lambda)
    prob.objective.segment((lambda * d + lambda) * len, len) += rho0;
  prob.maximize = true;
  return prob;
}

SdpProblem build_tomo_dual(const std::vector<FockOperator>& povm) {
  int d = int(povm.size());
  if (d < 1) throw std::invalid_argument("build_tomo_dual: empty POVM");
  int dim = povm[0].dim();
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& e : povm) total += e.matrix;
  if ((total - Eigen::MatrixXd::Identity(dim, dim)).cwiseAbs().maxCoeff() >
      1e-8)
    throw std::invalid_argument(
        "build_tomo_dual: POVM incomplete (completeness residual > 1e-8)");

  int len = svec_len(dim);
  int hlen = len - 1;
  SdpProblem prob;
  prob.mode = SdpMode::kTomoDual;
  prob.free_scalars = d * hlen + d * len;  // traceless H blocks then J blocks
  int j_off = d * hlen;
  int nvars = prob.total_vars();

  Eigen::VectorXd rho0 = Eigen::VectorXd::Zero(len);
  rho0[0] = 1.0;

  prob.lmis.resize(d * d);
  for (int k = 0; k < d; ++k) {
    for (int lambda = 0; lambda < d; ++lambda) {
      auto& lmi = prob.lmis[k * d + lambda];
      lmi.dim = dim;
      std::vector<Triplet> trips;
      add_traceless_h_rows(lambda, dim, hlen, trips);
      for (int t = 0; t < len; ++t)
        trips.emplace_back(t, j_off + k * len + t, 1.0);
      lmi.map.resize(len, nvars);
      lmi.map.setFromTriplets(trips.begin(), trips.end());
      lmi.rhs = (k == lambda) ? Eigen::VectorXd(-rho0)
                              : Eigen::VectorXd(Eigen::VectorXd::Zero(len));
    }
  }

  prob.objective = Eigen::VectorXd::Zero(nvars);
  for (int k = 0; k < d; ++k)
    prob.objective.segment(j_off + k * len, len) = -mat_to_svec(povm[k].matrix);
  prob.maximize = false;
  return prob;
}

DualVariables extract_dual_variables(const SdpProblem& dual,
                                     const SolveResult& result) {
  if (!dual.lmi_form())
    throw std::invalid_argument("extract_dual_variables: not an LMI problem");
  int d = 0;
  while (d * d < int(dual.lmis.size())) ++d;
  int dim = dual.lmis[0].dim;
  int len = svec_len(dim);
  int hlen = len - 1;
  DualVariables out;
  for (int lambda = 0; lambda < d; ++lambda)
    out.h_blocks.push_back(traceless_h_from_coords(
        result.free_values.segment(lambda * hlen, hlen), dim));
  int tail_off = d * hlen;
  if (dual.mode == SdpMode::kTomoDual) {
    for (int k = 0; k < d; ++k)
      out.j_blocks.push_back(svec_to_mat(
          result.free_values.segment(tail_off + k * len, len), dim));
  } else {
    int n = (dual.free_scalars - tail_off) / d;
    out.nu.resize(d, n);
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < n; ++i)
        out.nu(k, i) = result.free_values[tail_off + k * n + i];
  }
  return out;
}

}  // namespace entcert
