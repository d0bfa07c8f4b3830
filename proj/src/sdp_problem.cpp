#include "entcert/sdp_problem.hpp"

#include <stdexcept>

namespace entcert {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
}

std::string to_string(SdpMode mode) {
  switch (mode) {
    case SdpMode::kGeneric: return "generic";
    case SdpMode::kCoherentPrimal: return "coherent-primal";
    case SdpMode::kCoherentDual: return "coherent-dual";
    case SdpMode::kTomoPrimal: return "tomo-primal";
    case SdpMode::kTomoDual: return "tomo-dual";
  }
  return "unknown";
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kPrimalInfeasible: return "primal-infeasible";
    case SolveStatus::kDualInfeasible: return "dual-infeasible";
    case SolveStatus::kIterationLimit: return "iteration-limit";
    case SolveStatus::kNumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

int svec_index(int i, int j, int dim) {
  if (i > j) std::swap(i, j);
  if (j >= dim) throw std::out_of_range("svec_index");
  return j * (j + 1) / 2 + i;
}

Eigen::VectorXd mat_to_svec(const Eigen::MatrixXd& m) {
  int dim = int(m.rows());
  Eigen::VectorXd v(svec_len(dim));
  int t = 0;
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i <= j; ++i)
      v[t++] = (i == j) ? m(i, j) : kSqrt2 * 0.5 * (m(i, j) + m(j, i));
  return v;
}

Eigen::MatrixXd svec_to_mat(const Eigen::VectorXd& v, int dim) {
  if (v.size() != svec_len(dim)) throw std::invalid_argument("svec_to_mat: size");
  Eigen::MatrixXd m(dim, dim);
  int t = 0;
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i <= j; ++i) {
      double x = v[t++];
      if (i == j) {
        m(i, j) = x;
      } else {
        m(i, j) = x / kSqrt2;
        m(j, i) = m(i, j);
      }
    }
  return m;
}

int SdpProblem::psd_var_offset(int j) const {
  int off = 0;
  for (int k = 0; k < j; ++k) off += svec_len(psd_dims[k]);
  return off;
}

int SdpProblem::free_var_offset() const { return psd_var_offset(int(psd_dims.size())); }

int SdpProblem::total_vars() const { return free_var_offset() + free_scalars; }

void SdpProblem::validate() const {
  int n = total_vars();
  if (n == 0) throw std::invalid_argument("SdpProblem: no variables");
  if (!psd_dims.empty() && !lmis.empty())
    throw std::invalid_argument(
        "SdpProblem: mixed PSD-variable and LMI form is not supported");
  if (psd_dims.empty() && lmis.empty())
    throw std::invalid_argument("SdpProblem: no conic structure");
  if (objective.size() != n)
    throw std::invalid_argument("SdpProblem: objective length mismatch");
  if (equalities.rows() != eq_rhs.size())
    throw std::invalid_argument("SdpProblem: equality rhs length mismatch");
  if (equalities.rows() > 0 && equalities.cols() != n)
    throw std::invalid_argument("SdpProblem: equality column count mismatch");
  for (const auto& lmi : lmis) {
    if (lmi.map.rows() != svec_len(lmi.dim) || lmi.rhs.size() != lmi.map.rows())
      throw std::invalid_argument("SdpProblem: LMI block shape mismatch");
    if (lmi.map.cols() != n)
      throw std::invalid_argument("SdpProblem: LMI column count mismatch");
  }
  if (standard_form() && equalities.rows() == 0)
    throw std::invalid_argument("SdpProblem: standard form needs equalities");
}

}  // namespace entcert
