#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <string>
#include <vector>

namespace entcert {

enum class SdpMode {
  kGeneric,
  kCoherentPrimal,
  kCoherentDual,
  kTomoPrimal,
  kTomoDual,
};

std::string to_string(SdpMode mode);

/// svec packing of symmetric matrices: upper triangle, column-major, with
/// off-diagonal entries scaled by sqrt(2) so the standard matrix inner
/// product becomes a plain dot product.
inline int svec_len(int dim) { return dim * (dim + 1) / 2; }
int svec_index(int i, int j, int dim);
Eigen::VectorXd mat_to_svec(const Eigen::MatrixXd& m);
Eigen::MatrixXd svec_to_mat(const Eigen::VectorXd& v, int dim);

/// Block-structured conic program over
///   - PSD matrix variables X_j (dims in psd_dims, addressed in svec form)
///   - free scalar variables
/// with sparse equality rows and linear matrix inequalities map*vars <= rhs
/// (as svec rows grouped per LMI block). The variable vector is
/// [svec(X_0), ..., svec(X_{B-1}), free scalars].
///
/// The problem shapes used here are either "standard form" (PSD variables +
/// equalities, no LMIs) or "LMI form" (free variables + LMIs, optional
/// equalities over the free variables).
struct SdpProblem {
  struct LmiBlock {
    int dim = 0;
    Eigen::SparseMatrix<double, Eigen::RowMajor> map;  // svec_len(dim) x vars
    Eigen::VectorXd rhs;                               // svec constant
  };

  SdpMode mode = SdpMode::kGeneric;
  std::vector<int> psd_dims;
  int free_scalars = 0;
  Eigen::SparseMatrix<double, Eigen::RowMajor> equalities;
  Eigen::VectorXd eq_rhs;
  std::vector<LmiBlock> lmis;
  Eigen::VectorXd objective;  // dense over all variables
  bool maximize = false;
  double objective_offset = 0.0;

  int psd_var_offset(int j) const;
  int free_var_offset() const;
  int total_vars() const;
  bool standard_form() const { return lmis.empty() && !psd_dims.empty(); }
  bool lmi_form() const { return !lmis.empty() && psd_dims.empty(); }
  /// Throws std::invalid_argument on malformed structure.
  void validate() const;
};

enum class SolveStatus {
  kOptimal,
  kPrimalInfeasible,
  kDualInfeasible,
  kIterationLimit,
  kNumericalFailure,
};

std::string to_string(SolveStatus status);

struct SolveResult {
  SolveStatus status = SolveStatus::kNumericalFailure;
  /// Optimal value in the problem's own sense (respects `maximize`).
  double objective = std::numeric_limits<double>::quiet_NaN();

  /// Standard form: optimal PSD variables and free scalars.
  /// LMI form: psd_values holds the LMI dual multipliers (PSD) instead.
  std::vector<Eigen::MatrixXd> psd_values;
  Eigen::VectorXd free_values;
  std::vector<Eigen::MatrixXd> lmi_slacks;  // LMI form: rhs - map*x
  Eigen::VectorXd eq_multipliers;

  /// Infeasibility certificates (populated per status).
  /// Primal infeasible, standard form: Farkas vector w over equality rows
  /// with mat-part of E' w negative semidefinite, free part zero, rhs'w = 1.
  Eigen::VectorXd farkas_eq;
  /// Primal infeasible, LMI form: multiplier blocks z >= 0 and y with
  /// map' z + eq' y = 0 and rhs'z + eq_rhs'y = -1.
  std::vector<Eigen::MatrixXd> farkas_lmi;
  Eigen::VectorXd farkas_eq_y;
  /// Dual infeasible (posed problem unbounded): improving ray.
  Eigen::VectorXd unbounded_free;
  std::vector<Eigen::MatrixXd> unbounded_psd;

  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
};

}  // namespace entcert
