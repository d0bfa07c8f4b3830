#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "entcert/quadrature.hpp"

namespace entcert {

/// Raised when an alternating sum loses more than 1e-6 relative accuracy.
class PrecisionLossError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Real symmetric operator on the truncated Fock space of dimension
/// cutoff + 1.
struct FockOperator {
  Eigen::MatrixXd matrix;

  int dim() const { return int(matrix.rows()); }
  int cutoff() const { return dim() - 1; }
  double symmetry_error() const {
    return (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
  }
  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix,
                                                      Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }
};

/// Physicists' Hermite polynomial H_k(x) by three-term recurrence.
double hermite(int k, double x);

/// Definite integral of exp(-x^2/g) * x^n over (a, b); endpoints may be
/// infinite. Closed form (odd/even branches).
double lambda_integral(int n, double a, double b, double gamma_param);

/// Values of the integral for n = 0..n_max by the two-term recursion.
std::vector<double> lambda_integral_table(int n_max, double a, double b,
                                          double gamma_param);

/// Fock-space matrix of the noisy, binned quadrature POVM element for
/// outcome k, truncated at `cutoff` <= 60. Uses the noiseless special case
/// when sigma_n == 0.
FockOperator povm_element(int k, const NoiseModel& noise,
                          const BinningScheme& bins, int cutoff);

/// All d POVM elements (gamma not applied).
std::vector<FockOperator> povm_elements(const NoiseModel& noise,
                                        const BinningScheme& bins, int cutoff);

/// Operator-level interleave imbalance: even k gains gamma * Sigma_{k+1},
/// odd k keeps (1-gamma) * Sigma_k. Requires an even element count.
std::vector<FockOperator> gamma_map_operators(
    const std::vector<FockOperator>& elements, double gamma);

/// Coefficients e^{-alpha^2/2} alpha^n / sqrt(n!) of a real-amplitude
/// coherent state in the number basis, n = 0..cutoff (not re-normalized).
Eigen::VectorXd coherent_fock_coefficients(double alpha, int cutoff);

}  // namespace entcert
