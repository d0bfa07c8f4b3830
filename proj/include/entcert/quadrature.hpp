#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace entcert {

/// Additive Gaussian measurement noise plus ADC interleave imbalance.
/// Quadrature units are fixed by the vacuum variance sigma_v^2 = 1/2.
class NoiseModel {
 public:
  NoiseModel(double sigma_n, double gamma);

  static NoiseModel from_snr_db(double snr_db, double gamma);

  double sigma_n() const { return sigma_n_; }
  double gamma() const { return gamma_; }
  static constexpr double sigma_v2() { return 0.5; }
  double sigma_t2() const { return sigma_v2() + sigma_n_ * sigma_n_; }
  double sigma_t() const { return std::sqrt(sigma_t2()); }
  /// Linear signal-to-noise ratio sigma_v^2 / sigma_n^2 (inf when noiseless).
  double snr() const;
  double snr_db() const;

 private:
  double sigma_n_;
  double gamma_;
};

/// Trusted states: the vacuum (generation state, amplitude 0) plus coherent
/// probe amplitudes, with detection efficiency applied as alpha -> sqrt(eta)*alpha.
class ProbeEnsemble {
 public:
  ProbeEnsemble(std::vector<double> amplitudes, double eta);

  /// n_states amplitudes equally spaced on [0, alpha_bar].
  static ProbeEnsemble equally_spaced(double alpha_bar, int n_states, double eta);

  int size() const { return int(amplitudes_.size()); }
  double amplitude(int i) const { return amplitudes_.at(i); }
  const std::vector<double>& amplitudes() const { return amplitudes_; }
  double eta() const { return eta_; }
  double effective_amplitude(int i) const {
    return std::sqrt(eta_) * amplitudes_.at(i);
  }
  /// Ensemble with every amplitude multiplied by `r` (the vacuum stays 0).
  ProbeEnsemble scaled(double r) const;

 private:
  std::vector<double> amplitudes_;
  double eta_;
};

/// Discretization of the X-quadrature axis into d = 2^bit_depth intervals.
/// Intervals are half-open [a, b); a sample equal to an interior edge falls
/// in the upper bin. Outer edges are -inf / +inf.
class BinningScheme {
 public:
  enum class Kind { kFixedWidth, kEqualProbability };

  /// d-2 equal-width interior bins spanning [-R, R] plus two tail bins.
  /// For bit_depth 1 the scheme degenerates to a single edge at 0.
  static BinningScheme fixed_width(int bit_depth, double range);

  /// Bins equiprobable under a centered Gaussian of std sigma_t.
  static BinningScheme equal_probability(int outcomes, double sigma_t);

  Kind kind() const { return kind_; }
  int bit_depth() const { return bit_depth_; }
  int outcomes() const { return int(edges_.size()) - 1; }
  /// Range R for fixed-width schemes, sigma_t for equal-probability schemes.
  double parameter() const { return parameter_; }
  const std::vector<double>& edges() const { return edges_; }
  double lower_edge(int k) const { return edges_.at(k); }
  double upper_edge(int k) const { return edges_.at(k + 1); }
  int bin_index(double x) const;

 private:
  BinningScheme(Kind kind, int bit_depth, double parameter,
                std::vector<double> edges);

  Kind kind_;
  int bit_depth_;
  double parameter_;
  std::vector<double> edges_;  // size outcomes()+1, strictly increasing
};

/// Observed (or modeled) outcome statistics, one row per probe state.
struct OutcomeDistribution {
  Eigen::MatrixXd probs;  // n_states x d, rows sum to 1
  std::optional<Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>>
      counts;
  std::vector<std::string> labels;
  /// Hash of the acquisition context (assumed amplitudes, eta, bins); used
  /// to guard dual-certificate reuse. Zero when unknown.
  std::uint64_t context_fingerprint = 0;

  static OutcomeDistribution from_counts(
      const Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>& counts,
      std::vector<std::string> labels = {});

  bool has_counts() const { return counts.has_value(); }
  int states() const { return int(probs.rows()); }
  int outcomes() const { return int(probs.cols()); }
  /// Throws std::invalid_argument if an invariant is violated.
  void validate() const;
};

/// P(outcome k) for a coherent state of (efficiency-scaled) amplitude alpha
/// measured with Gaussian noise sigma_n and binned. gamma is not applied here.
double outcome_probability(double alpha, const NoiseModel& noise,
                           const BinningScheme& bins, int k);

/// All outcome probabilities for one amplitude, without the gamma map.
Eigen::VectorXd outcome_probabilities(double alpha, const NoiseModel& noise,
                                      const BinningScheme& bins);

/// ADC interleave imbalance acting on a length-d distribution, d even:
/// even k gains gamma * p(k+1), odd k keeps (1-gamma) * p(k).
Eigen::VectorXd gamma_map(const Eigen::VectorXd& probs, double gamma);

/// Modeled outcome matrix for a probe ensemble: binned Gaussians of mean
/// sqrt(2*eta)*alpha_i and variance sigma_t^2, followed by the gamma map.
OutcomeDistribution model_distribution(const ProbeEnsemble& ensemble,
                                       const NoiseModel& noise,
                                       const BinningScheme& bins);

/// Bin edges that make every bin equiprobable for a centered Gaussian of
/// std sigma_t; d must be a power of two.
BinningScheme equal_probability_edges(int outcomes, double sigma_t);

}  // namespace entcert
