#include "entcert/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "entcert/special.hpp"

namespace entcert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt2 = 1.4142135623730951;

bool is_power_of_two(int d) { return d >= 1 && (d & (d - 1)) == 0; }

}  // namespace

NoiseModel::NoiseModel(double sigma_n, double gamma)
    : sigma_n_(sigma_n), gamma_(gamma) {
  if (!(sigma_n >= 0.0) || !std::isfinite(sigma_n))
    throw std::invalid_argument("NoiseModel: sigma_n must be finite and >= 0");
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("NoiseModel: gamma must lie in [0, 1]");
}

NoiseModel NoiseModel::from_snr_db(double snr_db, double gamma) {
  if (std::isinf(snr_db) && snr_db > 0) return NoiseModel(0.0, gamma);
  double snr = std::pow(10.0, snr_db / 10.0);
  return NoiseModel(std::sqrt(sigma_v2() / snr), gamma);
}

double NoiseModel::snr() const {
  if (sigma_n_ == 0.0) return kInf;
  return sigma_v2() / (sigma_n_ * sigma_n_);
}

double NoiseModel::snr_db() const { return 10.0 * std::log10(snr()); }

ProbeEnsemble::ProbeEnsemble(std::vector<double> amplitudes, double eta)
    : amplitudes_(std::move(amplitudes)), eta_(eta) {
  if (amplitudes_.empty())
    throw std::invalid_argument("ProbeEnsemble: no amplitudes");
  if (amplitudes_.front() != 0.0)
    throw std::invalid_argument(
        "ProbeEnsemble: first amplitude must be exactly 0 (generation state)");
  for (double a : amplitudes_)
    if (!std::isfinite(a))
      throw std::invalid_argument("ProbeEnsemble: non-finite amplitude");
  for (std::size_t i = 0; i < amplitudes_.size(); ++i)
    for (std::size_t j = i + 1; j < amplitudes_.size(); ++j)
      if (amplitudes_[i] == amplitudes_[j])
        throw std::invalid_argument("ProbeEnsemble: amplitudes must be distinct");
  if (!(eta > 0.0 && eta <= 1.0))
    throw std::invalid_argument("ProbeEnsemble: eta must lie in (0, 1]");
}

ProbeEnsemble ProbeEnsemble::equally_spaced(double alpha_bar, int n_states,
                                            double eta) {
  if (n_states < 1) throw std::invalid_argument("equally_spaced: n_states < 1");
  std::vector<double> amps(n_states);
  for (int i = 0; i < n_states; ++i)
    amps[i] = n_states == 1 ? 0.0 : alpha_bar * double(i) / double(n_states - 1);
  return ProbeEnsemble(std::move(amps), eta);
}

ProbeEnsemble ProbeEnsemble::scaled(double r) const {
  if (!(r > 0.0)) throw std::invalid_argument("ProbeEnsemble::scaled: r <= 0");
  std::vector<double> amps = amplitudes_;
  for (double& a : amps) a *= r;
  return ProbeEnsemble(std::move(amps), eta_);
}

BinningScheme::BinningScheme(Kind kind, int bit_depth, double parameter,
                             std::vector<double> edges)
    : kind_(kind),
      bit_depth_(bit_depth),
      parameter_(parameter),
      edges_(std::move(edges)) {
  for (std::size_t j = 0; j + 1 < edges_.size(); ++j)
    if (!(edges_[j] < edges_[j + 1]))
      throw std::invalid_argument("BinningScheme: edges must strictly increase");
}

BinningScheme BinningScheme::fixed_width(int bit_depth, double range) {
  if (bit_depth < 1)
    throw std::invalid_argument("BinningScheme: bit_depth must be >= 1");
  int d = 1 << bit_depth;
  std::vector<double> edges(d + 1);
  edges.front() = -kInf;
  edges.back() = kInf;
  if (d == 2) {
    // The equal-width formula is undefined at d = 2; use the range center.
    edges[1] = 0.0;
  } else {
    if (!(range > 0.0) || !std::isfinite(range))
      throw std::invalid_argument("BinningScheme: range must be positive");
    double delta = 2.0 * range / double(d - 2);
    for (int j = 1; j < d; ++j) edges[j] = -range + double(j - 1) * delta;
    edges[d - 1] = range;  // avoid accumulated rounding on the top edge
  }
  return BinningScheme(Kind::kFixedWidth, bit_depth, range, std::move(edges));
}

BinningScheme BinningScheme::equal_probability(int outcomes, double sigma_t) {
  if (outcomes < 2 || !is_power_of_two(outcomes))
    throw std::invalid_argument(
        "BinningScheme: outcome count must be a power of two >= 2");
  if (!(sigma_t > 0.0))
    throw std::invalid_argument("BinningScheme: sigma_t must be positive");
  int d = outcomes;
  int bit_depth = 0;
  while ((1 << bit_depth) < d) ++bit_depth;
  std::vector<double> edges(d + 1);
  for (int k = 0; k <= d; ++k)
    edges[k] = kSqrt2 * sigma_t * erf_inv(2.0 * double(k) / double(d) - 1.0);
  return BinningScheme(Kind::kEqualProbability, bit_depth, sigma_t,
                       std::move(edges));
}

int BinningScheme::bin_index(double x) const {
  auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
  int k = int(it - edges_.begin()) - 1;
  return std::clamp(k, 0, outcomes() - 1);
}

OutcomeDistribution OutcomeDistribution::from_counts(
    const Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>& counts,
    std::vector<std::string> labels) {
  OutcomeDistribution out;
  out.counts = counts;
  out.labels = std::move(labels);
  out.probs.resize(counts.rows(), counts.cols());
  for (int i = 0; i < counts.rows(); ++i) {
    std::int64_t total = counts.row(i).sum();
    if (total <= 0)
      throw std::invalid_argument("OutcomeDistribution: empty count row");
    out.probs.row(i) = counts.row(i).cast<double>() / double(total);
  }
  return out;
}

void OutcomeDistribution::validate() const {
  if (probs.rows() == 0 || probs.cols() == 0)
    throw std::invalid_argument("OutcomeDistribution: empty");
  if ((probs.array() < 0.0).any())
    throw std::invalid_argument("OutcomeDistribution: negative probability");
  for (int i = 0; i < probs.rows(); ++i) {
    if (std::abs(probs.row(i).sum() - 1.0) > 1e-9)
      throw std::invalid_argument("OutcomeDistribution: row does not sum to 1");
  }
  if (counts) {
    if (counts->rows() != probs.rows() || counts->cols() != probs.cols())
      throw std::invalid_argument("OutcomeDistribution: counts shape mismatch");
    if ((counts->array() < 0).any())
      throw std::invalid_argument("OutcomeDistribution: negative count");
    for (int i = 0; i < probs.rows(); ++i) {
      std::int64_t total = counts->row(i).sum();
      for (int k = 0; k < probs.cols(); ++k)
        if (probs(i, k) != double((*counts)(i, k)) / double(total))
          throw std::invalid_argument(
              "OutcomeDistribution: probs are not exactly counts/total");
    }
  }
}

double outcome_probability(double alpha, const NoiseModel& noise,
                           const BinningScheme& bins, int k) {
  if (!std::isfinite(alpha))
    throw std::invalid_argument("outcome_probability: non-finite alpha");
  if (k < 0 || k >= bins.outcomes())
    throw std::out_of_range("outcome_probability: outcome index");
  double st = noise.sigma_t();
  auto upsilon = [&](double x) -> double {
    if (std::isinf(x)) return x;
    return (x - kSqrt2 * alpha) / (kSqrt2 * st);
  };
  auto erf_ext = [](double u) -> double {
    if (std::isinf(u)) return u > 0 ? 1.0 : -1.0;
    return std::erf(u);
  };
  double p = 0.5 * erf_ext(upsilon(bins.upper_edge(k))) -
             0.5 * erf_ext(upsilon(bins.lower_edge(k)));
  return std::clamp(p, 0.0, 1.0);
}

Eigen::VectorXd outcome_probabilities(double alpha, const NoiseModel& noise,
                                      const BinningScheme& bins) {
  Eigen::VectorXd p(bins.outcomes());
  for (int k = 0; k < bins.outcomes(); ++k)
    p[k] = outcome_probability(alpha, noise, bins, k);
  return p;
}

Eigen::VectorXd gamma_map(const Eigen::VectorXd& probs, double gamma) {
  int d = int(probs.size());
  if (d % 2 != 0)
    throw std::invalid_argument("gamma_map: outcome count must be even");
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("gamma_map: gamma must lie in [0, 1]");
  Eigen::VectorXd out(d);
  for (int k = 0; k < d; k += 2) {
    out[k] = probs[k] + gamma * probs[k + 1];
    out[k + 1] = (1.0 - gamma) * probs[k + 1];
  }
  return out;
}

OutcomeDistribution model_distribution(const ProbeEnsemble& ensemble,
                                       const NoiseModel& noise,
                                       const BinningScheme& bins) {
  OutcomeDistribution out;
  out.probs.resize(ensemble.size(), bins.outcomes());
  for (int i = 0; i < ensemble.size(); ++i) {
    Eigen::VectorXd row =
        outcome_probabilities(ensemble.effective_amplitude(i), noise, bins);
    if (noise.gamma() > 0.0) row = gamma_map(row, noise.gamma());
    out.probs.row(i) = row / row.sum();
    out.labels.push_back("alpha=" + std::to_string(ensemble.amplitude(i)));
  }
  return out;
}

BinningScheme equal_probability_edges(int outcomes, double sigma_t) {
  return BinningScheme::equal_probability(outcomes, sigma_t);
}

}  // namespace entcert
