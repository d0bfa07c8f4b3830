#include "entcert/simulator.hpp"

#include <unsupported/Eigen/FFT>
#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

#include "entcert/quadrature.hpp"

namespace entcert {

namespace {

constexpr double kTwoPi = 6.283185307179586;
constexpr double kSqrt2 = 1.4142135623730951;

/// Box-Muller normals on top of mt19937_64; kept self-contained so streams
/// are reproducible independent of the standard library's distributions.
class NormalRng {
 public:
  explicit NormalRng(std::uint64_t seed) : gen_(seed) {}

  double uniform() {
    return (double(gen_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  double normal() {
    if (have_) {
      have_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(kTwoPi * u2);
    have_ = true;
    return r * std::cos(kTwoPi * u2);
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 gen_;
  bool have_ = false;
  double spare_ = 0.0;
};

/// White Gaussian noise brick-walled to |f| <= bandwidth, unit variance.
Eigen::VectorXd band_limited_noise(NormalRng& rng, int n, double bandwidth_hz,
                                   double sample_rate_hz) {
  std::vector<std::complex<double>> spec(n);
  std::vector<double> white(n);
  for (int i = 0; i < n; ++i) white[i] = rng.normal();
  Eigen::FFT<double> fft;
  fft.fwd(spec, white);
  int kept = 0;
  for (int k = 0; k < n; ++k) {
    double f = double(k) * sample_rate_hz / double(n);
    if (f > 0.5 * sample_rate_hz) f = sample_rate_hz - f;
    if (f > bandwidth_hz) {
      spec[k] = 0.0;
    } else {
      ++kept;
    }
  }
  std::vector<double> shaped(n);
  fft.inv(shaped, spec);
  double scale = std::sqrt(double(n) / double(kept));
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = shaped[i] * scale;
  return out;
}

}  // namespace

void SimConfig::validate() const {
  if (!(sample_rate_hz > 0.0) || !(f_mod_hz > 0.0))
    throw std::invalid_argument("SimConfig: rates must be positive");
  if (!(sample_rate_hz > 2.0 * f_mod_hz))
    throw std::invalid_argument("SimConfig: sample rate below 2*f_mod");
  if (n_samples < 5010)
    throw std::invalid_argument("SimConfig: need at least 10 filter lengths");
  if (adc_bits < 2 || adc_bits > 16)
    throw std::invalid_argument("SimConfig: adc_bits out of range");
  if (!(adc_fullscale > 0.0))
    throw std::invalid_argument("SimConfig: adc_fullscale must be positive");
  if (!(eta > 0.0 && eta <= 1.0))
    throw std::invalid_argument("SimConfig: eta must lie in (0, 1]");
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("SimConfig: gamma must lie in [0, 1]");
  if (seed == 0) throw std::invalid_argument("SimConfig: seed is mandatory");
}

TraceRecord simulate_trace(const SimConfig& config) {
  config.validate();
  int n = config.n_samples;
  double fs = config.sample_rate_hz;

  int decimation = std::max(1, int(std::ceil(fs / 1.6e6)));
  double bandwidth = config.noise_bandwidth_hz > 0.0
                         ? config.noise_bandwidth_hz
                         : fs / (2.0 * double(decimation));

  NoiseModel noise = NoiseModel::from_snr_db(config.snr_db, config.gamma);
  double sigma = config.shot_noise ? std::sqrt(NoiseModel::sigma_v2())
                                   : noise.sigma_t();
  double mu = config.shot_noise
                  ? 0.0
                  : kSqrt2 * std::sqrt(config.eta) * config.alpha_true;

  NormalRng rng(config.seed);
  Eigen::VectorXd xc = band_limited_noise(rng, n, bandwidth, fs);
  Eigen::VectorXd xs = band_limited_noise(rng, n, bandwidth, fs);

  double w = kTwoPi * (config.f_mod_hz + config.dlo_offset_hz) / fs;
  int code_limit = 1 << (config.adc_bits - 1);
  double gain = double(code_limit) / config.adc_fullscale;
  int offset = code_limit;  // maps codes to nonnegative bin indices

  TraceRecord trace;
  trace.samples.resize(n);
  trace.sample_rate_hz = fs;
  trace.f_mod_hz = config.f_mod_hz;
  trace.adc_bits = config.adc_bits;
  trace.label = config.label.empty()
                    ? (config.shot_noise ? "shot"
                                         : "A=" + std::to_string(config.alpha_true))
                    : config.label;
  trace.seed = config.seed;
  trace.recommended_decimation = decimation;

  std::int64_t clipped = 0;
  for (int i = 0; i < n; ++i) {
    double ph = w * double(i) + config.dlo_phase;
    double v = (mu + sigma * xc[i]) * std::cos(ph) -
               sigma * xs[i] * std::sin(ph);
    double scaled = gain * v;
    long code = std::lround(scaled);
    if (code < -code_limit || code > code_limit - 1) ++clipped;
    code = std::max<long>(-code_limit, std::min<long>(code_limit - 1, code));
    if (config.gamma > 0.0) {
      long k = code + offset;
      if (k % 2 == 1 && rng.bernoulli(config.gamma)) k -= 1;
      code = k - offset;
    }
    trace.samples[i] = std::int16_t(code);
  }
  trace.clipping_fraction = double(clipped) / double(n);
  trace.clipping_warning = trace.clipping_fraction > 0.10;
  trace.validate();
  return trace;
}

}  // namespace entcert
