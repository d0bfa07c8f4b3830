#pragma once

#include <cstdint>
#include <string>

#include "entcert/trace_io.hpp"

namespace entcert {

/// Synthetic ADC trace generation. The quadrature process rides on the
/// modulation carrier:
///   v(t) = quantize(G * [(mu + x_c(t)) cos(w t + psi) - x_s(t) sin(w t + psi)])
/// with mu = sqrt(2 eta) alpha_true, w = 2 pi (f_mod + dlo_offset), and
/// x_c, x_s independent Gaussian quadrature-noise processes of variance
/// sigma_t^2 (sigma_v^2 for the shot-noise trace), band-limited below the
/// canonical demodulation passband so the chain is calibration-free. With
/// the default bandwidth fs/(2*decimation), samples decimated by the
/// recommended factor are exactly uncorrelated.
struct SimConfig {
  double alpha_true = 0.0;
  double snr_db = 20.0;  // +inf for noiseless
  double eta = 1.0;
  double gamma = 0.0;    // ADC interleave imbalance at the code level
  double f_mod_hz = 6e6;
  double sample_rate_hz = 14e6;
  int n_samples = 1000000;
  int adc_bits = 16;
  double adc_fullscale = 6.0;  // quadrature units mapped to the top code
  double dlo_offset_hz = 0.0;
  double dlo_phase = 0.0;
  std::uint64_t seed = 1;  // mandatory; recorded in the trace metadata
  bool shot_noise = false;
  double noise_bandwidth_hz = 0.0;  // 0: auto, fs / (2 ceil(fs / 1.6 MHz))
  std::string label;

  void validate() const;
};

TraceRecord simulate_trace(const SimConfig& config);

}  // namespace entcert
