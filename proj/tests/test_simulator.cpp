#include <doctest.h>

#include <cmath>

#include "entcert/dsp.hpp"
#include "entcert/quadrature.hpp"
#include "entcert/simulator.hpp"

using namespace entcert;

TEST_CASE("fixed seed reproduces the trace bit for bit") {
  SimConfig cfg;
  cfg.alpha_true = 0.3;
  cfg.n_samples = 50000;
  cfg.seed = 99;
  TraceRecord a = simulate_trace(cfg);
  TraceRecord b = simulate_trace(cfg);
  CHECK(a.samples == b.samples);
  cfg.seed = 100;
  TraceRecord c = simulate_trace(cfg);
  CHECK(a.samples != c.samples);
}

TEST_CASE("seed is mandatory and invalid configs are rejected") {
  SimConfig cfg;
  cfg.seed = 0;
  CHECK_THROWS_AS(simulate_trace(cfg), std::invalid_argument);
  cfg.seed = 1;
  cfg.sample_rate_hz = 10e6;
  cfg.f_mod_hz = 6e6;  // below 2*f_mod
  CHECK_THROWS_AS(simulate_trace(cfg), std::invalid_argument);
}

TEST_CASE("downsampled histogram matches the modeled distribution") {
  SimConfig cfg;
  cfg.alpha_true = 0.35;
  cfg.snr_db = 12.0;
  cfg.f_mod_hz = 6e6;
  cfg.sample_rate_hz = 14e6;
  cfg.n_samples = 1000000;
  cfg.seed = 31;

  SimConfig shot_cfg = cfg;
  shot_cfg.shot_noise = true;
  shot_cfg.seed = 32;

  TraceRecord trace = simulate_trace(cfg);
  TraceRecord shot = simulate_trace(shot_cfg);
  DatasetResult data = process_dataset(shot, {trace});

  BinningScheme bins = BinningScheme::fixed_width(3, 1.6);
  auto counts = downsample_counts(data.probes[0].series, bins);
  std::int64_t total = counts.sum();

  NoiseModel noise = NoiseModel::from_snr_db(12.0, 0.0);
  Eigen::VectorXd expected =
      outcome_probabilities(cfg.alpha_true, noise, bins);
  for (int k = 0; k < bins.outcomes(); ++k) {
    double mu = double(total) * expected[k];
    double sigma = std::sqrt(mu * (1.0 - expected[k]));
    CHECK(std::abs(double(counts[k]) - mu) < 3.5 * sigma + 1.0);
  }
}

TEST_CASE("code-level interleave imbalance matches the gamma map") {
  // With gamma, a fraction of odd-code samples move down one code; on the
  // raw code histogram this is exactly the distribution-level map.
  SimConfig cfg;
  cfg.alpha_true = 0.0;
  cfg.snr_db = 25.0;
  cfg.gamma = 0.25;
  cfg.f_mod_hz = 6e6;
  cfg.sample_rate_hz = 14e6;
  cfg.n_samples = 1000000;
  cfg.adc_bits = 6;
  cfg.adc_fullscale = 4.0;
  cfg.seed = 77;
  TraceRecord trace = simulate_trace(cfg);

  int d = 1 << cfg.adc_bits;
  int offset = d / 2;
  Eigen::VectorXd histogram = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < trace.size(); i += trace.recommended_decimation)
    histogram[trace.samples[i] + offset] += 1.0;
  double total = histogram.sum();

  // Carrier-level quadrature distribution per ADC code, then the gamma map.
  NoiseModel noise = NoiseModel::from_snr_db(cfg.snr_db, 0.0);
  double step = cfg.adc_fullscale / double(offset);
  Eigen::VectorXd code_probs(d);
  for (int c = -offset; c < offset; ++c) {
    double lo = (c == -offset) ? -1e30 : (double(c) - 0.5) * step;
    double hi = (c == offset - 1) ? 1e30 : (double(c) + 0.5) * step;
    double st = noise.sigma_t();
    code_probs[c + offset] =
        0.5 * (std::erf(hi / (std::sqrt(2.0) * st)) -
               std::erf(lo / (std::sqrt(2.0) * st)));
  }
  Eigen::VectorXd expected = gamma_map(code_probs, cfg.gamma);
  for (int k = 0; k < d; ++k) {
    double mu = total * expected[k];
    double sigma = std::sqrt(std::max(1.0, mu * (1.0 - expected[k])));
    CHECK(std::abs(histogram[k] - mu) < 4.0 * sigma + 2.0);
  }
}

TEST_CASE("clipping is flagged when the ADC range is exceeded") {
  SimConfig cfg;
  cfg.alpha_true = 0.0;
  cfg.adc_fullscale = 0.5;  // far below the noise spread
  cfg.n_samples = 50000;
  cfg.seed = 5;
  TraceRecord trace = simulate_trace(cfg);
  CHECK(trace.clipping_warning);
  CHECK(trace.clipping_fraction > 0.10);

  cfg.adc_fullscale = 6.0;
  TraceRecord clean = simulate_trace(cfg);
  CHECK_FALSE(clean.clipping_warning);
}

TEST_CASE("injected SNR is recoverable from the normalized variance") {
  SimConfig cfg;
  cfg.alpha_true = 0.2;
  cfg.snr_db = 10.0;
  cfg.f_mod_hz = 6e6;
  cfg.sample_rate_hz = 14e6;
  cfg.n_samples = 1000000;
  cfg.seed = 55;
  SimConfig shot_cfg = cfg;
  shot_cfg.shot_noise = true;
  shot_cfg.seed = 56;
  DatasetResult data =
      process_dataset(simulate_trace(shot_cfg), {simulate_trace(cfg)});
  const Eigen::VectorXd& vals = data.probes[0].series.values;
  double mean = vals.mean();
  double var = (vals.array() - mean).square().sum() / double(vals.size());
  // var = sigma_t^2 = 0.5 (1 + 1/snr)  =>  snr = 1 / (2 var - 1).
  double snr_est_db = 10.0 * std::log10(1.0 / (2.0 * var - 1.0));
  CHECK(std::abs(snr_est_db - 10.0) < 0.2);
}

TEST_CASE("trace round trip through the .trc format") {
  SimConfig cfg;
  cfg.alpha_true = 0.25;
  cfg.n_samples = 20000;
  cfg.seed = 8;
  TraceRecord trace = simulate_trace(cfg);
  std::string path = "test_roundtrip.trc";
  write_trc(path, trace);
  TraceRecord loaded = read_trc(path);
  CHECK(loaded.samples == trace.samples);
  CHECK(loaded.sample_rate_hz == trace.sample_rate_hz);
  CHECK(loaded.f_mod_hz == trace.f_mod_hz);
  CHECK(loaded.adc_bits == trace.adc_bits);
  CHECK(loaded.label == trace.label);
  CHECK(loaded.seed == trace.seed);
  CHECK(loaded.recommended_decimation == trace.recommended_decimation);
  std::remove(path.c_str());
}
