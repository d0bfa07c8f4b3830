#include "entcert/dsp.hpp"

#include <unsupported/Eigen/FFT>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

namespace entcert {

namespace {

constexpr double kTwoPi = 6.283185307179586;
constexpr double kSqrt2 = 1.4142135623730951;

Eigen::VectorXd trace_to_vector(const TraceRecord& trace) {
  Eigen::VectorXd v(trace.size());
  for (int i = 0; i < trace.size(); ++i) v[i] = double(trace.samples[i]);
  return v;
}

/// Causal FIR pass, zero initial state.
Eigen::VectorXd fir_apply(const Eigen::VectorXd& taps,
                          const Eigen::VectorXd& x) {
  int nt = int(taps.size());
  int n = int(x.size());
  Eigen::VectorXd rev = taps.reverse();
  Eigen::VectorXd y(n);
  for (int i = 0; i < std::min(nt - 1, n); ++i) {
    double acc = 0.0;
    for (int j = 0; j <= i; ++j) acc += taps[j] * x[i - j];
    y[i] = acc;
  }
  for (int i = nt - 1; i < n; ++i)
    y[i] = rev.dot(x.segment(i - nt + 1, nt));
  return y;
}

double golden_section_max(double lo, double hi,
                          const std::function<double(double)>& f, double tol) {
  const double invphi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

void check_tone(const TraceRecord& trace) {
  Eigen::VectorXd v = trace_to_vector(trace);
  v.array() -= v.mean();
  int seg = std::min<int>(1 << 14, int(v.size()));
  PsdResult psd = welch_psd(v, trace.sample_rate_hz, seg);
  Eigen::VectorXd sorted = psd.power;
  std::sort(sorted.data(), sorted.data() + sorted.size());
  double median = sorted[sorted.size() / 2];
  double peak = psd.power.maxCoeff();
  if (median <= 0.0 || 10.0 * std::log10(peak / median) < 10.0)
    throw NoToneError("estimate_dlo_offset: no modulation tone found");
}

}  // namespace

Eigen::VectorXd fir_lowpass_taps(double cutoff_hz, double sample_rate_hz,
                                 int taps) {
  if (taps < 3 || taps % 2 == 0)
    throw std::invalid_argument("fir_lowpass_taps: tap count must be odd >= 3");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < 0.5 * sample_rate_hz))
    throw std::invalid_argument("fir_lowpass_taps: cutoff must be below Nyquist");
  double fc = cutoff_hz / sample_rate_hz;  // cycles per sample
  int mid = (taps - 1) / 2;
  Eigen::VectorXd h(taps);
  for (int i = 0; i < taps; ++i) {
    double m = double(i - mid);
    double sinc = (m == 0.0) ? 2.0 * fc : std::sin(kTwoPi * fc * m) / (M_PI * m);
    double window = 0.54 - 0.46 * std::cos(kTwoPi * double(i) / double(taps - 1));
    h[i] = sinc * window;
  }
  h /= h.sum();  // unit DC gain
  return h;
}

double fir_response(const Eigen::VectorXd& taps, double freq_hz,
                    double sample_rate_hz) {
  std::complex<double> acc(0.0, 0.0);
  double w = kTwoPi * freq_hz / sample_rate_hz;
  for (int i = 0; i < taps.size(); ++i)
    acc += taps[i] * std::exp(std::complex<double>(0.0, -w * double(i)));
  return std::abs(acc);
}

Eigen::VectorXd filtfilt(const Eigen::VectorXd& taps,
                         const Eigen::VectorXd& signal) {
  int nt = int(taps.size());
  int pad = 3 * (nt - 1);
  int n = int(signal.size());
  if (n <= pad)
    throw std::invalid_argument("filtfilt: signal shorter than edge padding");
  Eigen::VectorXd ext(n + 2 * pad);
  for (int i = 0; i < pad; ++i)
    ext[i] = 2.0 * signal[0] - signal[pad - i];
  ext.segment(pad, n) = signal;
  for (int i = 0; i < pad; ++i)
    ext[pad + n + i] = 2.0 * signal[n - 1] - signal[n - 2 - i];

  Eigen::VectorXd y = fir_apply(taps, ext);
  y.reverseInPlace();
  y = fir_apply(taps, y);
  y.reverseInPlace();
  return y.segment(pad, n);
}

Eigen::VectorXd fir_lowpass(const Eigen::VectorXd& signal, double cutoff_hz,
                            double sample_rate_hz, int taps) {
  return filtfilt(fir_lowpass_taps(cutoff_hz, sample_rate_hz, taps), signal);
}

DownmixResult downmix(const TraceRecord& trace, double f_dlo_hz,
                      double phi_dlo, const DownmixOptions& opts) {
  trace.validate();
  Eigen::VectorXd v = trace_to_vector(trace);
  int n = int(v.size());
  Eigen::VectorXd vc(n), vs(n);
  double w = kTwoPi * f_dlo_hz / trace.sample_rate_hz;
  for (int i = 0; i < n; ++i) {
    double ph = w * double(i) + phi_dlo;
    vc[i] = v[i] * std::cos(ph);
    vs[i] = v[i] * std::sin(ph);
  }
  Eigen::VectorXd taps =
      fir_lowpass_taps(opts.cutoff_hz, trace.sample_rate_hz, opts.taps);
  DownmixResult out;
  out.re = filtfilt(taps, vc);
  out.im = filtfilt(taps, vs);
  out.transient = opts.taps - 1;
  return out;
}

DloEstimate estimate_dlo_offset(const TraceRecord& trace, double f_init_hz,
                                const DownmixOptions& opts) {
  check_tone(trace);
  DloEstimate est;
  double f = f_init_hz;
  for (int round = 0; round < 5; ++round) {
    DownmixResult dm = downmix(trace, f, 0.0, opts);
    int trim = dm.transient;
    int n = int(dm.re.size()) - 2 * trim;
    if (n < 16) throw std::invalid_argument("estimate_dlo_offset: trace too short");
    Eigen::VectorXd phase(n);
    double prev = std::atan2(dm.im[trim], dm.re[trim]);
    double wrap = 0.0;
    phase[0] = prev;
    for (int i = 1; i < n; ++i) {
      double cur = std::atan2(dm.im[trim + i], dm.re[trim + i]);
      double diff = cur - prev;
      if (diff > M_PI) wrap -= kTwoPi;
      if (diff < -M_PI) wrap += kTwoPi;
      phase[i] = cur + wrap;
      prev = cur;
    }
    // Least-squares slope of phase vs time.
    double dt = 1.0 / trace.sample_rate_hz;
    double tbar = 0.5 * double(n - 1) * dt;
    double sxx = 0.0, sxy = 0.0;
    double pbar = phase.mean();
    for (int i = 0; i < n; ++i) {
      double tc = double(i) * dt - tbar;
      sxx += tc * tc;
      sxy += tc * (phase[i] - pbar);
    }
    double slope_hz = -(sxy / sxx) / kTwoPi;
    est.rounds = round + 1;
    est.last_slope_hz = slope_hz;
    f += slope_hz;
    est.delta_f_hz = f - f_init_hz;
    if (std::abs(slope_hz) < 1e-3) break;
  }
  return est;
}

PhaseEstimate optimal_phase(const TraceRecord& trace, double f_dlo_hz,
                            const DownmixOptions& opts) {
  DownmixResult dm = downmix(trace, f_dlo_hz, 0.0, opts);
  int trim = dm.transient;
  int n = int(dm.re.size()) - 2 * trim;
  if (n < 16) throw std::invalid_argument("optimal_phase: trace too short");
  // mean Re(v_dm at phase phi) = cos(phi) mc - sin(phi) ms exactly, by
  // linearity of the filter; the search runs on that closed form.
  double mc = dm.re.segment(trim, n).mean();
  double ms = dm.im.segment(trim, n).mean();
  auto objective = [&](double phi) {
    return std::cos(phi) * mc - std::sin(phi) * ms;
  };

  PhaseEstimate out;
  double amp = std::hypot(mc, ms);
  double noise = std::sqrt(
      (dm.re.segment(trim, n).array() - mc).square().sum() / double(n));
  if (amp < 6.0 * noise / std::sqrt(double(n)) || amp == 0.0) {
    out.flat_warning = true;
    out.phi_opt = 0.0;
    out.mean_at_opt = objective(0.0);
    return out;
  }

  double best = 0.0, best_val = -1e300;
  for (int g = 0; g < 64; ++g) {
    double phi = kTwoPi * double(g) / 64.0;
    double val = objective(phi);
    if (val > best_val) {
      best_val = val;
      best = phi;
    }
  }
  double span = kTwoPi / 64.0;
  double phi = golden_section_max(best - span, best + span, objective, 1e-9);
  out.phi_opt = std::fmod(phi + kTwoPi, kTwoPi);
  out.mean_at_opt = objective(out.phi_opt);
  return out;
}

QuadratureSeries normalize(const Eigen::VectorXd& series,
                           const Eigen::VectorXd& shot_series_processed) {
  double mean = shot_series_processed.mean();
  double var = (shot_series_processed.array() - mean).square().sum() /
               double(shot_series_processed.size());
  double snl = std::sqrt(var);
  if (!(snl > 0.0)) throw std::invalid_argument("normalize: flat shot trace");
  QuadratureSeries out;
  out.snl = snl;
  out.values = series / (kSqrt2 * snl);
  return out;
}

AmplitudeEstimate estimate_amplitude(const QuadratureSeries& series,
                                     AmplitudeMethod method) {
  const Eigen::VectorXd& x = series.values;
  int n = int(x.size());
  if (n < 2) throw std::invalid_argument("estimate_amplitude: series too short");
  AmplitudeEstimate est;
  double mean = x.mean();
  double var = (x.array() - mean).square().sum() / double(n - 1);
  est.fitted_mean = mean;
  est.fitted_variance = var;
  est.std_error = std::sqrt(var / double(n)) / kSqrt2;
  if (method == AmplitudeMethod::kMean) {
    est.alpha = mean / kSqrt2;
    return est;
  }
  // Newton on the fixed-variance log-likelihood
  //   l(a) = -sum (x_i - sqrt(2) a)^2;  l'(a) = 2 sqrt(2) sum(x_i - sqrt2 a),
  // quadratic, so this lands on the closed form in one step.
  double a = 0.0;
  for (est.iterations = 0; est.iterations < 100; ++est.iterations) {
    double grad = 2.0 * kSqrt2 * (x.sum() - kSqrt2 * a * double(n));
    double hess = -4.0 * double(n);
    double step = grad / hess;
    a -= step;
    if (std::abs(step) < 1e-14 * std::max(1.0, std::abs(a))) break;
  }
  if (est.iterations >= 100)
    throw std::runtime_error("estimate_amplitude: fit did not converge");
  est.alpha = a;
  return est;
}

Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> downsample_counts(
    const QuadratureSeries& series, const BinningScheme& bins, int stride) {
  if (stride < 1) throw std::invalid_argument("downsample_counts: stride < 1");
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> counts =
      Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>::Zero(bins.outcomes());
  for (int i = 0; i < series.values.size(); i += stride)
    counts[bins.bin_index(series.values[i])] += 1;
  return counts;
}

PsdResult periodogram(const Eigen::VectorXd& x, double sample_rate_hz) {
  int n = int(x.size());
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec(n);
  std::vector<double> in(x.data(), x.data() + n);
  fft.fwd(spec, in);
  int half = n / 2;
  PsdResult out;
  out.freq_hz.resize(half + 1);
  out.power.resize(half + 1);
  double scale = 1.0 / (sample_rate_hz * double(n));
  for (int k = 0; k <= half; ++k) {
    out.freq_hz[k] = double(k) * sample_rate_hz / double(n);
    double p = std::norm(spec[k]) * scale;
    if (k != 0 && !(n % 2 == 0 && k == half)) p *= 2.0;
    out.power[k] = p;
  }
  return out;
}

PsdResult welch_psd(const Eigen::VectorXd& x, double sample_rate_hz,
                    int segment, double overlap) {
  int n = int(x.size());
  segment = std::min(segment, n);
  if (segment < 8) throw std::invalid_argument("welch_psd: segment too short");
  int step = std::max(1, int(double(segment) * (1.0 - overlap)));
  Eigen::VectorXd window(segment);
  for (int i = 0; i < segment; ++i)
    window[i] = 0.5 - 0.5 * std::cos(kTwoPi * double(i) / double(segment - 1));
  double wss = window.squaredNorm();

  Eigen::FFT<double> fft;
  int half = segment / 2;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(half + 1);
  int count = 0;
  std::vector<std::complex<double>> spec(segment);
  std::vector<double> buf(segment);
  for (int start = 0; start + segment <= n; start += step) {
    for (int i = 0; i < segment; ++i) buf[i] = x[start + i] * window[i];
    fft.fwd(spec, buf);
    for (int k = 0; k <= half; ++k) {
      double p = std::norm(spec[k]) / (sample_rate_hz * wss);
      if (k != 0 && !(segment % 2 == 0 && k == half)) p *= 2.0;
      acc[k] += p;
    }
    ++count;
  }
  if (count == 0) throw std::invalid_argument("welch_psd: no full segment");
  PsdResult out;
  out.power = acc / double(count);
  out.freq_hz.resize(half + 1);
  for (int k = 0; k <= half; ++k)
    out.freq_hz[k] = double(k) * sample_rate_hz / double(segment);
  return out;
}

DatasetResult process_dataset(const TraceRecord& shot,
                              const std::vector<TraceRecord>& probes,
                              const PipelineOptions& opts) {
  if (probes.empty())
    throw std::invalid_argument("process_dataset: no probe traces");
  DatasetResult out;
  double f_nominal =
      opts.f_init_hz > 0.0 ? opts.f_init_hz : probes.front().f_mod_hz;

  // Reference DLO offset from the strongest tone (last trace by convention);
  // fall back through the list when tone detection fails.
  double ref_offset = 0.0;
  bool have_ref = false;
  for (int i = int(probes.size()) - 1; i >= 0 && !have_ref; --i) {
    try {
      DloEstimate est = estimate_dlo_offset(probes[i], f_nominal, opts.downmix);
      ref_offset = est.delta_f_hz;
      have_ref = true;
    } catch (const NoToneError&) {
      continue;
    }
  }
  out.delta_f_hz = ref_offset;
  double f_ref = f_nominal + ref_offset;

  DownmixResult shot_dm = downmix(shot, f_ref, 0.0, opts.downmix);
  int trim = shot_dm.transient;
  int len = int(shot_dm.re.size()) - 2 * trim;
  Eigen::VectorXd shot_series = shot_dm.re.segment(trim, len);
  {
    double mean = shot_series.mean();
    out.shot_snl = std::sqrt(
        (shot_series.array() - mean).square().sum() / double(len));
  }

  int stride = opts.decimate;
  for (const TraceRecord& trace : probes) {
    ProcessedTrace pt;
    double f_use = f_ref;
    try {
      DloEstimate est = estimate_dlo_offset(trace, f_nominal, opts.downmix);
      pt.delta_f_hz = est.delta_f_hz;
      pt.tone_found = true;
      f_use = f_nominal + est.delta_f_hz;
    } catch (const NoToneError&) {
      pt.delta_f_hz = ref_offset;
    }
    PhaseEstimate ph = optimal_phase(trace, f_use, opts.downmix);
    pt.phi_opt = ph.phi_opt;
    DownmixResult dm = downmix(trace, f_use, ph.phi_opt, opts.downmix);
    int n = int(dm.re.size()) - 2 * trim;
    QuadratureSeries norm = normalize(dm.re.segment(trim, n), shot_series);
    norm.dlo_offset_hz = f_use - f_nominal;
    norm.dlo_phase = ph.phi_opt;

    int use_stride = stride > 0 ? stride : std::max(1, trace.recommended_decimation);
    QuadratureSeries dec;
    dec.snl = norm.snl;
    dec.dlo_offset_hz = norm.dlo_offset_hz;
    dec.dlo_phase = norm.dlo_phase;
    int m = (n + use_stride - 1) / use_stride;
    dec.values.resize(m);
    for (int i = 0, j = 0; i < n; i += use_stride, ++j)
      dec.values[j] = norm.values[i];
    pt.amplitude = estimate_amplitude(dec, opts.method);
    pt.series = std::move(dec);
    out.probes.push_back(std::move(pt));
  }
  return out;
}

}  // namespace entcert
