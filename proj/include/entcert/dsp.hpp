#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "entcert/quadrature.hpp"
#include "entcert/trace_io.hpp"

namespace entcert {

class NoToneError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Quadrature samples in vacuum units together with the normalization and
/// downmixing parameters that produced them.
struct QuadratureSeries {
  Eigen::VectorXd values;
  double snl = 0.0;           // standard deviation used for normalization
  double dlo_offset_hz = 0.0;
  double dlo_phase = 0.0;
};

/// Hamming-windowed sinc low-pass design, unit DC gain.
Eigen::VectorXd fir_lowpass_taps(double cutoff_hz, double sample_rate_hz,
                                 int taps);

/// Magnitude response of a tap vector at one frequency.
double fir_response(const Eigen::VectorXd& taps, double freq_hz,
                    double sample_rate_hz);

/// Forward-backward (zero-phase) FIR filtering with odd-symmetric edge
/// padding of length 3*(taps-1). Throws if the signal is shorter than the
/// padding.
Eigen::VectorXd filtfilt(const Eigen::VectorXd& taps,
                         const Eigen::VectorXd& signal);

/// Design-and-apply convenience: windowed-sinc design at the cutoff, applied
/// once forward and once backward.
Eigen::VectorXd fir_lowpass(const Eigen::VectorXd& signal, double cutoff_hz,
                            double sample_rate_hz, int taps);

struct DownmixOptions {
  double cutoff_hz = 1e6;
  int taps = 501;
};

struct DownmixResult {
  Eigen::VectorXd re, im;
  int transient = 0;  // taps-1 samples to discard at each end for statistics
};

/// v_dm(t) = f_lpf[v(t) cos(2 pi f_dlo t + phi)] + i f_lpf[v(t) sin(...)].
DownmixResult downmix(const TraceRecord& trace, double f_dlo_hz,
                      double phi_dlo, const DownmixOptions& opts = {});

struct DloEstimate {
  double delta_f_hz = 0.0;  // offset relative to the initial frequency
  int rounds = 0;
  double last_slope_hz = 0.0;
};

/// Frequency offset of the modulation tone: iterated line fits to the
/// unwrapped phase of the downmixed trace until the residual slope falls
/// below 1e-3 Hz (at most 5 rounds). Throws NoToneError when the tone is
/// not at least 10 dB above the median PSD level.
DloEstimate estimate_dlo_offset(const TraceRecord& trace, double f_init_hz,
                                const DownmixOptions& opts = {});

struct PhaseEstimate {
  double phi_opt = 0.0;
  bool flat_warning = false;
  double mean_at_opt = 0.0;
};

/// Phase maximizing the mean of Re(v_dm): 64-point coarse grid followed by
/// golden-section refinement.
PhaseEstimate optimal_phase(const TraceRecord& trace, double f_dlo_hz,
                            const DownmixOptions& opts = {});

/// Shot-noise normalization x = v / (sqrt(2) * snl) with snl the standard
/// deviation of the processed shot-noise series.
QuadratureSeries normalize(const Eigen::VectorXd& series,
                           const Eigen::VectorXd& shot_series_processed);

enum class AmplitudeMethod { kMean, kGaussianFit };

struct AmplitudeEstimate {
  double alpha = 0.0;
  double std_error = 0.0;
  double fitted_mean = 0.0;
  double fitted_variance = 0.0;  // free-variance companion fit
  int iterations = 0;
};

/// Coherent amplitude of a normalized series. Both methods share the
/// convention alpha = <x>/sqrt(2) (the Gaussian model peaks at sqrt(2)
/// alpha); the fit route runs Newton on the fixed-variance log-likelihood
/// and also reports a mean+variance fit.
AmplitudeEstimate estimate_amplitude(const QuadratureSeries& series,
                                     AmplitudeMethod method);

/// Bins every stride-th sample into the scheme's intervals ([a, b),
/// edge values to the upper bin) and returns the counts row.
Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> downsample_counts(
    const QuadratureSeries& series, const BinningScheme& bins, int stride = 1);

struct PsdResult {
  Eigen::VectorXd freq_hz;
  Eigen::VectorXd power;  // one-sided density, sum(power)*df = mean square
};

PsdResult periodogram(const Eigen::VectorXd& x, double sample_rate_hz);
PsdResult welch_psd(const Eigen::VectorXd& x, double sample_rate_hz,
                    int segment = 4096, double overlap = 0.5);

struct PipelineOptions {
  DownmixOptions downmix;
  int decimate = 0;  // 0: use the trace's recommended decimation
  AmplitudeMethod method = AmplitudeMethod::kMean;
  double f_init_hz = 0.0;  // 0: trace's nominal modulation frequency
};

struct ProcessedTrace {
  QuadratureSeries series;  // normalized, transient-trimmed, decimated
  AmplitudeEstimate amplitude;
  double delta_f_hz = 0.0;
  double phi_opt = 0.0;
  bool tone_found = false;
};

struct DatasetResult {
  std::vector<ProcessedTrace> probes;
  double shot_snl = 0.0;      // std of the downmixed shot-noise trace
  double delta_f_hz = 0.0;    // reference offset from the strongest tone
};

/// Full first-block processing: estimate the DLO parameters per probe trace
/// (falling back to the strongest tone's frequency for tone-free traces),
/// downmix everything, normalize against the downmixed shot trace, estimate
/// amplitudes, and decimate.
DatasetResult process_dataset(const TraceRecord& shot,
                              const std::vector<TraceRecord>& probes,
                              const PipelineOptions& opts = {});

}  // namespace entcert
