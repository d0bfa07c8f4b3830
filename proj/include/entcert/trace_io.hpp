#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace entcert {

/// Raw ADC time trace. File format (.trc): one UTF-8 JSON header line
/// terminated by '\n', then the samples as little-endian signed 16-bit
/// integers.
struct TraceRecord {
  std::vector<std::int16_t> samples;
  double sample_rate_hz = 0.0;
  double f_mod_hz = 0.0;
  int adc_bits = 16;
  std::string label;  // "shot" or "A=<scale>"

  // Acquisition metadata (simulator provenance).
  std::uint64_t seed = 0;
  int recommended_decimation = 1;
  double clipping_fraction = 0.0;
  bool clipping_warning = false;

  int size() const { return int(samples.size()); }
  void validate() const;
};

void write_trc(const std::string& path, const TraceRecord& trace);
TraceRecord read_trc(const std::string& path);

}  // namespace entcert
