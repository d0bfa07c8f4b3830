#include "entcert/trace_io.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace entcert {

void TraceRecord::validate() const {
  if (samples.empty()) throw std::invalid_argument("TraceRecord: empty trace");
  if (adc_bits < 2 || adc_bits > 16)
    throw std::invalid_argument("TraceRecord: adc_bits out of range");
  std::int32_t limit = 1 << (adc_bits - 1);
  for (std::int16_t s : samples)
    if (s < -limit || s >= limit)
      throw std::invalid_argument("TraceRecord: sample exceeds ADC width");
  if (!(sample_rate_hz > 2.0 * f_mod_hz))
    throw std::invalid_argument("TraceRecord: sample rate below 2*f_mod");
}

void write_trc(const std::string& path, const TraceRecord& trace) {
  nlohmann::json header;
  header["schema"] = 1;
  header["sample_rate_hz"] = trace.sample_rate_hz;
  header["f_mod_hz"] = trace.f_mod_hz;
  header["adc_bits"] = trace.adc_bits;
  header["label"] = trace.label;
  header["seed"] = trace.seed;
  header["recommended_decimation"] = trace.recommended_decimation;
  header["clipping_fraction"] = trace.clipping_fraction;
  header["clipping_warning"] = trace.clipping_warning;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_trc: cannot open " + path);
  out << header.dump() << "\n";
  std::string body(trace.samples.size() * 2, '\0');
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    std::uint16_t u = std::uint16_t(trace.samples[i]);
    body[2 * i] = char(u & 0xff);
    body[2 * i + 1] = char((u >> 8) & 0xff);
  }
  out.write(body.data(), std::streamsize(body.size()));
  if (!out) throw std::runtime_error("write_trc: write failed for " + path);
}

TraceRecord read_trc(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_trc: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("read_trc: missing header line");
  nlohmann::json header = nlohmann::json::parse(line);

  TraceRecord trace;
  trace.sample_rate_hz = header.at("sample_rate_hz").get<double>();
  trace.f_mod_hz = header.at("f_mod_hz").get<double>();
  trace.adc_bits = header.at("adc_bits").get<int>();
  trace.label = header.at("label").get<std::string>();
  trace.seed = header.value("seed", std::uint64_t(0));
  trace.recommended_decimation = header.value("recommended_decimation", 1);
  trace.clipping_fraction = header.value("clipping_fraction", 0.0);
  trace.clipping_warning = header.value("clipping_warning", false);

  std::string body((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (body.size() % 2 != 0)
    throw std::runtime_error("read_trc: odd body length");
  trace.samples.resize(body.size() / 2);
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    std::uint16_t u = std::uint16_t(std::uint8_t(body[2 * i])) |
                      (std::uint16_t(std::uint8_t(body[2 * i + 1])) << 8);
    trace.samples[i] = std::int16_t(u);
  }
  trace.validate();
  return trace;
}

}  // namespace entcert
