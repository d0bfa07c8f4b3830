#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "entcert/certification.hpp"
#include "entcert/config.hpp"
#include "entcert/dsp.hpp"
#include "entcert/simulator.hpp"
#include "entcert/sweep.hpp"
#include "entcert/trace_io.hpp"

namespace fs = std::filesystem;
using namespace entcert;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 2;
constexpr int kExitNumerical = 3;

struct CommonFlags {
  std::string config_path;
  std::string out_dir = ".";
  std::vector<std::string> overrides;  // key=value pairs
};

ConfigMap load_config(const CommonFlags& flags) {
  ConfigMap cfg;
  if (!flags.config_path.empty()) cfg = ConfigMap::load(flags.config_path);
  for (const std::string& ov : flags.overrides) {
    std::size_t eq = ov.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got: " + ov);
    ConfigMap one = ConfigMap::parse(ov.substr(0, eq) + " = " + ov.substr(eq + 1));
    for (const auto& [k, v] : one.values()) cfg.set(k, v);
  }
  return cfg;
}

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Config file (key-value with [sections])");
  cmd->add_option("--out", flags.out_dir, "Output directory");
  cmd->add_option("--set", flags.overrides,
                  "Override a config key, e.g. --set noise.snr_db=15");
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

NoiseModel resolve_noise(const ConfigMap& cfg) {
  double gamma = cfg.get_number("noise.gamma", 0.0);
  double sigma_n = cfg.get_number("noise.sigma_n", -1.0);
  if (sigma_n >= 0.0) return NoiseModel(sigma_n, gamma);
  return NoiseModel::from_snr_db(cfg.get_number("noise.snr_db", 20.0), gamma);
}

ProbeEnsemble resolve_ensemble(const ConfigMap& cfg) {
  double eta = cfg.get_number("ensemble.eta", 1.0);
  std::vector<double> amps = cfg.get_numbers("ensemble.amplitudes");
  if (!amps.empty()) return ProbeEnsemble(amps, eta);
  return ProbeEnsemble::equally_spaced(
      cfg.get_number("ensemble.alpha_bar", 0.5),
      int(cfg.get_number("ensemble.n_states", 2)), eta);
}

BinningScheme resolve_bins(const ConfigMap& cfg, const NoiseModel& noise) {
  int delta = int(cfg.get_number("bins.delta", 4));
  std::string kind = cfg.get_string("bins.kind", "fixed");
  if (kind == "equal-probability")
    return BinningScheme::equal_probability(1 << delta, noise.sigma_t());
  return BinningScheme::fixed_width(delta, cfg.get_number("bins.range", 1.5));
}

struct ResolvedInputs {
  CertifyInputs inputs;
  std::string source;
};

OutcomeDistribution load_distribution_csv(const std::string& path,
                                          std::vector<double>* amplitudes) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open distribution CSV: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("distribution CSV is empty");
  std::vector<std::vector<std::int64_t>> counts;
  std::vector<double> amps;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() < 2) throw std::runtime_error("bad CSV row: " + line);
    amps.push_back(std::stod(cells[0]));
    std::vector<std::int64_t> c;
    for (std::size_t i = 1; i < cells.size(); ++i)
      c.push_back(std::int64_t(std::stoll(cells[i])));
    counts.push_back(std::move(c));
  }
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> m(
      counts.size(), counts[0].size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i].size() != counts[0].size())
      throw std::runtime_error("ragged distribution CSV");
    for (std::size_t k = 0; k < counts[i].size(); ++k) m(int(i), int(k)) = counts[i][k];
  }
  if (amplitudes) *amplitudes = amps;
  return OutcomeDistribution::from_counts(m);
}

ResolvedInputs resolve_certify_inputs(const ConfigMap& cfg) {
  ResolvedInputs out{CertifyInputs{ProbeEnsemble({0.0, 0.5}, 1.0),
                                   BinningScheme::fixed_width(4, 1.5), 20,
                                   OutcomeDistribution{}, 1e-9, SolverOptions{}},
                     "model"};
  NoiseModel noise = resolve_noise(cfg);
  BinningScheme bins = resolve_bins(cfg, noise);
  int cutoff = int(cfg.get_number("sdp.cutoff", 20));
  double epsilon = cfg.get_number("sdp.epsilon", 1e-9);
  std::string source = cfg.get_string("input.source", "model");

  if (source == "model") {
    ProbeEnsemble ensemble = resolve_ensemble(cfg);
    OutcomeDistribution observed = model_distribution(ensemble, noise, bins);
    out.inputs = CertifyInputs{ensemble, bins, cutoff, observed, epsilon, {}};
  } else if (source == "csv") {
    std::string path = cfg.get_string("input.distribution_csv", "");
    if (path.empty()) throw std::runtime_error("input.distribution_csv not set");
    std::vector<double> amps;
    OutcomeDistribution observed = load_distribution_csv(path, &amps);
    if (observed.outcomes() != bins.outcomes())
      throw std::runtime_error("CSV outcome count does not match bins");
    ProbeEnsemble ensemble(amps, cfg.get_number("ensemble.eta", 1.0));
    out.inputs = CertifyInputs{ensemble, bins, cutoff, observed, epsilon, {}};
  } else if (source == "traces") {
    std::string shot_path = cfg.get_string("input.shot_trace", "");
    std::vector<std::string> probe_paths = cfg.get_strings("input.traces");
    if (shot_path.empty() || probe_paths.empty())
      throw std::runtime_error("input.shot_trace and input.traces required");
    TraceRecord shot = read_trc(shot_path);
    std::vector<TraceRecord> probes;
    for (const auto& p : probe_paths) probes.push_back(read_trc(p));
    PipelineOptions popts;
    popts.decimate = int(cfg.get_number("input.decimate", 0));
    DatasetResult data = process_dataset(shot, probes, popts);

    std::vector<double> amps;
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts(
        int(data.probes.size()), bins.outcomes());
    for (std::size_t i = 0; i < data.probes.size(); ++i) {
      // The first probe trace is the generation state: its amplitude is
      // trusted to be zero, not estimated.
      amps.push_back(i == 0 ? 0.0 : data.probes[i].amplitude.alpha);
      counts.row(int(i)) =
          downsample_counts(data.probes[i].series, bins).transpose();
    }
    OutcomeDistribution observed = OutcomeDistribution::from_counts(counts);
    ProbeEnsemble ensemble(amps, cfg.get_number("ensemble.eta", 1.0));
    out.inputs = CertifyInputs{ensemble, bins, cutoff, observed, epsilon, {}};
  } else {
    throw std::runtime_error("unknown input.source: " + source);
  }
  out.source = source;
  return out;
}

int cmd_certify(const CommonFlags& flags) {
  ConfigMap cfg = load_config(flags);
  std::string mode = cfg.get_string("mode", "coherent");
  CertifyOutcome outcome;
  if (mode == "tomo") {
    NoiseModel noise = resolve_noise(cfg);
    BinningScheme bins = resolve_bins(cfg, noise);
    int cutoff = int(cfg.get_number("sdp.cutoff", 12));
    std::vector<FockOperator> povm = povm_elements(noise, bins, cutoff);
    if (noise.gamma() > 0.0) povm = gamma_map_operators(povm, noise.gamma());
    outcome = certify_tomo(povm);
  } else {
    ResolvedInputs resolved = resolve_certify_inputs(cfg);
    outcome = certify(resolved.inputs, cfg.get_number("sdp.r", 1.0));
  }

  if (outcome.infeasible) {
    std::cout << "infeasible: the observed data cannot be reproduced by any "
                 "measurement on the assumed states\n";
    return kExitInfeasible;
  }
  if (outcome.status != SolveStatus::kOptimal) {
    std::cout << "solver status: " << to_string(outcome.status) << "\n";
    return kExitNumerical;
  }
  std::string json = outcome.report.to_json();
  write_file(fs::path(flags.out_dir) / "report.json", json + "\n");
  std::cout << json << "\n";
  return kExitOk;
}

int cmd_sweep(const CommonFlags& flags) {
  ConfigMap cfg = load_config(flags);
  SweepRequest req;
  NoiseModel noise = resolve_noise(cfg);
  req.base.n_states = int(cfg.get_number("ensemble.n_states", 2));
  req.base.eta = cfg.get_number("ensemble.eta", 1.0);
  req.base.snr_db = noise.snr_db();
  req.base.gamma = noise.gamma();
  req.base.delta = int(cfg.get_number("bins.delta", 4));
  req.base.cutoff = int(cfg.get_number("sdp.cutoff", 12));
  req.base.bins_kind = cfg.get_string("bins.kind", "fixed");
  req.range = cfg.get_number("bins.range", 1.5);
  req.alpha_bar = cfg.get_number("ensemble.alpha_bar", 0.5);
  req.r = cfg.get_number("sdp.r", 1.0);
  req.optimize = cfg.get_bool("sweep.optimize", false);
  req.optimizer.rounds = int(cfg.get_number("sweep.opt_rounds", 3));
  req.optimizer.tol = cfg.get_number("sweep.opt_tol", 1e-3);
  req.optimizer.scout_cutoff = int(cfg.get_number("sweep.scout_cutoff", 0));
  req.optimizer.range_min = cfg.get_number("sweep.range_min", 0.4);
  req.optimizer.range_max = cfg.get_number("sweep.range_max", 3.0);
  req.optimizer.alpha_min = cfg.get_number("sweep.alpha_min", 0.02);
  req.optimizer.alpha_max = cfg.get_number("sweep.alpha_max", 1.0);
  req.threads = int(cfg.get_number("sweep.threads", 0));
  for (const std::string& axis : cfg.get_strings("sweep.axes")) {
    std::vector<double> values = cfg.get_numbers("sweep." + axis);
    if (values.empty())
      throw std::runtime_error("sweep axis '" + axis + "' has no values");
    req.axes.push_back({axis, values});
  }
  std::vector<SweepRow> rows = run_sweep(req);
  std::string csv = sweep_to_csv(req, rows);
  write_file(fs::path(flags.out_dir) / "sweep.csv", csv);
  std::cout << csv;
  return kExitOk;
}

int cmd_simulate(const CommonFlags& flags) {
  ConfigMap cfg = load_config(flags);
  SimConfig base;
  base.snr_db = cfg.get_number("noise.snr_db", 20.0);
  base.eta = cfg.get_number("ensemble.eta", 1.0);
  base.gamma = cfg.get_number("noise.gamma", 0.0);
  base.f_mod_hz = cfg.get_number("simulate.f_mod_hz", 6e6);
  base.sample_rate_hz = cfg.get_number("simulate.sample_rate_hz", 14e6);
  base.n_samples = int(cfg.get_number("simulate.n_samples", 1000000));
  base.adc_bits = int(cfg.get_number("simulate.adc_bits", 16));
  base.adc_fullscale = cfg.get_number("simulate.adc_fullscale", 6.0);
  base.dlo_offset_hz = cfg.get_number("simulate.dlo_offset_hz", 0.0);
  base.dlo_phase = cfg.get_number("simulate.dlo_phase", 0.0);
  std::uint64_t seed = std::uint64_t(cfg.get_number("simulate.seed", 1));

  std::vector<double> amps = cfg.get_numbers("simulate.amplitudes");
  if (amps.empty()) amps = {0.0, 0.2, 0.4, 0.6};

  fs::create_directories(flags.out_dir);
  SimConfig shot = base;
  shot.shot_noise = true;
  shot.seed = seed;
  shot.label = "shot";
  fs::path shot_path = fs::path(flags.out_dir) / "shot.trc";
  write_trc(shot_path.string(), simulate_trace(shot));
  std::cout << shot_path.string() << "\n";
  for (std::size_t i = 0; i < amps.size(); ++i) {
    SimConfig probe = base;
    probe.alpha_true = amps[i];
    probe.seed = seed + 1 + i;
    std::ostringstream label;
    label << "A=" << amps[i];
    probe.label = label.str();
    fs::path path = fs::path(flags.out_dir) /
                    ("probe_" + std::to_string(i) + ".trc");
    write_trc(path.string(), simulate_trace(probe));
    std::cout << path.string() << "\n";
  }
  return kExitOk;
}

int cmd_inspect(const CommonFlags& flags, const std::string& trace_path) {
  TraceRecord trace = read_trc(trace_path);
  Eigen::VectorXd v(trace.size());
  for (int i = 0; i < trace.size(); ++i) v[i] = double(trace.samples[i]);

  PsdResult welch = welch_psd(v, trace.sample_rate_hz,
                              std::min(1 << 14, trace.size()));
  std::ostringstream psd_csv;
  psd_csv.precision(12);
  psd_csv << "freq_hz,power\n";
  for (int k = 0; k < welch.freq_hz.size(); ++k)
    psd_csv << welch.freq_hz[k] << "," << welch.power[k] << "\n";

  double mean = v.mean();
  double var = (v.array() - mean).square().sum() / double(v.size());
  std::ostringstream stats_csv;
  stats_csv.precision(12);
  stats_csv << "key,value\n";
  stats_csv << "label," << trace.label << "\n";
  stats_csv << "samples," << trace.size() << "\n";
  stats_csv << "sample_rate_hz," << trace.sample_rate_hz << "\n";
  stats_csv << "f_mod_hz," << trace.f_mod_hz << "\n";
  stats_csv << "adc_bits," << trace.adc_bits << "\n";
  stats_csv << "mean," << mean << "\n";
  stats_csv << "std," << std::sqrt(var) << "\n";
  stats_csv << "min," << v.minCoeff() << "\n";
  stats_csv << "max," << v.maxCoeff() << "\n";
  stats_csv << "clipping_fraction," << trace.clipping_fraction << "\n";
  int peak_idx = 0;
  welch.power.maxCoeff(&peak_idx);
  stats_csv << "psd_peak_hz," << welch.freq_hz[peak_idx] << "\n";

  fs::path stem = fs::path(flags.out_dir) / fs::path(trace_path).stem();
  write_file(stem.string() + ".psd.csv", psd_csv.str());
  write_file(stem.string() + ".stats.csv", stats_csv.str());
  std::cout << stem.string() << ".psd.csv\n" << stem.string() << ".stats.csv\n";
  return kExitOk;
}

int cmd_audit(const CommonFlags& flags, std::vector<double> r_values) {
  ConfigMap cfg = load_config(flags);
  if (r_values.empty()) r_values = cfg.get_numbers("audit.r_values");
  if (r_values.empty()) r_values = {1.0, 1.02, 1.05, 1.1};
  ResolvedInputs resolved = resolve_certify_inputs(cfg);
  std::vector<AuditPoint> points = amplitude_audit(resolved.inputs, r_values);
  std::ostringstream csv;
  csv.precision(12);
  csv << "r,h_min,status\n";
  for (const AuditPoint& pt : points)
    csv << pt.r << "," << pt.h_min << ","
        << (pt.infeasible ? "infeasible" : to_string(pt.status)) << "\n";
  write_file(fs::path(flags.out_dir) / "audit.csv", csv.str());
  std::cout << csv.str();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Min-entropy certification for discretized quadrature "
               "measurements probed with coherent states"};
  app.require_subcommand(1);

  CommonFlags certify_flags, sweep_flags, sim_flags, inspect_flags, audit_flags;
  std::string inspect_trace;
  std::vector<double> audit_r;

  CLI::App* certify = app.add_subcommand("certify", "Certify min-entropy from a config");
  add_common(certify, certify_flags);
  CLI::App* sweep = app.add_subcommand("sweep", "Grid sweep with optional (R, alpha) optimization");
  add_common(sweep, sweep_flags);
  CLI::App* simulate = app.add_subcommand("simulate", "Generate synthetic .trc traces");
  add_common(simulate, sim_flags);
  CLI::App* inspect = app.add_subcommand("inspect", "PSD and stats of a trace");
  add_common(inspect, inspect_flags);
  inspect->add_option("trace", inspect_trace, "Input .trc file")->required();
  CLI::App* audit = app.add_subcommand("audit", "Amplitude-scaling security audit");
  add_common(audit, audit_flags);
  audit->add_option("--r-values", audit_r, "Scaling factors to audit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (certify->parsed()) return cmd_certify(certify_flags);
    if (sweep->parsed()) return cmd_sweep(sweep_flags);
    if (simulate->parsed()) return cmd_simulate(sim_flags);
    if (inspect->parsed()) return cmd_inspect(inspect_flags, inspect_trace);
    if (audit->parsed()) return cmd_audit(audit_flags, audit_r);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}
