#include "entcert/sweep.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace entcert {

int thread_cap() {
  if (const char* env = std::getenv("ENTROPY_CERT_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? int(hc) : 1;
}

void parallel_for(int count, const std::function<void(int)>& fn, int threads) {
  if (threads <= 0) threads = thread_cap();
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

ModelEvaluation evaluate_model_point(const ModelPoint& point, double range,
                                     double alpha_bar,
                                     const SolverOptions& solver) {
  ModelEvaluation out;
  try {
    NoiseModel noise = NoiseModel::from_snr_db(point.snr_db, point.gamma);
    BinningScheme bins =
        point.bins_kind == "equal-probability"
            ? BinningScheme::equal_probability(1 << point.delta, noise.sigma_t())
            : BinningScheme::fixed_width(point.delta, range);
    ProbeEnsemble ensemble =
        ProbeEnsemble::equally_spaced(alpha_bar, point.n_states, point.eta);
    OutcomeDistribution observed = model_distribution(ensemble, noise, bins);

    CertifyInputs inputs{ensemble, bins, point.cutoff, observed, 1e-9, solver};
    CertifyOutcome res = certify(inputs, 1.0);
    out.status = res.status;
    out.infeasible = res.infeasible;
    if (res.status == SolveStatus::kOptimal) {
      out.h_min = res.report.h_min;
      out.p_g = res.report.p_g;
    }
  } catch (const std::exception&) {
    out.status = SolveStatus::kNumericalFailure;
  }
  return out;
}

namespace {

struct GoldenResult {
  double x = 0.0;
  double value = -1.0;
};

/// Golden-section maximization that tracks the best evaluated point.
GoldenResult golden_max(double lo, double hi, double tol, int* evals,
                        const std::function<double(double)>& f) {
  const double invphi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  *evals += 2;
  GoldenResult best = f1 >= f2 ? GoldenResult{x1, f1} : GoldenResult{x2, f2};
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
      ++*evals;
      if (f2 > best.value) best = {x2, f2};
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
      ++*evals;
      if (f1 > best.value) best = {x1, f1};
    }
  }
  return best;
}

}  // namespace

OptimizedPoint optimize_settings(const ModelPoint& point,
                                 const OptimizeOptions& opts) {
  ModelPoint scout = point;
  if (opts.scout_cutoff > 0)
    scout.cutoff = std::min(point.cutoff, opts.scout_cutoff);

  OptimizedPoint out;
  int evals = 0;
  auto h_at = [&](double range, double alpha_bar) {
    ModelEvaluation ev = evaluate_model_point(scout, range, alpha_bar,
                                              opts.solver);
    return ev.status == SolveStatus::kOptimal ? ev.h_min : -1.0;
  };

  double range = 0.5 * (opts.range_min + opts.range_max);
  double alpha = 0.5 * (opts.alpha_min + opts.alpha_max);
  // Coarse joint seed: 4x4 grid.
  double best_seed = -2.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      double rr = opts.range_min +
                  (opts.range_max - opts.range_min) * (0.5 + i) / 4.0;
      double aa = opts.alpha_min +
                  (opts.alpha_max - opts.alpha_min) * (0.5 + j) / 4.0;
      double v = h_at(rr, aa);
      ++evals;
      if (v > best_seed) {
        best_seed = v;
        range = rr;
        alpha = aa;
      }
    }
  }

  for (int round = 0; round < opts.rounds; ++round) {
    GoldenResult r = golden_max(opts.range_min, opts.range_max, opts.tol,
                                &evals, [&](double x) { return h_at(x, alpha); });
    if (r.value >= 0) range = r.x;
    GoldenResult a = golden_max(opts.alpha_min, opts.alpha_max, opts.tol,
                                &evals, [&](double x) { return h_at(range, x); });
    if (a.value >= 0) alpha = a.x;
  }

  out.range = range;
  out.alpha_bar = alpha;
  out.evaluations = evals;
  out.value = evaluate_model_point(point, range, alpha, opts.solver);
  return out;
}

namespace {

void apply_axis(ModelPoint& point, double& range, double& alpha_bar, double& r,
                const std::string& name, double value) {
  if (name == "snr_db") {
    point.snr_db = value;
  } else if (name == "delta") {
    point.delta = int(std::lround(value));
  } else if (name == "n_states") {
    point.n_states = int(std::lround(value));
  } else if (name == "gamma") {
    point.gamma = value;
  } else if (name == "eta") {
    point.eta = value;
  } else if (name == "cutoff") {
    point.cutoff = int(std::lround(value));
  } else if (name == "range") {
    range = value;
  } else if (name == "alpha_bar") {
    alpha_bar = value;
  } else if (name == "r") {
    r = value;
  } else {
    throw std::invalid_argument("sweep: unknown axis '" + name + "'");
  }
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepRequest& request) {
  if (request.axes.empty()) throw std::invalid_argument("sweep: no axes");
  std::size_t total = 1;
  for (const auto& axis : request.axes) {
    if (axis.values.empty())
      throw std::invalid_argument("sweep: empty axis '" + axis.name + "'");
    total *= axis.values.size();
  }
  std::vector<SweepRow> rows(total);
  parallel_for(int(total), [&](int index) {
    ModelPoint point = request.base;
    double range = request.range;
    double alpha_bar = request.alpha_bar;
    double r = request.r;
    SweepRow& row = rows[index];
    std::size_t rem = std::size_t(index);
    for (const auto& axis : request.axes) {
      double value = axis.values[rem % axis.values.size()];
      rem /= axis.values.size();
      row.coords.push_back(value);
      apply_axis(point, range, alpha_bar, r, axis.name, value);
    }
    ModelEvaluation ev;
    if (request.optimize) {
      OptimizedPoint opt = optimize_settings(point, request.optimizer);
      ev = opt.value;
      range = opt.range;
      alpha_bar = opt.alpha_bar;
    } else {
      ev = evaluate_model_point(point, range, alpha_bar,
                                request.optimizer.solver);
    }
    if (r != 1.0 && ev.status == SolveStatus::kOptimal) {
      // Re-certify with scaled assumed amplitudes against the r=1 data.
      NoiseModel noise = NoiseModel::from_snr_db(point.snr_db, point.gamma);
      BinningScheme bins =
          point.bins_kind == "equal-probability"
              ? BinningScheme::equal_probability(1 << point.delta,
                                                 noise.sigma_t())
              : BinningScheme::fixed_width(point.delta, range);
      ProbeEnsemble ensemble =
          ProbeEnsemble::equally_spaced(alpha_bar, point.n_states, point.eta);
      OutcomeDistribution observed = model_distribution(ensemble, noise, bins);
      CertifyInputs inputs{ensemble, bins, point.cutoff, observed, 1e-9,
                           request.optimizer.solver};
      CertifyOutcome res = certify(inputs, r);
      ev.status = res.status;
      ev.infeasible = res.infeasible;
      ev.h_min = res.status == SolveStatus::kOptimal ? res.report.h_min : 0.0;
      ev.p_g = res.status == SolveStatus::kOptimal ? res.report.p_g : 1.0;
    }
    row.h_min = ev.h_min;
    row.p_g = ev.p_g;
    row.status = ev.infeasible ? "infeasible" : to_string(ev.status);
    row.range = range;
    row.alpha_bar = alpha_bar;
  }, request.threads);
  return rows;
}

std::string sweep_to_csv(const SweepRequest& request,
                         const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  for (const auto& axis : request.axes) out << axis.name << ",";
  out << "h_min,p_g,status,range,alpha_bar\n";
  out.precision(12);
  for (const auto& row : rows) {
    for (double c : row.coords) out << c << ",";
    out << row.h_min << "," << row.p_g << "," << row.status << "," << row.range
        << "," << row.alpha_bar << "\n";
  }
  return out.str();
}

}  // namespace entcert
