#pragma once

#include <functional>
#include <string>
#include <vector>

#include "entcert/certification.hpp"

namespace entcert {

/// Worker cap: ENTROPY_CERT_THREADS when set, else hardware concurrency.
int thread_cap();

/// Runs fn(0..count-1) on a bounded worker pool; results must be written to
/// pre-sized slots so ordering is deterministic regardless of completion.
void parallel_for(int count, const std::function<void(int)>& fn,
                  int threads = 0);

/// One modeled operating point of the coherent protocol.
struct ModelPoint {
  int n_states = 2;
  double eta = 1.0;
  double snr_db = 20.0;
  double gamma = 0.0;
  int delta = 4;
  int cutoff = 20;
  std::string bins_kind = "fixed";  // or "equal-probability"
};

struct ModelEvaluation {
  double h_min = 0.0;
  double p_g = 1.0;
  SolveStatus status = SolveStatus::kNumericalFailure;
  bool infeasible = false;
};

/// Solve the dual certification program on the modeled distribution at a
/// fixed range and maximum amplitude.
ModelEvaluation evaluate_model_point(const ModelPoint& point, double range,
                                     double alpha_bar,
                                     const SolverOptions& solver = {});

struct OptimizeOptions {
  double range_min = 0.4, range_max = 3.0;
  double alpha_min = 0.02, alpha_max = 1.0;
  int rounds = 3;        // coordinate-descent passes
  double tol = 1e-3;     // golden-section parameter tolerance
  int scout_cutoff = 0;  // 0: optimize at the point's own cutoff
  SolverOptions solver;
};

struct OptimizedPoint {
  double range = 0.0, alpha_bar = 0.0;
  ModelEvaluation value;          // at the point's own cutoff
  int evaluations = 0;
};

/// Coordinate-wise golden-section maximization of H_min over (R, alpha_bar),
/// optionally at a reduced scout cutoff, with a final evaluation at the
/// point's own cutoff.
OptimizedPoint optimize_settings(const ModelPoint& point,
                                 const OptimizeOptions& opts = {});

/// Cartesian sweep over named axes (snr_db, delta, n_states, gamma, range,
/// alpha_bar, cutoff, r). Points run on the worker pool; rows come back in
/// grid order.
struct SweepAxis {
  std::string name;
  std::vector<double> values;
};

struct SweepRow {
  std::vector<double> coords;
  double h_min = 0.0;
  double p_g = 1.0;
  std::string status;
  double range = 0.0, alpha_bar = 0.0;  // values used (after optimization)
};

struct SweepRequest {
  ModelPoint base;
  double range = 1.5, alpha_bar = 0.5, r = 1.0;
  std::vector<SweepAxis> axes;
  bool optimize = false;
  OptimizeOptions optimizer;
  int threads = 0;
};

std::vector<SweepRow> run_sweep(const SweepRequest& request);

/// CSV emission with a header row.
std::string sweep_to_csv(const SweepRequest& request,
                         const std::vector<SweepRow>& rows);

}  // namespace entcert
