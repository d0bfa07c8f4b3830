#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>
#include <sstream>

#include "entcert/sdp_problem.hpp"
#include "entcert/solver.hpp"

using namespace entcert;

namespace {

using Triplet = Eigen::Triplet<double>;

SdpProblem min_trace_with_pin() {
  // minimize Tr X s.t. X >= 0 (3x3), X_00 = 1.
  SdpProblem p;
  p.psd_dims = {3};
  p.free_scalars = 0;
  std::vector<Triplet> trips{{0, svec_index(0, 0, 3), 1.0}};
  p.equalities.resize(1, p.total_vars());
  p.equalities.setFromTriplets(trips.begin(), trips.end());
  p.eq_rhs = Eigen::VectorXd::Ones(1);
  p.objective = Eigen::VectorXd::Zero(p.total_vars());
  for (int i = 0; i < 3; ++i) p.objective[svec_index(i, i, 3)] = 1.0;
  p.maximize = false;
  return p;
}

}  // namespace

TEST_CASE("svec round trip and inner products") {
  Eigen::MatrixXd m(3, 3);
  m << 1, 2, 3, 2, 5, -1, 3, -1, 4;
  Eigen::VectorXd v = mat_to_svec(m);
  CHECK((svec_to_mat(v, 3) - m).cwiseAbs().maxCoeff() < 1e-15);
  Eigen::MatrixXd n = Eigen::MatrixXd::Random(3, 3);
  n = (n + n.transpose()).eval();
  CHECK(mat_to_svec(n).dot(v) ==
        doctest::Approx((m * n).trace()).epsilon(1e-12));
}

TEST_CASE("minimal trace with pinned corner") {
  SdpProblem p = min_trace_with_pin();
  SolveResult res = solve_sdp(p);
  REQUIRE(res.status == SolveStatus::kOptimal);
  CHECK(res.objective == doctest::Approx(1.0).epsilon(1e-7));
  REQUIRE(res.psd_values.size() == 1);
  CHECK(res.psd_values[0](0, 0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(res.psd_values[0](1, 1) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("LMI form: smallest x with [[x,1],[1,x]] psd") {
  // minimize x s.t. -[[x, 1], [1, x]] <= 0, solved at x = 1.
  SdpProblem p;
  p.free_scalars = 1;
  SdpProblem::LmiBlock lmi;
  lmi.dim = 2;
  std::vector<Triplet> trips{{svec_index(0, 0, 2), 0, -1.0},
                             {svec_index(1, 1, 2), 0, -1.0}};
  lmi.map.resize(svec_len(2), 1);
  lmi.map.setFromTriplets(trips.begin(), trips.end());
  Eigen::MatrixXd off(2, 2);
  off << 0, 1, 1, 0;
  lmi.rhs = mat_to_svec(off);
  p.lmis.push_back(lmi);
  p.objective = Eigen::VectorXd::Ones(1);
  SolveResult res = solve_sdp(p);
  REQUIRE(res.status == SolveStatus::kOptimal);
  CHECK(res.objective == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(res.free_values[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("equality-constrained LMI problem") {
  // minimize x + y s.t. diag(x, y) >= I and x - y = 1 -> x = 2, y = 1.
  SdpProblem p;
  p.free_scalars = 2;
  SdpProblem::LmiBlock lmi;
  lmi.dim = 2;
  std::vector<Triplet> trips{{svec_index(0, 0, 2), 0, -1.0},
                             {svec_index(1, 1, 2), 1, -1.0}};
  lmi.map.resize(svec_len(2), 2);
  lmi.map.setFromTriplets(trips.begin(), trips.end());
  lmi.rhs = mat_to_svec(-Eigen::MatrixXd::Identity(2, 2));
  p.lmis.push_back(lmi);
  std::vector<Triplet> eq{{0, 0, 1.0}, {0, 1, -1.0}};
  p.equalities.resize(1, 2);
  p.equalities.setFromTriplets(eq.begin(), eq.end());
  p.eq_rhs = Eigen::VectorXd::Ones(1);
  p.objective = Eigen::VectorXd::Ones(2);
  SolveResult res = solve_sdp(p);
  REQUIRE(res.status == SolveStatus::kOptimal);
  CHECK(res.free_values[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(res.free_values[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("infeasible equality system is certified") {
  // X >= 0 with X_00 = -1 is infeasible (Farkas ray exists).
  SdpProblem p = min_trace_with_pin();
  p.eq_rhs[0] = -1.0;
  SolveResult res = solve_sdp(p);
  REQUIRE(res.status == SolveStatus::kPrimalInfeasible);
  REQUIRE(res.farkas_eq.size() == 1);
  // Farkas: mat(E' w) <= 0 and rhs' w = 1.
  double w = res.farkas_eq[0];
  CHECK(p.eq_rhs.dot(res.farkas_eq) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(w <= 1e-8);  // E' w = w * e_00, must be negative semidefinite

  FeasibilityResult feas = check_feasibility(p);
  CHECK_FALSE(feas.feasible);
  CHECK(feas.detail.status == SolveStatus::kPrimalInfeasible);
  p.eq_rhs[0] = 1.0;
  CHECK(check_feasibility(p).feasible);
}

TEST_CASE("unbounded problem reports dual infeasibility with a ray") {
  // maximize X_11 s.t. X >= 0, X_00 = 1: unbounded above.
  SdpProblem p = min_trace_with_pin();
  p.objective.setZero();
  p.objective[svec_index(1, 1, 3)] = 1.0;
  p.maximize = true;
  SolveResult res = solve_sdp(p);
  CHECK(res.status == SolveStatus::kDualInfeasible);
}

TEST_CASE("random feasible equality problems satisfy the residual contract") {
  std::mt19937 rng(123);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 12; ++trial) {
    int dim = 2 + trial % 3;
    int m = 2 + trial % 4;
    // Random X0 > 0 gives a feasible rhs for random constraint matrices.
    Eigen::MatrixXd base(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) base(i, j) = gauss(rng);
    Eigen::MatrixXd x0 =
        base * base.transpose() + 0.1 * Eigen::MatrixXd::Identity(dim, dim);
    x0 /= x0.trace();  // unit scale, as in the certification problems
    SdpProblem p;
    p.psd_dims = {dim};
    std::vector<Triplet> trips;
    p.eq_rhs.resize(m);
    std::vector<Eigen::MatrixXd> constraint_mats;
    for (int r = 0; r < m; ++r) {
      Eigen::MatrixXd c(dim, dim);
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) c(i, j) = gauss(rng);
      c = (0.5 * (c + c.transpose())).eval();
      c /= c.norm();
      constraint_mats.push_back(c);
      Eigen::VectorXd row = mat_to_svec(c);
      for (int t = 0; t < row.size(); ++t)
        if (row[t] != 0.0) trips.emplace_back(r, t, row[t]);
      p.eq_rhs[r] = row.dot(mat_to_svec(x0));
    }
    p.equalities.resize(m, p.total_vars());
    p.equalities.setFromTriplets(trips.begin(), trips.end());
    p.objective = mat_to_svec(Eigen::MatrixXd::Identity(dim, dim));
    p.maximize = false;
    // Tight tolerances: the returned-solution contract below is absolute,
    // and these random instances are not unit-scale.
    SolverOptions opts;
    opts.feastol = 2e-8;
    SolveResult res = solve_sdp(p, opts);
    REQUIRE(res.status == SolveStatus::kOptimal);
    // Equalities to 1e-7, PSD blocks to -1e-8.
    Eigen::VectorXd xs = mat_to_svec(res.psd_values[0]);
    for (int r = 0; r < m; ++r) {
      double lhs = mat_to_svec(constraint_mats[r]).dot(xs);
      CHECK(std::abs(lhs - p.eq_rhs[r]) < 1e-7);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(res.psd_values[0]);
    CHECK(es.eigenvalues().minCoeff() > -1e-8);
  }
}

TEST_CASE("identical solves are bit-for-bit deterministic") {
  SdpProblem p = min_trace_with_pin();
  SolveResult a = solve_sdp(p);
  SolveResult b = solve_sdp(p);
  CHECK(a.objective == b.objective);
  CHECK(a.iterations == b.iterations);
  CHECK((a.psd_values[0] - b.psd_values[0]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("iteration log emits residuals") {
  SdpProblem p = min_trace_with_pin();
  std::ostringstream log;
  SolverOptions opts;
  opts.log = &log;
  solve_sdp(p, opts);
  CHECK(log.str().find("pres") != std::string::npos);
  CHECK(log.str().find("gap") != std::string::npos);
}
