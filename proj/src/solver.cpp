#include "entcert/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <ostream>
#include <vector>

namespace entcert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Internal conic form:
//   minimize    c'x
//   subject to  A x = b
//               G x + s = h,   s in a product of PSD cones (svec coords)
// G is stored block-row-wise; within a block only a few contiguous column
// ranges (segments) of x are active, so each block keeps a dense local map.
// ---------------------------------------------------------------------------

struct Segment {
  int start = 0;         // first column of x
  int width = 0;
  int local_offset = 0;  // first column inside the block-local matrix
};

struct ConeBlock {
  int dim = 0;
  int len = 0;     // svec length
  int offset = 0;  // row offset into the cone vector
  int width = 0;   // total active columns
  std::vector<Segment> segments;
  Eigen::MatrixXd local;  // len x width
};

struct ConeProgram {
  Eigen::VectorXd c;
  Eigen::MatrixXd A;  // p x n
  Eigen::VectorXd b;
  Eigen::VectorXd h;
  std::vector<ConeBlock> blocks;
  int n = 0, p = 0, cone_len = 0, degree = 0;
};

void gather(const Eigen::VectorXd& x, const ConeBlock& blk, Eigen::VectorXd& out) {
  out.resize(blk.width);
  for (const Segment& s : blk.segments)
    out.segment(s.local_offset, s.width) = x.segment(s.start, s.width);
}

void scatter_add(const Eigen::VectorXd& in, const ConeBlock& blk,
                 Eigen::VectorXd& x) {
  for (const Segment& s : blk.segments)
    x.segment(s.start, s.width) += in.segment(s.local_offset, s.width);
}

Eigen::VectorXd cone_mul(const ConeProgram& P, const Eigen::VectorXd& x) {
  Eigen::VectorXd z(P.cone_len);
  Eigen::VectorXd xs;
  for (const ConeBlock& blk : P.blocks) {
    gather(x, blk, xs);
    z.segment(blk.offset, blk.len).noalias() = blk.local * xs;
  }
  return z;
}

Eigen::VectorXd cone_tmul(const ConeProgram& P, const Eigen::VectorXd& z) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(P.n);
  Eigen::VectorXd local;
  for (const ConeBlock& blk : P.blocks) {
    local.noalias() = blk.local.transpose() * z.segment(blk.offset, blk.len);
    scatter_add(local, blk, x);
  }
  return x;
}

// svec packing local to the solver (matches sdp_problem.cpp conventions).

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInvSqrt2 = 0.7071067811865475;

void svec_to_mat_ref(const double* v, int dim, Eigen::MatrixXd& m) {
  m.resize(dim, dim);
  int t = 0;
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i <= j; ++i) {
      double x = v[t++];
      if (i == j) {
        m(i, j) = x;
      } else {
        m(i, j) = x * kInvSqrt2;
        m(j, i) = m(i, j);
      }
    }
}

void mat_to_svec_ref(const Eigen::MatrixXd& m, double* v) {
  int dim = int(m.rows());
  int t = 0;
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i <= j; ++i)
      v[t++] = (i == j) ? m(i, j) : kSqrt2 * 0.5 * (m(i, j) + m(j, i));
}

// Nesterov-Todd scaling data for one PSD block. The scaling acts on svec
// vectors as W u = svec(R' U R); lambda is the (diagonal) scaled point.
struct BlockScaling {
  Eigen::MatrixXd R, Rinv;
  Eigen::VectorXd lambda;

  static BlockScaling identity(int dim) {
    BlockScaling w;
    w.R = Eigen::MatrixXd::Identity(dim, dim);
    w.Rinv = w.R;
    w.lambda = Eigen::VectorXd::Ones(dim);
    return w;
  }
};

/// out = svec(M * mat(v) * M')
void congruence(const Eigen::MatrixXd& M, const double* v, int dim,
                Eigen::MatrixXd& scratch1, Eigen::MatrixXd& scratch2,
                double* out) {
  svec_to_mat_ref(v, dim, scratch1);
  scratch2.noalias() = M * scratch1;
  scratch1.noalias() = scratch2 * M.transpose();
  mat_to_svec_ref(scratch1, out);
}

/// Cholesky with escalating jitter; iterates can graze the cone boundary
/// to within rounding after a 0.99 step.
bool chol_with_jitter(const Eigen::MatrixXd& M, Eigen::MatrixXd& L) {
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  double jitter = 1e-14 * (1.0 + M.trace() / double(M.rows()));
  for (int attempt = 0; attempt < 4 && llt.info() != Eigen::Success;
       ++attempt) {
    Eigen::MatrixXd Mj = M;
    Mj.diagonal().array() += jitter;
    llt.compute(Mj);
    jitter *= 100.0;
  }
  if (llt.info() != Eigen::Success) return false;
  L = llt.matrixL();
  return true;
}

bool compute_scaling(const Eigen::MatrixXd& S, const Eigen::MatrixXd& Z,
                     BlockScaling& w) {
  Eigen::MatrixXd Ls, Lz;
  if (!chol_with_jitter(S, Ls) || !chol_with_jitter(Z, Lz)) return false;
  Eigen::MatrixXd M = Lz.transpose() * Ls;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv.minCoeff() <= 0.0) return false;
  Eigen::VectorXd isqrt = sv.array().sqrt().inverse();
  w.R.noalias() = Ls * svd.matrixV() * isqrt.asDiagonal();
  w.Rinv.noalias() = isqrt.asDiagonal() * svd.matrixU().transpose() * Lz.transpose();
  w.lambda = sv;
  return true;
}

// ---------------------------------------------------------------------------
// KKT system
//   [ 0   A'  G'   ] [dx]   [bx]
//   [ A   0   0    ] [dy] = [by]
//   [ G   0  -W'W  ] [dz]   [bz]
// solved by eliminating dz, factoring H = G'(W'W)^{-1}G (dense LLT with
// static regularization) and a small Schur complement on the equality rows.
// One round of iterative refinement against the unregularized system.
// ---------------------------------------------------------------------------

class KktSolver {
 public:
  explicit KktSolver(const ConeProgram& P) : P_(P) {
    H_.resize(P.n, P.n);
    if (P.p > 0) {
      At_ = P.A.transpose();
      AHiAt_.resize(P.p, P.p);
    }
  }

  bool factor(const std::vector<BlockScaling>& W) {
    H_.setZero();
    Eigen::MatrixXd Y, m1, m2;
    for (std::size_t j = 0; j < P_.blocks.size(); ++j) {
      const ConeBlock& blk = P_.blocks[j];
      Y.resize(blk.len, blk.width);
      for (int a = 0; a < blk.width; ++a)
        congruence(W[j].Rinv, blk.local.col(a).data(), blk.dim, m1, m2,
                   Y.col(a).data());
      Eigen::MatrixXd Hloc = Y.transpose() * Y;
      for (const Segment& sa : blk.segments)
        for (const Segment& sb : blk.segments)
          H_.block(sa.start, sb.start, sa.width, sb.width) +=
              Hloc.block(sa.local_offset, sb.local_offset, sa.width, sb.width);
    }

    // Static regularization at the typical (not extreme) diagonal scale;
    // iterative refinement against the unregularized system removes the
    // bias. The diagonal spreads by many orders near convergence, so the
    // maximum would over-regularize the small pivots.
    deltaH_ = 1e-10;
    for (int attempt = 0; attempt < 6; ++attempt) {
      Eigen::MatrixXd Hreg = H_;
      Hreg.diagonal().array() += deltaH_;
      lltH_.compute(Hreg);
      if (lltH_.info() == Eigen::Success) break;
      deltaH_ *= 1e2;
      if (attempt == 5) return false;
    }

    if (P_.p > 0) {
      Eigen::MatrixXd HiAt = lltH_.solve(At_);
      AHiAt_.noalias() = P_.A * HiAt;
      deltaA_ = 1e-10;
      AHiAt_.diagonal().array() += deltaA_;
      lltS_.compute(AHiAt_);
      if (lltS_.info() != Eigen::Success) return false;
    }
    return true;
  }

  /// out = (W'W)^{-1} v as two sequential congruences (forming the scaling
  /// matrix product explicitly would square its condition number).
  void apply_wwinv(const std::vector<BlockScaling>& W, const Eigen::VectorXd& v,
                   Eigen::VectorXd& out) const {
    out.resize(P_.cone_len);
    Eigen::MatrixXd m1, m2;
    Eigen::VectorXd half(P_.cone_len);
    for (std::size_t j = 0; j < P_.blocks.size(); ++j) {
      const ConeBlock& blk = P_.blocks[j];
      congruence(W[j].Rinv, v.data() + blk.offset, blk.dim, m1, m2,
                 half.data() + blk.offset);
      congruence(W[j].Rinv.transpose(), half.data() + blk.offset, blk.dim, m1,
                 m2, out.data() + blk.offset);
    }
  }

  void apply_ww(const std::vector<BlockScaling>& W, const Eigen::VectorXd& v,
                Eigen::VectorXd& out) const {
    out.resize(P_.cone_len);
    Eigen::MatrixXd m1, m2;
    Eigen::VectorXd half(P_.cone_len);
    for (std::size_t j = 0; j < P_.blocks.size(); ++j) {
      const ConeBlock& blk = P_.blocks[j];
      congruence(W[j].R.transpose(), v.data() + blk.offset, blk.dim, m1, m2,
                 half.data() + blk.offset);
      congruence(W[j].R, half.data() + blk.offset, blk.dim, m1, m2,
                 out.data() + blk.offset);
    }
  }

  void solve(const std::vector<BlockScaling>& W, const Eigen::VectorXd& bx,
             const Eigen::VectorXd& by, const Eigen::VectorXd& bz,
             Eigen::VectorXd& dx, Eigen::VectorXd& dy,
             Eigen::VectorXd& dz) const {
    dx.setZero(P_.n);
    dy.setZero(P_.p);
    dz.setZero(P_.cone_len);
    Eigen::VectorXd best_dx = dx, best_dy = dy, best_dz = dz;
    double best_res = std::numeric_limits<double>::infinity();
    double scale = std::max({1.0, bx.norm(), bz.norm()});
    Eigen::VectorXd wz, tmp;

    // Solve through the reduced factorization, then refine against the
    // residuals of the full 3x3 system (the explicitly assembled H is the
    // preconditioner, not the truth, at extreme scalings).
    for (int pass = 0; pass < 5; ++pass) {
      Eigen::VectorXd e1 = bx - cone_tmul(P_, dz);
      Eigen::VectorXd e2;
      if (P_.p > 0) {
        e1.noalias() -= At_ * dy;
        e2 = by - P_.A * dx;
      }
      apply_ww(W, dz, tmp);
      Eigen::VectorXd e3 = bz - cone_mul(P_, dx) + tmp;
      double res = e1.norm() + e3.norm() + (P_.p > 0 ? e2.norm() : 0.0);
      if (res >= best_res) {
        dx = best_dx;
        dy = best_dy;
        dz = best_dz;
        break;
      }
      best_res = res;
      best_dx = dx;
      best_dy = dy;
      best_dz = dz;
      if (res < 1e-15 * scale) break;

      apply_wwinv(W, e3, wz);
      Eigen::VectorXd r1 = e1 + cone_tmul(P_, wz);
      Eigen::VectorXd t = lltH_.solve(r1);
      Eigen::VectorXd ddx;
      if (P_.p > 0) {
        Eigen::VectorXd ddy = lltS_.solve(P_.A * t - e2);
        ddx = lltH_.solve(r1 - At_ * ddy);
        dy += ddy;
      } else {
        ddx = t;
      }
      dx += ddx;
      Eigen::VectorXd gd = cone_mul(P_, ddx) - e3;
      apply_wwinv(W, gd, wz);
      dz += wz;
    }
  }

 private:
  const ConeProgram& P_;
  Eigen::MatrixXd H_;   // kept unregularized for refinement
  Eigen::MatrixXd At_;
  Eigen::MatrixXd AHiAt_;
  Eigen::LLT<Eigen::MatrixXd> lltH_;
  Eigen::LLT<Eigen::MatrixXd> lltS_;
  double deltaH_ = 0.0, deltaA_ = 0.0;
};

// ---------------------------------------------------------------------------
// Cone helpers for the interior-point iteration
// ---------------------------------------------------------------------------

double min_eigenvalue_block(const Eigen::VectorXd& v, const ConeBlock& blk,
                            Eigen::MatrixXd& scratch) {
  svec_to_mat_ref(v.data() + blk.offset, blk.dim, scratch);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scratch,
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Largest step t with lambda + t*mat(d) staying PSD (lambda diagonal).
double max_step_block(const Eigen::VectorXd& lambda, const double* d, int dim,
                      Eigen::MatrixXd& scratch) {
  svec_to_mat_ref(d, dim, scratch);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      scratch(i, j) /= std::sqrt(lambda[i] * lambda[j]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scratch,
                                                    Eigen::EigenvaluesOnly);
  double m = es.eigenvalues().minCoeff();
  return m < 0 ? 1.0 / (-m) : kInf;
}

struct IterationState {
  Eigen::VectorXd x, y, s, z;
  double tau = 1.0, kappa = 1.0;
};

}  // namespace

// ---------------------------------------------------------------------------
// Core interior-point loop (CVXOPT-style conelp on the homogeneous
// self-dual embedding with Mehrotra predictor-corrector).
// ---------------------------------------------------------------------------

namespace {

struct RawResult {
  SolveStatus status = SolveStatus::kNumericalFailure;
  Eigen::VectorXd x, y, s, z;
  double pcost = kNaN, dcost = kNaN;
  int iterations = 0;
  double pres = kNaN, dres = kNaN, relgap = kNaN;
};

RawResult conelp(const ConeProgram& P, const SolverOptions& opts) {
  RawResult out;
  const int n = P.n, p = P.p, m = P.cone_len;
  const double degree = double(P.degree) + 1.0;

  std::vector<BlockScaling> W;
  for (const ConeBlock& blk : P.blocks) W.push_back(BlockScaling::identity(blk.dim));

  KktSolver kkt(P);
  if (!kkt.factor(W)) return out;

  IterationState st;
  Eigen::MatrixXd scratch;

  // Least-norm primal/dual starting points, pushed into the cone interior.
  // The push must also fire on barely-positive spectra, or the first
  // scaling is already degenerate.
  auto push_interior = [&](Eigen::VectorXd& v) {
    double me = kInf;
    for (const ConeBlock& blk : P.blocks)
      me = std::min(me, min_eigenvalue_block(v, blk, scratch));
    double floor = 1e-6 * std::max(1.0, v.norm());
    if (me < floor) {
      double bump = 1.0 + floor - me;
      for (const ConeBlock& blk : P.blocks)
        for (int i = 0; i < blk.dim; ++i)
          v[blk.offset + svec_len(i + 1) - 1] += bump;
    }
  };
  {
    Eigen::VectorXd dx, dy, dz;
    kkt.solve(W, Eigen::VectorXd::Zero(n), P.b, P.h, dx, dy, dz);
    st.x = dx;
    st.s = -dz;
    push_interior(st.s);
    kkt.solve(W, -P.c, Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(m), dx,
              dy, dz);
    st.y = dy;
    st.z = dz;
    push_interior(st.z);
  }

  double norm_b = std::max(1.0, P.b.norm());
  double norm_h = std::max(1.0, P.h.norm());
  double norm_c = std::max(1.0, P.c.norm());

  Eigen::VectorXd x1, y1, z1;  // solution of KKT( -c, b, h ), reused per iter
  Eigen::VectorXd ds_scaled(m), dz_scaled(m), dstilde(m), lam_sq(m);
  Eigen::VectorXd bz_eff(m), dx2, dy2, dz2;

  // Ill-conditioning near convergence can spoil late iterates; keep the
  // best one seen and fall back to it on any non-certificate exit.
  IterationState best_state = st;
  double best_score = kInf;
  double best_pcost = kNaN, best_dcost = kNaN;
  double best_pres = kNaN, best_dres = kNaN, best_relgap = kNaN,
         best_gap_scaled = kNaN;
  int best_iter = 0;
  int stall_count = 0;

  auto finish_with_best = [&](SolveStatus fallback) {
    out.pres = best_pres;
    out.dres = best_dres;
    out.relgap = best_relgap;
    out.iterations = best_iter;
    out.x = best_state.x / best_state.tau;
    out.y = best_state.y / best_state.tau;
    out.s = best_state.s / best_state.tau;
    out.z = best_state.z / best_state.tau;
    out.pcost = best_pcost;
    out.dcost = best_dcost;
    bool ok = best_pres <= opts.feastol && best_dres <= opts.feastol &&
              (best_gap_scaled <= opts.abstol || best_relgap <= opts.reltol);
    out.status = ok ? SolveStatus::kOptimal : fallback;
  };

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    // Residuals of the embedding.
    Eigen::VectorXd rx = cone_tmul(P, st.z) + P.c * st.tau;
    if (p > 0) rx.noalias() += P.A.transpose() * st.y;
    Eigen::VectorXd ry = p > 0 ? Eigen::VectorXd(P.A * st.x - P.b * st.tau)
                               : Eigen::VectorXd();
    Eigen::VectorXd rz = cone_mul(P, st.x) + st.s - P.h * st.tau;
    double cx = P.c.dot(st.x);
    double by = p > 0 ? P.b.dot(st.y) : 0.0;
    double hz = P.h.dot(st.z);
    double rtau = cx + by + hz + st.kappa;

    double gap = st.s.dot(st.z);
    double mu = (gap + st.tau * st.kappa) / degree;
    double pcost = cx / st.tau;
    double dcost = -(by + hz) / st.tau;
    double pres = std::max(p > 0 ? ry.norm() / norm_b : 0.0, rz.norm() / norm_h) / st.tau;
    double dres = rx.norm() / norm_c / st.tau;
    double gap_scaled = gap / (st.tau * st.tau);
    double relgap = gap_scaled / std::max(1.0, std::abs(pcost));

    if (opts.log) {
      (*opts.log) << "it " << iter << " pcost " << pcost << " dcost " << dcost
                  << " gap " << gap_scaled << " pres " << pres << " dres "
                  << dres << " tau " << st.tau << " kappa " << st.kappa
                  << "\n";
    }

    out.iterations = iter;
    out.pres = pres;
    out.dres = dres;
    out.relgap = relgap;

    double score = std::max({pres, dres, relgap});
    if (score < 0.9999 * best_score) {
      best_score = score;
      best_state = st;
      best_pres = pres;
      best_dres = dres;
      best_relgap = relgap;
      best_gap_scaled = gap_scaled;
      best_pcost = pcost;
      best_dcost = dcost;
      best_iter = iter;
      stall_count = 0;
    } else if (++stall_count >= 10) {
      // No credible progress; typical for problems that are feasible only
      // to within roundoff of their construction.
      finish_with_best(SolveStatus::kNumericalFailure);
      return out;
    }

    if (pres <= opts.feastol && dres <= opts.feastol &&
        (gap_scaled <= opts.abstol || relgap <= opts.reltol)) {
      out.status = SolveStatus::kOptimal;
      out.x = st.x / st.tau;
      out.y = st.y / st.tau;
      out.s = st.s / st.tau;
      out.z = st.z / st.tau;
      out.pcost = pcost;
      out.dcost = dcost;
      return out;
    }

    if (score > 1e3 * best_score && best_score < kInf) {
      // Numerical degradation past the best point; no further progress is
      // credible at double precision.
      finish_with_best(SolveStatus::kNumericalFailure);
      return out;
    }

    double hz_by = hz + by;
    if (hz_by < 0) {
      Eigen::VectorXd infres = cone_tmul(P, st.z);
      if (p > 0) infres.noalias() += P.A.transpose() * st.y;
      double pinfres = infres.norm() / norm_c / (-hz_by);
      if (pinfres <= opts.feastol) {
        out.status = SolveStatus::kPrimalInfeasible;
        out.y = st.y / (-hz_by);
        out.z = st.z / (-hz_by);
        return out;
      }
    }
    if (cx < 0) {
      double d1 = p > 0 ? (P.A * st.x).norm() / norm_b : 0.0;
      double d2 = (cone_mul(P, st.x) + st.s).norm() / norm_h;
      double dinfres = std::max(d1, d2) / (-cx);
      if (dinfres <= opts.feastol) {
        out.status = SolveStatus::kDualInfeasible;
        out.x = st.x / (-cx);
        out.s = st.s / (-cx);
        return out;
      }
    }

    // Nesterov-Todd scalings.
    Eigen::MatrixXd S, Z;
    bool ok = true;
    for (std::size_t j = 0; j < P.blocks.size(); ++j) {
      const ConeBlock& blk = P.blocks[j];
      svec_to_mat_ref(st.s.data() + blk.offset, blk.dim, S);
      svec_to_mat_ref(st.z.data() + blk.offset, blk.dim, Z);
      if (!compute_scaling(S, Z, W[j])) {
        ok = false;
        break;
      }
    }
    if (!ok || !kkt.factor(W)) {
      finish_with_best(SolveStatus::kNumericalFailure);
      return out;
    }

    kkt.solve(W, -P.c, P.b, P.h, x1, y1, z1);
    double denom = P.c.dot(x1) + (p > 0 ? P.b.dot(y1) : 0.0) + P.h.dot(z1) -
                   st.kappa / st.tau;

    for (std::size_t j = 0; j < P.blocks.size(); ++j) {
      const ConeBlock& blk = P.blocks[j];
      int t = 0;
      for (int col = 0; col < blk.dim; ++col)
        for (int row = 0; row <= col; ++row, ++t)
          lam_sq[blk.offset + t] =
              (row == col) ? W[j].lambda[row] * W[j].lambda[row] : 0.0;
    }

    auto solve_direction = [&](double eta, double sigma_mu,
                               const Eigen::VectorXd* corr_s,
                               const Eigen::VectorXd* corr_z, double corr_tk,
                               Eigen::VectorXd& dx, Eigen::VectorXd& dy,
                               Eigen::VectorXd& dz, Eigen::VectorXd& ds,
                               double& dtau, double& dkappa) {
      // Scaled complementarity rhs: d_s = -lambda o lambda + sigma*mu*e - corr
      // Solve lambda o u = d_s  =>  u_ij = 2 d_ij / (lam_i + lam_j).
      for (std::size_t j = 0; j < P.blocks.size(); ++j) {
        const ConeBlock& blk = P.blocks[j];
        Eigen::MatrixXd D(blk.dim, blk.dim);
        svec_to_mat_ref(lam_sq.data() + blk.offset, blk.dim, D);
        D *= -1.0;
        D.diagonal().array() += sigma_mu;
        if (corr_s) {
          Eigen::MatrixXd Cs, Cz;
          svec_to_mat_ref(corr_s->data() + blk.offset, blk.dim, Cs);
          svec_to_mat_ref(corr_z->data() + blk.offset, blk.dim, Cz);
          D.noalias() -= 0.5 * (Cs * Cz + Cz * Cs);
        }
        for (int r = 0; r < blk.dim; ++r)
          for (int cc = 0; cc < blk.dim; ++cc)
            D(r, cc) *= 2.0 / (W[j].lambda[r] + W[j].lambda[cc]);
        mat_to_svec_ref(D, dstilde.data() + blk.offset);
      }
      double d_tk = -st.tau * st.kappa + sigma_mu - corr_tk;

      // bz_eff = -eta*rz - W'(dstilde)
      Eigen::MatrixXd m1, m2;
      for (std::size_t j = 0; j < P.blocks.size(); ++j) {
        const ConeBlock& blk = P.blocks[j];
        congruence(W[j].R, dstilde.data() + blk.offset, blk.dim, m1, m2,
                   bz_eff.data() + blk.offset);
      }
      bz_eff = -eta * rz - bz_eff;

      kkt.solve(W, -eta * rx,
                p > 0 ? Eigen::VectorXd(-eta * ry) : Eigen::VectorXd(),
                bz_eff, dx2, dy2, dz2);
      double num = -eta * rtau - d_tk / st.tau - P.c.dot(dx2) -
                   (p > 0 ? P.b.dot(dy2) : 0.0) - P.h.dot(dz2);
      dtau = num / denom;
      dx = dx2 + dtau * x1;
      dy = p > 0 ? Eigen::VectorXd(dy2 + dtau * y1) : Eigen::VectorXd();
      dz = dz2 + dtau * z1;
      dkappa = (d_tk - st.kappa * dtau) / st.tau;
      // ds = W'(dstilde - W dz)
      for (std::size_t j = 0; j < P.blocks.size(); ++j) {
        const ConeBlock& blk = P.blocks[j];
        congruence(W[j].R.transpose(), dz.data() + blk.offset, blk.dim, m1, m2,
                   dz_scaled.data() + blk.offset);
      }
      Eigen::VectorXd tmp = dstilde - dz_scaled;
      ds_scaled = tmp;  // W^{-T} ds, used for step computation
      ds.resize(m);
      for (std::size_t j = 0; j < P.blocks.size(); ++j) {
        const ConeBlock& blk = P.blocks[j];
        congruence(W[j].R, tmp.data() + blk.offset, blk.dim, m1, m2,
                   ds.data() + blk.offset);
      }
    };

    auto max_step = [&](const Eigen::VectorXd& dss, const Eigen::VectorXd& dzs,
                        double dtau, double dkappa) {
      double a = kInf;
      for (std::size_t j = 0; j < P.blocks.size(); ++j) {
        const ConeBlock& blk = P.blocks[j];
        a = std::min(a, max_step_block(W[j].lambda, dss.data() + blk.offset,
                                       blk.dim, scratch));
        a = std::min(a, max_step_block(W[j].lambda, dzs.data() + blk.offset,
                                       blk.dim, scratch));
      }
      if (dtau < 0) a = std::min(a, st.tau / -dtau);
      if (dkappa < 0) a = std::min(a, st.kappa / -dkappa);
      return a;
    };

    Eigen::VectorXd dx_a, dy_a, dz_a, ds_a;
    double dtau_a, dkappa_a;
    solve_direction(1.0, 0.0, nullptr, nullptr, 0.0, dx_a, dy_a, dz_a, ds_a,
                    dtau_a, dkappa_a);
    if (!dx_a.allFinite()) {
      finish_with_best(SolveStatus::kNumericalFailure);
      return out;
    }
    Eigen::VectorXd ds_a_scaled = ds_scaled;
    Eigen::VectorXd dz_a_scaled = dz_scaled;
    double alpha_aff = max_step(ds_a_scaled, dz_a_scaled, dtau_a, dkappa_a);
    alpha_aff = std::min(alpha_aff, 1.0);
    double sigma = std::pow(1.0 - alpha_aff, 3);
    sigma = std::min(1.0, std::max(0.0, sigma));

    Eigen::VectorXd dx_c, dy_c, dz_c, ds_c;
    double dtau_c, dkappa_c;
    solve_direction(1.0 - sigma, sigma * mu, &ds_a_scaled, &dz_a_scaled,
                    dtau_a * dkappa_a, dx_c, dy_c, dz_c, ds_c, dtau_c,
                    dkappa_c);
    if (!dx_c.allFinite()) {
      finish_with_best(SolveStatus::kNumericalFailure);
      return out;
    }
    double alpha = max_step(ds_scaled, dz_scaled, dtau_c, dkappa_c);
    alpha = std::min(1.0, 0.99 * alpha);
    if (alpha < 1e-10) {
      finish_with_best(SolveStatus::kNumericalFailure);
      return out;
    }

    // Backtrack on the embedding residuals: an inexact Newton direction can
    // look fine to the cone line search yet destroy feasibility.
    double phi0 = rx.norm() / norm_c + (p > 0 ? ry.norm() / norm_b : 0.0) +
                  rz.norm() / norm_h + std::abs(rtau);
    IterationState trial;
    auto try_step = [&](const Eigen::VectorXd& dx, const Eigen::VectorXd& dy,
                        const Eigen::VectorXd& ds, const Eigen::VectorXd& dz,
                        double dtau, double dkappa, double a0,
                        double eta_used) {
      double a = a0;
      for (int bt = 0; bt < 6; ++bt) {
        trial = st;
        trial.x += a * dx;
        if (p > 0) trial.y += a * dy;
        trial.s += a * ds;
        trial.z += a * dz;
        trial.tau += a * dtau;
        trial.kappa += a * dkappa;
        if (trial.tau > 0 && trial.kappa > 0 && trial.x.allFinite()) {
          Eigen::VectorXd trx = cone_tmul(P, trial.z) + P.c * trial.tau;
          if (p > 0) trx.noalias() += P.A.transpose() * trial.y;
          double trial_phi =
              trx.norm() / norm_c +
              (p > 0 ? (P.A * trial.x - P.b * trial.tau).norm() / norm_b
                     : 0.0) +
              (cone_mul(P, trial.x) + trial.s - P.h * trial.tau).norm() /
                  norm_h +
              std::abs(P.c.dot(trial.x) + (p > 0 ? P.b.dot(trial.y) : 0.0) +
                       P.h.dot(trial.z) + trial.kappa);
          double target = (1.0 - 0.5 * a * eta_used) * phi0 + 1e-12;
          if (trial_phi <= std::max(target, 1.5 * phi0)) return true;
        }
        a *= 0.5;
      }
      return false;
    };
    bool accepted = try_step(dx_c, dy_c, ds_c, dz_c, dtau_c, dkappa_c, alpha,
                             1.0 - sigma);
    if (!accepted) {
      // Mehrotra direction unusable at this conditioning; fall back to a
      // centering-dominated step.
      Eigen::VectorXd dx_f, dy_f, dz_f, ds_f;
      double dtau_f, dkappa_f;
      solve_direction(0.2, 0.8 * mu, nullptr, nullptr, 0.0, dx_f, dy_f, dz_f,
                      ds_f, dtau_f, dkappa_f);
      if (dx_f.allFinite()) {
        double af = std::min(1.0, 0.99 * max_step(ds_scaled, dz_scaled,
                                                  dtau_f, dkappa_f));
        accepted = try_step(dx_f, dy_f, ds_f, dz_f, dtau_f, dkappa_f, af, 0.2);
      }
    }
    if (!accepted) {
      finish_with_best(SolveStatus::kNumericalFailure);
      return out;
    }
    st = trial;
    // The embedding is homogeneous; pin the scaling ray so it cannot run
    // away near convergence. The tau/kappa ratio is what matters.
    double rescale = 2.0 / (st.tau + st.kappa);
    st.x *= rescale;
    if (p > 0) st.y *= rescale;
    st.s *= rescale;
    st.z *= rescale;
    st.tau *= rescale;
    st.kappa *= rescale;
  }

  finish_with_best(SolveStatus::kIterationLimit);
  return out;
}

// ---------------------------------------------------------------------------
// Lowering of SdpProblem into the internal conic form.
// ---------------------------------------------------------------------------

std::vector<Segment> make_segments(const std::vector<int>& cols) {
  std::vector<Segment> segs;
  int local = 0;
  std::size_t i = 0;
  while (i < cols.size()) {
    std::size_t j = i;
    while (j + 1 < cols.size() && cols[j + 1] == cols[j] + 1) ++j;
    Segment s;
    s.start = cols[i];
    s.width = int(j - i + 1);
    s.local_offset = local;
    local += s.width;
    segs.push_back(s);
    i = j + 1;
  }
  return segs;
}

struct Lowering {
  ConeProgram cone;
  bool dualized = false;  // standard form was lowered through its dual
  double sense = 1.0;     // posed objective = sense * conelp dual/primal cost
};

Lowering lower(const SdpProblem& prob) {
  prob.validate();
  Lowering lw;
  ConeProgram& P = lw.cone;

  if (prob.lmi_form()) {
    lw.dualized = false;
    int n = prob.total_vars();
    P.n = n;
    P.c = prob.maximize ? Eigen::VectorXd(-prob.objective) : prob.objective;
    lw.sense = prob.maximize ? -1.0 : 1.0;
    P.p = int(prob.equalities.rows());
    if (P.p > 0) {
      P.A = Eigen::MatrixXd(prob.equalities);
      P.b = prob.eq_rhs;
    } else {
      P.A.resize(0, n);
      P.b.resize(0);
    }
    int offset = 0;
    for (const auto& lmi : prob.lmis) {
      ConeBlock blk;
      blk.dim = lmi.dim;
      blk.len = svec_len(lmi.dim);
      blk.offset = offset;
      offset += blk.len;
      std::vector<int> cols;
      for (int r = 0; r < lmi.map.outerSize(); ++r)
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(
                 lmi.map, r);
             it; ++it)
          cols.push_back(int(it.col()));
      std::sort(cols.begin(), cols.end());
      cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
      blk.segments = make_segments(cols);
      blk.width = int(cols.size());
      blk.local.setZero(blk.len, blk.width);
      std::vector<int> col_to_local(n, -1);
      for (std::size_t i = 0; i < cols.size(); ++i) col_to_local[cols[i]] = int(i);
      for (int r = 0; r < lmi.map.outerSize(); ++r)
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(
                 lmi.map, r);
             it; ++it)
          blk.local(r, col_to_local[int(it.col())]) = it.value();
      P.blocks.push_back(std::move(blk));
    }
    P.cone_len = offset;
    P.h.resize(offset);
    int off = 0;
    for (const auto& lmi : prob.lmis) {
      P.h.segment(off, lmi.rhs.size()) = lmi.rhs;
      off += int(lmi.rhs.size());
    }
  } else {
    // Standard form, posed through the conic dual so that the reduced KKT
    // system has the (small) equality count as its dimension.
    lw.dualized = true;
    int mrows = int(prob.equalities.rows());
    int nfree = prob.free_scalars;
    int free_off = prob.free_var_offset();
    Eigen::VectorXd g = prob.maximize ? prob.objective
                                      : Eigen::VectorXd(-prob.objective);
    lw.sense = prob.maximize ? 1.0 : -1.0;
    P.n = mrows;
    P.c = -prob.eq_rhs;
    P.p = nfree;
    P.A.setZero(nfree, mrows);
    P.b = -g.segment(free_off, nfree);

    // Column offsets of the PSD variables, and a column -> block lookup.
    int nblocks = int(prob.psd_dims.size());
    std::vector<int> var_off(nblocks);
    for (int j = 0; j < nblocks; ++j) var_off[j] = prob.psd_var_offset(j);
    std::vector<std::vector<std::pair<int, std::pair<int, double>>>> entries(
        nblocks);  // block -> (eq row, (svec index, value))
    for (int r = 0; r < prob.equalities.outerSize(); ++r) {
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(
               prob.equalities, r);
           it; ++it) {
        int col = int(it.col());
        if (col >= free_off) {
          P.A(col - free_off, r) = it.value();
          continue;
        }
        int j = int(std::upper_bound(var_off.begin(), var_off.end(), col) -
                    var_off.begin()) - 1;
        entries[j].push_back({r, {col - var_off[j], it.value()}});
      }
    }
    int offset = 0;
    for (int j = 0; j < nblocks; ++j) {
      ConeBlock blk;
      blk.dim = prob.psd_dims[j];
      blk.len = svec_len(blk.dim);
      blk.offset = offset;
      offset += blk.len;
      std::vector<int> rows;
      for (const auto& e : entries[j]) rows.push_back(e.first);
      std::sort(rows.begin(), rows.end());
      rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
      blk.segments = make_segments(rows);
      blk.width = int(rows.size());
      blk.local.setZero(blk.len, blk.width);
      std::vector<int> row_to_local(mrows, -1);
      for (std::size_t i = 0; i < rows.size(); ++i) row_to_local[rows[i]] = int(i);
      for (const auto& e : entries[j])
        blk.local(e.second.first, row_to_local[e.first]) = e.second.second;
      P.blocks.push_back(std::move(blk));
    }
    P.cone_len = offset;
    P.h.resize(offset);
    for (int j = 0; j < nblocks; ++j)
      P.h.segment(P.blocks[j].offset, P.blocks[j].len) =
          -g.segment(var_off[j], P.blocks[j].len);
  }
  P.degree = 0;
  for (const ConeBlock& blk : P.blocks) P.degree += blk.dim;
  return lw;
}

}  // namespace

SolveResult solve_sdp(const SdpProblem& problem, const SolverOptions& opts) {
  Lowering lw = lower(problem);
  RawResult raw = conelp(lw.cone, opts);

  SolveResult res;
  res.iterations = raw.iterations;
  res.primal_residual = raw.pres;
  res.dual_residual = raw.dres;
  res.gap = raw.relgap;

  auto blocks_from_cone = [&](const Eigen::VectorXd& v) {
    std::vector<Eigen::MatrixXd> mats;
    for (const ConeBlock& blk : lw.cone.blocks)
      mats.push_back(svec_to_mat(v.segment(blk.offset, blk.len), blk.dim));
    return mats;
  };

  if (!lw.dualized) {
    res.status = raw.status;
    if (raw.status == SolveStatus::kOptimal ||
        raw.status == SolveStatus::kIterationLimit) {
      res.objective = lw.sense * raw.pcost + problem.objective_offset;
      res.free_values = raw.x;
      res.psd_values = blocks_from_cone(raw.z);
      res.lmi_slacks = blocks_from_cone(raw.s);
      res.eq_multipliers = raw.y;
    } else if (raw.status == SolveStatus::kPrimalInfeasible) {
      res.farkas_lmi = blocks_from_cone(raw.z);
      res.farkas_eq_y = raw.y;
    } else if (raw.status == SolveStatus::kDualInfeasible) {
      res.unbounded_free = raw.x;
    }
  } else {
    // Posed standard form solved through its conic dual: swap roles.
    switch (raw.status) {
      case SolveStatus::kPrimalInfeasible:
        res.status = SolveStatus::kDualInfeasible;
        break;
      case SolveStatus::kDualInfeasible:
        res.status = SolveStatus::kPrimalInfeasible;
        break;
      default:
        res.status = raw.status;
    }
    if (raw.status == SolveStatus::kOptimal ||
        raw.status == SolveStatus::kIterationLimit) {
      double maxval = raw.dcost;  // dual cost = posed maximurn value
      res.objective = (problem.maximize ? maxval : -maxval) +
                      problem.objective_offset;
      res.psd_values = blocks_from_cone(raw.z);
      res.free_values = raw.y;
      res.eq_multipliers = raw.x;
    } else if (raw.status == SolveStatus::kDualInfeasible) {
      // Farkas ray over the equality rows of the posed problem.
      res.farkas_eq = raw.x;
      res.unbounded_psd = blocks_from_cone(raw.s);
    } else if (raw.status == SolveStatus::kPrimalInfeasible) {
      res.unbounded_free = raw.y;
      res.unbounded_psd = blocks_from_cone(raw.z);
    }
  }
  return res;
}

FeasibilityResult check_feasibility(const SdpProblem& problem,
                                    const SolverOptions& opts) {
  SdpProblem feas = problem;
  feas.objective.setZero();
  feas.maximize = false;
  feas.objective_offset = 0.0;
  FeasibilityResult out;
  out.detail = solve_sdp(feas, opts);
  out.feasible = out.detail.status == SolveStatus::kOptimal;
  return out;
}

}  // namespace entcert
