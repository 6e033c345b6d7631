#include <algorithm>
#include <cmath>
#include <limits>

#include "mlbn/qp.hpp"

namespace mlbn::qp {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Factorization state of the dual method for the current active set:
// with L = chol(D) and B = L^-1 N_A = Q R, J = L^-T Q.
struct ActiveFactor {
  VectorXd inv_sqrt_diag;  // used when D is diagonal
  Eigen::LLT<MatrixXd> llt;
  bool diagonal = false;
  Eigen::HouseholderQR<MatrixXd> qr;
  MatrixXd b;  // L^-1 N_A
  std::size_t q = 0;

  VectorXd apply_linv(const VectorXd& v) const {
    if (diagonal) return inv_sqrt_diag.cwiseProduct(v);
    return llt.matrixL().solve(v);
  }
  VectorXd apply_linv_t(const VectorXd& v) const {
    if (diagonal) return inv_sqrt_diag.cwiseProduct(v);
    return llt.matrixU().solve(v);
  }
};

void refactor(ActiveFactor& f, const MatrixXd& a, const std::vector<std::size_t>& active) {
  const auto n = a.rows();
  f.q = active.size();
  f.b.resize(n, static_cast<Eigen::Index>(f.q));
  for (std::size_t c = 0; c < f.q; ++c) f.b.col(static_cast<Eigen::Index>(c)) = f.apply_linv(a.col(static_cast<Eigen::Index>(active[c])));
  if (f.q > 0) f.qr.compute(f.b);
}

// Re-solves the KKT system of the final active set directly (null-space method).
// The dual iterations travel through D^-1 d, which is huge when D is nearly
// singular; the direct solve removes that cancellation. Returns false when the
// refined point is not primal and dual feasible.
bool refine(const QpCanonical& p, const std::vector<std::size_t>& active, VectorXd& x, std::vector<double>& u) {
  const auto n = p.D.rows();
  const auto q = static_cast<Eigen::Index>(active.size());
  MatrixXd na(n, q);
  VectorXd ba(q);
  for (Eigen::Index c = 0; c < q; ++c) {
    na.col(c) = p.A.col(static_cast<Eigen::Index>(active[static_cast<std::size_t>(c)]));
    ba[c] = p.b0[static_cast<Eigen::Index>(active[static_cast<std::size_t>(c)])];
  }
  VectorXd xr = VectorXd::Zero(n);
  VectorXd ur = VectorXd::Zero(q);
  if (q > 0) {
    Eigen::HouseholderQR<MatrixXd> qr(na);
    const MatrixXd qfull = qr.householderQ();
    const MatrixXd r = qr.matrixQR().topLeftCorner(q, q).triangularView<Eigen::Upper>();
    if (r.diagonal().cwiseAbs().minCoeff() <= 1e-12 * r.diagonal().cwiseAbs().maxCoeff()) return false;
    const MatrixXd q1 = qfull.leftCols(q);
    const MatrixXd z = qfull.rightCols(n - q);
    const VectorXd xp = q1 * r.transpose().triangularView<Eigen::Lower>().solve(ba);
    xr = xp;
    if (n > q) {
      const MatrixXd h = z.transpose() * p.D * z;
      const VectorXd w = h.llt().solve(z.transpose() * (p.d - p.D * xp));
      xr += z * w;
    }
    ur = r.triangularView<Eigen::Upper>().solve(q1.transpose() * (p.D * xr - p.d));
  } else {
    xr = p.D.llt().solve(p.d);
  }
  for (Eigen::Index c = 0; c < q; ++c)
    if (ur[c] < -1e-10 * (1.0 + ur.cwiseAbs().maxCoeff())) return false;
  for (Eigen::Index i = 0; i < p.A.cols(); ++i) {
    const double lhs = p.A.col(i).dot(xr);
    if (lhs - p.b0[i] < -1e-10 * (1.0 + std::abs(lhs) + std::abs(p.b0[i]))) return false;
  }
  x = xr;
  for (Eigen::Index c = 0; c < q; ++c) u[static_cast<std::size_t>(c)] = std::max(0.0, ur[c]);
  return true;
}

}  // namespace

void QpCanonical::validate() const {
  const auto n = D.rows();
  if (n == 0 || D.cols() != n) throw std::invalid_argument("qp: D must be square and non-empty");
  if (d.size() != n) throw std::invalid_argument("qp: d has the wrong length");
  if (A.rows() != n && A.cols() != 0) throw std::invalid_argument("qp: A must have one row per variable");
  if (b0.size() != A.cols()) throw std::invalid_argument("qp: b0 needs one entry per constraint column");
  if (!D.isApprox(D.transpose(), 1e-12)) throw std::invalid_argument("qp: D must be symmetric");
  if (!D.allFinite() || !d.allFinite() || !A.allFinite() || !b0.allFinite()) {
    throw std::invalid_argument("qp: non-finite problem data");
  }
}

double QpCanonical::objective(const VectorXd& b) const { return -d.dot(b) + 0.5 * b.dot(D * b); }

double GenericKkt::max() const {
  return std::max({stationarity, primal_violation, dual_violation, complementarity});
}

GenericSolution solve_qp_generic(const QpCanonical& problem, std::size_t max_iterations) {
  problem.validate();
  const MatrixXd& a = problem.A;
  const auto n = problem.D.rows();
  const auto m = static_cast<std::size_t>(a.cols());
  if (max_iterations == 0) max_iterations = 50 * (static_cast<std::size_t>(n) + m) + 100;

  ActiveFactor f;
  const MatrixXd off_diag = problem.D - MatrixXd(problem.D.diagonal().asDiagonal());
  f.diagonal = off_diag.cwiseAbs().maxCoeff() == 0.0;
  if (f.diagonal) {
    if ((problem.D.diagonal().array() <= 0.0).any()) throw std::invalid_argument("qp: D must be positive definite");
    f.inv_sqrt_diag = problem.D.diagonal().cwiseSqrt().cwiseInverse();
  } else {
    f.llt.compute(problem.D);
    if (f.llt.info() != Eigen::Success) throw std::invalid_argument("qp: D must be positive definite");
  }

  // Unconstrained minimizer of ½xᵀDx − dᵀx.
  VectorXd x = f.apply_linv_t(f.apply_linv(problem.d));
  std::vector<std::size_t> active;
  std::vector<double> u;
  std::vector<char> is_active(m, 0);
  std::size_t iterations = 0;

  auto slack = [&](std::size_t i) { return a.col(static_cast<Eigen::Index>(i)).dot(x) - problem.b0[static_cast<Eigen::Index>(i)]; };
  auto scale = [&](std::size_t i) {
    return 1.0 + std::abs(problem.b0[static_cast<Eigen::Index>(i)]) +
           a.col(static_cast<Eigen::Index>(i)).cwiseAbs().dot(x.cwiseAbs());
  };

  for (;;) {
    // Step 1: most violated constraint.
    std::size_t p = m;
    double worst = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (is_active[i]) continue;
      const double s = slack(i) / scale(i);
      if (s < -1e-14 && s < worst) {
        worst = s;
        p = i;
      }
    }
    if (p == m) break;

    const VectorXd np = a.col(static_cast<Eigen::Index>(p));
    double u_new = 0.0;
    for (;;) {
      if (++iterations > max_iterations) throw nonconvergence_error("qp: iteration limit reached");
      // Step 2a: primal and dual step directions.
      const VectorXd w = f.apply_linv(np);
      VectorXd d1, proj = w;
      if (f.q > 0) {
        const VectorXd qtw = f.qr.householderQ().adjoint() * w;
        d1 = qtw.head(static_cast<Eigen::Index>(f.q));
        VectorXd tail = qtw;
        tail.head(static_cast<Eigen::Index>(f.q)).setZero();
        proj = f.qr.householderQ() * tail;
      }
      const VectorXd z = f.apply_linv_t(proj);
      VectorXd r;
      if (f.q > 0) {
        r = f.qr.matrixQR()
                .topLeftCorner(static_cast<Eigen::Index>(f.q), static_cast<Eigen::Index>(f.q))
                .triangularView<Eigen::Upper>()
                .solve(d1);
      }

      // Step 2b: partial (dual) and full (primal) step lengths.
      double t1 = kInf;
      std::size_t drop = 0;
      for (std::size_t c = 0; c < f.q; ++c) {
        if (r[static_cast<Eigen::Index>(c)] > 0.0) {
          const double t = u[c] / r[static_cast<Eigen::Index>(c)];
          if (t < t1) {
            t1 = t;
            drop = c;
          }
        }
      }
      const bool dependent = proj.norm() <= 1e-13 * w.norm();
      const double znp = z.dot(np);
      const double t2 = dependent || znp <= 0.0 ? kInf : -slack(p) / znp;
      const double t = std::min(t1, t2);

      // Step 2c.
      if (t == kInf) throw infeasible_error("qp: constraints are infeasible");
      for (std::size_t c = 0; c < f.q; ++c) u[c] -= t * r[static_cast<Eigen::Index>(c)];
      u_new += t;
      if (t2 != kInf) x += t * z;
      if (t == t2) {
        active.push_back(p);
        u.push_back(u_new);
        is_active[p] = 1;
        refactor(f, a, active);
        break;
      }
      is_active[active[drop]] = 0;
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(drop));
      u.erase(u.begin() + static_cast<std::ptrdiff_t>(drop));
      refactor(f, a, active);
    }
  }

  refine(problem, active, x, u);

  GenericSolution sol;
  sol.b = x;
  sol.multipliers = VectorXd::Zero(static_cast<Eigen::Index>(m));
  for (std::size_t c = 0; c < active.size(); ++c) sol.multipliers[static_cast<Eigen::Index>(active[c])] = std::max(0.0, u[c]);
  sol.active_set = active;
  std::sort(sol.active_set.begin(), sol.active_set.end());
  sol.objective = problem.objective(x);
  sol.iterations = iterations;
  return sol;
}

GenericKkt generic_kkt(const QpCanonical& problem, const GenericSolution& sol) {
  const VectorXd dx = problem.D * sol.b;
  const VectorXd au = problem.A * sol.multipliers;
  const VectorXd resid = dx - problem.d - au;
  GenericKkt k;
  k.stationarity = resid.cwiseAbs().maxCoeff() /
                   (1.0 + dx.cwiseAbs().maxCoeff() + problem.d.cwiseAbs().maxCoeff() + au.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < problem.A.cols(); ++i) {
    const double lhs = problem.A.col(i).dot(sol.b);
    const double s = lhs - problem.b0[i];
    const double mag = 1.0 + std::abs(lhs) + std::abs(problem.b0[i]);
    const double mu = sol.multipliers[i];
    k.primal_violation = std::max(k.primal_violation, std::max(0.0, -s) / mag);
    k.dual_violation = std::max(k.dual_violation, std::max(0.0, -mu));
    k.complementarity = std::max(k.complementarity, std::abs(mu * s) / (mag * (1.0 + std::abs(mu))));
  }
  return k;
}

}  // namespace mlbn::qp
