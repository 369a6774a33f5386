#pragma once

// Dense reference solvers used to check the sparse interior point method.

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <optional>
#include <vector>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct DenseQp {
  MatrixXd H;
  VectorXd g;
  MatrixXd E;
  VectorXd f;
  MatrixXd C;
  VectorXd d;
  VectorXd rho;  // empty or zeros: hard rows only
};

// Equality-constrained QP via a full-pivot LU of the KKT matrix.
// Returns (z, multipliers of A).
inline std::pair<VectorXd, VectorXd> eqp(const MatrixXd& H, const VectorXd& g, const MatrixXd& A,
                                         const VectorXd& b) {
  const auto n = H.rows(), m = A.rows();
  MatrixXd K = MatrixXd::Zero(n + m, n + m);
  K.topLeftCorner(n, n) = H;
  K.topRightCorner(n, m) = -A.transpose();
  K.bottomLeftCorner(m, n) = A;
  VectorXd rhs(n + m);
  rhs << -g, b;
  const VectorXd sol = K.fullPivLu().solve(rhs);
  return {sol.head(n), sol.tail(m)};
}

// Primal active-set method for strictly convex QPs with hard rows, started
// from a feasible point.
inline VectorXd active_set(const DenseQp& qp, VectorXd z, int max_iter = 500) {
  const auto n = qp.H.rows();
  const auto me = qp.E.rows();
  std::vector<int> work;
  for (int it = 0; it < max_iter; ++it) {
    MatrixXd A(me + static_cast<long>(work.size()), n);
    if (me) A.topRows(me) = qp.E;
    for (size_t k = 0; k < work.size(); ++k) A.row(me + static_cast<long>(k)) = qp.C.row(work[k]);
    const VectorXd grad = qp.H * z + qp.g;
    auto [p, mult] = eqp(qp.H, grad, A, VectorXd::Zero(A.rows()));
    if (p.lpNorm<Eigen::Infinity>() < 1e-12) {
      int worst = -1;
      double most = -1e-12;
      for (size_t k = 0; k < work.size(); ++k) {
        const double l = mult(me + static_cast<long>(k));
        if (l < most) {
          most = l;
          worst = static_cast<int>(k);
        }
      }
      if (worst < 0) return z;
      work.erase(work.begin() + worst);
      continue;
    }
    double alpha = 1.0;
    int block = -1;
    for (int i = 0; i < qp.C.rows(); ++i) {
      if (std::find(work.begin(), work.end(), i) != work.end()) continue;
      const double cp = qp.C.row(i).dot(p);
      if (cp < -1e-14) {
        const double a = (qp.d(i) - qp.C.row(i).dot(z)) / cp;
        if (a < alpha) {
          alpha = a;
          block = i;
        }
      }
    }
    z += std::max(alpha, 0.0) * p;
    if (block >= 0) work.push_back(block);
  }
  return z;
}

// Exhaustive enumeration for small soft-constrained problems: each row is
// inactive, tight, or violated-and-penalized. The unique KKT point of the
// strictly convex problem is returned.
inline std::optional<VectorXd> enumerate_soft(const DenseQp& qp) {
  const auto n = qp.H.rows();
  const auto me = qp.E.rows();
  const int mi = static_cast<int>(qp.C.rows());
  long total = 1;
  for (int i = 0; i < mi; ++i) total *= 3;
  const double tol = 1e-9;
  std::optional<VectorXd> best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (long code = 0; code < total; ++code) {
    std::vector<int> state(static_cast<size_t>(mi));
    long c = code;
    for (int i = 0; i < mi; ++i) {
      state[static_cast<size_t>(i)] = static_cast<int>(c % 3);
      c /= 3;
    }
    std::vector<int> tight;
    VectorXd g = qp.g;
    for (int i = 0; i < mi; ++i) {
      if (state[static_cast<size_t>(i)] == 1) tight.push_back(i);
      if (state[static_cast<size_t>(i)] == 2) {
        if (qp.rho(i) <= 0.0) goto next;
        g -= qp.rho(i) * qp.C.row(i).transpose();
      }
    }
    {
      MatrixXd A(me + static_cast<long>(tight.size()), n);
      VectorXd b(A.rows());
      if (me) {
        A.topRows(me) = qp.E;
        b.head(me) = qp.f;
      }
      for (size_t k = 0; k < tight.size(); ++k) {
        A.row(me + static_cast<long>(k)) = qp.C.row(tight[k]);
        b(me + static_cast<long>(k)) = qp.d(tight[k]);
      }
      if (A.rows() > n) continue;
      Eigen::FullPivLU<MatrixXd> lu(A);
      if (A.rows() > 0 && lu.rank() < A.rows()) continue;
      auto [z, mult] = eqp(qp.H, g, A, b);
      bool ok = true;
      for (int i = 0; i < mi && ok; ++i) {
        const double r = qp.C.row(i).dot(z) - qp.d(i);
        const int st = state[static_cast<size_t>(i)];
        if (st == 0) ok = r >= -tol;
        if (st == 2) ok = r <= tol;
      }
      for (size_t k = 0; k < tight.size() && ok; ++k) {
        const double l = mult(me + static_cast<long>(k));
        const double cap = qp.rho(tight[k]) > 0.0 ? qp.rho(tight[k]) : std::numeric_limits<double>::infinity();
        ok = l >= -tol && l <= cap + tol;
      }
      if (!ok) continue;
      double obj = 0.5 * z.dot(qp.H * z) + qp.g.dot(z);
      for (int i = 0; i < mi; ++i) obj += qp.rho(i) * std::max(0.0, qp.d(i) - qp.C.row(i).dot(z));
      if (obj < best_obj) {
        best_obj = obj;
        best = z;
      }
    }
  next:;
  }
  return best;
}

}  // namespace oracle
