#pragma once

#include <random>

#include "phtmpc/control/qp.hpp"
#include "dense_qp_oracle.hpp"

namespace testing_helpers {

inline phtmpc::SpMat to_sparse(const Eigen::MatrixXd& m) {
  phtmpc::SpMat s = m.sparseView();
  s.makeCompressed();
  return s;
}

inline phtmpc::QpProblem to_sparse(const oracle::DenseQp& d) {
  phtmpc::QpProblem qp;
  qp.H = to_sparse(d.H);
  qp.g = d.g;
  qp.E = to_sparse(d.E);
  qp.f = d.f;
  qp.C = to_sparse(d.C);
  qp.d = d.d;
  qp.rho = d.rho.size() ? d.rho : Eigen::VectorXd::Zero(d.d.size());
  return qp;
}

// Strictly convex QP with a known strictly feasible point.
inline oracle::DenseQp random_qp(std::mt19937_64& rng, int n, int me, int mi, bool soft) {
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_real_distribution<double> U(0.05, 1.0);
  oracle::DenseQp q;
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = N(rng);
  q.H = M * M.transpose() / n + 0.1 * Eigen::MatrixXd::Identity(n, n);
  q.g.resize(n);
  for (auto& v : q.g) v = 3.0 * N(rng);
  Eigen::VectorXd z0(n);
  for (auto& v : z0) v = N(rng);
  q.E.resize(me, n);
  for (int i = 0; i < me; ++i)
    for (int j = 0; j < n; ++j) q.E(i, j) = N(rng);
  q.f = q.E * z0;
  q.C.resize(mi, n);
  for (int i = 0; i < mi; ++i)
    for (int j = 0; j < n; ++j) q.C(i, j) = N(rng);
  q.d.resize(mi);
  q.rho = Eigen::VectorXd::Zero(mi);
  for (int i = 0; i < mi; ++i) {
    q.d(i) = q.C.row(i).dot(z0) - U(rng);
    if (soft && i % 2 == 0) {
      q.d(i) += 2.0 * U(rng);  // may be violated at the optimum
      q.rho(i) = 0.5 + 4.0 * U(rng);
    }
  }
  return q;
}

}  // namespace testing_helpers
