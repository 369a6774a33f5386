#pragma once

#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "phtmpc/geometry/types.hpp"

namespace phtmpc {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// minimize   0.5 z'Hz + g'z + sum_i rho_i s_i
/// subject to E z = f,  C z + s >= d,  s >= 0,
/// where s_i is forced to zero for hard rows (rho_i == 0).
struct QpProblem {
  SpMat H;
  VecX g;
  SpMat E;
  VecX f;
  SpMat C;
  VecX d;
  VecX rho;

  int num_vars() const { return static_cast<int>(g.size()); }
  int num_eq() const { return static_cast<int>(f.size()); }
  int num_ineq() const { return static_cast<int>(d.size()); }
  /// Throws std::invalid_argument on inconsistent dimensions or negative rho.
  void validate() const;
};

enum class QpStatus { Optimal, MaxIterations, InfeasibleHard };
std::string to_string(QpStatus status);

struct QpSettings {
  int max_iterations = 80;
  double tolerance = 1e-6;
  double regularization = 1e-10;
  int refinement_steps = 3;
};

struct KktResiduals {
  double stationarity = 0.0;
  double primal_eq = 0.0;
  double primal_ineq = 0.0;
  double dual = 0.0;  ///< violation of 0 <= lambda <= rho
  double complementarity = 0.0;

  double max() const;
};

struct QpResult {
  VecX z;
  VecX y;       ///< equality multipliers
  VecX lambda;  ///< inequality multipliers
  VecX slack;   ///< soft-row slacks (zero on hard rows)
  QpStatus status = QpStatus::MaxIterations;
  int iterations = 0;
  double objective = 0.0;
  KktResiduals residuals;
  std::vector<int> violated_hard_rows;
};

/// Primal-dual interior point (Mehrotra predictor-corrector) on the reduced
/// quasi-definite KKT system, factored with a sparse LDL'.
QpResult solve_qp(const QpProblem& qp, const QpSettings& settings = {});

KktResiduals kkt_residuals(const QpProblem& qp, const VecX& z, const VecX& y, const VecX& lambda, const VecX& slack);
double qp_objective(const QpProblem& qp, const VecX& z, const VecX& slack);

}  // namespace phtmpc
