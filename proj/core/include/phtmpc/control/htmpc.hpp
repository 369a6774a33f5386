#pragma once

#include <string>
#include <utility>
#include <vector>

#include "phtmpc/control/qp.hpp"
#include "phtmpc/geometry/robot_model.hpp"
#include "phtmpc/geometry/trajectory.hpp"
#include "phtmpc/geometry/voxel_grid.hpp"
#include "phtmpc/safety/constraints.hpp"

namespace phtmpc {

struct TrackingTask {
  std::string name;
  std::string frame;
  ReferenceTrajectory reference;
  Vec6 qe = Vec6::Constant(10.0);
  Vec6 qe_dot = Vec6::Ones();
};

using TaskStack = std::vector<TrackingTask>;

/// Base-tracking task: only x, y and yaw error rows are weighted.
TrackingTask make_base_task(ReferenceTrajectory reference, double weight = 10.0, double rate_weight = 1.0);
TrackingTask make_frame_task(std::string name, std::string frame, ReferenceTrajectory reference,
                             double weight = 10.0, double rate_weight = 1.0);

struct MpcConfig {
  double horizon = 2.0;
  int nodes = 20;
  double qx = 1e-3;   ///< on velocities
  double qu = 1e-2;
  double eps_reg = 1e-8;
  double rho_state = 1e3;
  double rho_safety = 1e4;
  int sqp_iterations = 1;
  double sqp_step_tolerance = 1e-9;
  double kkt_tolerance = 1e-6;
  double eps_lex = 1e-6;
  double staleness = 0.3;  ///< s after the solve before a plan counts as stale
  double brake_tau = 0.3;
  bool self_collision = true;

  double dt() const { return horizon / nodes; }
  void validate() const;
};

/// x_{k+1} = A x_k + B u_k for the per-coordinate double integrator.
std::pair<MatX, MatX> discretize_dynamics(int dof, double dt);

struct Solution {
  double stamp = 0.0;
  std::vector<VecX> x;  ///< N + 1 states [q; v]
  std::vector<VecX> u;  ///< N accelerations
  /// envelopes[i][k] = |e_i| at stage k from task i's accepted iterate.
  std::vector<std::vector<Vec6>> envelopes;
  std::vector<double> task_costs;
  QpStatus status = QpStatus::Optimal;
  bool ok = false;
  /// Every task's SQP loop stopped on the step tolerance rather than the iteration cap.
  bool converged = true;
  double max_slack = 0.0;
  double kkt_residual = 0.0;
  double h_min = 0.0;
  int qp_iterations = 0;
  int sqp_iterations = 0;
  double solve_seconds = 0.0;
  std::string diagnostic;

  bool empty() const { return x.empty(); }
  /// Plan shifted by one node, last node repeated with zero acceleration.
  Solution shifted() const;
};

/// Everything the cascade needs besides the stack and the current state.
struct HtmpcContext {
  const RobotModel* model = nullptr;
  const VoxelGrid* edf = nullptr;  ///< null disables the environment rows
  SafetySpec safety;
  MpcConfig config;
};

/// Variable layout z = [x_0, u_0, x_1, u_1, ..., x_N].
struct StageLayout {
  int nx = 0;
  int nu = 0;
  int nodes = 0;
  int x(int k) const { return k * (nx + nu); }
  int u(int k) const { return k * (nx + nu) + nx; }
  int size() const { return nodes * (nx + nu) + nx; }
};

struct StmpcProblem {
  QpProblem qp;
  StageLayout layout;
  int lex_rows = 0;
  int safety_rows = 0;
  double h_min = 0.0;
};

/// Single-task problem for task `l` (0-based) linearized about `guess`.
/// envelopes must hold at least l entries.
StmpcProblem build_stmpc(int l, const TaskStack& stack, const std::vector<std::vector<Vec6>>& envelopes,
                         const HtmpcContext& ctx, const VecX& x0, const std::vector<VecX>& guess, double t0);

/// Nonlinear |e| of every stage of a state trajectory for one task.
std::vector<Vec6> task_errors(const TrackingTask& task, const RobotModel& model, const std::vector<VecX>& x,
                              double t0, double dt);
double task_cost(const TrackingTask& task, const RobotModel& model, const std::vector<VecX>& x, double t0,
                 double dt);

/// Lexicographic cascade. `warm` may be empty (first cycle).
Solution solve_htmpc(const TaskStack& stack, const VecX& x0, double t0, const HtmpcContext& ctx,
                     const Solution& warm = {});

struct Command {
  VecX v;
  bool braking = false;
};

/// Interpolated plan velocity at `elapsed`; exponential braking from
/// `v_now` when the plan failed, or from the plan's last fresh velocity once stale.
Command extract_command(const Solution& solution, double elapsed, const MpcConfig& config, const VecX& v_now);

}  // namespace phtmpc
