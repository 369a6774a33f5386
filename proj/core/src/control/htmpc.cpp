#include "phtmpc/control/htmpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "phtmpc/errors.hpp"

namespace phtmpc {

TrackingTask make_base_task(ReferenceTrajectory reference, double weight, double rate_weight) {
  TrackingTask t;
  t.name = "base";
  t.frame = "base";
  t.reference = std::move(reference);
  t.qe << weight, weight, 0.0, 0.0, 0.0, weight;
  t.qe_dot << rate_weight, rate_weight, 0.0, 0.0, 0.0, rate_weight;
  return t;
}

TrackingTask make_frame_task(std::string name, std::string frame, ReferenceTrajectory reference, double weight,
                             double rate_weight) {
  TrackingTask t;
  t.name = std::move(name);
  t.frame = std::move(frame);
  t.reference = std::move(reference);
  t.qe = Vec6::Constant(weight);
  t.qe_dot = Vec6::Constant(rate_weight);
  return t;
}

void MpcConfig::validate() const {
  if (!(horizon > 0.0)) throw ConfigError("mpc: horizon must be positive");
  if (nodes < 2) throw ConfigError("mpc: need at least two nodes");
  if (!(rho_state > 0.0) || !(rho_safety > 0.0)) throw ConfigError("mpc: slack penalties must be positive");
  if (qx < 0.0 || qu < 0.0 || eps_reg < 0.0) throw ConfigError("mpc: weights must be non-negative");
  if (sqp_iterations < 1) throw ConfigError("mpc: need at least one SQP iteration");
  if (!(brake_tau > 0.0) || !(staleness > 0.0)) throw ConfigError("mpc: braking parameters must be positive");
}

std::pair<MatX, MatX> discretize_dynamics(int dof, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("discretize_dynamics: dt must be positive");
  const int n = dof;
  MatX a = MatX::Identity(2 * n, 2 * n);
  a.topRightCorner(n, n) = dt * MatX::Identity(n, n);
  MatX b = MatX::Zero(2 * n, n);
  b.topRows(n) = 0.5 * dt * dt * MatX::Identity(n, n);
  b.bottomRows(n) = dt * MatX::Identity(n, n);
  return {a, b};
}

Solution Solution::shifted() const {
  Solution s = *this;
  if (x.size() < 2) return s;
  for (size_t i = 0; i + 1 < x.size(); ++i) s.x[i] = x[i + 1];
  for (size_t i = 0; i + 1 < u.size(); ++i) s.u[i] = u[i + 1];
  if (!s.u.empty()) s.u.back().setZero();
  return s;
}

namespace {

struct TaskLinearization {
  Vec6 e;       ///< nonlinear error at the point
  Mat6X J;      ///< de/dq
  Vec6 b;       ///< error rate = b - G v
  Mat6X G;
};

TaskLinearization linearize(const TrackingTask& task, const Kinematics& kin, double t) {
  const int f = kin.model().frame_index(task.frame);
  const Pose3 pose = kin.frame_pose(f);
  const Mat6X jf = kin.frame_jacobian(f);
  const Pose3 des = task.reference.sample(t);
  const Vec6 tw = task.reference.twist(t);
  const Mat3 rt = pose.orientation.transpose();
  TaskLinearization lin;
  lin.e = pose_error(pose, des);
  lin.G.resize(6, jf.cols());
  lin.G.topRows<3>() = jf.topRows<3>();
  lin.G.bottomRows<3>() = rt * jf.bottomRows<3>();
  lin.J = -lin.G;
  lin.b.head<3>() = tw.head<3>();
  lin.b.tail<3>() = rt * tw.tail<3>();
  return lin;
}

void add_block(std::vector<Triplet>& trip, int r0, int c0, const MatX& m) {
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (m(i, j) != 0.0) trip.emplace_back(r0 + i, c0 + j, m(i, j));
    }
  }
}

struct RowBuilder {
  std::vector<Triplet> trip;
  std::vector<double> lower;
  std::vector<double> rho;
  int rows = 0;

  int add(const std::vector<std::pair<int, double>>& coeffs, double lo, double penalty) {
    for (const auto& [c, v] : coeffs) {
      if (v != 0.0) trip.emplace_back(rows, c, v);
    }
    lower.push_back(lo);
    rho.push_back(penalty);
    return rows++;
  }
  void add_dense(int offset, const VecX& coeff, double lo, double penalty, int offset2 = -1,
                 const VecX* coeff2 = nullptr) {
    for (int i = 0; i < coeff.size(); ++i) {
      if (coeff(i) != 0.0) trip.emplace_back(rows, offset + i, coeff(i));
    }
    if (coeff2) {
      for (int i = 0; i < coeff2->size(); ++i) {
        if ((*coeff2)(i) != 0.0) trip.emplace_back(rows, offset2 + i, (*coeff2)(i));
      }
    }
    lower.push_back(lo);
    rho.push_back(penalty);
    ++rows;
  }
};

std::vector<VecX> unpack_states(const VecX& z, const StageLayout& lay) {
  std::vector<VecX> x(static_cast<size_t>(lay.nodes) + 1);
  for (int k = 0; k <= lay.nodes; ++k) x[static_cast<size_t>(k)] = z.segment(lay.x(k), lay.nx);
  return x;
}

std::vector<VecX> unpack_inputs(const VecX& z, const StageLayout& lay) {
  std::vector<VecX> u(static_cast<size_t>(lay.nodes));
  for (int k = 0; k < lay.nodes; ++k) u[static_cast<size_t>(k)] = z.segment(lay.u(k), lay.nu);
  return u;
}

VecX pack(const std::vector<VecX>& x, const std::vector<VecX>& u, const StageLayout& lay) {
  VecX z(lay.size());
  for (int k = 0; k <= lay.nodes; ++k) z.segment(lay.x(k), lay.nx) = x[static_cast<size_t>(k)];
  for (int k = 0; k < lay.nodes; ++k) z.segment(lay.u(k), lay.nu) = u[static_cast<size_t>(k)];
  return z;
}

}  // namespace

std::vector<Vec6> task_errors(const TrackingTask& task, const RobotModel& model, const std::vector<VecX>& x,
                              double t0, double dt) {
  const int n = model.dof();
  const int f = model.frame_index(task.frame);
  std::vector<Vec6> out;
  out.reserve(x.size());
  for (size_t k = 0; k < x.size(); ++k) {
    const Kinematics kin(model, x[k].head(n));
    out.push_back(pose_error(kin.frame_pose(f), task.reference.sample(t0 + static_cast<double>(k) * dt)).cwiseAbs());
  }
  return out;
}

double task_cost(const TrackingTask& task, const RobotModel& model, const std::vector<VecX>& x, double t0,
                 double dt) {
  const int n = model.dof();
  double cost = 0.0;
  for (size_t k = 0; k < x.size(); ++k) {
    const Kinematics kin(model, x[k].head(n));
    const auto lin = linearize(task, kin, t0 + static_cast<double>(k) * dt);
    const Vec6 rate = lin.b - lin.G * x[k].tail(n);
    cost += dt * (lin.e.cwiseProduct(task.qe).dot(lin.e) + rate.cwiseProduct(task.qe_dot).dot(rate));
  }
  return cost;
}

StmpcProblem build_stmpc(int l, const TaskStack& stack, const std::vector<std::vector<Vec6>>& envelopes,
                         const HtmpcContext& ctx, const VecX& x0, const std::vector<VecX>& guess, double t0) {
  if (l < 0 || l >= static_cast<int>(stack.size())) throw ContractViolation("build_stmpc: task index out of range");
  if (static_cast<int>(envelopes.size()) < l) throw ContractViolation("build_stmpc: missing envelopes for prior tasks");
  const RobotModel& model = *ctx.model;
  const MpcConfig& cfg = ctx.config;
  const int n = model.dof();
  const int nodes = cfg.nodes;
  if (static_cast<int>(guess.size()) != nodes + 1) throw ContractViolation("build_stmpc: guess must have N + 1 states");
  for (int i = 0; i < l; ++i) {
    if (static_cast<int>(envelopes[static_cast<size_t>(i)].size()) != nodes + 1) {
      throw ContractViolation("build_stmpc: envelope length must be N + 1");
    }
  }
  const double dt = cfg.dt();

  StmpcProblem out;
  StageLayout& lay = out.layout;
  lay.nx = 2 * n;
  lay.nu = n;
  lay.nodes = nodes;
  const int nz = lay.size();

  // Cost.
  std::vector<Triplet> h_trip;
  VecX g = VecX::Zero(nz);
  const TrackingTask& task = stack[static_cast<size_t>(l)];
  std::vector<Kinematics> kins;
  kins.reserve(static_cast<size_t>(nodes) + 1);
  for (int k = 0; k <= nodes; ++k) kins.emplace_back(model, guess[static_cast<size_t>(k)].head(n));

  for (int k = 0; k <= nodes; ++k) {
    const double tk = t0 + k * dt;
    const VecX qbar = guess[static_cast<size_t>(k)].head(n);
    const auto lin = linearize(task, kins[static_cast<size_t>(k)], tk);
    const auto qe = task.qe.asDiagonal();
    const auto qed = task.qe_dot.asDiagonal();
    const MatX hq = dt * (lin.J.transpose() * qe * lin.J);
    MatX hv = dt * (lin.G.transpose() * qed * lin.G);
    hv.diagonal().array() += dt * cfg.qx;
    add_block(h_trip, lay.x(k), lay.x(k), hq);
    add_block(h_trip, lay.x(k) + n, lay.x(k) + n, hv);
    g.segment(lay.x(k), n) += dt * (lin.J.transpose() * (qe * (lin.e - lin.J * qbar)));
    g.segment(lay.x(k) + n, n) += -dt * (lin.G.transpose() * (qed * lin.b));
    if (k < nodes) {
      for (int i = 0; i < n; ++i) h_trip.emplace_back(lay.u(k) + i, lay.u(k) + i, dt * cfg.qu);
    }
  }
  for (int i = 0; i < nz; ++i) h_trip.emplace_back(i, i, cfg.eps_reg);
  out.qp.H.resize(nz, nz);
  out.qp.H.setFromTriplets(h_trip.begin(), h_trip.end());
  out.qp.g = g;

  // Dynamics and initial state.
  const auto [a, b] = discretize_dynamics(n, dt);
  std::vector<Triplet> e_trip;
  const int neq = lay.nx * (nodes + 1);
  VecX f = VecX::Zero(neq);
  for (int i = 0; i < lay.nx; ++i) e_trip.emplace_back(i, lay.x(0) + i, 1.0);
  f.head(lay.nx) = x0;
  for (int k = 0; k < nodes; ++k) {
    const int r0 = lay.nx * (k + 1);
    for (int i = 0; i < lay.nx; ++i) e_trip.emplace_back(r0 + i, lay.x(k + 1) + i, 1.0);
    add_block(e_trip, r0, lay.x(k), -a);
    add_block(e_trip, r0, lay.u(k), -b);
  }
  out.qp.E.resize(neq, nz);
  out.qp.E.setFromTriplets(e_trip.begin(), e_trip.end());
  out.qp.f = f;

  // Inequalities.
  RowBuilder rows;
  for (int k = 0; k < nodes; ++k) {
    for (int i = 0; i < n; ++i) {
      const double amax = model.a_max(i);
      rows.add({{lay.u(k) + i, 1.0}}, -amax, 0.0);
      rows.add({{lay.u(k) + i, -1.0}}, -amax, 0.0);
    }
  }
  for (int k = 1; k <= nodes; ++k) {
    for (int i = 0; i < n; ++i) {
      if (std::isfinite(model.q_lower(i))) rows.add({{lay.x(k) + i, 1.0}}, model.q_lower(i), cfg.rho_state);
      if (std::isfinite(model.q_upper(i))) rows.add({{lay.x(k) + i, -1.0}}, -model.q_upper(i), cfg.rho_state);
      rows.add({{lay.x(k) + n + i, 1.0}}, -model.v_max(i), cfg.rho_state);
      rows.add({{lay.x(k) + n + i, -1.0}}, -model.v_max(i), cfg.rho_state);
    }
  }
  out.h_min = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= nodes; ++k) {
    const VecX& xb = guess[static_cast<size_t>(k)];
    if (ctx.edf) {
      for (const auto& r : safety_rows(*ctx.edf, model, xb, k, ctx.safety)) {
        rows.add_dense(lay.x(k), r.coeff_x, r.lower, cfg.rho_safety);
        out.h_min = std::min(out.h_min, r.value);
        ++out.safety_rows;
      }
    }
    if (cfg.self_collision && !ctx.safety.self_pairs.empty()) {
      for (const auto& r : self_collision_rows(model, xb.head(n), k, ctx.safety.self_pairs, ctx.safety.self_margin)) {
        rows.add_dense(lay.x(k), r.coeff_x, r.lower, cfg.rho_safety);
        ++out.safety_rows;
      }
    }
  }
  for (int i = 0; i < l; ++i) {
    const TrackingTask& prior = stack[static_cast<size_t>(i)];
    for (int k = 0; k <= nodes; ++k) {
      const VecX qbar = guess[static_cast<size_t>(k)].head(n);
      const auto lin = linearize(prior, kins[static_cast<size_t>(k)], t0 + k * dt);
      const Vec6& env = envelopes[static_cast<size_t>(i)][static_cast<size_t>(k)];
      for (int c = 0; c < 6; ++c) {
        if (!(prior.qe(c) > 0.0)) continue;
        const VecX jc = lin.J.row(c).transpose();
        const double jq = jc.dot(qbar);
        const double bound = env(c) + cfg.eps_lex;
        rows.add_dense(lay.x(k), jc, -bound - lin.e(c) + jq, 0.0);
        rows.add_dense(lay.x(k), VecX(-jc), -bound + lin.e(c) - jq, 0.0);
        out.lex_rows += 2;
      }
    }
  }
  out.qp.C.resize(rows.rows, nz);
  out.qp.C.setFromTriplets(rows.trip.begin(), rows.trip.end());
  out.qp.d = Eigen::Map<const VecX>(rows.lower.data(), rows.rows);
  out.qp.rho = Eigen::Map<const VecX>(rows.rho.data(), rows.rows);
  if (!std::isfinite(out.h_min)) out.h_min = 0.0;
  return out;
}

namespace {

bool dominance_holds(const TaskStack& stack, int l, const std::vector<std::vector<Vec6>>& envelopes,
                     const RobotModel& model, const std::vector<VecX>& x, double t0, double dt, double eps) {
  for (int i = 0; i < l; ++i) {
    const auto& task = stack[static_cast<size_t>(i)];
    const auto errs = task_errors(task, model, x, t0, dt);
    for (size_t k = 0; k < errs.size(); ++k) {
      for (int c = 0; c < 6; ++c) {
        if (task.qe(c) > 0.0 && errs[k](c) > envelopes[static_cast<size_t>(i)][k](c) + eps) return false;
      }
    }
  }
  return true;
}

// L1 merit for task l: half the Gauss-Newton objective plus a penalty on
// envelope excess of the higher-priority tasks.
double merit(const TaskStack& stack, int l, const std::vector<std::vector<Vec6>>& envelopes, const RobotModel& model,
             const std::vector<VecX>& x, const std::vector<VecX>& u, double t0, const MpcConfig& cfg, double rho) {
  const int n = model.dof();
  const double dt = cfg.dt();
  double phi = 0.5 * task_cost(stack[static_cast<size_t>(l)], model, x, t0, dt);
  for (size_t k = 0; k < x.size(); ++k) phi += 0.5 * dt * cfg.qx * x[k].tail(n).squaredNorm();
  for (const auto& uk : u) phi += 0.5 * dt * cfg.qu * uk.squaredNorm();
  double excess = 0.0;
  for (int i = 0; i < l; ++i) {
    const auto& task = stack[static_cast<size_t>(i)];
    const auto errs = task_errors(task, model, x, t0, dt);
    for (size_t k = 0; k < errs.size(); ++k) {
      for (int c = 0; c < 6; ++c) {
        if (task.qe(c) > 0.0) excess += std::max(0.0, errs[k](c) - envelopes[static_cast<size_t>(i)][k](c) - cfg.eps_lex);
      }
    }
  }
  return phi + rho * excess;
}

}  // namespace

Solution solve_htmpc(const TaskStack& stack, const VecX& x0, double t0, const HtmpcContext& ctx, const Solution& warm) {
  const auto start = std::chrono::steady_clock::now();
  if (stack.empty()) throw ContractViolation("solve_htmpc: empty task stack");
  const RobotModel& model = *ctx.model;
  const MpcConfig& cfg = ctx.config;
  const int n = model.dof();
  const int nodes = cfg.nodes;
  const double dt = cfg.dt();
  StageLayout lay{2 * n, n, nodes};

  std::vector<VecX> xs(static_cast<size_t>(nodes) + 1, x0);
  std::vector<VecX> us(static_cast<size_t>(nodes), VecX::Zero(n));
  if (static_cast<int>(warm.x.size()) == nodes + 1 && static_cast<int>(warm.u.size()) == nodes) {
    const Solution sh = warm.shifted();
    xs = sh.x;
    us = sh.u;
    xs[0] = x0;
  }

  Solution sol;
  sol.stamp = t0;
  sol.ok = true;
  std::vector<std::vector<Vec6>> envelopes;
  double max_slack = 0.0, kkt = 0.0;
  int qp_iters = 0, sqp_iters = 0;
  QpSettings qps;
  qps.tolerance = cfg.kkt_tolerance;

  for (int l = 0; l < static_cast<int>(stack.size()); ++l) {
    bool accepted_any = l > 0;  // the previous task's iterate is feasible for this one
    bool task_converged = false;
    // Last iterate known to respect every higher-priority envelope.
    std::vector<VecX> safe_x = xs, safe_u = us;
    double rho_merit = 10.0;
    for (int it = 0; it < cfg.sqp_iterations; ++it) {
      const StmpcProblem prob = build_stmpc(l, stack, envelopes, ctx, x0, xs, t0);
      const QpResult r = solve_qp(prob.qp, qps);
      qp_iters += r.iterations;
      ++sqp_iters;
      if (r.status != QpStatus::Optimal) {
        if (!accepted_any) {
          sol.ok = false;
          sol.status = r.status;
          sol.diagnostic = "task " + stack[static_cast<size_t>(l)].name + ": " + to_string(r.status);
        }
        break;
      }
      VecX z_cur = pack(xs, us, lay);
      z_cur.segment(lay.x(0), lay.nx) = x0;
      const VecX dz = r.z - z_cur;
      const double step = dz.lpNorm<Eigen::Infinity>();
      double alpha = 1.0;
      if (l > 0) {
        if (prob.lex_rows > 0) rho_merit = std::max(rho_merit, 2.0 * r.lambda.tail(prob.lex_rows).lpNorm<Eigen::Infinity>() + 1.0);
        const double phi0 = merit(stack, l, envelopes, model, xs, us, t0, cfg, rho_merit);
        int tries = 0;
        while (tries < 20) {
          const VecX z_try = z_cur + alpha * dz;
          if (merit(stack, l, envelopes, model, unpack_states(z_try, lay), unpack_inputs(z_try, lay), t0, cfg,
                    rho_merit) <= phi0 || step < cfg.sqp_step_tolerance) {
            break;
          }
          alpha *= 0.5;
          ++tries;
        }
        if (tries == 20) break;
      }
      const VecX z_new = z_cur + alpha * dz;
      xs = unpack_states(z_new, lay);
      us = unpack_inputs(z_new, lay);
      accepted_any = true;
      max_slack = std::max(max_slack, r.slack.size() ? r.slack.maxCoeff() : 0.0);
      kkt = std::max(kkt, r.residuals.max());
      if (l > 0 && dominance_holds(stack, l, envelopes, model, xs, t0, dt, cfg.eps_lex)) {
        safe_x = xs;
        safe_u = us;
      }
      if (step < cfg.sqp_step_tolerance) {
        task_converged = true;
        break;
      }
    }
    if (l > 0 && !dominance_holds(stack, l, envelopes, model, xs, t0, dt, cfg.eps_lex)) {
      // Back off toward the last envelope-feasible iterate.
      const VecX z_safe = pack(safe_x, safe_u, lay);
      const VecX dz = pack(xs, us, lay) - z_safe;
      double alpha = 0.5;
      std::vector<VecX> cand = unpack_states(z_safe + alpha * dz, lay);
      int tries = 0;
      while (!dominance_holds(stack, l, envelopes, model, cand, t0, dt, cfg.eps_lex) && tries < 20) {
        alpha *= 0.5;
        ++tries;
        cand = unpack_states(z_safe + alpha * dz, lay);
      }
      const VecX z_new = tries < 20 ? VecX(z_safe + alpha * dz) : z_safe;
      xs = unpack_states(z_new, lay);
      us = unpack_inputs(z_new, lay);
      task_converged = false;
    }
    sol.converged = sol.converged && task_converged;
    if (!sol.ok) break;
    envelopes.push_back(task_errors(stack[static_cast<size_t>(l)], model, xs, t0, dt));
  }

  sol.x = xs;
  sol.u = us;
  sol.envelopes = envelopes;
  for (const auto& task : stack) sol.task_costs.push_back(task_cost(task, model, xs, t0, dt));
  sol.max_slack = max_slack;
  sol.kkt_residual = kkt;
  sol.qp_iterations = qp_iters;
  sol.sqp_iterations = sqp_iters;
  if (ctx.edf) {
    const Kinematics kin(model, x0.head(n));
    double hmin = std::numeric_limits<double>::infinity();
    for (int s = 0; s < static_cast<int>(model.spheres.size()); ++s) {
      hmin = std::min(hmin, barrier_value(*ctx.edf, kin, s, ctx.safety.delta_safe).h);
    }
    sol.h_min = hmin;
  }
  sol.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sol;
}

Command extract_command(const Solution& solution, double elapsed, const MpcConfig& config, const VecX& v_now) {
  Command cmd;
  const int n = static_cast<int>(v_now.size());
  if (!solution.ok || solution.empty()) {
    cmd.v = v_now * std::exp(-std::max(elapsed, 0.0) / config.brake_tau);
    cmd.braking = true;
    return cmd;
  }
  const double dt = config.dt();
  const auto plan_velocity = [&](double t) {
    t = std::clamp(t, 0.0, dt * (static_cast<double>(solution.x.size()) - 1.0));
    const auto i = std::min(static_cast<size_t>(t / dt), solution.x.size() - 2);
    const double s = std::clamp((t - static_cast<double>(i) * dt) / dt, 0.0, 1.0);
    return VecX((1.0 - s) * solution.x[i].tail(n) + s * solution.x[i + 1].tail(n));
  };
  if (elapsed <= config.staleness) {
    cmd.v = plan_velocity(elapsed);
    return cmd;
  }
  cmd.v = plan_velocity(config.staleness) * std::exp(-(elapsed - config.staleness) / config.brake_tau);
  cmd.braking = true;
  return cmd;
}

}  // namespace phtmpc
