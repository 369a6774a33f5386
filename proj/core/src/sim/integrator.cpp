#include "phtmpc/sim/integrator.hpp"

#include <stdexcept>

namespace phtmpc {

IntegrationResult integrate_robot(const RobotState& state, const VecX& u, double dt, const VecX& v_max) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_robot: dt must be positive");
  if (!u.allFinite()) throw std::invalid_argument("integrate_robot: non-finite acceleration");
  if (u.size() != state.v.size()) throw std::invalid_argument("integrate_robot: dimension mismatch");
  IntegrationResult out;
  out.state.q = state.q + dt * state.v + (0.5 * dt * dt) * u;
  out.state.v = state.v + dt * u;
  if (v_max.size() == out.state.v.size()) {
    for (Eigen::Index i = 0; i < v_max.size(); ++i) {
      const double lim = v_max(i);
      if (out.state.v(i) > lim) {
        out.state.v(i) = lim;
        out.clamped = true;
      } else if (out.state.v(i) < -lim) {
        out.state.v(i) = -lim;
        out.clamped = true;
      }
    }
  }
  return out;
}

}  // namespace phtmpc
