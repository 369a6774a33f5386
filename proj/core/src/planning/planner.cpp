#include "phtmpc/planning/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

namespace phtmpc {

OccupancyGrid2D::OccupancyGrid2D(const Vec2& origin_, double cell_, int nx_, int ny_)
    : origin(origin_), cell(cell_), nx(nx_), ny(ny_), occupied(static_cast<size_t>(nx_) * static_cast<size_t>(ny_), 0) {}

Cell OccupancyGrid2D::cell_of(const Vec2& p) const {
  return {static_cast<int>(std::lround((p.x() - origin.x()) / cell)),
          static_cast<int>(std::lround((p.y() - origin.y()) / cell))};
}

size_t OccupancyGrid2D::count_occupied() const {
  return static_cast<size_t>(std::count(occupied.begin(), occupied.end(), std::uint8_t{1}));
}

OccupancyGrid2D occupancy_from_edf(const VoxelGrid& edf, double z_low, double z_high, double inflation,
                                   std::uint64_t version) {
  const auto& d = edf.dims();
  OccupancyGrid2D g(edf.origin().head<2>(), edf.voxel_size(), d[0], d[1]);
  g.source_version = version;
  const double threshold = std::max(inflation, edf.voxel_size());
  for (int j = 0; j < d[1]; ++j) {
    for (int i = 0; i < d[0]; ++i) {
      double m = std::numeric_limits<double>::infinity();
      for (int k = 0; k < d[2]; ++k) {
        const double z = edf.origin().z() + k * edf.voxel_size();
        if (z < z_low - 1e-9 || z > z_high + 1e-9) continue;
        m = std::min(m, edf.at(i, j, k));
      }
      g.occupied[g.index({i, j})] = m < threshold ? 1 : 0;
    }
  }
  return g;
}

void block_outside(OccupancyGrid2D& grid, double xmin, double ymin, double xmax, double ymax) {
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const Vec2 c = grid.center({i, j});
      if (c.x() < xmin || c.x() > xmax || c.y() < ymin || c.y() > ymax) grid.occupied[grid.index({i, j})] = 1;
    }
  }
}

namespace {

double octile(const Cell& a, const Cell& b, double h) {
  const double dx = std::abs(a.i - b.i), dy = std::abs(a.j - b.j);
  return h * (std::max(dx, dy) + (std::numbers::sqrt2 - 1.0) * std::min(dx, dy));
}

struct OpenEntry {
  double f;
  double g;
  int j;
  int i;
  bool operator>(const OpenEntry& o) const {
    if (f != o.f) return f > o.f;
    if (g != o.g) return g > o.g;
    if (j != o.j) return j > o.j;
    return i > o.i;
  }
};

}  // namespace

AStarResult astar(const OccupancyGrid2D& grid, const Cell& start, const Cell& goal) {
  AStarResult res;
  if (grid.blocked(start) || grid.blocked(goal)) return res;
  const size_t n = grid.occupied.size();
  std::vector<double> gs(n, std::numeric_limits<double>::infinity());
  std::vector<int> parent(n, -1);
  std::vector<char> closed(n, 0);
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, std::greater<>> open;
  gs[grid.index(start)] = 0.0;
  open.push({octile(start, goal, grid.cell), 0.0, start.j, start.i});
  const double h = grid.cell;
  static constexpr int kDi[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  static constexpr int kDj[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  while (!open.empty()) {
    const OpenEntry top = open.top();
    open.pop();
    const Cell c{top.i, top.j};
    const size_t ci = grid.index(c);
    if (closed[ci]) continue;
    closed[ci] = 1;
    if (c == goal) break;
    for (int k = 0; k < 8; ++k) {
      const Cell nb{c.i + kDi[k], c.j + kDj[k]};
      if (grid.blocked(nb)) continue;
      const bool diag = kDi[k] != 0 && kDj[k] != 0;
      if (diag && (grid.blocked({c.i + kDi[k], c.j}) || grid.blocked({c.i, c.j + kDj[k]}))) continue;
      const size_t ni = grid.index(nb);
      if (closed[ni]) continue;
      const double ng = gs[ci] + (diag ? std::numbers::sqrt2 * h : h);
      if (ng < gs[ni]) {
        gs[ni] = ng;
        parent[ni] = static_cast<int>(ci);
        open.push({ng + octile(nb, goal, h), ng, nb.j, nb.i});
      }
    }
  }
  const size_t gi = grid.index(goal);
  if (!std::isfinite(gs[gi])) return res;
  res.found = true;
  res.cost = gs[gi];
  for (int cur = static_cast<int>(gi); cur >= 0; cur = parent[static_cast<size_t>(cur)]) {
    res.cells.push_back({cur % grid.nx, cur / grid.nx});
  }
  std::reverse(res.cells.begin(), res.cells.end());
  return res;
}

std::vector<Cell> supercover(const OccupancyGrid2D& grid, const Vec2& a, const Vec2& b) {
  // Cells are squares of side `cell` centred on their nodes; work in cell units
  // with the boundaries at half-integers shifted to integers.
  const Vec2 pa = (a - grid.origin) / grid.cell + Vec2(0.5, 0.5);
  const Vec2 pb = (b - grid.origin) / grid.cell + Vec2(0.5, 0.5);
  std::vector<Cell> out;
  int x = static_cast<int>(std::floor(pa.x())), y = static_cast<int>(std::floor(pa.y()));
  const int xe = static_cast<int>(std::floor(pb.x())), ye = static_cast<int>(std::floor(pb.y()));
  const Vec2 d = pb - pa;
  const int sx = d.x() > 0 ? 1 : (d.x() < 0 ? -1 : 0);
  const int sy = d.y() > 0 ? 1 : (d.y() < 0 ? -1 : 0);
  const double inf = std::numeric_limits<double>::infinity();
  double tmx = sx > 0 ? (std::floor(pa.x()) + 1.0 - pa.x()) / d.x() : sx < 0 ? (pa.x() - std::floor(pa.x())) / -d.x() : inf;
  double tmy = sy > 0 ? (std::floor(pa.y()) + 1.0 - pa.y()) / d.y() : sy < 0 ? (pa.y() - std::floor(pa.y())) / -d.y() : inf;
  const double tdx = sx != 0 ? 1.0 / std::abs(d.x()) : inf;
  const double tdy = sy != 0 ? 1.0 / std::abs(d.y()) : inf;
  out.push_back({x, y});
  const int max_steps = std::abs(xe - x) + std::abs(ye - y) + 2;
  for (int step = 0; step < 2 * max_steps && !(x == xe && y == ye); ++step) {
    if (std::abs(tmx - tmy) < 1e-12) {
      if (tmx > 1.0) break;
      out.push_back({x + sx, y});
      out.push_back({x, y + sy});
      x += sx;
      y += sy;
      tmx += tdx;
      tmy += tdy;
    } else if (tmx < tmy) {
      if (tmx > 1.0) break;
      x += sx;
      tmx += tdx;
    } else {
      if (tmy > 1.0) break;
      y += sy;
      tmy += tdy;
    }
    out.push_back({x, y});
  }
  return out;
}

bool line_of_sight(const OccupancyGrid2D& grid, const Vec2& a, const Vec2& b) {
  for (const auto& c : supercover(grid, a, b)) {
    if (grid.blocked(c)) return false;
  }
  return true;
}

double polyline_length(const std::vector<Vec2>& path) {
  double s = 0.0;
  for (size_t i = 1; i < path.size(); ++i) s += (path[i] - path[i - 1]).norm();
  return s;
}

std::vector<Vec2> smooth_path(const OccupancyGrid2D& grid, const std::vector<Vec2>& path) {
  if (path.size() <= 2) return path;
  std::vector<Vec2> out{path.front()};
  size_t anchor = 0;
  while (anchor + 1 < path.size()) {
    size_t next = anchor + 1;
    for (size_t j = path.size() - 1; j > anchor + 1; --j) {
      if (line_of_sight(grid, path[anchor], path[j])) {
        next = j;
        break;
      }
    }
    out.push_back(path[next]);
    anchor = next;
  }
  return out;
}

namespace {

std::optional<Cell> snap_to_free(const OccupancyGrid2D& grid, const Vec2& p, double radius) {
  const Cell c = grid.cell_of(p);
  if (!grid.blocked(c)) return c;
  const int r = static_cast<int>(std::ceil(radius / grid.cell));
  std::optional<Cell> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (int dj = -r; dj <= r; ++dj) {
    for (int di = -r; di <= r; ++di) {
      const Cell n{c.i + di, c.j + dj};
      if (grid.blocked(n)) continue;
      const double d = (grid.center(n) - p).norm();
      if (d <= radius + 1e-12 && d < best_d) {
        best_d = d;
        best = n;
      }
    }
  }
  return best;
}

}  // namespace

PlanResult plan_path(const OccupancyGrid2D& grid, const std::vector<Vec2>& waypoints, double snap_radius) {
  PlanResult res;
  if (waypoints.empty()) {
    res.diagnostic = "no waypoints";
    return res;
  }
  std::vector<Cell> cells;
  std::vector<Vec2> anchors;
  for (size_t w = 0; w < waypoints.size(); ++w) {
    const auto c = snap_to_free(grid, waypoints[w], snap_radius);
    if (!c) {
      res.diagnostic = "waypoint " + std::to_string(w) + " blocked beyond snap radius near (" +
                       std::to_string(waypoints[w].x()) + ", " + std::to_string(waypoints[w].y()) + ")";
      return res;
    }
    if (*c != grid.cell_of(waypoints[w]) || !grid.in_bounds(grid.cell_of(waypoints[w]))) {
      res.snapped_waypoints.push_back(static_cast<int>(w));
      anchors.push_back(grid.center(*c));
    } else {
      anchors.push_back(waypoints[w]);
    }
    cells.push_back(*c);
  }
  res.raw.push_back(anchors.front());
  for (size_t w = 1; w < cells.size(); ++w) {
    const auto seg = astar(grid, cells[w - 1], cells[w]);
    if (!seg.found) {
      res.diagnostic = "waypoint " + std::to_string(w) + " unreachable; search blocked between (" +
                       std::to_string(anchors[w - 1].x()) + ", " + std::to_string(anchors[w - 1].y()) + ") and (" +
                       std::to_string(anchors[w].x()) + ", " + std::to_string(anchors[w].y()) + ")";
      return res;
    }
    res.raw_cost += seg.cost;
    for (size_t k = 1; k + 1 < seg.cells.size(); ++k) res.raw.push_back(grid.center(seg.cells[k]));
    res.raw.push_back(anchors[w]);
  }
  // Drop consecutive duplicates (waypoints sharing a cell).
  std::vector<Vec2> dedup;
  for (const auto& p : res.raw) {
    if (dedup.empty() || (p - dedup.back()).norm() > 1e-12) dedup.push_back(p);
  }
  res.raw = dedup;
  // Smooth each waypoint-to-waypoint leg separately so every waypoint is visited.
  res.polyline.push_back(res.raw.front());
  size_t begin = 0;
  for (size_t w = 1; w < anchors.size(); ++w) {
    size_t end = begin;
    while (end < res.raw.size() && (res.raw[end] - anchors[w]).norm() > 1e-12) ++end;
    if (end == res.raw.size()) end = res.raw.size() - 1;
    const std::vector<Vec2> leg(res.raw.begin() + static_cast<long>(begin), res.raw.begin() + static_cast<long>(end) + 1);
    const auto sm = smooth_path(grid, leg);
    for (size_t k = 1; k < sm.size(); ++k) res.polyline.push_back(sm[k]);
    begin = end;
  }
  res.ok = true;
  return res;
}

namespace {

// Arc length travelled after time t for a trapezoidal profile.
struct Profile {
  double length = 0.0;
  double v0 = 0.0;
  double vp = 0.0;
  double a_up = 1.0;
  double a_down = 1.0;
  double t1 = 0.0;  // end of ramp up
  double t2 = 0.0;  // end of cruise
  double t3 = 0.0;  // stop

  Profile(double l, double v_start, double v_des, double a) : length(l) {
    v0 = std::clamp(v_start, 0.0, v_des);
    a_up = a_down = a;
    if (l <= 0.0) return;
    const double d_up = (v_des * v_des - v0 * v0) / (2.0 * a);
    const double d_down = v_des * v_des / (2.0 * a);
    if (v0 * v0 / (2.0 * a) >= l) {
      vp = v0;
      a_down = v0 * v0 / (2.0 * l);
      t1 = t2 = 0.0;
      t3 = v0 / a_down;
      return;
    }
    if (d_up + d_down <= l) {
      vp = v_des;
      t1 = (vp - v0) / a;
      t2 = t1 + (l - d_up - d_down) / vp;
    } else {
      vp = std::sqrt((2.0 * a * l + v0 * v0) / 2.0);
      t1 = (vp - v0) / a;
      t2 = t1;
    }
    t3 = t2 + vp / a;
  }

  double s(double t) const {
    if (t <= 0.0) return 0.0;
    if (t >= t3) return length;
    if (t < t1) return v0 * t + 0.5 * a_up * t * t;
    const double s1 = v0 * t1 + 0.5 * a_up * t1 * t1;
    if (t < t2) return s1 + vp * (t - t1);
    const double s2 = s1 + vp * (t2 - t1);
    const double tau = t - t2;
    return std::min(length, s2 + vp * tau - 0.5 * a_down * tau * tau);
  }
};

Vec2 point_at(const std::vector<Vec2>& path, const std::vector<double>& cum, double s) {
  if (s <= 0.0) return path.front();
  if (s >= cum.back()) return path.back();
  const auto it = std::upper_bound(cum.begin(), cum.end(), s);
  const size_t i = static_cast<size_t>(std::distance(cum.begin(), it)) - 1;
  const double seg = cum[i + 1] - cum[i];
  const double u = seg > 0.0 ? (s - cum[i]) / seg : 0.0;
  return path[i] + u * (path[i + 1] - path[i]);
}

}  // namespace

ReferenceTrajectory time_parameterize(const std::vector<Vec2>& polyline, const TimingOptions& opt) {
  if (!(opt.v_des > 0.0)) throw std::invalid_argument("time_parameterize: v_des must be positive");
  ReferenceTrajectory ref;
  ref.frame = "base";
  std::vector<Vec2> path;
  for (const auto& p : polyline) {
    if (path.empty() || (p - path.back()).norm() > 1e-12) path.push_back(p);
  }
  const double yaw_fixed = opt.heading == HeadingMode::Fixed ? opt.fixed_yaw : opt.initial_yaw;
  if (path.size() < 2) {
    const Vec2 p = path.empty() ? Vec2::Zero() : path.front();
    return ReferenceTrajectory::constant("base", Pose3::planar(p.x(), p.y(), yaw_fixed), opt.t0);
  }
  std::vector<double> cum{0.0};
  for (size_t i = 1; i < path.size(); ++i) cum.push_back(cum.back() + (path[i] - path[i - 1]).norm());
  const double length = cum.back();
  const Profile prof(length, opt.v0, opt.v_des, opt.a_max);

  std::vector<double> ts;
  for (double t = 0.0; t < prof.t3 - 1e-9; t += opt.sample_dt) ts.push_back(t);
  ts.push_back(prof.t3);

  double prev_yaw = opt.initial_yaw;
  for (double t : ts) {
    const double s = prof.s(t);
    const Vec2 p = point_at(path, cum, s);
    double yaw = yaw_fixed;
    if (opt.heading == HeadingMode::Tangent) {
      const double ahead = std::min(s + opt.lookahead, length);
      Vec2 dir = point_at(path, cum, ahead) - p;
      if (dir.norm() < 1e-9) dir = path.back() - path[path.size() - 2];
      yaw = std::atan2(dir.y(), dir.x());
      yaw = prev_yaw + wrap_angle(yaw - prev_yaw);
      prev_yaw = yaw;
    }
    ref.times.push_back(opt.t0 + t);
    ref.poses.push_back(Pose3::planar(p.x(), p.y(), yaw));
  }
  return ref;
}

}  // namespace phtmpc
