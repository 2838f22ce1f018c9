#include "gapflow/hierarchy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <queue>
#include <stdexcept>

namespace gapflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<std::uint8_t> inflate_belief(const BeliefMap& b, double radius) {
  std::vector<std::uint8_t> out(b.cells.size(), 0);
  int r = static_cast<int>(std::ceil(radius / b.resolution));
  std::vector<std::pair<int, int>> disc;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (dx * dx + dy * dy <= r * r) disc.emplace_back(dx, dy);
    }
  }
  for (int iy = 0; iy < b.height; ++iy) {
    for (int ix = 0; ix < b.width; ++ix) {
      if (!b.cells[static_cast<std::size_t>(iy) * b.width + ix]) continue;
      for (auto [dx, dy] : disc) {
        int nx = ix + dx, ny = iy + dy;
        if (b.in_bounds(nx, ny)) out[static_cast<std::size_t>(ny) * b.width + nx] = 1;
      }
    }
  }
  return out;
}

}  // namespace

BeliefMap BeliefMap::make(double size_x, double size_y, double resolution) {
  BeliefMap b;
  b.resolution = resolution;
  b.width = std::max(4, static_cast<int>(std::ceil(size_x / resolution)));
  b.height = std::max(4, static_cast<int>(std::ceil(size_y / resolution)));
  b.cells.assign(static_cast<std::size_t>(b.width) * b.height, 0);
  return b;
}

void BeliefMap::mark(const Vec2& p) {
  int ix = cell_x(p.x), iy = cell_y(p.y);
  if (in_bounds(ix, iy)) cells[static_cast<std::size_t>(iy) * width + ix] = 1;
}

std::vector<Pose2> global_plan(const BeliefMap& belief, const Pose2& start, const Vec2& goal,
                               double r_ins) {
  const int W = belief.width, H = belief.height;
  auto blocked = inflate_belief(belief, r_ins);
  int sx = belief.cell_x(start.x), sy = belief.cell_y(start.y);
  int gx = belief.cell_x(goal.x), gy = belief.cell_y(goal.y);
  if (!belief.in_bounds(sx, sy) || !belief.in_bounds(gx, gy)) return {};
  auto id = [W](int x, int y) { return static_cast<std::size_t>(y) * W + x; };
  blocked[id(sx, sy)] = 0;  // the robot is where it is
  if (blocked[id(gx, gy)]) {
    // Tolerate a goal marked by inflation: snap to the nearest free cell.
    int best = -1;
    double best_d = kInf;
    int r = static_cast<int>(std::ceil(1.0 / belief.resolution));
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        int nx = gx + dx, ny = gy + dy;
        if (!belief.in_bounds(nx, ny) || blocked[id(nx, ny)]) continue;
        double d = dx * dx + dy * dy;
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(id(nx, ny));
        }
      }
    }
    if (best < 0) return {};
    gx = best % W;
    gy = best / W;
  }

  const double res = belief.resolution;
  const double diag = std::sqrt(2.0);

  // Chamfer distance (meters) to the nearest blocked cell. Shortest paths hug
  // the inflation boundary — exactly where the safety layer fights to be —
  // so steps near obstacles get a cost penalty that steers the path toward
  // the middle of openings without closing the narrow ones.
  std::vector<double> clearance(blocked.size(), kInf);
  {
    const double orth = res, diag_m = res * diag;
    for (std::size_t i = 0; i < blocked.size(); ++i) {
      if (blocked[i]) clearance[i] = 0.0;
    }
    auto relax = [&](std::size_t i, std::size_t j, double w) {
      if (clearance[j] + w < clearance[i]) clearance[i] = clearance[j] + w;
    };
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        std::size_t i = id(x, y);
        if (x > 0) relax(i, id(x - 1, y), orth);
        if (y > 0) relax(i, id(x, y - 1), orth);
        if (x > 0 && y > 0) relax(i, id(x - 1, y - 1), diag_m);
        if (x + 1 < W && y > 0) relax(i, id(x + 1, y - 1), diag_m);
      }
    }
    for (int y = H - 1; y >= 0; --y) {
      for (int x = W - 1; x >= 0; --x) {
        std::size_t i = id(x, y);
        if (x + 1 < W) relax(i, id(x + 1, y), orth);
        if (y + 1 < H) relax(i, id(x, y + 1), orth);
        if (x + 1 < W && y + 1 < H) relax(i, id(x + 1, y + 1), diag_m);
        if (x > 0 && y + 1 < H) relax(i, id(x - 1, y + 1), diag_m);
      }
    }
  }
  const double pen_range = 2.0 * r_ins;
  const double pen_weight = 4.0;
  auto prox = [&](std::size_t i) {
    double d = clearance[i];
    return d >= pen_range ? 0.0 : pen_weight * (pen_range - d) / pen_range;
  };

  std::vector<double> g(blocked.size(), kInf);
  std::vector<int> parent(blocked.size(), -1);
  auto heuristic = [&](int x, int y) {
    double dx = std::abs(x - gx), dy = std::abs(y - gy);
    return (std::max(dx, dy) + (diag - 1.0) * std::min(dx, dy));
  };
  using QItem = std::pair<double, int>;  // f, cell
  std::priority_queue<QItem, std::vector<QItem>, std::greater<>> open;
  g[id(sx, sy)] = 0.0;
  open.emplace(heuristic(sx, sy), static_cast<int>(id(sx, sy)));
  const int goal_id = static_cast<int>(id(gx, gy));
  while (!open.empty()) {
    auto [f, c] = open.top();
    open.pop();
    int cx = c % W, cy = c / W;
    if (c == goal_id) break;
    if (f > g[c] + heuristic(cx, cy) + 1e-12) continue;  // stale entry
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        int nx = cx + dx, ny = cy + dy;
        if (nx < 0 || nx >= W || ny < 0 || ny >= H) continue;
        std::size_t ni = id(nx, ny);
        if (blocked[ni]) continue;
        double step_cost = ((dx != 0 && dy != 0) ? diag : 1.0) *
                           (1.0 + 0.5 * (prox(static_cast<std::size_t>(c)) + prox(ni)));
        double ng = g[c] + step_cost;
        if (ng < g[ni] - 1e-12) {
          g[ni] = ng;
          parent[ni] = c;
          open.emplace(ng + heuristic(nx, ny), static_cast<int>(ni));
        }
      }
    }
  }
  if (!std::isfinite(g[goal_id])) return {};

  std::vector<Vec2> pts;
  for (int c = goal_id; c != -1; c = parent[c]) {
    pts.push_back({(c % W + 0.5) * res, (c / W + 0.5) * res});
  }
  std::reverse(pts.begin(), pts.end());
  pts.front() = start.position();
  pts.back() = goal;
  std::vector<Pose2> path;
  path.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Vec2 dir = i + 1 < pts.size() ? pts[i + 1] - pts[i] : pts[i] - pts[i - 1];
    path.emplace_back(pts[i], dir.norm() > 1e-12 ? dir.angle() : start.theta);
  }
  return path;
}

Vec2 local_goal(const std::vector<Pose2>& path, const Egocircle& ego, const Pose2& pose,
                double lookahead) {
  if (path.empty()) return {0.0, 0.0};
  // Project onto the polyline itself, not the nearest vertex: the projection
  // moves continuously with the robot, so the carrot cannot hop half a metre
  // sideways when two vertices tie — a hop that flips the target bearing and
  // leaves a slew-limited body spinning in place at a path corner.
  std::size_t seg = 0;
  Vec2 foot = path[0].position();
  double best = distance(foot, pose.position());
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    Vec2 q =
        closest_point_on_segment(pose.position(), path[i].position(), path[i + 1].position());
    double d = distance(q, pose.position());
    if (d < best) {
      best = d;
      seg = i;
      foot = q;
    }
  }
  // A short carrot keeps the steering honest: chasing the farthest waypoint in
  // sight invites beelines through doorway diagonals the robot cannot follow,
  // so walk a fixed arc length down the path and interpolate the endpoint.
  double run = 0.0;
  Vec2 prev = foot;
  Vec2 pick = path.back().position();
  for (std::size_t i = seg + 1; i < path.size(); ++i) {
    Vec2 v = path[i].position();
    double step = distance(prev, v);
    if (run + step >= lookahead && step > 1e-12) {
      pick = prev + (v - prev) * ((lookahead - run) / step);
      break;
    }
    run += step;
    prev = v;
  }
  const double horizon = 0.95 * ego.scan.d_max;
  Vec2 out = pose.to_frame(pick);
  double r = out.norm();
  if (r > horizon) out = out * (horizon / r);
  return out;
}

NavConfig NavConfig::defaults(double r_ins) {
  NavConfig c;
  c.robot.r_ins = r_ins;
  c.sensor = SensorModel{};
  c.c_a = 4.0 * r_ins;
  c.c_d = 2.0 * r_ins;
  c.eps1 = r_ins;
  c.eps2 = r_ins;
  c.score.r_ins = r_ins;
  c.score.r_max = 4.0 * r_ins;
  c.score.w2 = 3.0 / r_ins;
  c.score.c_obs = 5.0;
  c.score.w1 = 15.0;
  c.switch_cost = c.score.c_obs;
  c.safety.r_min = 1.5 * r_ins;
  c.safety.r_nom = 3.0 * r_ins;
  c.lookahead = 2.0 * r_ins;
  c.goal_tol = 1.5 * r_ins;
  return c;
}

std::string TickLog::line() const {
  char buf[192];
  double p = std::isfinite(psi_value) ? psi_value : 0.0;
  std::snprintf(buf, sizeof(buf),
                "tick=%d gaps_raw=%d gaps_merged=%d selected=%d score=%.4f psi=%.4f "
                "cmd=(%.4f,%.4f)",
                tick, gaps_raw, gaps_final, selected, std::isfinite(score) ? score : -1.0, p,
                std::hypot(cmd.vx, cmd.vy), cmd.omega);
  return buf;
}

NavState NavState::make(const World& w, const NavConfig& cfg) {
  NavState s;
  s.pose = w.start;
  s.prev_pose = w.start;
  s.final_goal = w.goal;
  double inc = cfg.sensor.fov / cfg.sensor.beams;
  int bins = std::max(3, static_cast<int>(std::llround(kTwoPi / inc)));
  s.ego = Egocircle::make(bins, cfg.sensor.d_max, cfg.robot.r_ins);
  s.belief = BeliefMap::make(w.size_x(), w.size_y(), 0.1);
  return s;
}

namespace {

struct Candidate {
  Trajectory traj;
  ConvexGapRegion region;
  double score = kInf;
  bool feasible = false;
};

bool path_blocked(const BeliefMap& belief, const std::vector<Pose2>& path, const Pose2& pose,
                  double r_ins, double horizon) {
  if (path.empty()) return true;
  std::size_t nearest = 0;
  double best = kInf;
  for (std::size_t i = 0; i < path.size(); ++i) {
    double d = distance(path[i].position(), pose.position());
    if (d < best) {
      best = d;
      nearest = i;
    }
  }
  int guard = static_cast<int>(std::ceil(r_ins / belief.resolution)) - 1;
  for (std::size_t i = nearest; i < path.size(); ++i) {
    Vec2 p = path[i].position();
    if (distance(p, pose.position()) > horizon) break;
    int ix = belief.cell_x(p.x), iy = belief.cell_y(p.y);
    for (int dy = -guard; dy <= guard; ++dy) {
      for (int dx = -guard; dx <= guard; ++dx) {
        if (belief.in_bounds(ix + dx, iy + dy) && belief.occupied(ix + dx, iy + dy)) return true;
      }
    }
  }
  return false;
}

Twist2 clamp_cmd(const Twist2& u, const RobotModel& m) {
  Twist2 out = u;
  if (m.kind == RobotKind::holonomic_1st) {
    double sp = out.speed();
    if (sp > m.v_max) {
      out.vx *= m.v_max / sp;
      out.vy *= m.v_max / sp;
    }
  } else {
    out.vx = std::clamp(out.vx, -m.v_max, m.v_max);
    out.vy = 0.0;
  }
  out.omega = std::clamp(out.omega, -m.omega_max, m.omega_max);
  return out;
}

}  // namespace

TickResult tick(NavState& state, const Scan& scan, const NavConfig& cfg) {
  TickResult out;
  if (state.status.outcome != NavOutcome::running) {
    out.status = state.status;
    return out;
  }
  auto tick_t0 = Clock::now();
  ++state.tick_index;
  TickLog log;
  log.tick = state.tick_index;

  // Perception: egocircle in the current body frame, belief in world frame.
  Pose2 delta = state.ego_init ? state.prev_pose.relative(state.pose) : Pose2{};
  state.ego = egocircle_update(state.ego, delta, scan);
  state.ego_init = true;
  state.prev_pose = state.pose;
  for (int i = 0; i < scan.size(); ++i) {
    double r = scan.ranges[static_cast<std::size_t>(i)];
    if (r < scan.d_max - 1e-9) {
      state.belief.mark(state.pose.from_frame(unit_from_angle(scan.angle_of(i)) * r));
    }
  }

  state.status.elapsed = state.elapsed += cfg.planner_dt;
  state.status.path_length = state.path_length;
  if (distance(state.pose.position(), state.final_goal) <= cfg.goal_tol) {
    state.status.outcome = NavOutcome::success;
    state.last_log = log;
    out.status = state.status;
    return out;
  }
  if (state.elapsed > cfg.t_max) {
    state.status.outcome = NavOutcome::timeout;
    state.last_log = log;
    out.status = state.status;
    return out;
  }

  auto fail_tick = [&](const char* /*why*/) -> TickResult {
    ++state.replan_failures;
    state.committed.clear();
    state.committed_gap = -1;
    state.global_path.clear();  // force a fresh global plan next tick
    if (state.replan_failures > cfg.max_replans) state.status.outcome = NavOutcome::abort;
    state.last_log = log;
    state.timings.per_tick_ms.push_back(ms_since(tick_t0));
    return TickResult{Twist2{}, state.status};
  };

  // Global layer. Replan when the path is gone, newly blocked, or the robot
  // has drifted too far off it for the carrot to mean anything.
  double off_path = kInf;
  for (const Pose2& p : state.global_path) {
    off_path = std::min(off_path, distance(p.position(), state.pose.position()));
  }
  if (state.global_path.empty() || off_path > 1.0 ||
      path_blocked(state.belief, state.global_path, state.pose, cfg.robot.r_ins,
                   cfg.sensor.d_max)) {
    state.global_path = global_plan(state.belief, state.pose, state.final_goal, cfg.robot.r_ins);
    log.replanned = true;
    if (state.global_path.empty()) return fail_tick("no global path");
  }
  Vec2 p_star = local_goal(state.global_path, state.ego, state.pose, cfg.c_a);

  // Gap pipeline (robot frame).
  GapSet raw = detect_gaps(state.ego, cfg.robot.r_ins);
  log.gaps_raw = static_cast<int>(raw.gaps.size());
  for (Gap& gp : raw.gaps) gp = classify(gp, cfg.tau_alpha);
  GapSet merged = sgp_merge(raw, state.ego, cfg.c_a, cfg.c_d);
  GapSet final_set = cfg.flags.conversion
                         ? radial_conversion(merged, state.ego, cfg.eps1, cfg.eps2, cfg.tau_alpha)
                         : merged;
  log.gaps_final = static_cast<int>(final_set.gaps.size());

  std::vector<Vec2> ego_pts = obstacle_points(state.ego);
  double goal_bearing = p_star.angle();
  double tau_ga = cfg.flags.radial_extend ? std::min(2.0 * cfg.tau_ga, kPi - 0.05) : cfg.tau_ga;
  // Feasibility must use the radius the controller actually enforces: the
  // projection layer cancels all approach at the minimum shell, so a
  // trajectory that dips inside it is untrackable even when the body fits —
  // selecting one parks the robot against the shell until timeout.
  double check_pad = cfg.flags.projection ? std::max(cfg.robot.r_ins, cfg.safety.r_min)
                                          : cfg.robot.r_ins;

  std::vector<Candidate> cands;
  cands.reserve(final_set.gaps.size());
  for (int gi = 0; gi < static_cast<int>(final_set.gaps.size()); ++gi) {
    auto traj_t0 = Clock::now();
    // Shrink the gap to configuration space: each side loses the angle a
    // body circle subtends at its endpoint, so synthesized paths clear the
    // gap corners by the inscribed radius.
    Gap g = final_set.gaps[static_cast<std::size_t>(gi)];
    double inf_l = std::asin(std::min(1.0, cfg.robot.r_ins / std::max(g.left_range, cfg.robot.r_ins)));
    double inf_r = std::asin(std::min(1.0, cfg.robot.r_ins / std::max(g.right_range, cfg.robot.r_ins)));
    if (inf_l + inf_r >= g.width() - 0.02) continue;  // too narrow for the body
    g.left_angle = wrap_angle(g.left_angle + inf_l);
    g.right_angle = wrap_angle(g.right_angle - inf_r);
    auto region_opt = convexify(g, tau_ga, goal_bearing);
    if (!region_opt) continue;
    ConvexGapRegion region = std::move(*region_opt);
    if (cfg.flags.radial_extend) {
      try {
        region = radial_extension(region, state.ego, cfg.robot.r_ins);
      } catch (const std::runtime_error&) {
        // Robot too close to sense free space: fall back to the raw region.
      }
    }
    double desired = (p_star - region.origin).angle();
    place_local_goal(region, cfg.eps1, cfg.eps2, desired);
    GapField field = make_field(std::move(region), cfg.sigma_frac);
    Candidate c;
    c.traj = integrate_field(field, Pose2{}, cfg.integrate_dt, cfg.integrate_tmax);
    c.traj.source_gap = gi;
    c.region = std::move(field.region);
    c.feasible = collision_check(c.traj, ego_pts, check_pad);
    c.score = c.feasible ? score_trajectory(c.traj, ego_pts, p_star, cfg.score) : kInf;
    state.timings.per_trajectory_ms.push_back(ms_since(traj_t0));
    cands.push_back(std::move(c));
  }
  // Straight shot at the local goal: open scenes (and the final approach)
  // often have no occluding depth change, so no gap leads to p*. The direct
  // segment competes on the same scoring; collision checking prunes it when
  // anything intrudes.
  if (p_star.norm() > 1e-9) {
    auto traj_t0 = Clock::now();
    double len = p_star.norm();
    int steps = std::max(2, static_cast<int>(std::ceil(len / cfg.integrate_dt)));
    Trajectory direct;
    direct.source_gap = -1;
    direct.complete = true;
    double heading = p_star.angle();
    for (int i = 0; i <= steps; ++i) {
      double f = static_cast<double>(i) / steps;
      direct.poses.emplace_back(p_star * f, heading);
      direct.times.push_back(f * len);
    }
    if (collision_check(direct, ego_pts, check_pad)) {
      Candidate c;
      c.traj = std::move(direct);
      c.feasible = true;
      c.score = score_trajectory(c.traj, ego_pts, p_star, cfg.score);
      cands.push_back(std::move(c));
    }
    state.timings.per_trajectory_ms.push_back(ms_since(traj_t0));
  }

  log.candidates = static_cast<int>(cands.size());
  for (const Candidate& c : cands) log.feasible += c.feasible ? 1 : 0;

  // The currently executing trajectory is the incumbent the hysteresis
  // defends: re-anchor its remainder to the body frame, collision-check it
  // against today's egocircle, and re-score it like any other candidate, so
  // a gap decomposition flicker cannot yank the robot off a good commitment.
  // Age-capped: a commitment must win a fresh head-to-head every couple of
  // seconds, or a stale field can pin the robot against changed surroundings.
  constexpr int kIncumbentMaxTicks = 40;
  int current_index = -1;
  if (state.committed.size() >= 2 && state.committed_age < kIncumbentMaxTicks) {
    std::size_t near_i = 0;
    double off_path = kInf;
    for (std::size_t i = 0; i < state.committed.size(); ++i) {
      double d = distance(state.committed[i].position(), state.pose.position());
      if (d < off_path) {
        off_path = d;
        near_i = i;
      }
    }
    Trajectory cur;
    cur.source_gap = state.committed_gap;
    for (std::size_t i = near_i; i < state.committed.size(); ++i) {
      cur.poses.emplace_back(state.pose.to_frame(state.committed[i].position()),
                             wrap_angle(state.committed[i].theta - state.pose.theta));
      cur.times.push_back(cfg.integrate_dt * static_cast<double>(cur.poses.size() - 1));
    }
    if (cur.poses.size() >= 2 && off_path < 1.0 &&
        collision_check(cur, ego_pts, check_pad)) {
      Candidate c;
      c.traj = std::move(cur);
      c.feasible = true;
      c.score = score_trajectory(c.traj, ego_pts, p_star, cfg.score);
      current_index = static_cast<int>(cands.size());
      cands.push_back(std::move(c));  // region left empty: no fresh gap cone
    }
  }

  std::vector<Scored> scored;
  scored.reserve(cands.size());
  for (const Candidate& c : cands) scored.push_back({c.traj, c.score});
  std::optional<int> sel = select_trajectory(scored, current_index, cfg.switch_cost);
  if (!sel) return fail_tick("no feasible trajectory");
  state.replan_failures = 0;
  const Candidate& chosen = cands[static_cast<std::size_t>(*sel)];
  log.selected = *sel;
  log.chosen_source = *sel == current_index ? -2 : chosen.traj.source_gap;
  log.p_star = p_star;
  log.score = chosen.score;
  state.committed_age = *sel == current_index ? state.committed_age + 1 : 0;

  state.committed.clear();
  state.committed.reserve(chosen.traj.poses.size());
  for (const Pose2& p : chosen.traj.poses) {
    state.committed.push_back(state.pose.compose(p));
  }
  state.committed_gap = chosen.traj.source_gap;

  // Reactive command: evaluate the chosen candidate's field at the robot, so
  // the executed velocity inherits the field's guaranteed passage instead of
  // chord-cutting toward a point on the integrated trajectory. The incumbent
  // keeps its field anchored to the frame it was built in; field-less
  // candidates (direct shot, commitments that outlived their field) steer at
  // a lookahead point on their path.
  Vec2 dir;
  if (!chosen.region.curve.empty()) {
    GapField live = make_field(chosen.region, cfg.sigma_frac);
    dir = combined_field(live, Vec2{0.0, 0.0});
    state.committed_field = std::move(live);
    state.committed_frame = state.pose;
    state.committed_field_ok = true;
  } else if (*sel == current_index && state.committed_field_ok) {
    Vec2 anchored = state.committed_frame.to_frame(state.pose.position());
    dir = combined_field(state.committed_field, anchored)
              .rotated(state.committed_frame.theta - state.pose.theta);
  } else {
    Vec2 target = chosen.traj.end_position();
    double run = 0.0;
    for (std::size_t i = 1; i < chosen.traj.poses.size(); ++i) {
      run += distance(chosen.traj.poses[i].position(), chosen.traj.poses[i - 1].position());
      if (run >= cfg.lookahead) {
        target = chosen.traj.poses[i].position();
        break;
      }
    }
    dir = target;
    state.committed_field_ok = false;
  }
  if (dir.norm() < 1e-9) dir = chosen.traj.end_position();
  double dist_to_final = distance(state.pose.position(), state.final_goal);
  double speed = cfg.robot.v_max * std::clamp(dist_to_final / 1.0, 0.3, 1.0);
  double bearing = dir.angle();
  Twist2 u;
  if (cfg.robot.kind != RobotKind::holonomic_1st && std::abs(bearing) > kPi / 2.0) {
    // A unicycle cannot strafe to a rear target; rotate in place toward it
    // instead of folding into a reverse-and-spin command.
    u = Twist2{0.0, 0.0, std::copysign(cfg.robot.omega_max, bearing)};
  } else {
    Vec2 step_dir = dir.normalized();
    u = Twist2{step_dir.x * speed, step_dir.y * speed, 0.0};
    u.omega = std::clamp(1.5 * bearing, -cfg.robot.omega_max, cfg.robot.omega_max);
  }

  // Safety layers: project, fold, clamp.
  double gap_lo, gap_hi, bisector;
  if (!chosen.region.curve.empty()) {
    gap_lo = chosen.region.p_right.angle();
    gap_hi = chosen.region.p_left.angle();
    bisector = chosen.region.local_goal.angle();
  } else if (*sel == current_index && state.committed_field_ok &&
             state.committed_field.region.contains(
                 state.committed_frame.to_frame(state.pose.position()), 1e-6)) {
    // Still inside the incumbent's region: its mouth stays passable, so keep
    // excluding it from the guard curves.
    const ConvexGapRegion& cr = state.committed_field.region;
    auto to_body = [&](const Vec2& p) {
      return state.pose.to_frame(state.committed_frame.from_frame(p));
    };
    gap_lo = to_body(cr.p_right).angle();
    gap_hi = to_body(cr.p_left).angle();
    bisector = to_body(cr.local_goal).angle();
  } else {
    // No live gap cone: guard against every obstacle point in the
    // half-plane of travel.
    bisector = bearing;
    gap_lo = gap_hi = bisector;
  }
  std::vector<Vec2> curves = extract_collision_curves(state.ego, bisector, gap_lo, gap_hi);
  if (cfg.flags.projection) {
    ProjectedCommand pc = project(u, Vec2{0.0, 0.0}, curves, cfg.safety);
    u = pc.u;
    log.psi_value = pc.psi_value;
    if (std::isfinite(pc.psi_value) && pc.psi_value > 0.0) {
      if (pc.psi_value >= 1.2) {
        // Deep penetration (discretization or stale perception): drop
        // pursuit and retreat along the outward normal until clear.
        Vec2 away = grad_psi_hat(Vec2{0.0, 0.0}, curves);
        double v_esc = cfg.robot.v_max * std::min(1.0, 0.25 + 0.5 * (pc.psi_value - 1.0));
        u.vx = away.x * v_esc;
        u.vy = away.y * v_esc;
      } else {
        // The projected command cancels (and, past the minimum shell,
        // reverses) the approach component while keeping the tangential
        // part, so the robot can slide along the shell through a tight
        // opening instead of bouncing off it. Creep so slew-limited bodies
        // track the deflection; once past the shell, add a gentle outward
        // bias so a purely tangential command still works back out.
        double f = std::clamp(1.0 - 0.75 * pc.psi_value, 0.25, 1.0);
        u.vx *= f;
        u.vy *= f;
        if (pc.psi_value > 1.0) {
          Vec2 away = grad_psi_hat(Vec2{0.0, 0.0}, curves);
          double nudge = cfg.robot.v_max * std::min(0.5, pc.psi_value - 1.0);
          u.vx += away.x * nudge;
          u.vy += away.y * nudge;
        }
      }
    }
  } else {
    log.psi_value = psi(Vec2{0.0, 0.0}, curves, cfg.safety);
  }
  if (cfg.robot.kind != RobotKind::holonomic_1st) {
    u = nh_map(u, cfg.lambda_y);
    if (cfg.flags.projection) {
      // The fold turns any lateral escape into rotation, so the executed
      // velocity (v along the heading) can still approach the obstacle.
      // Project once more on the folded command: brakes v when the heading
      // points at the nearest point and converts the residual into turning.
      ProjectedCommand pc = project(u, Vec2{0.0, 0.0}, curves, cfg.safety);
      u.vx = pc.u.vx;
      u.omega += cfg.lambda_y * pc.u.vy;
      u.vy = 0.0;
    }
  }
  u = clamp_cmd(u, cfg.robot);

  log.cmd = u;
  state.last_log = log;
  state.timings.per_tick_ms.push_back(ms_since(tick_t0));
  out.cmd = u;
  out.status = state.status;
  return out;
}

}  // namespace gapflow
