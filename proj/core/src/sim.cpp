#include "gapflow/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gapflow/rng.hpp"

namespace gapflow {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string save_world(const World& w) {
  std::string out;
  out.reserve(static_cast<std::size_t>(w.width + 1) * w.height + 128);
  out += std::to_string(w.width) + " " + std::to_string(w.height) + " " +
         fmt_double(w.resolution) + "\n";
  for (int iy = 0; iy < w.height; ++iy) {
    for (int ix = 0; ix < w.width; ++ix) {
      out += w.cells[static_cast<std::size_t>(iy) * w.width + ix] ? '#' : '.';
    }
    out += '\n';
  }
  out += "start " + fmt_double(w.start.x) + " " + fmt_double(w.start.y) + " " +
         fmt_double(w.start.theta) + "\n";
  out += "goal " + fmt_double(w.goal.x) + " " + fmt_double(w.goal.y) + "\n";
  return out;
}

World load_world(const std::string& text) {
  std::istringstream in(text);
  World w;
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("world: empty input");
  {
    std::istringstream hs(header);
    if (!(hs >> w.width >> w.height >> w.resolution) || w.width <= 0 || w.height <= 0 ||
        !(w.resolution > 0.0)) {
      throw std::runtime_error("world: bad header line");
    }
  }
  w.cells.assign(static_cast<std::size_t>(w.width) * w.height, 0);
  std::string row;
  for (int iy = 0; iy < w.height; ++iy) {
    if (!std::getline(in, row)) throw std::runtime_error("world: missing grid row");
    if (static_cast<int>(row.size()) != w.width) throw std::runtime_error("world: bad row length");
    for (int ix = 0; ix < w.width; ++ix) {
      char c = row[static_cast<std::size_t>(ix)];
      if (c == '#') {
        w.cells[static_cast<std::size_t>(iy) * w.width + ix] = 1;
      } else if (c != '.') {
        throw std::runtime_error("world: bad cell character");
      }
    }
  }
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "start") {
      double x, y, th;
      if (!(ls >> x >> y >> th)) throw std::runtime_error("world: bad start line");
      w.start = Pose2(x, y, th);
    } else if (key == "goal") {
      double x, y;
      if (!(ls >> x >> y)) throw std::runtime_error("world: bad goal line");
      w.goal = {x, y};
    } else {
      throw std::runtime_error("world: unknown key '" + key + "'");
    }
  }
  return w;
}

void save_world_file(const World& w, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("world: cannot open " + path + " for writing");
  f << save_world(w);
}

World load_world_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("world: cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return load_world(ss.str());
}

double raycast(const World& w, const Vec2& origin, double bearing, double d_max) {
  int ix = w.cell_x(origin.x);
  int iy = w.cell_y(origin.y);
  if (w.occupied(ix, iy)) return 0.0;
  const double dx = std::cos(bearing), dy = std::sin(bearing);
  const double res = w.resolution;
  const double inf = std::numeric_limits<double>::infinity();
  int step_x = dx > 0 ? 1 : -1;
  int step_y = dy > 0 ? 1 : -1;
  double t_delta_x = dx != 0.0 ? res / std::abs(dx) : inf;
  double t_delta_y = dy != 0.0 ? res / std::abs(dy) : inf;
  double t_max_x = inf, t_max_y = inf;
  if (dx > 0) {
    t_max_x = ((ix + 1) * res - origin.x) / dx;
  } else if (dx < 0) {
    t_max_x = (ix * res - origin.x) / dx;
  }
  if (dy > 0) {
    t_max_y = ((iy + 1) * res - origin.y) / dy;
  } else if (dy < 0) {
    t_max_y = (iy * res - origin.y) / dy;
  }
  double t = 0.0;
  while (t <= d_max) {
    if (t_max_x < t_max_y) {
      t = t_max_x;
      t_max_x += t_delta_x;
      ix += step_x;
    } else {
      t = t_max_y;
      t_max_y += t_delta_y;
      iy += step_y;
    }
    if (t > d_max) break;
    if (w.occupied(ix, iy)) return t;
  }
  return d_max;
}

Scan simulate_scan(const World& w, const Pose2& pose, const SensorModel& s, double r_ins,
                   Rng* noise_rng) {
  if (s.beams < 3) throw std::invalid_argument("simulate_scan: need at least 3 beams");
  Scan scan;
  scan.angle_increment = s.fov / s.beams;
  scan.angle_min = -0.5 * s.fov + 0.5 * scan.angle_increment;
  scan.d_max = s.d_max;
  scan.r_ins = r_ins;
  scan.ranges.resize(static_cast<std::size_t>(s.beams));
  for (int i = 0; i < s.beams; ++i) {
    double bearing = pose.theta + scan.angle_of(i);
    double r = raycast(w, pose.position(), bearing, s.d_max);
    if (s.range_noise > 0.0 && noise_rng != nullptr && r < s.d_max) {
      r = std::clamp(r + noise_rng->normal(0.0, s.range_noise), 1e-3, s.d_max);
    }
    scan.ranges[static_cast<std::size_t>(i)] = std::max(r, 1e-3);
  }
  return scan;
}

RobotState step(const RobotModel& m, const RobotState& s, const Twist2& cmd, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  RobotState n = s;
  Twist2 u;
  switch (m.kind) {
    case RobotKind::holonomic_1st: {
      Vec2 lin = cmd.linear();
      double sp = lin.norm();
      if (sp > m.v_max) lin = lin * (m.v_max / sp);
      u = {lin.x, lin.y, std::clamp(cmd.omega, -m.omega_max, m.omega_max)};
      n.v = u.vx;
      n.vy = u.vy;
      n.omega = u.omega;
      break;
    }
    case RobotKind::nonholonomic_1st: {
      u = {std::clamp(cmd.vx, -m.v_max, m.v_max), 0.0,
           std::clamp(cmd.omega, -m.omega_max, m.omega_max)};
      n.v = u.vx;
      n.vy = 0.0;
      n.omega = u.omega;
      break;
    }
    case RobotKind::nonholonomic_2nd: {
      double v_des = std::clamp(cmd.vx, -m.v_max, m.v_max);
      double w_des = std::clamp(cmd.omega, -m.omega_max, m.omega_max);
      n.v = s.v + std::clamp(v_des - s.v, -m.a_max * dt, m.a_max * dt);
      n.omega = s.omega + std::clamp(w_des - s.omega, -m.alpha_max * dt, m.alpha_max * dt);
      n.vy = 0.0;
      u = {n.v, 0.0, n.omega};
      break;
    }
  }
  n.pose = integrate_twist(s.pose, u, dt);
  return n;
}

bool bumper_check(const World& w, const Vec2& pos, double r_ins) {
  const double res = w.resolution;
  int x0 = w.cell_x(pos.x - r_ins), x1 = w.cell_x(pos.x + r_ins);
  int y0 = w.cell_y(pos.y - r_ins), y1 = w.cell_y(pos.y + r_ins);
  const double r2 = r_ins * r_ins;
  for (int iy = y0; iy <= y1; ++iy) {
    for (int ix = x0; ix <= x1; ++ix) {
      if (!w.occupied(ix, iy)) continue;
      double dx = std::max({ix * res - pos.x, 0.0, pos.x - (ix + 1) * res});
      double dy = std::max({iy * res - pos.y, 0.0, pos.y - (iy + 1) * res});
      if (dx * dx + dy * dy <= r2) return true;
    }
  }
  return false;
}

namespace {

World make_walled(double size, double resolution) {
  World w;
  w.width = std::max(8, static_cast<int>(std::llround(size / resolution)));
  w.height = w.width;
  w.resolution = resolution;
  w.cells.assign(static_cast<std::size_t>(w.width) * w.height, 0);
  for (int ix = 0; ix < w.width; ++ix) {
    w.set(ix, 0, true);
    w.set(ix, w.height - 1, true);
  }
  for (int iy = 0; iy < w.height; ++iy) {
    w.set(0, iy, true);
    w.set(w.width - 1, iy, true);
  }
  return w;
}

void fill_rect(World& w, double x0, double y0, double x1, double y1) {
  int cx0 = w.cell_x(std::min(x0, x1)), cx1 = w.cell_x(std::max(x0, x1));
  int cy0 = w.cell_y(std::min(y0, y1)), cy1 = w.cell_y(std::max(y0, y1));
  for (int iy = cy0; iy <= cy1; ++iy) {
    for (int ix = cx0; ix <= cx1; ++ix) w.set(ix, iy, true);
  }
}

void clear_rect(World& w, double x0, double y0, double x1, double y1) {
  int cx0 = w.cell_x(std::min(x0, x1)), cx1 = w.cell_x(std::max(x0, x1));
  int cy0 = w.cell_y(std::min(y0, y1)), cy1 = w.cell_y(std::max(y0, y1));
  for (int iy = cy0; iy <= cy1; ++iy) {
    for (int ix = cx0; ix <= cx1; ++ix) {
      if (ix > 0 && ix < w.width - 1 && iy > 0 && iy < w.height - 1) w.set(ix, iy, false);
    }
  }
}

void fill_circle(World& w, const Vec2& c, double radius) {
  int cx0 = w.cell_x(c.x - radius), cx1 = w.cell_x(c.x + radius);
  int cy0 = w.cell_y(c.y - radius), cy1 = w.cell_y(c.y + radius);
  const double res = w.resolution;
  for (int iy = cy0; iy <= cy1; ++iy) {
    for (int ix = cx0; ix <= cx1; ++ix) {
      double px = (ix + 0.5) * res, py = (iy + 0.5) * res;
      double dx = px - c.x, dy = py - c.y;
      if (dx * dx + dy * dy <= radius * radius) w.set(ix, iy, true);
    }
  }
}

// Wall segment of given thickness between two points (meters).
void fill_wall(World& w, const Vec2& a, const Vec2& b, double thickness) {
  Vec2 d = b - a;
  double len = d.norm();
  if (len < 1e-9) return;
  int steps = static_cast<int>(std::ceil(len / (0.5 * w.resolution)));
  for (int i = 0; i <= steps; ++i) {
    Vec2 p = a + d * (static_cast<double>(i) / steps);
    fill_circle(w, p, 0.5 * thickness);
  }
}

// Occupancy dilated by `radius` meters (disc stamping).
std::vector<std::uint8_t> inflate(const World& w, double radius) {
  std::vector<std::uint8_t> out(w.cells.size(), 0);
  int r = static_cast<int>(std::ceil(radius / w.resolution));
  // Precompute the disc mask.
  std::vector<std::pair<int, int>> disc;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (dx * dx + dy * dy <= r * r) disc.emplace_back(dx, dy);
    }
  }
  for (int iy = 0; iy < w.height; ++iy) {
    for (int ix = 0; ix < w.width; ++ix) {
      if (!w.cells[static_cast<std::size_t>(iy) * w.width + ix]) continue;
      for (auto [dx, dy] : disc) {
        int nx = ix + dx, ny = iy + dy;
        if (w.in_bounds(nx, ny)) out[static_cast<std::size_t>(ny) * w.width + nx] = 1;
      }
    }
  }
  return out;
}

// BFS reachability on an inflated grid (8-connected).
std::vector<std::uint8_t> reachable_from(const World& w, const std::vector<std::uint8_t>& blocked,
                                         int sx, int sy) {
  std::vector<std::uint8_t> seen(w.cells.size(), 0);
  if (!w.in_bounds(sx, sy) || blocked[static_cast<std::size_t>(sy) * w.width + sx]) return seen;
  std::deque<std::pair<int, int>> q;
  q.emplace_back(sx, sy);
  seen[static_cast<std::size_t>(sy) * w.width + sx] = 1;
  while (!q.empty()) {
    auto [cx, cy] = q.front();
    q.pop_front();
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        int nx = cx + dx, ny = cy + dy;
        if (!w.in_bounds(nx, ny)) continue;
        std::size_t ni = static_cast<std::size_t>(ny) * w.width + nx;
        if (seen[ni] || blocked[ni]) continue;
        seen[ni] = 1;
        q.emplace_back(nx, ny);
      }
    }
  }
  return seen;
}

void scatter_blobs(World& w, Rng& rng, int count, double margin, double r_lo, double r_hi) {
  for (int i = 0; i < count; ++i) {
    Vec2 c{rng.uniform(margin, w.size_x() - margin), rng.uniform(margin, w.size_y() - margin)};
    double rad = rng.uniform(r_lo, r_hi);
    if (rng.uniform() < 0.35) {
      double hw = rng.uniform(0.5 * rad, 1.6 * rad), hh = rng.uniform(0.5 * rad, 1.6 * rad);
      fill_rect(w, c.x - hw, c.y - hh, c.x + hw, c.y + hh);
    } else {
      fill_circle(w, c, rad);
    }
  }
}

World build_dense(Rng& rng, const WorldGenParams& p) {
  World w = make_walled(p.size, p.resolution);
  scatter_blobs(w, rng, p.obstacle_count, 1.6, 0.25, 0.55);
  return w;
}

World build_campus(Rng& rng, const WorldGenParams& p) {
  World w = make_walled(p.size, p.resolution);
  int blocks = 3 + static_cast<int>(rng.uniform_index(3));
  for (int i = 0; i < blocks; ++i) {
    double bw = rng.uniform(2.0, 4.0), bh = rng.uniform(2.0, 4.0);
    double x = rng.uniform(2.0, p.size - 2.0 - bw);
    double y = rng.uniform(2.0, p.size - 2.0 - bh);
    fill_rect(w, x, y, x + bw, y + bh);
  }
  scatter_blobs(w, rng, p.obstacle_count / 2, 1.6, 0.2, 0.45);
  return w;
}

World build_office(Rng& rng, const WorldGenParams& p) {
  World w = make_walled(p.size, p.resolution);
  const double mid = 0.5 * p.size;
  const double corridor_half = rng.uniform(1.0, 1.4);
  const double wall_t = 0.15;
  double wall_lo = mid - corridor_half, wall_hi = mid + corridor_half;
  // Walls separating the corridor from the two room banks.
  fill_wall(w, {0.0, wall_lo}, {p.size, wall_lo}, wall_t);
  fill_wall(w, {0.0, wall_hi}, {p.size, wall_hi}, wall_t);
  // Each bank is split into rooms by full-depth dividers; every room gets a
  // doorway onto the corridor.
  int rooms = 3 + static_cast<int>(rng.uniform_index(2));
  double room_w = (p.size - 2.0) / rooms;
  for (int bank = 0; bank < 2; ++bank) {
    double y0 = bank == 0 ? 0.0 : wall_hi;
    double y1 = bank == 0 ? wall_lo : p.size;
    for (int i = 1; i < rooms; ++i) {
      double x = 1.0 + i * room_w;
      fill_wall(w, {x, y0}, {x, y1}, wall_t);
    }
    for (int i = 0; i < rooms; ++i) {
      double x0 = 1.0 + i * room_w;
      double door_w = rng.uniform(1.0, 1.4);
      double dx = rng.uniform(x0 + 0.4, x0 + room_w - 0.4 - door_w);
      double wy = bank == 0 ? wall_lo : wall_hi;
      clear_rect(w, dx, wy - wall_t, dx + door_w, wy + wall_t);
      // Sparse furniture inside the room.
      if (rng.uniform() < 0.7) {
        Vec2 c{rng.uniform(x0 + 0.8, x0 + room_w - 0.8),
               bank == 0 ? rng.uniform(1.0, wall_lo - 1.0) : rng.uniform(wall_hi + 1.0, p.size - 1.0)};
        fill_circle(w, c, rng.uniform(0.2, 0.4));
      }
    }
  }
  return w;
}

World build_sector(Rng& rng, const WorldGenParams& p) {
  World w = make_walled(p.size, p.resolution);
  const Vec2 c{0.5 * p.size, 0.5 * p.size};
  int spokes = 5 + static_cast<int>(rng.uniform_index(3));
  for (int i = 0; i < spokes; ++i) {
    double ang = kTwoPi * (i + rng.uniform(0.15, 0.85)) / spokes;
    double r0 = rng.uniform(1.5, 2.5);
    double r1 = rng.uniform(0.42, 0.5) * p.size - 1.0;
    fill_wall(w, c + unit_from_angle(ang) * r0, c + unit_from_angle(ang) * r1, 0.18);
  }
  scatter_blobs(w, rng, p.obstacle_count / 2, 1.6, 0.2, 0.4);
  fill_circle(w, c, 0.0);  // no-op; center stays as generated
  return w;
}

}  // namespace

World generate_world(const std::string& kind, std::uint64_t seed, const WorldGenParams& p) {
  if (!(p.size > 4.0) || !(p.resolution > 0.0)) {
    throw std::invalid_argument("generate_world: bad size/resolution");
  }
  for (std::uint64_t attempt = 0; attempt < 25; ++attempt) {
    Rng rng(mix_seed(seed, attempt));
    World w;
    if (kind == "dense") {
      w = build_dense(rng, p);
    } else if (kind == "campus") {
      w = build_campus(rng, p);
    } else if (kind == "office") {
      w = build_office(rng, p);
    } else if (kind == "sector") {
      w = build_sector(rng, p);
    } else {
      throw std::invalid_argument("generate_world: unknown kind '" + kind + "'");
    }
    auto blocked = inflate(w, p.r_ins + 0.1);
    auto free_at = [&](const Vec2& v) {
      int ix = w.cell_x(v.x), iy = w.cell_y(v.y);
      return w.in_bounds(ix, iy) && !blocked[static_cast<std::size_t>(iy) * w.width + ix];
    };
    double sep = std::min(p.min_start_goal_sep, 0.75 * p.size);
    for (int tries = 0; tries < 400; ++tries) {
      Vec2 s{rng.uniform(1.2, p.size - 1.2), rng.uniform(1.2, p.size - 1.2)};
      Vec2 g{rng.uniform(1.2, p.size - 1.2), rng.uniform(1.2, p.size - 1.2)};
      if (!free_at(s) || !free_at(g)) continue;
      if (distance(s, g) < sep) continue;
      auto seen = reachable_from(w, blocked, w.cell_x(s.x), w.cell_y(s.y));
      if (!seen[static_cast<std::size_t>(w.cell_y(g.y)) * w.width + w.cell_x(g.x)]) continue;
      w.start = Pose2(s, (g - s).angle());
      w.goal = g;
      return w;
    }
  }
  throw std::runtime_error("generate_world: no connected start/goal placement found");
}

}  // namespace gapflow
