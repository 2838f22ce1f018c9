// Deterministic 2D simulation: occupancy-grid worlds with an exact text
// round-trip format, grid raycasting, robot kinematics, bumper collision
// checks, and procedural world generation.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gapflow/geom.hpp"
#include "gapflow/scan.hpp"

namespace gapflow {

// Axis-aligned occupancy grid. Cell (ix, iy) covers
// [ix*res, (ix+1)*res) x [iy*res, (iy+1)*res) in meters, origin at (0, 0).
struct World {
  int width = 0;   // cells in x
  int height = 0;  // cells in y
  double resolution = 0.05;
  std::vector<std::uint8_t> cells;  // row-major by y, 1 = occupied
  Pose2 start;
  Vec2 goal;

  [[nodiscard]] bool in_bounds(int ix, int iy) const {
    return ix >= 0 && ix < width && iy >= 0 && iy < height;
  }
  [[nodiscard]] bool occupied(int ix, int iy) const {
    return !in_bounds(ix, iy) || cells[static_cast<std::size_t>(iy) * width + ix] != 0;
  }
  void set(int ix, int iy, bool occ) {
    if (in_bounds(ix, iy)) cells[static_cast<std::size_t>(iy) * width + ix] = occ ? 1 : 0;
  }
  [[nodiscard]] int cell_x(double x) const { return static_cast<int>(std::floor(x / resolution)); }
  [[nodiscard]] int cell_y(double y) const { return static_cast<int>(std::floor(y / resolution)); }
  [[nodiscard]] double size_x() const { return width * resolution; }
  [[nodiscard]] double size_y() const { return height * resolution; }
};

// Text world format:
//   line 1: "<width> <height> <resolution>"
//   next <height> lines: rows of '#' (occupied) / '.' (free), row 0 = y=0
//   optional: "start <x> <y> <theta>"   optional: "goal <x> <y>"
// save/load round-trips bit-exactly (doubles printed with %.17g).
std::string save_world(const World& w);
World load_world(const std::string& text);  // throws std::runtime_error on bad input
void save_world_file(const World& w, const std::string& path);
World load_world_file(const std::string& path);

// Distance from `origin` along `bearing` to the first occupied cell edge,
// capped at d_max. An origin inside an occupied cell returns 0.
double raycast(const World& w, const Vec2& origin, double bearing, double d_max);

struct SensorModel {
  int beams = 360;
  double fov = kTwoPi;        // radians, centered on the robot heading
  double d_max = 5.0;
  double range_noise = 0.0;   // stddev of additive range noise, meters
};

// Simulated scan at `pose`. Beam i points at fov * (i + 0.5) / beams - fov/2
// relative to the heading. `noise_rng` may be null when range_noise is 0.
Scan simulate_scan(const World& w, const Pose2& pose, const SensorModel& s, double r_ins,
                   class Rng* noise_rng = nullptr);

enum class RobotKind { holonomic_1st, nonholonomic_1st, nonholonomic_2nd };

struct RobotModel {
  RobotKind kind = RobotKind::holonomic_1st;
  double r_ins = 0.2;
  double v_max = 0.5;
  double omega_max = 1.5;
  double a_max = 1.0;      // linear accel limit (2nd order)
  double alpha_max = 2.0;  // angular accel limit (2nd order)
};

struct RobotState {
  Pose2 pose;
  double v = 0.0;      // body-frame forward velocity (vx for holonomic)
  double vy = 0.0;     // lateral velocity, holonomic only
  double omega = 0.0;
};

// Advances one dynamics substep under `cmd` with the model's clamps:
// holonomic_1st and nonholonomic_1st track commands instantly (speed/turn
// clamped); nonholonomic_2nd slews velocities under accel limits. Poses
// integrate the applied twist exactly (SE(2) exponential).
RobotState step(const RobotModel& m, const RobotState& s, const Twist2& cmd, double dt);

// True when a disc of radius r_ins at `pos` overlaps any occupied cell.
bool bumper_check(const World& w, const Vec2& pos, double r_ins);

struct WorldGenParams {
  double size = 20.0;        // square side, meters
  double resolution = 0.05;
  int obstacle_count = 22;   // density knob; interpretation varies by kind
  double r_ins = 0.2;        // clearance used for connectivity checks
  double min_start_goal_sep = 12.0;
};

// Procedural worlds, fully determined by (kind, seed, params):
//   dense  - scattered convex blobs           campus - big blocks + scatter
//   office - rooms off a corridor, doorways   sector - radial walls + scatter
// Start/goal are placed in free space, mutually reachable with r_ins
// clearance (checked on the inflated grid). Throws std::runtime_error if a
// connected placement cannot be found.
World generate_world(const std::string& kind, std::uint64_t seed, const WorldGenParams& p);

}  // namespace gapflow
