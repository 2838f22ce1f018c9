// Hierarchical navigation: accumulated belief map, grid A* global planning,
// local goal extraction, and the per-frame planner tick that chains gap
// detection, per-gap fields, trajectory synthesis/selection, and the safety
// layers into one velocity command.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gapflow/field.hpp"
#include "gapflow/gap.hpp"
#include "gapflow/safety.hpp"
#include "gapflow/sim.hpp"
#include "gapflow/trajectory.hpp"

namespace gapflow {

// Binary occupancy belief accumulated from scan returns (world frame).
struct BeliefMap {
  int width = 0, height = 0;
  double resolution = 0.1;
  std::vector<std::uint8_t> cells;

  static BeliefMap make(double size_x, double size_y, double resolution);
  [[nodiscard]] bool in_bounds(int ix, int iy) const {
    return ix >= 0 && ix < width && iy >= 0 && iy < height;
  }
  [[nodiscard]] bool occupied(int ix, int iy) const {
    return !in_bounds(ix, iy) || cells[static_cast<std::size_t>(iy) * width + ix] != 0;
  }
  void mark(const Vec2& p);
  [[nodiscard]] int cell_x(double x) const { return static_cast<int>(std::floor(x / resolution)); }
  [[nodiscard]] int cell_y(double y) const { return static_cast<int>(std::floor(y / resolution)); }
};

// 8-connected A* on the belief inflated by r_ins. Returns world-frame
// waypoints from start to goal (inclusive), empty when unreachable. The
// start cell is always treated as traversable so a wall-adjacent robot can
// still plan out.
std::vector<Pose2> global_plan(const BeliefMap& belief, const Pose2& start, const Vec2& goal,
                               double r_ins);

// Carrot waypoint (robot frame): the path point `lookahead` arc length past
// the waypoint nearest the robot, pulled inside the sensing horizon if the
// robot has fallen far behind the path.
Vec2 local_goal(const std::vector<Pose2>& path, const Egocircle& ego, const Pose2& pose,
                double lookahead);

struct FeatureFlags {
  bool projection = true;   // obstacle level-set projection on commands
  bool radial_extend = true;  // radial gap-region extension
  bool conversion = true;   // radial-to-swept gap conversion
};

struct NavConfig {
  SensorModel sensor;
  RobotModel robot;
  FeatureFlags flags;

  double tau_alpha = 3.0 * kPi / 4.0;  // swept/radial skewness threshold
  double tau_ga = kPi / 2.0;           // max region extent after convexify
  double c_a = 0.8;                    // merge: max facing-endpoint distance
  double c_d = 0.4;                    // merge: max outer range difference
  double eps1 = 0.2, eps2 = 0.2;       // conversion step + goal offsets
  double sigma_frac = 0.25;            // circulation decay, fraction of extent

  ScoreParams score;
  double switch_cost = 4.0;            // selection hysteresis
  SafetyParams safety;
  double lambda_y = 1.0;               // lateral fold gain

  double planner_dt = 0.05;            // 20 Hz planning
  double integrate_dt = 0.1;           // field integration step (unit speed)
  double integrate_tmax = 12.0;
  double lookahead = 0.4;              // pure-pursuit arc length
  double goal_tol = 0.3;
  int max_replans = 5;
  double t_max = 120.0;

  // Defaults scaled off the inscribed radius.
  static NavConfig defaults(double r_ins);
};

enum class NavOutcome { running, success, collision, abort, timeout };

struct NavStatus {
  NavOutcome outcome = NavOutcome::running;
  double elapsed = 0.0;
  double path_length = 0.0;
};

// Per-tick planning record, also rendered as one structured log line.
struct TickLog {
  int tick = 0;
  int gaps_raw = 0;
  int gaps_final = 0;
  int candidates = 0;
  int feasible = 0;
  int selected = -1;       // candidate index, -1 when stopped
  int chosen_source = -9;  // gap index; -1 direct shot, -2 incumbent, -9 none
  Vec2 p_star;             // local goal handed to the gap stage (robot frame)
  double score = 0.0;
  double psi_value = 0.0;
  Twist2 cmd;
  bool replanned = false;

  [[nodiscard]] std::string line() const;
};

struct PlannerTimings {
  std::vector<double> per_trajectory_ms;  // synth+score, one entry per candidate
  std::vector<double> per_tick_ms;
};

struct NavState {
  Pose2 pose;              // current world-frame pose (set by caller each tick)
  Vec2 final_goal;         // world frame
  Egocircle ego;
  bool ego_init = false;
  Pose2 prev_pose;
  BeliefMap belief;
  std::vector<Pose2> global_path;
  std::vector<Pose2> committed;  // selected trajectory, world frame
  int committed_gap = -1;
  GapField committed_field;  // live field behind `committed`, in committed_frame coords
  Pose2 committed_frame;     // world pose committed_field is anchored to
  bool committed_field_ok = false;
  int committed_age = 0;  // ticks since the commitment was freshly selected
  int replan_failures = 0;
  double elapsed = 0.0;
  double path_length = 0.0;
  int tick_index = 0;
  NavStatus status;
  TickLog last_log;
  PlannerTimings timings;

  static NavState make(const World& w, const NavConfig& cfg);
};

struct TickResult {
  Twist2 cmd;
  NavStatus status;
};

// One planner frame: updates the egocircle and belief from `scan`, maintains
// the global path, runs the gap pipeline to a selected local trajectory, and
// reduces it to a velocity command through the safety layers (projection,
// nonholonomic fold, clamps). Deterministic for identical inputs.
TickResult tick(NavState& state, const Scan& scan, const NavConfig& cfg);

}  // namespace gapflow
