// Candidate trajectories: synthesis output, obstacle-proximity scoring,
// perception-space collision checking, and damped selection.
#pragma once

#include <optional>
#include <vector>

#include "gapflow/scan.hpp"

namespace gapflow {

// A planned local trajectory in the robot body frame of the tick that
// produced it. Timestamps are seconds from trajectory start; `complete` marks
// integrations that reached their local goal before timing out.
struct Trajectory {
  std::vector<Pose2> poses;
  std::vector<double> times;
  bool complete = false;
  int source_gap = -1;  // index into the tick's gap set, -1 when synthetic

  [[nodiscard]] bool empty() const { return poses.empty(); }
  [[nodiscard]] Vec2 end_position() const { return poses.back().position(); }
};

struct ScoreParams {
  double w1 = 1.0;      // terminal weight toward the local goal
  double w2 = 5.0;      // obstacle cost decay rate (1/m)
  double c_obs = 20.0;  // obstacle cost scale
  double r_ins = 0.2;   // inscribed radius: poses closer than this are infeasible
  double r_max = 0.8;   // proximity beyond this costs nothing
};

// Pose cost against the egocircle point set: 0 beyond r_max, exponential in
// (r_ins, r_max], +infinity at or inside r_ins. Lower is better.
double pose_clearance_cost(double dist, const ScoreParams& p);

// Sums pose clearance costs and adds w1 * |end - local_goal|. Infinity when
// any pose is infeasible; an empty trajectory throws std::invalid_argument.
double score_trajectory(const Trajectory& traj, const std::vector<Vec2>& ego_points,
                        const Vec2& local_goal, const ScoreParams& p);

// True when every pose keeps every egocircle point strictly farther than
// r_ins. Points are pre-sorted by bearing internally; callers with many
// trajectories should reuse `ego_points` from obstacle_points().
bool collision_check(const Trajectory& traj, const std::vector<Vec2>& ego_points, double r_ins);

struct Scored {
  Trajectory traj;
  double score = 0.0;
};

// Picks the lowest-score feasible candidate, but keeps the currently tracked
// candidate unless a challenger beats it by more than `switch_cost`
// (oscillation damping). `current_index` indexes into `candidates`, -1 when
// no current trajectory survives. Returns nullopt when candidates is empty.
std::optional<int> select_trajectory(const std::vector<Scored>& candidates, int current_index,
                                     double switch_cost);

}  // namespace gapflow
