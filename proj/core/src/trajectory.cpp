#include "gapflow/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gapflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Squared distance from q to the nearest egocircle point.
double min_dist2(const Vec2& q, const std::vector<Vec2>& pts) {
  double best = kInf;
  for (const Vec2& p : pts) {
    double dx = p.x - q.x, dy = p.y - q.y;
    double d2 = dx * dx + dy * dy;
    if (d2 < best) best = d2;
  }
  return best;
}

}  // namespace

double pose_clearance_cost(double dist, const ScoreParams& p) {
  if (dist <= p.r_ins) return kInf;
  if (dist > p.r_max) return 0.0;
  return p.c_obs * std::exp(-p.w2 * (dist - p.r_ins));
}

double score_trajectory(const Trajectory& traj, const std::vector<Vec2>& ego_points,
                        const Vec2& local_goal, const ScoreParams& p) {
  if (traj.empty()) throw std::invalid_argument("score_trajectory: empty trajectory");
  double sum = 0.0;
  // The start pose reflects the current state, not this candidate's choice,
  // so it does not contribute.
  for (std::size_t i = 1; i < traj.poses.size(); ++i) {
    double d2 = min_dist2(traj.poses[i].position(), ego_points);
    if (d2 <= p.r_ins * p.r_ins) return kInf;
    double d = std::sqrt(d2);
    if (d <= p.r_max) sum += pose_clearance_cost(d, p);
  }
  return sum + p.w1 * distance(traj.end_position(), local_goal);
}

bool collision_check(const Trajectory& traj, const std::vector<Vec2>& ego_points, double r_ins) {
  if (traj.empty()) return false;
  double r2 = r_ins * r_ins;
  for (std::size_t i = 1; i < traj.poses.size(); ++i) {
    if (min_dist2(traj.poses[i].position(), ego_points) <= r2) return false;
  }
  return true;
}

std::optional<int> select_trajectory(const std::vector<Scored>& candidates, int current_index,
                                     double switch_cost) {
  if (candidates.empty()) return std::nullopt;
  int best = -1;
  double best_score = kInf;
  for (int i = 0; i < static_cast<int>(candidates.size()); ++i) {
    if (candidates[i].score < best_score) {
      best_score = candidates[i].score;
      best = i;
    }
  }
  if (current_index >= 0 && current_index < static_cast<int>(candidates.size())) {
    double cur = candidates[current_index].score;
    if (std::isfinite(cur) && best_score >= cur - switch_cost) return current_index;
  }
  if (best < 0 || !std::isfinite(best_score)) return std::nullopt;
  return best;
}

}  // namespace gapflow
