// Range-scan container and the egocircle: a body-frame 360-degree range
// buffer that persists readings across robot motion.
#pragma once

#include <vector>

#include "gapflow/geom.hpp"

namespace gapflow {

// A single polar range scan in the robot body frame. Beam i points along
// angle_min + i * angle_increment; ranges are in (0, d_max], where d_max
// doubles as the free-space sentinel.
struct Scan {
  std::vector<double> ranges;
  double angle_min = 0.0;
  double angle_increment = 0.0;
  double d_max = 0.0;
  double r_ins = 0.0;  // robot inscribed radius, carried with the scan

  [[nodiscard]] int size() const { return static_cast<int>(ranges.size()); }
  [[nodiscard]] double angle_of(int i) const { return angle_min + i * angle_increment; }

  // Throws std::invalid_argument when structurally unusable as sensor output.
  void validate() const;
};

// Builds a validated scan; ranges are clamped into (0, d_max].
Scan make_scan(std::vector<double> ranges, double angle_min, double angle_increment,
               double d_max, double r_ins);

// Cartesian point of beam `index` at range `range` (body frame).
// Throws std::out_of_range on a bad index.
Vec2 polar_to_cart(int index, double range, const Scan& scan);

// Full-circle egocircle. Bin i covers bearings
// [-pi + i*inc, -pi + (i+1)*inc) with its beam at the bin center, so the
// buffer tiles (-pi, pi] with no seam beam. staleness[i] counts updates since
// bin i was last directly observed; never-observed bins hold d_max.
struct Egocircle {
  Scan scan;
  std::vector<int> staleness;

  [[nodiscard]] int size() const { return scan.size(); }
  [[nodiscard]] double range(int i) const { return scan.ranges[i]; }
  [[nodiscard]] double angle_of(int i) const { return scan.angle_of(i); }

  // Bin index whose angular cell contains `bearing` (any real angle).
  [[nodiscard]] int index_of(double bearing) const;

  static Egocircle make(int bins, double d_max, double r_ins);
};

// Advances the egocircle by one frame: propagates retained points through the
// body-frame odometry delta (rotate/translate, re-bin keeping the nearest
// range per bin), ages staleness, then overwrites bins covered by `fresh`.
// A zero-beam `fresh` scan means no new data this frame; points propagated
// beyond d_max or behind the sensor origin are dropped to free space.
Egocircle egocircle_update(const Egocircle& prev, const Pose2& odom_delta, const Scan& fresh);

// Cartesian obstacle points of all bins that currently see an obstacle
// (range < d_max - eps), body frame, in bin order.
std::vector<Vec2> obstacle_points(const Egocircle& ego);

// Smallest range currently in the buffer.
double min_range(const Egocircle& ego);

}  // namespace gapflow
