// Safety extensions around the raw field command: obstacle level-set
// projection, radial gap-region extension for limited sensors, and the
// holonomic-to-unicycle command fold.
#pragma once

#include <vector>

#include "gapflow/field.hpp"
#include "gapflow/scan.hpp"

namespace gapflow {

// Obstacle-proximity level set and projection parameters. psi rises from 0 at
// distance r_nom to 1 at r_min; commands pushing inward get blended off as
// psi approaches 1. Requires 0 < r_min < r_nom.
struct SafetyParams {
  double r_min = 0.3;
  double r_nom = 0.6;
};

// Egocircle points that bound the robot near the active gap: everything
// within +-pi/2 of `bisector_bearing`, excluding bearings strictly inside the
// gap interval (gap_lo, gap_hi). Bearings are robot-frame.
std::vector<Vec2> extract_collision_curves(const Egocircle& ego, double bisector_bearing,
                                           double gap_lo, double gap_hi);

// Level-set value at x against the curve points:
//   psi = (r_min/d - r_min/r_nom) / (1 - r_min/r_nom), d = min distance.
// 0 at d = r_nom, 1 at d = r_min, > 1 inside. -infinity with no points,
// +infinity at d = 0. Throws std::invalid_argument on bad params.
double psi(const Vec2& x, const std::vector<Vec2>& curves, const SafetyParams& p);

// Unit direction of steepest psi *decrease*: away from the nearest curve
// point. Zero when curves are empty; degenerate (x on a point) reported via
// the project() flag.
Vec2 grad_psi_hat(const Vec2& x, const std::vector<Vec2>& curves);

struct ProjectedCommand {
  Twist2 u;
  double psi_value = 0.0;
  bool degenerate = false;  // x coincided with an obstacle point
};

// Projection operator: for psi >= 0, removes the inward-pointing part of the
// linear command scaled by psi, leaving outward commands and the angular rate
// untouched:
//   u' = u - max(0, psi) * min(0, <ghat, u>) * ghat
// At psi = 1 an inward command is fully cancelled; outward escape is free.
ProjectedCommand project(const Twist2& u, const Vec2& x, const std::vector<Vec2>& curves,
                         const SafetyParams& p);

// Enlarges a gap region for limited-FoV sensing: slides the vertex backward
// along the bisector by the radius of the largest robot-centered free circle
// and re-intersects the gap lines with that circle. The inscribed-angle
// construction halves the angular extent while keeping the region convex and
// the curve unchanged. Throws std::runtime_error when the robot is already
// in collision (free radius vanishes).
ConvexGapRegion radial_extension(const ConvexGapRegion& region, const Egocircle& ego,
                                 double r_ins);

// Nonholonomic fold of a holonomic command: forward rate keeps vx; the
// lateral component folds into turn rate with gain lambda_y, added to the
// commanded omega. Returns [v, 0, omega'].
Twist2 nh_map(const Twist2& u, double lambda_y);

}  // namespace gapflow
