// Per-gap potential fields: convex polar-triangle regions, local goal
// placement, attractive + circulating vector field, and field integration.
// The combined field provably enters the region across both gap lines and
// has no interior equilibria, so integral curves leave through the gap curve.
#pragma once

#include <optional>
#include <vector>

#include "gapflow/gap.hpp"
#include "gapflow/trajectory.hpp"

namespace gapflow {

// Convex region swept from `origin` between bearings [bearing_right,
// bearing_right + extent] (counterclockwise), bounded outward by the gap
// curve: a polyline from p_right to p_left whose radius about the origin is
// strictly monotone in bearing. Physical naming: "right" is the lower
// bearing from the origin's viewpoint.
struct ConvexGapRegion {
  Vec2 origin;
  Vec2 p_right, p_left;
  double bearing_right = 0.0;  // wrapped
  double extent = 0.0;         // in (0, pi)
  std::vector<Vec2> curve;     // ordered right -> left, includes endpoints
  Vec2 local_goal;
  // Caches over `curve`, filled by finalize(); offsets are nondecreasing.
  std::vector<double> curve_offsets;
  std::vector<double> curve_radii;

  // Recomputes the offset/radius caches; call after editing curve or origin.
  void finalize();

  [[nodiscard]] double bearing_left() const { return wrap_angle(bearing_right + extent); }
  // Bearing of p relative to origin, as counterclockwise offset from
  // bearing_right in (-pi, pi].
  [[nodiscard]] double bearing_offset(const Vec2& p) const;
  // Curve radius at a bearing offset in [0, extent] (linear interpolation
  // along the polyline).
  [[nodiscard]] double curve_radius(double offset) const;
  [[nodiscard]] bool contains(const Vec2& p, double tol = 1e-9) const;
};

// Shrinks a gap to a convex polar triangle about the robot: the angular
// extent is capped at tau_ga (centered, then minimally shifted to keep
// goal_bearing inside when it lies within the gap). Endpoint ranges at moved
// bearings interpolate the original chord. Returns nullopt for gaps too
// degenerate to hold a region.
std::optional<ConvexGapRegion> convexify(const Gap& gap, double tau_ga, double goal_bearing);

// Places the region's local goal eps2 beyond the gap curve: radially out from
// the curve point at `desired_bearing` when that bearing crosses the region,
// otherwise from a point inset eps1 (arc length) inside the nearer gap line.
// eps1/eps2 must be positive. Also stores the goal on the region.
Vec2 place_local_goal(ConvexGapRegion& region, double eps1, double eps2, double desired_bearing);

// The potential field attached to one region. sigma is the circulation decay
// scale in radians.
struct GapField {
  ConvexGapRegion region;
  double sigma = 0.4;
};

GapField make_field(ConvexGapRegion region, double sigma_frac = 0.25);

// Attractive potential: distance to goal plus one-sided distance to the gap
// curve (the curve term vanishes once x is at or beyond the curve).
double attractive_potential(const GapField& f, const Vec2& x);

// Exact gradient of the attractive potential (ascent direction, not
// normalized; magnitude in [0, 2]).
Vec2 attractive_grad_raw(const GapField& f, const Vec2& x);

// Unit descent direction of the attractive potential; zero at the goal.
Vec2 attractive_grad(const GapField& f, const Vec2& x);

// Circulating component: clockwise-rotated unit pulls toward each gap line,
// each weighted by exp(-angular distance / sigma). Throws std::domain_error
// at a gap endpoint (singular).
Vec2 circulation(const GapField& f, const Vec2& x);

// circulation + attractive_grad.
Vec2 combined_field(const GapField& f, const Vec2& x);

// How an integral curve left the region (or failed to).
enum class FieldExit { goal_reached, curve, line, timeout, stuck };

struct IntegrationTrace {
  Trajectory traj;
  FieldExit exit = FieldExit::timeout;
  Vec2 exit_point;
};

// Forward-Euler integration of the unit-speed combined field from `start`
// until the local goal is reached or t_max elapses. Heading of each pose
// follows the field direction.
Trajectory integrate_field(const GapField& f, const Pose2& start, double dt, double t_max);

// Same integration, but also classifies the first boundary crossing.
IntegrationTrace integrate_field_traced(const GapField& f, const Pose2& start, double dt,
                                        double t_max);

}  // namespace gapflow
