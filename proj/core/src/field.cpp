#include "gapflow/field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gapflow {

namespace {

// Offsets of curve points from bearing_right, precomputed per query batch is
// overkill; the polyline is small, so a linear pass keeps this simple.
struct CurveHit {
  double dist = 0.0;
  Vec2 nearest;
};

CurveHit nearest_on_curve(const ConvexGapRegion& r, const Vec2& x) {
  CurveHit best;
  best.dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < r.curve.size(); ++i) {
    Vec2 q = closest_point_on_segment(x, r.curve[i], r.curve[i + 1]);
    double d = distance(x, q);
    if (d < best.dist) {
      best.dist = d;
      best.nearest = q;
    }
  }
  if (r.curve.size() == 1) {
    best.dist = distance(x, r.curve[0]);
    best.nearest = r.curve[0];
  }
  return best;
}

// Is x at or beyond the curve surface (measured radially from the origin)?
bool past_curve(const ConvexGapRegion& r, const Vec2& x) {
  double off = std::clamp(r.bearing_offset(x), 0.0, r.extent);
  return (x - r.origin).norm() >= r.curve_radius(off) - 1e-12;
}

}  // namespace

void ConvexGapRegion::finalize() {
  curve_offsets.resize(curve.size());
  curve_radii.resize(curve.size());
  double run = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    double off = bearing_offset(curve[i]);
    if (i == 0) off = 0.0;
    if (i + 1 == curve.size()) off = extent;
    run = std::max(run, off);  // guard tiny non-monotone wobble
    curve_offsets[i] = run;
    curve_radii[i] = (curve[i] - origin).norm();
  }
}

double ConvexGapRegion::bearing_offset(const Vec2& p) const {
  Vec2 d = p - origin;
  double b = d.squared_norm() < 1e-24 ? bearing_right + 0.5 * extent : d.angle();
  return wrap_angle(b - bearing_right);
}

double ConvexGapRegion::curve_radius(double offset) const {
  if (curve.empty() || curve_offsets.size() != curve.size()) {
    throw std::logic_error("region curve not finalized");
  }
  if (curve.size() == 1) return curve_radii[0];
  offset = std::clamp(offset, 0.0, extent);
  auto it = std::upper_bound(curve_offsets.begin(), curve_offsets.end(), offset);
  std::size_t hi = std::min<std::size_t>(
      static_cast<std::size_t>(it - curve_offsets.begin()), curve.size() - 1);
  if (hi == 0) return curve_radii[0];
  std::size_t lo = hi - 1;
  double span = curve_offsets[hi] - curve_offsets[lo];
  if (span < 1e-12) return curve_radii[hi];
  double t = std::clamp((offset - curve_offsets[lo]) / span, 0.0, 1.0);
  return curve_radii[lo] + t * (curve_radii[hi] - curve_radii[lo]);
}

bool ConvexGapRegion::contains(const Vec2& p, double tol) const {
  double off = bearing_offset(p);
  if (off < -1e-9 || off > extent + 1e-9) return false;
  double r = (p - origin).norm();
  return r <= curve_radius(std::clamp(off, 0.0, extent)) + tol;
}

std::optional<ConvexGapRegion> convexify(const Gap& gap, double tau_ga, double goal_bearing) {
  double width = gap.width();
  if (width < 2e-3) return std::nullopt;
  if (gap.left_range < 1e-6 && gap.right_range < 1e-6) return std::nullopt;
  tau_ga = std::min(tau_ga, kPi - 0.05);  // fields require extent < pi
  if (!(tau_ga > 0.0)) throw std::invalid_argument("convexify: tau_ga must be positive");

  // Offsets measured counterclockwise from the gap's low-bearing endpoint.
  double o_r = 0.0, o_l = width;
  if (width > tau_ga) {
    double w0 = 0.5 * (width - tau_ga);  // centered window
    double go = ccw_delta(gap.left_angle, goal_bearing);
    if (go <= width) {
      // Shift the window just enough to keep the goal bearing inside it.
      double margin = std::min(0.1 * tau_ga, 0.2);
      if (go < w0 + margin) {
        w0 = std::max(0.0, go - margin);
      } else if (go > w0 + tau_ga - margin) {
        w0 = std::min(width - tau_ga, go + margin - tau_ga);
      }
    }
    o_r = w0;
    o_l = w0 + tau_ga;
  }

  // Radius along the gap interpolates linearly in bearing between endpoints.
  auto radius_at = [&](double o) {
    return gap.left_range + (gap.right_range - gap.left_range) * (o / width);
  };

  ConvexGapRegion region;
  region.origin = {0.0, 0.0};
  region.bearing_right = wrap_angle(gap.left_angle + o_r);
  region.extent = o_l - o_r;
  int segs = std::max(8, static_cast<int>(std::ceil(region.extent / 0.02)));
  region.curve.reserve(static_cast<std::size_t>(segs) + 1);
  for (int k = 0; k <= segs; ++k) {
    double o = o_r + (o_l - o_r) * (static_cast<double>(k) / segs);
    region.curve.push_back(unit_from_angle(gap.left_angle + o) * radius_at(o));
  }
  region.p_right = region.curve.front();
  region.p_left = region.curve.back();
  if (distance(region.p_right, region.p_left) < 1e-9) return std::nullopt;
  region.finalize();
  return region;
}

Vec2 place_local_goal(ConvexGapRegion& region, double eps1, double eps2, double desired_bearing) {
  if (!(eps1 > 0.0) || !(eps2 > 0.0)) {
    throw std::invalid_argument("place_local_goal: eps1 and eps2 must be positive");
  }
  double off = wrap_angle(desired_bearing - region.bearing_right);
  double anchor_off;
  if (off >= 0.0 && off <= region.extent) {
    anchor_off = off;
  } else {
    bool right_side = ccw_delta(region.bearing_right + region.extent, desired_bearing) >
                      ccw_delta(desired_bearing, region.bearing_right);
    anchor_off = right_side ? 0.0 : region.extent;
  }
  // Keep the goal an eps1 arc away from both gap edges so it never lands on
  // an endpoint obstacle; tiny gaps collapse to the bisector.
  auto inset_at = [&](double side_off) {
    double r_side = std::max(region.curve_radius(side_off), eps1);
    return std::min(2.0 * eps1 / r_side, 0.5 * region.extent);
  };
  double lo = inset_at(0.0), hi = region.extent - inset_at(region.extent);
  anchor_off = lo <= hi ? std::clamp(anchor_off, lo, hi) : 0.5 * region.extent;
  double rc = region.curve_radius(anchor_off);
  Vec2 dir = unit_from_angle(region.bearing_right + anchor_off);
  region.local_goal = region.origin + dir * (rc + eps2);
  return region.local_goal;
}

GapField make_field(ConvexGapRegion region, double sigma_frac) {
  GapField f;
  f.sigma = std::max(sigma_frac * region.extent, 1e-3);
  f.region = std::move(region);
  return f;
}

double attractive_potential(const GapField& f, const Vec2& x) {
  double pot = distance(x, f.region.local_goal);
  if (!past_curve(f.region, x)) pot += nearest_on_curve(f.region, x).dist;
  return pot;
}

Vec2 attractive_grad_raw(const GapField& f, const Vec2& x) {
  Vec2 g = (x - f.region.local_goal).normalized();
  if (!past_curve(f.region, x)) g += (x - nearest_on_curve(f.region, x).nearest).normalized();
  return g;
}

Vec2 attractive_grad(const GapField& f, const Vec2& x) {
  return (-attractive_grad_raw(f, x)).normalized();
}

Vec2 circulation(const GapField& f, const Vec2& x) {
  const ConvexGapRegion& r = f.region;
  Vec2 dl = r.p_left - x;
  Vec2 dr = r.p_right - x;
  if (dl.norm() < 1e-9 || dr.norm() < 1e-9) {
    throw std::domain_error("circulation: singular at gap endpoint");
  }
  double bearing_x = r.bearing_offset(x);
  double th_l = std::abs(wrap_angle(bearing_x - r.extent));  // p_left sits at offset extent
  double th_r = std::abs(wrap_angle(bearing_x));             // p_right at offset 0
  Vec2 term_l = dl.normalized().rot90cw() * std::exp(-th_l / f.sigma);
  Vec2 term_r = dr.normalized().rot90cw() * std::exp(-th_r / f.sigma);
  return term_l - term_r;
}

Vec2 combined_field(const GapField& f, const Vec2& x) {
  return circulation(f, x) + attractive_grad(f, x);
}

IntegrationTrace integrate_field_traced(const GapField& f, const Pose2& start, double dt,
                                        double t_max) {
  if (!(dt > 0.0) || !(t_max > 0.0)) {
    throw std::invalid_argument("integrate_field: dt and t_max must be positive");
  }
  const ConvexGapRegion& region = f.region;
  if (distance(region.local_goal, region.origin) < 1e-12) {
    throw std::invalid_argument("integrate_field: region has no local goal");
  }
  IntegrationTrace trace;
  Trajectory& traj = trace.traj;
  Vec2 pos = start.position();
  traj.poses.emplace_back(pos, start.theta);
  traj.times.push_back(0.0);
  bool inside = region.contains(pos);
  bool crossed = false;
  trace.exit = FieldExit::timeout;

  int steps = static_cast<int>(std::ceil(t_max / dt));
  for (int k = 0; k < steps; ++k) {
    if (distance(pos, region.local_goal) <= dt) {
      traj.poses.emplace_back(region.local_goal, traj.poses.back().theta);
      traj.times.push_back(traj.times.back() + dt);
      traj.complete = true;
      if (!crossed) trace.exit = FieldExit::goal_reached;
      break;
    }
    Vec2 v;
    try {
      v = combined_field(f, pos);
    } catch (const std::domain_error&) {
      if (!crossed) trace.exit = FieldExit::stuck;
      break;
    }
    if (v.norm() < 1e-10) {
      if (!crossed) trace.exit = FieldExit::stuck;
      break;
    }
    Vec2 vhat = v.normalized();
    Vec2 next = pos + vhat * dt;  // unit-speed flow
    bool next_inside = region.contains(next);
    if (inside && !next_inside && !crossed) {
      // Bisect to the boundary and classify which face was crossed.
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 40; ++it) {
        double mid = 0.5 * (lo + hi);
        (region.contains(pos + vhat * (dt * mid)) ? lo : hi) = mid;
      }
      Vec2 c = pos + vhat * (dt * lo);
      double off = region.bearing_offset(c);
      double r_c = (c - region.origin).norm();
      bool on_curve = off >= 1e-7 && off <= region.extent - 1e-7 &&
                      r_c >= region.curve_radius(std::clamp(off, 0.0, region.extent)) - 1e-6;
      trace.exit = on_curve ? FieldExit::curve : FieldExit::line;
      trace.exit_point = c;
      crossed = true;
    }
    inside = next_inside;
    pos = next;
    traj.poses.emplace_back(pos, vhat.angle());
    traj.times.push_back(traj.times.back() + dt);
  }
  return trace;
}

Trajectory integrate_field(const GapField& f, const Pose2& start, double dt, double t_max) {
  return integrate_field_traced(f, start, dt, t_max).traj;
}

}  // namespace gapflow
