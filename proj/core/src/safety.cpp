#include "gapflow/safety.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace gapflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Index of the nearest curve point, -1 when empty. Ties keep the first.
int nearest_index(const Vec2& x, const std::vector<Vec2>& curves) {
  int best = -1;
  double best_d2 = kInf;
  for (int i = 0; i < static_cast<int>(curves.size()); ++i) {
    double d2 = (curves[i] - x).squared_norm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

void check_params(const SafetyParams& p) {
  if (!(p.r_min > 0.0) || !(p.r_min < p.r_nom)) {
    throw std::invalid_argument("safety: need 0 < r_min < r_nom");
  }
}

}  // namespace

std::vector<Vec2> extract_collision_curves(const Egocircle& ego, double bisector_bearing,
                                           double gap_lo, double gap_hi) {
  std::vector<Vec2> pts;
  const double d_max = ego.scan.d_max;
  const double gap_span = ccw_delta(gap_lo, gap_hi);
  for (int i = 0; i < ego.size(); ++i) {
    double r = ego.range(i);
    if (r >= d_max - 1e-9) continue;
    double b = ego.angle_of(i);
    if (std::abs(wrap_angle(b - bisector_bearing)) > kPi / 2.0) continue;
    double off = ccw_delta(gap_lo, b);
    if (off > 1e-9 && off < gap_span - 1e-9) continue;  // inside the gap mouth
    pts.push_back(unit_from_angle(b) * r);
  }
  return pts;
}

double psi(const Vec2& x, const std::vector<Vec2>& curves, const SafetyParams& p) {
  check_params(p);
  int ni = nearest_index(x, curves);
  if (ni < 0) return -kInf;
  double d = distance(x, curves[static_cast<std::size_t>(ni)]);
  if (d < 1e-12) return kInf;
  double k = p.r_min / p.r_nom;
  return (p.r_min / d - k) / (1.0 - k);
}

Vec2 grad_psi_hat(const Vec2& x, const std::vector<Vec2>& curves) {
  int ni = nearest_index(x, curves);
  if (ni < 0) return {0.0, 0.0};
  return (x - curves[static_cast<std::size_t>(ni)]).normalized();
}

ProjectedCommand project(const Twist2& u, const Vec2& x, const std::vector<Vec2>& curves,
                         const SafetyParams& p) {
  check_params(p);
  ProjectedCommand out;
  out.u = u;
  if (curves.empty()) {
    out.psi_value = -kInf;
    return out;
  }
  int ni = nearest_index(x, curves);
  Vec2 ghat = (x - curves[static_cast<std::size_t>(ni)]).normalized();
  if (ghat.squared_norm() < 0.5) {  // x sits on an obstacle point
    out.degenerate = true;
    out.psi_value = kInf;
    out.u.vx = 0.0;
    out.u.vy = 0.0;
    return out;
  }
  out.psi_value = psi(x, curves, p);
  if (out.psi_value <= 0.0) return out;
  double inward = std::min(0.0, ghat.dot(u.linear()));
  if (inward == 0.0) return out;
  Vec2 lin = u.linear() - ghat * (out.psi_value * inward);
  out.u.vx = lin.x;
  out.u.vy = lin.y;
  return out;
}

namespace {

// First intersection of the ray origin + t*dir (t > 0) with a polyline.
std::optional<Vec2> ray_polyline_hit(const Vec2& origin, const Vec2& dir,
                                     const std::vector<Vec2>& poly) {
  double best_t = kInf;
  Vec2 best;
  for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
    Vec2 a = poly[i], b = poly[i + 1];
    Vec2 ab = b - a;
    double denom = dir.cross(ab);
    if (std::abs(denom) < 1e-15) continue;
    double t = (a - origin).cross(ab) / denom;
    double s = (a - origin).cross(dir) / denom;
    if (t > 1e-9 && s >= -1e-9 && s <= 1.0 + 1e-9 && t < best_t) {
      best_t = t;
      best = origin + dir * t;
    }
  }
  if (!std::isfinite(best_t)) return std::nullopt;
  return best;
}

}  // namespace

ConvexGapRegion radial_extension(const ConvexGapRegion& region, const Egocircle& ego,
                                 double r_ins) {
  // Largest robot-centered circle that stays clear of everything sensed.
  double clear = min_range(ego) - r_ins;
  if (clear <= 1e-6) throw std::runtime_error("radial_extension: robot already in collision");

  const Vec2 robot = region.origin;
  const double half = 0.5 * region.extent;
  const double bisector = region.bearing_right + half;
  // Keep the line/circle intersections strictly between the vertex and the
  // original endpoints.
  double r_free = std::min({clear, 0.9 * distance(region.p_right, robot),
                            0.9 * distance(region.p_left, robot)});
  r_free = std::max(r_free, 1e-4);

  // The vertex slides backward along the bisector onto the free circle; the
  // new gap lines pass through the points where that circle meets the old
  // lines. All three points sit on one robot-centered circle, so the
  // inscribed-angle relation makes the new extent exactly half the old one.
  Vec2 new_origin = robot - unit_from_angle(bisector) * r_free;
  Vec2 q_r = robot + unit_from_angle(region.bearing_right) * r_free;
  Vec2 q_l = robot + unit_from_angle(region.bearing_right + region.extent) * r_free;

  ConvexGapRegion out;
  out.origin = new_origin;
  out.bearing_right = wrap_angle((q_r - new_origin).angle());
  out.extent = ccw_delta(out.bearing_right, (q_l - new_origin).angle());

  // The outward boundary is still the original gap curve, re-anchored to the
  // new vertex: the new side rays (through q_r / q_l) extend out to the old
  // curve, and old curve points whose bearing falls outside the narrower new
  // cone are clipped away.
  Vec2 end_r = ray_polyline_hit(new_origin, (q_r - new_origin).normalized(), region.curve)
                   .value_or(region.p_right);
  Vec2 end_l = ray_polyline_hit(new_origin, (q_l - new_origin).normalized(), region.curve)
                   .value_or(region.p_left);
  out.curve.push_back(end_r);
  for (const Vec2& c : region.curve) {
    double off = wrap_angle((c - new_origin).angle() - out.bearing_right);
    if (off > 1e-9 && off < out.extent - 1e-9) out.curve.push_back(c);
  }
  out.curve.push_back(end_l);
  out.p_right = end_r;
  out.p_left = end_l;
  out.local_goal = region.local_goal;
  out.finalize();
  return out;
}

Twist2 nh_map(const Twist2& u, double lambda_y) {
  Twist2 out;
  out.vx = u.vx;
  out.vy = 0.0;
  out.omega = lambda_y * u.vy + u.omega;
  return out;
}

}  // namespace gapflow
