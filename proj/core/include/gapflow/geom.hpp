// Planar geometry primitives: vectors, SE(2) poses, body twists.
#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gapflow {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::fmod(a + kPi, kTwoPi);
  if (w <= 0.0) w += kTwoPi;
  return w - kPi;
}

// Counterclockwise angular distance from `from` to `to`, in [0, 2*pi).
inline double ccw_delta(double from, double to) {
  double d = std::fmod(to - from, kTwoPi);
  if (d < 0.0) d += kTwoPi;
  return d;
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2 operator-() const { return {-x, -y}; }
  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }

  [[nodiscard]] double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  [[nodiscard]] double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  [[nodiscard]] double squared_norm() const { return x * x + y * y; }
  [[nodiscard]] double norm() const { return std::hypot(x, y); }
  [[nodiscard]] double angle() const { return std::atan2(y, x); }

  // Zero vector normalizes to zero.
  [[nodiscard]] Vec2 normalized() const {
    double n = norm();
    if (n < 1e-15) return {0.0, 0.0};
    return {x / n, y / n};
  }

  [[nodiscard]] Vec2 rotated(double a) const {
    double c = std::cos(a), s = std::sin(a);
    return {c * x - s * y, s * x + c * y};
  }

  // Rotation by -pi/2: maps an outward radial direction to the clockwise tangent.
  [[nodiscard]] Vec2 rot90cw() const { return {y, -x}; }
  [[nodiscard]] Vec2 rot90ccw() const { return {-y, x}; }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

inline Vec2 unit_from_angle(double a) { return {std::cos(a), std::sin(a)}; }

// Closest point to p on segment [a, b].
inline Vec2 closest_point_on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  Vec2 ab = b - a;
  double len2 = ab.squared_norm();
  if (len2 < 1e-24) return a;
  double t = (p - a).dot(ab) / len2;
  if (t < 0.0) t = 0.0;
  if (t > 1.0) t = 1.0;
  return a + ab * t;
}

inline double distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  return distance(p, closest_point_on_segment(p, a, b));
}

// SE(2) pose; theta is kept wrapped in (-pi, pi].
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Pose2() = default;
  Pose2(double px, double py, double ptheta) : x(px), y(py), theta(wrap_angle(ptheta)) {}
  Pose2(const Vec2& p, double ptheta) : Pose2(p.x, p.y, ptheta) {}

  [[nodiscard]] Vec2 position() const { return {x, y}; }
  [[nodiscard]] Vec2 heading() const { return unit_from_angle(theta); }

  // this ∘ local: composes a pose expressed in this pose's frame.
  [[nodiscard]] Pose2 compose(const Pose2& local) const {
    Vec2 p = position() + Vec2{local.x, local.y}.rotated(theta);
    return {p.x, p.y, theta + local.theta};
  }

  // Expresses `other` in this pose's frame (inverse compose).
  [[nodiscard]] Pose2 relative(const Pose2& other) const {
    Vec2 d = Vec2{other.x - x, other.y - y}.rotated(-theta);
    return {d.x, d.y, other.theta - theta};
  }

  // World point -> this pose's frame.
  [[nodiscard]] Vec2 to_frame(const Vec2& world) const {
    return (world - position()).rotated(-theta);
  }

  // Point in this pose's frame -> world.
  [[nodiscard]] Vec2 from_frame(const Vec2& local) const {
    return position() + local.rotated(theta);
  }
};

// Body-frame velocity: linear (vx, vy) and angular omega.
struct Twist2 {
  double vx = 0.0;
  double vy = 0.0;
  double omega = 0.0;

  [[nodiscard]] Vec2 linear() const { return {vx, vy}; }
  [[nodiscard]] double speed() const { return std::hypot(vx, vy); }
};

// Exact SE(2) exponential: advances a pose under a constant body twist for dt.
// For |omega| below 1e-9 falls back to the straight-line limit.
inline Pose2 integrate_twist(const Pose2& pose, const Twist2& u, double dt) {
  double th = u.omega * dt;
  double dx, dy;
  if (std::abs(u.omega) < 1e-9) {
    // Second-order expansion keeps the limit smooth near omega = 0.
    dx = (u.vx - 0.5 * th * u.vy) * dt;
    dy = (u.vy + 0.5 * th * u.vx) * dt;
  } else {
    double s = std::sin(th), c = std::cos(th);
    dx = (u.vx * s - u.vy * (1.0 - c)) / u.omega;
    dy = (u.vx * (1.0 - c) + u.vy * s) / u.omega;
  }
  Vec2 p = pose.position() + Vec2{dx, dy}.rotated(pose.theta);
  return {p.x, p.y, pose.theta + th};
}

}  // namespace gapflow
