#include "gapflow/geom.hpp"

#include <cmath>
#include <random>

#include "doctest.h"

using namespace gapflow;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("wrap_angle maps into (-pi, pi] and is 2pi-periodic") {
  CHECK(wrap_angle(0.0) == doctest::Approx(0.0));
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));  // -pi folds to the closed end
  CHECK(wrap_angle(3.0 * kPi) == doctest::Approx(kPi));

  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> ang(-40.0, 40.0);
  std::uniform_int_distribution<int> turns(-5, 5);
  for (int i = 0; i < 500; ++i) {
    double a = ang(rng);
    double w = wrap_angle(a);
    CHECK(w > -kPi);
    CHECK(w <= kPi + 1e-12);
    double shifted = wrap_angle(a + 2.0 * kPi * turns(rng));
    CHECK(std::abs(wrap_angle(shifted - w)) < 1e-9);
  }
}

TEST_CASE("ccw_delta is the counterclockwise sweep in [0, 2pi)") {
  CHECK(ccw_delta(0.0, kPi / 2) == doctest::Approx(kPi / 2));
  CHECK(ccw_delta(kPi / 2, 0.0) == doctest::Approx(3 * kPi / 2));
  CHECK(ccw_delta(1.3, 1.3) == doctest::Approx(0.0));
  CHECK(ccw_delta(3.0, -3.0) == doctest::Approx(2 * kPi - 6.0));

  std::mt19937 rng(99);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  for (int i = 0; i < 500; ++i) {
    double a = ang(rng), b = ang(rng);
    double d = ccw_delta(a, b);
    CHECK(d >= 0.0);
    CHECK(d < 2 * kPi);
    // Walking ccw by d from a lands on b.
    CHECK(std::abs(wrap_angle(a + d - b)) < 1e-9);
  }
}

TEST_CASE("Vec2 algebra identities") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 200; ++i) {
    Vec2 a{u(rng), u(rng)};
    Vec2 b{u(rng), u(rng)};
    CHECK(dot(a, b) == doctest::Approx(a.x * b.x + a.y * b.y));
    CHECK(cross(a, b) == doctest::Approx(a.x * b.y - a.y * b.x));
    CHECK(dot(a, a) == doctest::Approx(a.norm() * a.norm()));
    // Rotation preserves norm and advances the polar angle.
    double phi = u(rng);
    Vec2 r = a.rotated(phi);
    CHECK(r.norm() == doctest::Approx(a.norm()));
    if (a.norm() > 1e-9) {
      CHECK(std::abs(wrap_angle(r.angle() - a.angle() - phi)) < 1e-9);
    }
    // Quarter-turn helpers match rotated(±pi/2).
    Vec2 cw = a.rot90cw();
    Vec2 ccw = a.rot90ccw();
    CHECK(cw.x == doctest::Approx(a.rotated(-kPi / 2).x));
    CHECK(cw.y == doctest::Approx(a.rotated(-kPi / 2).y));
    CHECK(ccw.x == doctest::Approx(a.rotated(kPi / 2).x));
    CHECK(ccw.y == doctest::Approx(a.rotated(kPi / 2).y));
  }
  Vec2 z{0.0, 0.0};
  CHECK(z.normalized().norm() == doctest::Approx(0.0));  // safe on the zero vector
}

TEST_CASE("closest_point_on_segment matches dense sampling") {
  std::mt19937 rng(4242);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 100; ++i) {
    Vec2 a{u(rng), u(rng)}, b{u(rng), u(rng)}, p{u(rng), u(rng)};
    Vec2 q = closest_point_on_segment(p, a, b);
    double dq = distance(p, q);
    CHECK(distance_to_segment(p, a, b) == doctest::Approx(dq));
    // No sampled point on the segment is meaningfully closer.
    for (int k = 0; k <= 200; ++k) {
      double t = k / 200.0;
      Vec2 s = a + (b - a) * t;
      CHECK(dq <= distance(p, s) + 1e-9);
    }
    // The claimed point lies on the segment.
    CHECK(distance_to_segment(q, a, b) < 1e-9);
  }
}

TEST_CASE("Pose2 compose/relative are inverse, frames round-trip") {
  std::mt19937 rng(31415);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  for (int i = 0; i < 200; ++i) {
    Pose2 a{u(rng), u(rng), ang(rng)};
    Pose2 b{u(rng), u(rng), ang(rng)};
    Pose2 d = a.relative(b);       // b expressed in a's frame
    Pose2 b2 = a.compose(d);       // re-attach
    CHECK(b2.x == doctest::Approx(b.x));
    CHECK(b2.y == doctest::Approx(b.y));
    CHECK(std::abs(wrap_angle(b2.theta - b.theta)) < 1e-9);

    Vec2 p{u(rng), u(rng)};
    Vec2 back = a.from_frame(a.to_frame(p));
    CHECK(back.x == doctest::Approx(p.x));
    CHECK(back.y == doctest::Approx(p.y));
  }
  // Identity leaves everything alone.
  Pose2 id{};
  Vec2 p{1.0, 2.0};
  CHECK(id.to_frame(p).x == doctest::Approx(1.0));
  CHECK(id.to_frame(p).y == doctest::Approx(2.0));
}

TEST_CASE("integrate_twist: line, arc, and flow composition") {
  // Pure translation.
  Pose2 p = integrate_twist(Pose2{}, Twist2{1.0, 0.0, 0.0}, 2.5);
  CHECK(p.x == doctest::Approx(2.5));
  CHECK(p.y == doctest::Approx(0.0));
  CHECK(p.theta == doctest::Approx(0.0));

  // Constant (v, omega) traces a circle of radius v/omega.
  double v = 0.7, w = 0.9;
  Pose2 q{2.0, -1.0, 0.4};
  Pose2 r = integrate_twist(q, Twist2{v, 0.0, w}, 1.3);
  Vec2 center{q.x - (v / w) * std::sin(q.theta), q.y + (v / w) * std::cos(q.theta)};
  CHECK(distance({r.x, r.y}, center) == doctest::Approx(v / w));
  CHECK(std::abs(wrap_angle(r.theta - (q.theta + w * 1.3))) < 1e-12);

  // Exact exponential: one step of 2*dt equals two steps of dt.
  std::mt19937 rng(2718);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    Twist2 t{u(rng), u(rng), u(rng)};
    Pose2 start{u(rng), u(rng), u(rng)};
    Pose2 one = integrate_twist(start, t, 0.8);
    Pose2 two = integrate_twist(integrate_twist(start, t, 0.4), t, 0.4);
    CHECK(one.x == doctest::Approx(two.x));
    CHECK(one.y == doctest::Approx(two.y));
    CHECK(std::abs(wrap_angle(one.theta - two.theta)) < 1e-9);
  }

  // Tiny omega falls back smoothly (no blow-up near the singularity).
  Pose2 s = integrate_twist(Pose2{}, Twist2{1.0, 0.0, 1e-12}, 1.0);
  CHECK(s.x == doctest::Approx(1.0));
  CHECK(std::abs(s.y) < 1e-9);
}
