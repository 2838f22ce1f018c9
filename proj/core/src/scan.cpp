#include "gapflow/scan.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gapflow {

void Scan::validate() const {
  if (ranges.size() < 3) throw std::invalid_argument("scan: needs at least 3 beams");
  if (!(angle_increment > 0.0)) throw std::invalid_argument("scan: angle_increment must be positive");
  if (!(d_max > 0.0)) throw std::invalid_argument("scan: d_max must be positive");
  if (!(r_ins > 0.0) || r_ins >= d_max) throw std::invalid_argument("scan: need 0 < r_ins < d_max");
  for (double r : ranges) {
    if (!(r > 0.0) || r > d_max || !std::isfinite(r)) {
      throw std::invalid_argument("scan: ranges must lie in (0, d_max]");
    }
  }
}

Scan make_scan(std::vector<double> ranges, double angle_min, double angle_increment,
               double d_max, double r_ins) {
  Scan s;
  for (double& r : ranges) r = std::clamp(r, 1e-6, d_max);
  s.ranges = std::move(ranges);
  s.angle_min = angle_min;
  s.angle_increment = angle_increment;
  s.d_max = d_max;
  s.r_ins = r_ins;
  s.validate();
  return s;
}

Vec2 polar_to_cart(int index, double range, const Scan& scan) {
  if (index < 0 || index >= scan.size()) throw std::out_of_range("polar_to_cart: beam index");
  return unit_from_angle(scan.angle_of(index)) * range;
}

int Egocircle::index_of(double bearing) const {
  const int n = size();
  double a = wrap_angle(bearing);           // (-pi, pi]
  int i = static_cast<int>(std::floor((a + kPi) / scan.angle_increment));
  if (i >= n) i -= n;                       // a == pi lands one past the end
  if (i < 0) i = 0;
  return i;
}

Egocircle Egocircle::make(int bins, double d_max, double r_ins) {
  if (bins < 3) throw std::invalid_argument("egocircle: needs at least 3 bins");
  Egocircle e;
  double inc = kTwoPi / bins;
  e.scan.ranges.assign(static_cast<std::size_t>(bins), d_max);
  e.scan.angle_min = -kPi + 0.5 * inc;
  e.scan.angle_increment = inc;
  e.scan.d_max = d_max;
  e.scan.r_ins = r_ins;
  e.staleness.assign(static_cast<std::size_t>(bins), -1);  // -1: never observed
  return e;
}

Egocircle egocircle_update(const Egocircle& prev, const Pose2& odom_delta, const Scan& fresh) {
  const int n = prev.size();
  const double d_max = prev.scan.d_max;
  Egocircle next = Egocircle::make(n, d_max, prev.scan.r_ins);

  // Propagate retained points into the new body frame. odom_delta is the new
  // pose expressed in the previous frame, so old-frame points map through its
  // inverse.
  const double free_eps = 1e-9;
  for (int i = 0; i < n; ++i) {
    double r = prev.range(i);
    if (r >= d_max - free_eps) continue;  // free bins carry no point
    Vec2 p_old = unit_from_angle(prev.angle_of(i)) * r;
    Vec2 p_new = odom_delta.to_frame(p_old);
    double r_new = p_new.norm();
    if (r_new < 1e-6 || r_new >= d_max) continue;  // left the buffer
    int j = next.index_of(p_new.angle());
    if (r_new < next.scan.ranges[j]) {  // collisions keep the nearest point
      next.scan.ranges[j] = r_new;
      int age = prev.staleness[i] < 0 ? -1 : prev.staleness[i] + 1;
      next.staleness[j] = age;
    }
  }
  // Bins that received no propagated point inherit an aged staleness so the
  // counter still reflects time since direct observation.
  for (int i = 0; i < n; ++i) {
    if (next.staleness[i] == -1 && prev.staleness[i] >= 0) {
      next.staleness[i] = prev.staleness[i] + 1;
    }
  }

  // Approaching a surface widens its angular footprint, so one-point-per-bin
  // propagation punches free holes into solid walls. Close narrow free runs by
  // interpolating between the flanking points — but only when those points sit
  // close together in space. Propagation keeps points fixed in the world, so
  // consecutive returns off one surface stay within a few beam spacings of
  // each other forever (under ~0.5 m even at full range and steep incidence),
  // while the jambs of any opening wide enough for the body sit at least a
  // door width minus two body radii apart. Angular width alone cannot tell
  // the two apart: a doorway seen obliquely from down a corridor collapses to
  // a bin or two, and filling it would brick up a real passage with phantom
  // points that persist until the doorway's next direct look.
  constexpr int kHoleBins = 3;
  constexpr double kMaxFillChord = 0.5;
  std::vector<char> occ(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) occ[i] = next.scan.ranges[i] < d_max - free_eps;
  for (int i = 0; i < n; ++i) {
    if (!occ[i] || occ[(i + 1) % n]) continue;
    for (int k = 2; k <= kHoleBins + 1; ++k) {
      int j = (i + k) % n;
      if (!occ[j]) continue;
      double r_a = next.scan.ranges[i], r_b = next.scan.ranges[j];
      Vec2 p_a = unit_from_angle(next.angle_of(i)) * r_a;
      Vec2 p_b = unit_from_angle(next.angle_of(j)) * r_b;
      if (distance(p_a, p_b) > kMaxFillChord) break;
      int age = std::max(next.staleness[i], next.staleness[j]);
      for (int m = 1; m < k; ++m) {
        int h = (i + m) % n;
        next.scan.ranges[h] = r_a + (r_b - r_a) * static_cast<double>(m) / k;
        next.staleness[h] = age;
      }
      break;
    }
  }

  // Fresh beams overwrite whatever was propagated into their bins.
  if (fresh.size() > 0) {
    std::vector<bool> written(static_cast<std::size_t>(n), false);
    for (int k = 0; k < fresh.size(); ++k) {
      double r = std::clamp(fresh.ranges[static_cast<std::size_t>(k)], 1e-6, d_max);
      int j = next.index_of(fresh.angle_of(k));
      if (written[static_cast<std::size_t>(j)]) {
        // Several fresh beams in one bin: keep the nearest return.
        next.scan.ranges[j] = std::min(next.scan.ranges[j], r);
      } else {
        next.scan.ranges[j] = r;
        written[static_cast<std::size_t>(j)] = true;
      }
      next.staleness[j] = 0;
    }
  }
  return next;
}

std::vector<Vec2> obstacle_points(const Egocircle& ego) {
  std::vector<Vec2> pts;
  const double d_max = ego.scan.d_max;
  for (int i = 0; i < ego.size(); ++i) {
    double r = ego.range(i);
    if (r < d_max - 1e-9) pts.push_back(unit_from_angle(ego.angle_of(i)) * r);
  }
  return pts;
}

double min_range(const Egocircle& ego) {
  double m = ego.scan.d_max;
  for (int i = 0; i < ego.size(); ++i) m = std::min(m, ego.range(i));
  return m;
}

}  // namespace gapflow
