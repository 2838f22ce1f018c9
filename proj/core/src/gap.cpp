#include "gapflow/gap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace gapflow {

namespace {

constexpr double kFreeEps = 1e-9;

bool is_free(const Egocircle& ego, int i) {
  return ego.range(i) >= ego.scan.d_max - kFreeEps;
}

// Min reading over bins strictly inside the counterclockwise interval (a, b).
double min_between_open(const Egocircle& ego, int a, int b) {
  const int n = ego.size();
  double m = std::numeric_limits<double>::infinity();
  for (int k = (a + 1) % n; k != b; k = (k + 1) % n) m = std::min(m, ego.range(k));
  return m;
}

// Min reading over bins in the counterclockwise interval [a, b].
double min_between_closed(const Egocircle& ego, int a, int b) {
  const int n = ego.size();
  double m = ego.range(a);
  for (int k = a; k != b; k = (k + 1) % n) m = std::min(m, ego.range((k + 1) % n));
  return m;
}

Gap make_endpoint_gap(const Egocircle& ego, int li, int ri, GapOrigin origin) {
  Gap g;
  g.left_index = li;
  g.right_index = ri;
  g.left_range = ego.range(li);
  g.right_range = ego.range(ri);
  g.left_angle = wrap_angle(ego.angle_of(li));
  g.right_angle = wrap_angle(ego.angle_of(ri));
  g.origin = origin;
  return g;
}

GapSet quadrant_gaps(const Egocircle& ego) {
  // Nothing sensed: cover the circle with four synthetic quadrant gaps so the
  // planner still has directions to evaluate.
  GapSet set;
  const double d = ego.scan.d_max;
  for (int q = 0; q < 4; ++q) {
    Gap g;
    g.left_angle = wrap_angle(-kPi + q * kPi / 2.0 + 1e-6);
    g.right_angle = wrap_angle(g.left_angle + kPi / 2.0 - 2e-6);
    g.left_index = ego.index_of(g.left_angle);
    g.right_index = ego.index_of(g.right_angle);
    g.left_range = d;
    g.right_range = d;
    g.origin = GapOrigin::dmax_interval;
    g.kind = GapKind::swept;
    set.gaps.push_back(g);
  }
  return set;
}

}  // namespace

GapSet detect_gaps(const Egocircle& ego, double r_ins) {
  const int n = ego.size();
  if (n < 3) throw std::invalid_argument("detect_gaps: egocircle too small");
  const double pass_width = 2.0 * r_ins;

  int sensed_count = 0;
  for (int i = 0; i < n; ++i) {
    if (!is_free(ego, i)) ++sensed_count;
  }
  if (sensed_count == 0) return quadrant_gaps(ego);

  GapSet set;

  // Rule 1: maximal circular runs of free bins, bounded by sensed beams.
  int anchor = 0;
  while (is_free(ego, anchor)) ++anchor;
  int k = 0;
  while (k < n) {
    int idx = (anchor + k) % n;
    if (!is_free(ego, idx)) {
      ++k;
      continue;
    }
    int run_start = k;
    while (k < n && is_free(ego, (anchor + k) % n)) ++k;
    int left_bound = (anchor + run_start - 1 + n) % n;   // sensed, clockwise of run
    int right_bound = (anchor + k) % n;                  // sensed, counterclockwise of run
    if (left_bound == right_bound) {
      // Single sensed beam in the whole circle: split the free run at its
      // antipode to avoid a degenerate self-bounded gap.
      int mid = (left_bound + n / 2) % n;
      Gap a = make_endpoint_gap(ego, left_bound, mid, GapOrigin::dmax_interval);
      Gap b = make_endpoint_gap(ego, mid, right_bound, GapOrigin::dmax_interval);
      set.gaps.push_back(a);
      set.gaps.push_back(b);
      continue;
    }
    Gap g = make_endpoint_gap(ego, left_bound, right_bound, GapOrigin::dmax_interval);
    if (distance(g.left_point(), g.right_point()) > pass_width) set.gaps.push_back(g);
  }

  // Rule 2: range discontinuities between adjacent sensed beams.
  for (int i = 0; i < n; ++i) {
    int j = (i + 1) % n;
    if (is_free(ego, i) || is_free(ego, j)) continue;
    if (std::abs(ego.range(i) - ego.range(j)) > pass_width) {
      set.gaps.push_back(make_endpoint_gap(ego, i, j, GapOrigin::discontinuity));
    }
  }

  std::sort(set.gaps.begin(), set.gaps.end(),
            [](const Gap& a, const Gap& b) { return a.left_angle < b.left_angle; });
  return set;
}

double skewness_angle(double left_range, double right_range, double width) {
  if (!(width > 0.0) || width >= kPi) {
    throw std::domain_error("skewness_angle: width must lie in (0, pi)");
  }
  double chord2 = left_range * left_range + right_range * right_range -
                  2.0 * left_range * right_range * std::cos(width);
  double chord = std::sqrt(std::max(chord2, 0.0));
  if (chord < 1e-12) throw std::domain_error("skewness_angle: degenerate gap");
  double l_min = std::min(left_range, right_range);
  double s = std::clamp(l_min * std::sin(width) / chord, -1.0, 1.0);
  return kPi - width - std::asin(s);
}

double skewness_angle(const Gap& gap) {
  return skewness_angle(gap.left_range, gap.right_range, gap.width());
}

Gap classify(Gap gap, double tau_alpha) {
  gap.side = (gap.left_range <= gap.right_range) ? GapSide::right : GapSide::left;
  if (gap.origin == GapOrigin::discontinuity) {
    gap.kind = GapKind::radial;
    return gap;
  }
  double w = gap.width();
  if (w >= kPi - 1e-12) {
    gap.kind = GapKind::swept;
    return gap;
  }
  double chord2 = gap.left_range * gap.left_range + gap.right_range * gap.right_range -
                  2.0 * gap.left_range * gap.right_range * std::cos(w);
  if (chord2 < 1e-24) {
    gap.kind = GapKind::swept;  // degenerate chord, treated as harmless
    return gap;
  }
  gap.kind = (skewness_angle(gap) > tau_alpha) ? GapKind::radial : GapKind::swept;
  return gap;
}

GapSet sgp_merge(const GapSet& in, const Egocircle& ego, double c_a, double c_d) {
  GapSet out;
  out.dropped_in_conversion = in.dropped_in_conversion;
  const auto& G = in.gaps;
  std::size_t i = 0;
  while (i < G.size()) {
    if (G[i].kind != GapKind::radial) {
      out.gaps.push_back(G[i]);
      ++i;
      continue;
    }
    std::size_t s = i, e = i;
    // Min reading inside the merged span so far (interior of the first gap).
    double min_between = min_between_open(ego, G[s].left_index, G[s].right_index);
    while (e + 1 < G.size() && G[e + 1].kind == GapKind::radial) {
      const Gap& q = G[e + 1];
      if (distance(G[e].right_point(), q.left_point()) > c_a) break;
      if (std::abs(G[s].left_range - q.right_range) > c_d) break;
      // Bins between the chain's current end and q's far edge become interior.
      double mb = std::min(min_between, min_between_closed(ego, G[e].right_index, q.left_index));
      mb = std::min(mb, min_between_open(ego, q.left_index, q.right_index));
      if (mb < std::min(G[s].left_range, q.right_range) - 1e-9) break;
      min_between = mb;
      ++e;
    }
    if (e == s) {
      out.gaps.push_back(G[s]);
      i = s + 1;
      continue;
    }
    Gap m;
    m.left_index = G[s].left_index;
    m.left_range = G[s].left_range;
    m.left_angle = G[s].left_angle;
    m.right_index = G[e].right_index;
    m.right_range = G[e].right_range;
    m.right_angle = G[e].right_angle;
    m.origin = GapOrigin::merged;
    m.kind = GapKind::swept;
    m.side = (m.left_range <= m.right_range) ? GapSide::right : GapSide::left;
    out.gaps.push_back(m);
    i = e + 1;
  }
  return out;
}

GapSet radial_conversion(const GapSet& in, const Egocircle& ego, double eps1, double eps2,
                         double tau_alpha) {
  if (!(eps1 > 0.0) || !(eps2 > 0.0)) {
    throw std::invalid_argument("radial_conversion: eps1 and eps2 must be positive");
  }
  const double phi = std::atan2(eps2, eps1);
  GapSet out;
  out.dropped_in_conversion = in.dropped_in_conversion;
  for (Gap g : in.gaps) {
    if (g.kind != GapKind::radial) {
      out.gaps.push_back(g);
      continue;
    }
    // The near endpoint stays pinned (it hugs the obstacle); the far endpoint
    // rotates away from it until the gap reads as swept.
    const bool far_is_right = (g.side == GapSide::right);
    double rotated = 0.0;
    bool done = false, dropped = false;
    while (!done) {
      rotated += phi;
      if (rotated > kPi + 1e-9) {
        dropped = true;
        break;
      }
      if (far_is_right) {
        g.right_angle = wrap_angle(g.right_angle + phi);
        g.right_index = ego.index_of(g.right_angle);
        g.right_range = std::min(g.right_range, ego.range(g.right_index));
      } else {
        g.left_angle = wrap_angle(g.left_angle - phi);
        g.left_index = ego.index_of(g.left_angle);
        g.left_range = std::min(g.left_range, ego.range(g.left_index));
      }
      double w = g.width();
      if (w >= kPi - 1e-12) {
        done = true;
      } else {
        double chord2 = g.left_range * g.left_range + g.right_range * g.right_range -
                        2.0 * g.left_range * g.right_range * std::cos(w);
        if (chord2 >= 1e-24 && skewness_angle(g) <= tau_alpha) done = true;
      }
    }
    if (dropped) {
      ++out.dropped_in_conversion;
      continue;
    }
    g.kind = GapKind::swept;
    g.origin = GapOrigin::converted;
    out.gaps.push_back(g);
  }
  return out;
}

const char* to_string(GapKind k) {
  return k == GapKind::swept ? "swept" : "radial";
}

const char* to_string(GapOrigin o) {
  switch (o) {
    case GapOrigin::dmax_interval: return "dmax_interval";
    case GapOrigin::discontinuity: return "discontinuity";
    case GapOrigin::merged: return "merged";
    case GapOrigin::converted: return "converted";
  }
  return "?";
}

std::string dump(const GapSet& set) {
  std::string s;
  char line[160];
  for (const Gap& g : set.gaps) {
    std::snprintf(line, sizeof(line), "%d %d %.6f %.6f %s %s\n", g.left_index, g.right_index,
                  g.left_range, g.right_range, to_string(g.kind), to_string(g.origin));
    s += line;
  }
  return s;
}

}  // namespace gapflow
