// Gap extraction from the egocircle: detection, swept/radial classification,
// swept-gap-prioritized merging, and radial-to-swept conversion.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gapflow/scan.hpp"

namespace gapflow {

enum class GapKind { swept, radial };
// Which side of the gap the near endpoint sits on, from the robot's
// viewpoint: left = higher bearing (counterclockwise end).
enum class GapSide { left, right };
enum class GapOrigin { dmax_interval, discontinuity, merged, converted };

// One gap. By scan convention the "left" endpoint is the counterclockwise
// start of the gap interval (lower bearing) and "right" its end, matching
// beam order. Angles are kept explicitly because conversion rotates the far
// endpoint off the beam lattice.
struct Gap {
  int left_index = 0;
  int right_index = 0;
  double left_range = 0.0;
  double right_range = 0.0;
  double left_angle = 0.0;   // wrapped
  double right_angle = 0.0;  // wrapped
  GapKind kind = GapKind::swept;
  GapSide side = GapSide::left;
  GapOrigin origin = GapOrigin::dmax_interval;

  // Angular width, counterclockwise from left to right endpoint, in (0, 2pi).
  [[nodiscard]] double width() const { return ccw_delta(left_angle, right_angle); }
  [[nodiscard]] Vec2 left_point() const { return unit_from_angle(left_angle) * left_range; }
  [[nodiscard]] Vec2 right_point() const { return unit_from_angle(right_angle) * right_range; }
};

struct GapSet {
  std::vector<Gap> gaps;     // ordered counterclockwise by left endpoint
  int dropped_in_conversion = 0;
};

// Scans the egocircle for passable gaps: maximal runs of free bins
// (range >= d_max) and range discontinuities wider than 2*r_ins between
// adjacent sensed beams. A fully free egocircle degenerates to four
// quadrant gaps so downstream stages always have candidates.
GapSet detect_gaps(const Egocircle& ego, double r_ins);

// Skewness angle between the gap's near-side chord normal and the radial
// direction, used to separate swept from radial gaps. Requires angular width
// in (0, pi) and distinct endpoints; throws std::domain_error otherwise.
double skewness_angle(double left_range, double right_range, double width);
double skewness_angle(const Gap& gap);

// Tags kind (swept when width >= pi or skewness < tau_alpha) and side (which
// end holds the near endpoint). Discontinuity gaps are radial by origin.
Gap classify(Gap gap, double tau_alpha);

// Swept gap prioritization: merges runs of consecutive radial gaps into one
// swept gap when (a) no reading between the outer endpoints is closer than
// both of them, (b) the outer endpoint ranges differ by at most c_d, and
// (c) each merge step bridges facing endpoints at most c_a apart. Single
// linear pass; swept gaps flush the pending run untouched.
GapSet sgp_merge(const GapSet& in, const Egocircle& ego, double c_a, double c_d);

// Rotates each remaining radial gap's far endpoint away from its near side in
// steps of phi = atan(eps2/eps1) until the gap classifies swept, clamping the
// far range to the egocircle reading at the rotated bearing. Gaps needing
// more than pi of rotation are dropped (counted in dropped_in_conversion).
GapSet radial_conversion(const GapSet& in, const Egocircle& ego, double eps1, double eps2,
                         double tau_alpha);

// Debug dump, one gap per line: indices, ranges, kind, origin.
std::string dump(const GapSet& set);

const char* to_string(GapKind k);
const char* to_string(GapOrigin o);

}  // namespace gapflow
