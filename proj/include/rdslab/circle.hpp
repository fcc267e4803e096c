#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace rdslab {

/// Reduce a real number to the fundamental domain [0,1) of the circle.
inline double wrap(double x) {
    double y = x - std::floor(x);
    // floor can leave y == 1.0 when x is a tiny negative number
    return y < 1.0 ? y : 0.0;
}

/// Distance on the circle (min over lifts), always in [0, 1/2].
inline double circle_dist(double a, double b) {
    double d = std::fabs(wrap(a) - wrap(b));
    return std::min(d, 1.0 - d);
}

/// Signed displacement from a to b along the shortest arc, in (-1/2, 1/2].
inline double circle_delta(double a, double b) {
    double d = wrap(b) - wrap(a);
    if (d > 0.5) d -= 1.0;
    if (d <= -0.5) d += 1.0;
    return d;
}

/// Distance from x to the nearest point of a finite set.
inline double dist_to_set(double x, const std::vector<double>& pts) {
    double best = 0.5;
    for (double p : pts) best = std::min(best, circle_dist(x, p));
    return best;
}

/// Closed arc on the circle, stored as a left endpoint plus a length < 1.
struct Arc {
    double lo = 0.0;   // in [0,1)
    double len = 0.0;  // in [0,1)

    double hi() const { return wrap(lo + len); }
    double midpoint() const { return wrap(lo + 0.5 * len); }
    /// Point at parameter s in [0,1] along the arc.
    double at(double s) const { return wrap(lo + s * len); }
    bool contains(double x) const {
        double d = wrap(x) - lo;
        if (d < 0.0) d += 1.0;
        return d <= len;
    }
    static Arc ball(double center, double radius) {
        return Arc{wrap(center - radius), 2.0 * radius};
    }
};

}  // namespace rdslab
