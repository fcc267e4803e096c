#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rdslab/circle.hpp"
#include "rdslab/errors.hpp"

namespace rdslab {

enum class MapKind { PomeauManneville, LSV, Doubling, CustomPiecewise };
enum class Side { Left, Right };

/// One smooth piece of the lift between consecutive points of P.
/// `lift` is increasing on [lo, hi] and takes the global circle coordinate;
/// consecutive segments join continuously (the lift of a covering map).
struct Segment {
    double lo = 0.0;
    double hi = 1.0;
    std::function<double(double)> lift;
    std::function<double(double)> dlift;
    /// Optional closed-form inverse of `lift`; bracketed root finding otherwise.
    std::function<double(double)> inverse;
    /// Optional stable evaluation of lift(x) - x (avoids cancellation near
    /// neutral points); defaults to the direct difference.
    std::function<double(double)> displacement;
};

/// Neutrality data attached to a fixed point p0.
struct NeutralSides {
    bool right = false;  // Df(p0^+) = 1
    bool left = false;   // Df(p0^-) = 1
    double A_plus = 0.0;
    double A_minus = 0.0;
};

/// Index of a covering branch, ordered by the domain's left endpoint.
struct BranchId {
    int index = 0;
};

struct NeutralRatioTrace {
    double p0 = 0.0;
    Side side = Side::Right;
    double declared_A = 0.0;
    std::vector<double> offsets;
    std::vector<double> ratios;     // (Df(p0 +- h) - 1) / h^alpha
    double final_deviation = 0.0;   // |ratio at smallest offset - declared_A|
};

struct ValidationReport {
    bool ok = true;
    std::vector<std::string> failures;  // human-readable, with witness points
    std::vector<NeutralRatioTrace> neutral_traces;
    double min_right_deriv_off_p0 = 0.0;  // sampled at distance >= 1e-3 from P0
    double winding_error = 0.0;           // |lift(1) - lift(0) - degree|

    void fail(const std::string& msg) {
        ok = false;
        failures.push_back(msg);
    }
};

/// A member of the intermittent covering-map class: an orientation-preserving
/// degree-d circle covering, piecewise smooth with one-sided power-law
/// derivative behavior at its neutral fixed points.
class MapSpec {
public:
    static MapSpec pomeau_manneville(double alpha);
    static MapSpec lsv(double alpha);
    static MapSpec doubling();

    /// Parameterized smooth piece for custom maps:
    ///   anchored left:  lift = y + c1*u + c2*u^(1+expo) + c3*u^2,  u = x - lo
    ///   anchored right: lift = y - (c1*s + c2*s^(1+expo) + c3*s^2), s = hi - x
    struct PieceSpec {
        double lo, hi;
        bool anchored_left;
        double y;  // lift value at the anchored endpoint
        double c1, c2, expo, c3;
    };
    static MapSpec custom(double alpha, const std::vector<PieceSpec>& pieces);

    /// Plain-text key=value loader (kind, alpha, branch rows for customs).
    static MapSpec load_file(const std::string& path);

    // --- evaluation ---------------------------------------------------------

    /// The lift L : R -> R, L(x+1) = L(x) + degree. Increasing for class maps.
    double lift(double x) const;
    /// f(x) = L(x) mod 1; at points of P this is the right-limit value.
    double eval(double x) const { return wrap(lift(wrap(x))); }
    /// One-sided derivative Df(x^+) or Df(x^-).
    double deriv(double x, Side side = Side::Right) const;
    /// Inverse of the lift (requires an increasing lift).
    double lift_inverse(double w) const;
    /// Unique preimage of circle point y in branch b's domain.
    double inverse(BranchId b, double y) const;
    /// All degree-many preimages of circle point y, in branch order.
    std::vector<double> preimages(double y) const;
    /// lift(x) - x, computed stably near neutral points where possible.
    double lift_displacement(double x) const;
    /// Circle distance between f(x) and x.
    double move_distance(double x) const;

    // --- structure ----------------------------------------------------------

    MapKind kind() const { return kind_; }
    double alpha() const { return alpha_; }
    int degree() const { return degree_; }
    const std::vector<Segment>& segments() const { return segments_; }
    /// P: the non-smooth partition points (segment left endpoints).
    const std::vector<double>& partition() const { return partition_; }
    /// P0: the fixed points reached by iterating P forward.
    const std::vector<double>& fixed_points() const { return fixed_points_; }
    const std::vector<NeutralSides>& neutral() const { return neutral_; }
    /// P*: points p of P with Df(p^-) > Df(p^+).
    const std::vector<double>& p_star() const { return p_star_; }
    /// Branch cut points x_0 = 0 < x_1 < ... < x_d = 1; branch k covers the
    /// circle once, with lift image [L(0)+k, L(0)+k+1].
    const std::vector<double>& branch_cuts() const { return branch_cuts_; }
    int num_branches() const { return degree_; }

    double dist_to_fixed_points(double x) const {
        return dist_to_set(x, fixed_points_);
    }

    /// Check the class conditions numerically: orientation/covering, Df >= 1
    /// with strict expansion off P0, and the neutral power-law ratios along a
    /// decreasing offset grid. Failures are reported, never thrown.
    ValidationReport validate_class(const std::vector<double>& offsets = default_offsets(),
                                    int grid_samples = 4096) const;

    static std::vector<double> default_offsets();

private:
    MapSpec() = default;
    void finalize();  // derive branch cuts, fixed points, neutral data, P*

    const Segment& segment_at(double x) const;
    double solve_in_segment(const Segment& seg, double w) const;

    MapKind kind_ = MapKind::CustomPiecewise;
    double alpha_ = 0.5;
    int degree_ = 1;
    std::vector<Segment> segments_;
    std::vector<double> partition_;
    std::vector<double> fixed_points_;
    std::vector<NeutralSides> neutral_;
    std::vector<double> p_star_;
    std::vector<double> branch_cuts_;
    std::vector<double> segment_lift_lo_;  // lift value at each segment's lo
    std::vector<double> unstabilized_essential_;  // non-smooth P points that wander
    bool invertible_ = true;  // lift increasing on a structural sample scan
};

}  // namespace rdslab
