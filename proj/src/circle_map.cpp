#include "rdslab/circle_map.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace rdslab {

namespace {

constexpr double kRootTol = 1e-13;
constexpr int kRootMaxIter = 200;
constexpr double kFixedPointTol = 1e-10;
constexpr double kNeutralDerivTol = 1e-9;

double power_lift(double u, double y, double c1, double c2, double e, double c3) {
    return y + c1 * u + c2 * std::pow(u, 1.0 + e) + c3 * u * u;
}

double power_dlift(double u, double c1, double c2, double e, double c3) {
    return c1 + c2 * (1.0 + e) * std::pow(u, e) + 2.0 * c3 * u;
}

}  // namespace

std::vector<double> MapSpec::default_offsets() {
    return {1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
}

MapSpec MapSpec::pomeau_manneville(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw precondition_error("pomeau_manneville: alpha must be in (0,1)");
    MapSpec f;
    f.kind_ = MapKind::PomeauManneville;
    f.alpha_ = alpha;
    Segment s;
    s.lo = 0.0;
    s.hi = 1.0;
    s.lift = [alpha](double x) { return x + std::pow(x, 1.0 + alpha); };
    s.dlift = [alpha](double x) { return 1.0 + (1.0 + alpha) * std::pow(x, alpha); };
    s.displacement = [alpha](double x) { return std::pow(x, 1.0 + alpha); };
    f.segments_ = {s};
    f.partition_ = {0.0};
    f.finalize();
    return f;
}

MapSpec MapSpec::lsv(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw precondition_error("lsv: alpha must be in (0,1)");
    MapSpec f;
    f.kind_ = MapKind::LSV;
    f.alpha_ = alpha;
    const double c = std::pow(2.0, alpha);
    Segment a;
    a.lo = 0.0;
    a.hi = 0.5;
    a.lift = [alpha, c](double x) { return x * (1.0 + c * std::pow(x, alpha)); };
    a.dlift = [alpha, c](double x) { return 1.0 + c * (1.0 + alpha) * std::pow(x, alpha); };
    a.displacement = [alpha, c](double x) { return c * std::pow(x, 1.0 + alpha); };
    Segment b;
    b.lo = 0.5;
    b.hi = 1.0;
    b.lift = [](double x) { return 2.0 * x; };
    b.dlift = [](double) { return 2.0; };
    b.inverse = [](double w) { return 0.5 * w; };
    f.segments_ = {a, b};
    f.partition_ = {0.0, 0.5};
    f.finalize();
    return f;
}

MapSpec MapSpec::doubling() {
    MapSpec f;
    f.kind_ = MapKind::Doubling;
    f.alpha_ = 0.5;  // irrelevant: no neutral sides
    Segment s;
    s.lo = 0.0;
    s.hi = 1.0;
    s.lift = [](double x) { return 2.0 * x; };
    s.dlift = [](double) { return 2.0; };
    s.inverse = [](double w) { return 0.5 * w; };
    s.displacement = [](double x) { return x; };
    f.segments_ = {s};
    f.partition_ = {0.0};
    f.finalize();
    return f;
}

MapSpec MapSpec::custom(double alpha, const std::vector<PieceSpec>& pieces) {
    if (pieces.empty()) throw precondition_error("custom: no pieces");
    MapSpec f;
    f.kind_ = MapKind::CustomPiecewise;
    f.alpha_ = alpha;
    double expect_lo = 0.0;
    for (const auto& p : pieces) {
        if (std::fabs(p.lo - expect_lo) > 1e-12 || !(p.hi > p.lo))
            throw precondition_error("custom: pieces must tile [0,1) in order");
        expect_lo = p.hi;
        Segment s;
        s.lo = p.lo;
        s.hi = p.hi;
        if (p.anchored_left) {
            double lo = p.lo, y = p.y, c1 = p.c1, c2 = p.c2, e = p.expo, c3 = p.c3;
            s.lift = [=](double x) { return power_lift(x - lo, y, c1, c2, e, c3); };
            s.dlift = [=](double x) { return power_dlift(x - lo, c1, c2, e, c3); };
            s.displacement = [=](double x) {
                double u = x - lo;
                return (y - lo) + (c1 - 1.0) * u + c2 * std::pow(u, 1.0 + e) + c3 * u * u;
            };
        } else {
            double hi = p.hi, y = p.y, c1 = p.c1, c2 = p.c2, e = p.expo, c3 = p.c3;
            s.lift = [=](double x) { return y - power_lift(hi - x, 0.0, c1, c2, e, c3); };
            s.dlift = [=](double x) { return power_dlift(hi - x, c1, c2, e, c3); };
            s.displacement = [=](double x) {
                double sdist = hi - x;
                return (y - hi) + (c1 - 1.0) * sdist + c2 * std::pow(sdist, 1.0 + e) +
                       c3 * sdist * sdist;
            };
        }
        f.segments_.push_back(std::move(s));
        f.partition_.push_back(p.lo);
    }
    if (std::fabs(expect_lo - 1.0) > 1e-12)
        throw precondition_error("custom: pieces must end at 1");
    // the lift must be continuous across pieces and close up to an integer
    for (std::size_t i = 0; i + 1 < f.segments_.size(); ++i) {
        double a = f.segments_[i].lift(f.segments_[i].hi);
        double b = f.segments_[i + 1].lift(f.segments_[i + 1].lo);
        if (std::fabs(a - b) > 1e-9)
            throw precondition_error("custom: lift discontinuous between pieces");
    }
    double total = f.segments_.back().lift(1.0) - f.segments_.front().lift(0.0);
    if (std::fabs(total - std::round(total)) > 1e-9 || std::round(total) < 1.0)
        throw precondition_error("custom: lift must increase by a positive integer over [0,1]");
    f.finalize();
    return f;
}

void MapSpec::finalize() {
    degree_ = static_cast<int>(
        std::round(segments_.back().lift(1.0) - segments_.front().lift(0.0)));
    segment_lift_lo_.clear();
    for (const auto& s : segments_) segment_lift_lo_.push_back(s.lift(s.lo));

    // structural monotonicity scan: decides whether inverse machinery is usable
    invertible_ = true;
    for (const auto& s : segments_) {
        const int n = 256;
        double prev = s.lift(s.lo);
        for (int i = 1; i <= n; ++i) {
            double x = s.lo + (s.hi - s.lo) * i / n;
            double v = s.lift(x);
            if (!(v >= prev)) {
                invertible_ = false;
                break;
            }
            prev = v;
        }
        if (!invertible_) break;
    }

    // branch cuts at the preimages of lift(0) + k
    branch_cuts_.assign(1, 0.0);
    if (invertible_) {
        double L0 = segments_.front().lift(0.0);
        for (int k = 1; k < degree_; ++k)
            branch_cuts_.push_back(lift_inverse(L0 + k));
        branch_cuts_.push_back(1.0);
    } else {
        branch_cuts_ = {0.0, 1.0};
    }

    // fixed points: iterate the partition forward until it stabilizes. Only
    // points where f fails to be C^1 (a derivative jump) are *required* to
    // stabilize; smooth partition points that wander are dropped silently.
    fixed_points_.clear();
    unstabilized_essential_.clear();
    for (double p : partition_) {
        bool essential =
            std::fabs(deriv(p, Side::Left) - deriv(p, Side::Right)) > kNeutralDerivTol;
        double q = wrap(p);
        bool fixed = false;
        for (int it = 0; it < 64; ++it) {
            double fq = eval(q);
            if (circle_dist(fq, q) < kFixedPointTol) {
                fixed = true;
                break;
            }
            q = fq;
        }
        if (!fixed) {
            if (essential) unstabilized_essential_.push_back(p);
            continue;
        }
        bool dup = false;
        for (double r : fixed_points_)
            if (circle_dist(r, q) < 1e-9) dup = true;
        if (!dup) fixed_points_.push_back(q);
    }
    std::sort(fixed_points_.begin(), fixed_points_.end());

    // one-sided neutrality at each fixed point; the power-law constant is the
    // h^(1-alpha)-extrapolated limit of the ratio sequence, which is exact for
    // pure-power branches and first-order accurate otherwise
    neutral_.clear();
    const double h1 = 1e-7, h2 = 1e-8;
    const double q12 = std::pow(h2 / h1, 1.0 - alpha_);
    auto ratio = [&](double p0, double h, Side s) {
        double x = s == Side::Right ? wrap(p0 + h) : wrap(p0 - h);
        return (deriv(x, s) - 1.0) / std::pow(h, alpha_);
    };
    for (double p0 : fixed_points_) {
        NeutralSides ns;
        if (std::fabs(deriv(p0, Side::Right) - 1.0) < kNeutralDerivTol) {
            ns.right = true;
            double r1 = ratio(p0, h1, Side::Right), r2 = ratio(p0, h2, Side::Right);
            ns.A_plus = (r2 - q12 * r1) / (1.0 - q12);
        }
        if (std::fabs(deriv(p0, Side::Left) - 1.0) < kNeutralDerivTol) {
            ns.left = true;
            double r1 = ratio(p0, h1, Side::Left), r2 = ratio(p0, h2, Side::Left);
            ns.A_minus = (r2 - q12 * r1) / (1.0 - q12);
        }
        neutral_.push_back(ns);
    }

    // P*: partition points where the one-sided derivative drops
    p_star_.clear();
    for (double p : partition_)
        if (deriv(p, Side::Left) > deriv(p, Side::Right) + kNeutralDerivTol)
            p_star_.push_back(p);
}

const Segment& MapSpec::segment_at(double x) const {
    // half-open lookup: the segment with lo <= x < hi (right-limit convention)
    for (std::size_t i = segments_.size(); i-- > 0;)
        if (x >= segments_[i].lo) return segments_[i];
    return segments_.front();
}

double MapSpec::lift(double x) const {
    double k = std::floor(x);
    double fx = x - k;
    if (fx >= 1.0) {  // guard against floating excess
        fx = 0.0;
        k += 1.0;
    }
    return segment_at(fx).lift(fx) + k * degree_;
}

double MapSpec::deriv(double x, Side side) const {
    double fx = wrap(x);
    if (side == Side::Right) return segment_at(fx).dlift(fx);
    // left limit: at a segment boundary use the previous segment's endpoint
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        if (std::fabs(fx - segments_[i].lo) < 1e-15) {
            const Segment& prev = segments_[(i + segments_.size() - 1) % segments_.size()];
            return prev.dlift(prev.hi);
        }
    }
    return segment_at(fx).dlift(fx);
}

double MapSpec::solve_in_segment(const Segment& seg, double w) const {
    if (seg.inverse) {
        double x = seg.inverse(w);
        return std::clamp(x, seg.lo, seg.hi);
    }
    double lo = seg.lo, hi = seg.hi;
    double flo = seg.lift(lo) - w, fhi = seg.lift(hi) - w;
    if (flo > kRootTol || fhi < -kRootTol)
        throw root_finding_error("solve_in_segment: value not bracketed");
    double x = lo + (hi - lo) * (flo < 0.0 ? -flo / (fhi - flo + 1e-300) : 0.0);
    for (int it = 0; it < kRootMaxIter; ++it) {
        double fx = seg.lift(x) - w;
        if (std::fabs(fx) <= kRootTol) return x;
        if (fx > 0.0)
            hi = x;
        else
            lo = x;
        double d = seg.dlift(x);
        double xn = (d > 1e-12) ? x - fx / d : 0.5 * (lo + hi);
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        if (xn == x) {  // bracket exhausted at machine resolution
            double fl = seg.lift(lo) - w, fh = seg.lift(hi) - w;
            return std::fabs(fl) < std::fabs(fh) ? lo : hi;
        }
        x = xn;
    }
    if (std::fabs(seg.lift(x) - w) <= 1e-11) return x;  // degraded but usable
    throw root_finding_error("solve_in_segment: no convergence in 200 iterations");
}

double MapSpec::lift_inverse(double w) const {
    if (!invertible_)
        throw root_finding_error("lift_inverse: lift is not monotone");
    const double L0 = segment_lift_lo_.front();
    double j = std::floor((w - L0) / degree_);
    double w0 = w - j * degree_;
    if (w0 >= L0 + degree_) {
        w0 -= degree_;
        j += 1.0;
    }
    // last segment whose starting lift value is <= w0
    std::size_t i = segments_.size() - 1;
    while (i > 0 && segment_lift_lo_[i] > w0) --i;
    // w0 can exceed the segment's top value by rounding; step forward if so
    while (i + 1 < segments_.size() && w0 > segments_[i].lift(segments_[i].hi)) ++i;
    return solve_in_segment(segments_[i], w0) + j;
}

double MapSpec::inverse(BranchId b, double y) const {
    if (b.index < 0 || b.index >= degree_)
        throw branch_image_error("inverse: branch index out of range");
    const double L0 = segment_lift_lo_.front();
    double w = L0 + b.index + wrap(y - L0);
    double x = lift_inverse(w);
    return wrap(x);
}

std::vector<double> MapSpec::preimages(double y) const {
    std::vector<double> xs;
    xs.reserve(degree_);
    for (int b = 0; b < degree_; ++b) xs.push_back(inverse(BranchId{b}, y));
    return xs;
}

double MapSpec::lift_displacement(double x) const {
    double fx = wrap(x);
    const Segment& s = segment_at(fx);
    if (s.displacement) return s.displacement(fx);
    return s.lift(fx) - fx;
}

double MapSpec::move_distance(double x) const {
    double d = lift_displacement(x);
    double frac = d - std::floor(d);
    return std::min(frac, 1.0 - frac);
}

ValidationReport MapSpec::validate_class(const std::vector<double>& offsets,
                                         int grid_samples) const {
    ValidationReport rep;

    // condition (1): every non-smooth partition point must reach a fixed point
    for (double p : unstabilized_essential_) {
        std::ostringstream os;
        os << "partition point " << p << " never reaches a fixed point";
        rep.fail(os.str());
    }

    // orientation + covering: lift increasing, winding exactly degree
    rep.winding_error = std::fabs(lift(1.0) - lift(0.0) - degree_);
    if (!invertible_) rep.fail("lift is not increasing (orientation violated)");
    if (rep.winding_error > 1e-9) rep.fail("branch images do not wind `degree` times");

    // condition (2): Df(x^+) > 1 off P0, Df(x^-) >= Df(x^+) >= 1 at P0
    double min_off = 1e300;
    double worst_d = 1e300, worst_x = 0.0;
    long violations = 0;
    for (int i = 0; i < grid_samples; ++i) {
        double x = (i + 0.5) / grid_samples;
        double d = deriv(x, Side::Right);
        if (dist_to_fixed_points(x) >= 1e-3) min_off = std::min(min_off, d);
        if (d <= 1.0 && dist_to_fixed_points(x) > 1e-12) {
            ++violations;
            if (d < worst_d) {
                worst_d = d;
                worst_x = x;
            }
        }
    }
    rep.min_right_deriv_off_p0 = min_off;
    if (violations > 0) {
        std::ostringstream os;
        os << "expansion fails (orientation or contraction) at " << violations
           << " sample points; worst Df(x+) = " << worst_d << " at x = " << worst_x;
        rep.fail(os.str());
    }
    for (double p0 : fixed_points_) {
        double dr = deriv(p0, Side::Right), dl = deriv(p0, Side::Left);
        if (dr < 1.0 - 1e-12 || dl < dr - 1e-12) {
            std::ostringstream os;
            os << "derivative order violated at fixed point " << p0 << ": Df- = " << dl
               << ", Df+ = " << dr;
            rep.fail(os.str());
        }
    }

    // condition (3): neutral ratio sequences along the offset grid
    for (std::size_t i = 0; i < fixed_points_.size(); ++i) {
        double p0 = fixed_points_[i];
        for (int sideidx = 0; sideidx < 2; ++sideidx) {
            bool is_right = sideidx == 0;
            bool declared = is_right ? neutral_[i].right : neutral_[i].left;
            if (!declared) continue;
            NeutralRatioTrace tr;
            tr.p0 = p0;
            tr.side = is_right ? Side::Right : Side::Left;
            tr.declared_A = is_right ? neutral_[i].A_plus : neutral_[i].A_minus;
            for (double h : offsets) {
                double x = is_right ? wrap(p0 + h) : wrap(p0 - h);
                double d = deriv(x, is_right ? Side::Right : Side::Left);
                tr.offsets.push_back(h);
                tr.ratios.push_back((d - 1.0) / std::pow(h, alpha_));
            }
            // deviation of the ratio limit: the raw value at the smallest
            // offset, or the h^(1-alpha) extrapolation when the approach to
            // the limit is first-order (generic class members)
            double dev_raw = std::fabs(tr.ratios.back() - tr.declared_A);
            double dev_extrap = dev_raw;
            if (tr.ratios.size() >= 2) {
                std::size_t k = tr.ratios.size();
                double q = std::pow(tr.offsets[k - 1] / tr.offsets[k - 2], 1.0 - alpha_);
                double ex = (tr.ratios[k - 1] - q * tr.ratios[k - 2]) / (1.0 - q);
                dev_extrap = std::fabs(ex - tr.declared_A);
            }
            tr.final_deviation = std::min(dev_raw, dev_extrap);
            if (!(tr.declared_A > 0.0))
                rep.fail("neutral side with non-positive limit constant");
            if (tr.final_deviation > 1e-4 * std::max(1.0, std::fabs(tr.declared_A))) {
                std::ostringstream os;
                os << "neutral ratio at p0 = " << p0 << " does not settle at A = "
                   << tr.declared_A << " (deviation " << tr.final_deviation << ")";
                rep.fail(os.str());
            }
            rep.neutral_traces.push_back(std::move(tr));
        }
    }
    return rep;
}

namespace {

std::string strip(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    auto e = s.find_last_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

}  // namespace

MapSpec MapSpec::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open map file: " + path);
    std::string kind;
    double alpha = 0.5;
    std::vector<PieceSpec> pieces;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = strip(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw config_error("map file: expected key=value: " + line);
        std::string key = strip(line.substr(0, eq));
        std::string val = strip(line.substr(eq + 1));
        if (key == "kind") {
            kind = val;
        } else if (key == "alpha") {
            alpha = std::stod(val);
        } else if (key == "branch") {
            std::istringstream is(val);
            PieceSpec p{};
            std::string anchor;
            if (!(is >> p.lo >> p.hi >> anchor >> p.y >> p.c1 >> p.c2 >> p.expo >> p.c3))
                throw config_error("map file: bad branch row: " + val);
            if (anchor != "left" && anchor != "right")
                throw config_error("map file: branch anchor must be left|right");
            p.anchored_left = anchor == "left";
            pieces.push_back(p);
        } else {
            throw config_error("map file: unknown key: " + key);
        }
    }
    if (kind == "pm") return pomeau_manneville(alpha);
    if (kind == "lsv") return lsv(alpha);
    if (kind == "doubling") return doubling();
    if (kind == "custom") return custom(alpha, pieces);
    throw config_error("map file: kind must be pm|lsv|doubling|custom");
}

}  // namespace rdslab
