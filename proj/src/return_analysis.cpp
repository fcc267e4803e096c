#include "rdslab/return_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rdslab/rng.hpp"

namespace rdslab {

namespace {

// round a probe count up to 2^m + 1 so that doubling refines a superset
int dyadic_probe_count(int samples) {
    int m = 1;
    while ((1 << m) + 1 < samples && m < 24) ++m;
    return (1 << m) + 1;
}

}  // namespace

NeighborhoodI NeighborhoodI::around_fixed_points(const MapSpec& f, double radius) {
    std::vector<Component> comps;
    for (double p0 : f.fixed_points()) comps.push_back({p0, radius});
    return NeighborhoodI(std::move(comps), 0.0);
}

int NeighborhoodI::component_of(double x) const {
    for (std::size_t j = 0; j < components_.size(); ++j)
        if (circle_dist(x, components_[j].p0) < components_[j].radius)
            return static_cast<int>(j);
    return -1;
}

double NeighborhoodI::total_length() const {
    double s = 0.0;
    for (const auto& c : components_) s += 2.0 * c.radius;
    return s;
}

std::vector<double> NeighborhoodI::boundary_points() const {
    std::vector<double> b;
    for (const auto& c : components_) {
        b.push_back(wrap(c.p0 - c.radius));
        b.push_back(wrap(c.p0 + c.radius));
    }
    return b;
}

NeighborhoodI build_I(const MapSpec& f, double eps, const std::vector<double>& radii,
                      int grid) {
    const auto& p0s = f.fixed_points();
    if (p0s.empty()) throw precondition_error("build_I: map has no fixed points");
    if (radii.size() != p0s.size())
        throw precondition_error("build_I: need one radius per fixed point");

    std::vector<NeighborhoodI::Component> comps;
    for (std::size_t j = 0; j < p0s.size(); ++j) {
        if (!(radii[j] > 0.0)) throw precondition_error("build_I: radii must be positive");
        comps.push_back({p0s[j], radii[j]});
    }
    // components must be disjoint
    for (std::size_t i = 0; i < comps.size(); ++i)
        for (std::size_t j = i + 1; j < comps.size(); ++j)
            if (circle_dist(comps[i].p0, comps[j].p0) <= comps[i].radius + comps[j].radius)
                throw precondition_error("build_I: components overlap");

    NeighborhoodI I(comps, eps);
    const std::vector<double> tvals = eps > 0.0 ? std::vector<double>{-eps, 0.0, eps}
                                                : std::vector<double>{0.0};

    // (i) f_t(I) compactly contains I, componentwise via the lift
    for (const auto& c : comps) {
        double a = c.p0 - c.radius, b = c.p0 + c.radius;  // lift coordinates around p0
        double La = f.lift(a), Lb = f.lift(b);
        // lift representative of the component with f(p0) = p0 anchoring
        double Lp = f.lift(c.p0);
        double shift = Lp - c.p0;  // integer multiple of the winding at p0
        for (double t : tvals) {
            double img_lo = La + t - shift, img_hi = Lb + t - shift;
            if (!(img_lo < a && img_hi > b)) {
                std::ostringstream os;
                os << "f_t(I) does not compactly contain component at p0 = " << c.p0
                   << " for t = " << t;
                throw neighborhood_error(1, c.p0, os.str());
            }
        }
    }
    // (ii) f|I injective: each component image shorter than the full circle and
    // component images pairwise disjoint (as arcs)
    {
        std::vector<Arc> images;
        for (const auto& c : comps) {
            double a = c.p0 - c.radius, b = c.p0 + c.radius;
            double len = f.lift(b) - f.lift(a);
            if (!(len < 1.0))
                throw neighborhood_error(2, c.p0, "f not injective on a component");
            images.push_back(Arc{wrap(f.lift(a)), len});
        }
        for (std::size_t i = 0; i < images.size(); ++i)
            for (std::size_t j = i + 1; j < images.size(); ++j) {
                bool overlap = images[i].contains(images[j].lo) ||
                               images[j].contains(images[i].lo);
                if (overlap)
                    throw neighborhood_error(2, comps[i].p0,
                                             "component images overlap under f");
            }
    }
    // (iii) x in I, f_t1(x) not in I  =>  f_t2(f_t1(x)) not in I
    // (iv) x, f_t(x) in I  =>  same component
    for (const auto& c : comps) {
        for (int i = 0; i <= grid; ++i) {
            double x = wrap(c.p0 - c.radius + 2.0 * c.radius * i / grid);
            for (double t1 : tvals) {
                double y = step(f, x, t1);
                int cy = I.component_of(y);
                if (cy < 0) {
                    for (double t2 : tvals) {
                        double z = step(f, y, t2);
                        if (I.contains(z)) {
                            std::ostringstream os;
                            os << "one-step exit re-enters: x = " << x << ", t1 = " << t1
                               << ", t2 = " << t2;
                            throw neighborhood_error(3, x, os.str());
                        }
                    }
                } else if (cy != I.component_of(x)) {
                    std::ostringstream os;
                    os << "consecutive visit changes component at x = " << x;
                    throw neighborhood_error(4, x, os.str());
                }
            }
        }
    }
    I.conditions_ = {true, true, true, true};
    return I;
}

bool in_I_delta(const MapSpec& f, const NeighborhoodI& I, double x, double delta) {
    return I.contains(x) && f.move_distance(x) <= delta;
}

bool in_parabolic_side(const MapSpec& f, const NeighborhoodI& I, double x) {
    int j = I.component_of(x);
    if (j < 0) return false;
    const auto& c = I.components()[j];
    double d = circle_delta(c.p0, x);  // positive when x is on the right side
    const auto& ns = f.neutral()[j];
    return d >= 0.0 ? ns.right : ns.left;
}

double compute_tau_star(const MapSpec& f, const NeighborhoodI& I, int grid) {
    // distance from {x in I : f(x) in I} to the complement of I, then halved
    double best = 0.5;
    for (const auto& c : I.components()) {
        double a = c.p0 - c.radius, b = c.p0 + c.radius;
        auto inside = [&](double x) { return I.contains(step(f, wrap(x), 0.0)); };
        double prev_x = a;
        bool prev_in = inside(a);
        std::vector<double> set_pts;  // boundary points of the set, lift coords
        if (prev_in) set_pts.push_back(a);
        for (int i = 1; i <= grid; ++i) {
            double x = a + (b - a) * i / grid;
            bool in = inside(x);
            if (in != prev_in) {
                double lo = prev_x, hi = x;
                for (int it = 0; it < 60; ++it) {
                    double mid = 0.5 * (lo + hi);
                    if (inside(mid) == prev_in)
                        lo = mid;
                    else
                        hi = mid;
                }
                set_pts.push_back(0.5 * (lo + hi));
            }
            prev_x = x;
            prev_in = in;
        }
        if (prev_in) set_pts.push_back(b);
        for (double s : set_pts) best = std::min(best, std::min(s - a, b - s));
    }
    return 0.5 * std::max(best, 0.0);
}

double compute_lambda_star(const MapSpec& f, const NeighborhoodI& I, int grid) {
    // D = {x in I : f^3(x) in I}; lambda_* = inf Df over the complement of D
    auto in_D = [&](double x) {
        if (!I.contains(x)) return false;
        double y = x;
        for (int k = 0; k < 3; ++k) y = f.eval(y);
        return I.contains(y);
    };
    double lam = std::numeric_limits<double>::max();
    bool prev_in = in_D(0.0);
    double prev_x = 0.0;
    for (int i = 1; i <= grid; ++i) {
        double x = static_cast<double>(i) / grid;
        bool in = in_D(wrap(x));
        if (!in) lam = std::min(lam, f.deriv(wrap(x), Side::Right));
        if (in != prev_in) {
            double lo = prev_x, hi = x;
            for (int it = 0; it < 60; ++it) {
                double mid = 0.5 * (lo + hi);
                if (in_D(wrap(mid)) == prev_in)
                    lo = mid;
                else
                    hi = mid;
            }
            // evaluate just outside D at the refined boundary
            double xb = prev_in ? hi : lo;
            lam = std::min(lam, f.deriv(wrap(xb), Side::Right));
        }
        prev_in = in;
        prev_x = x;
    }
    return lam;
}

Constants Constants::defaults(const MapSpec& f, const NeighborhoodI& I) {
    Constants c{};
    c.tau_star = compute_tau_star(f, I);
    c.lambda_star = compute_lambda_star(f, I);
    double alpha = f.alpha();
    double kmin = std::max({alpha, 1.0 / (1.0 + alpha), 1.0 - alpha / (2.0 * (1.0 + alpha))});
    c.kappa = 0.5 * (kmin + 1.0);
    double glo = 1.0 - c.kappa, ghi = alpha / (2.0 * (1.0 + alpha));
    c.gamma = 0.5 * (glo + ghi);
    return c;
}

void Constants::validate(double alpha) const {
    if (!(tau_star > 0.0)) throw precondition_error("Constants: tau_star must be positive");
    if (!(lambda_star > 1.0)) throw precondition_error("Constants: lambda_star must exceed 1");
    if (!(kappa > alpha && kappa < 1.0 && kappa * (1.0 + alpha) > 1.0))
        throw precondition_error("Constants: need kappa in (alpha,1) with kappa(1+alpha) > 1");
    if (!(gamma > 1.0 - kappa && 2.0 * gamma * (1.0 + alpha) < alpha))
        throw precondition_error("Constants: gamma outside (1-kappa, alpha/(2(1+alpha)))");
}

CensoredTime escape_time(const MapSpec& f, const NeighborhoodI& I, double x,
                         const NoiseSeq& ts, long horizon) {
    if (static_cast<long>(ts.size()) < horizon)
        throw noise_length_error("escape_time: noise shorter than horizon");
    return escape_time_stream(f, I, x, [&](long k) { return ts[k]; }, horizon);
}

ReturnTrace essential_returns(const MapSpec& f, const NeighborhoodI& I, double x,
                              const NoiseSeq& ts, int k_max, long horizon) {
    if (static_cast<long>(ts.size()) < horizon)
        throw noise_length_error("essential_returns: noise shorter than horizon");
    ReturnTrace tr;
    double y = wrap(x);
    long m = 0;
    // first escape
    while (m < horizon && I.contains(y)) {
        y = step(f, y, ts[m]);
        ++m;
    }
    if (I.contains(y)) {
        tr.escape = CensoredTime::censor(horizon);
        tr.censored = true;
        return tr;
    }
    tr.escape = CensoredTime::at(m);
    // alternate: find next entry (an essential return), then the full escape of
    // that return point, then the next entry, ...
    while (static_cast<int>(tr.essential_returns.size()) < k_max) {
        while (m < horizon && !I.contains(y)) {
            y = step(f, y, ts[m]);
            ++m;
        }
        if (!I.contains(y)) {
            tr.censored = true;
            return tr;
        }
        tr.essential_returns.push_back(m);
        tr.return_points.push_back(y);
        while (m < horizon && I.contains(y)) {
            y = step(f, y, ts[m]);
            ++m;
        }
        if (I.contains(y)) {
            tr.censored = true;
            return tr;
        }
    }
    return tr;
}

namespace {

// Backward pullback of an arc around the orbit endpoint. Returns the extents
// (el, er) of the component around x_0 plus the forward-verification error.
struct Pullback {
    double el, er;
    double endpoint_error;
};

Pullback pullback_extents(const MapSpec& f, const std::vector<double>& pts,
                          const NoiseSeq& ts, long n, double left_ext, double right_ext) {
    double el = left_ext, er = right_ext;
    for (long j = n - 1; j >= 0; --j) {
        double Lx = f.lift(pts[j]);
        double u = f.lift_inverse(Lx - el);
        double v = f.lift_inverse(Lx + er);
        el = pts[j] - u;
        er = v - pts[j];
    }
    // forward verification: endpoints must land on the target arc endpoints
    double a = wrap(pts[0] - el), b = wrap(pts[0] + er);
    for (long j = 0; j < n; ++j) {
        a = step(f, a, ts[j]);
        b = step(f, b, ts[j]);
    }
    double err = std::max(circle_dist(a, wrap(pts[n] - left_ext)),
                          circle_dist(b, wrap(pts[n] + right_ext)));
    return {el, er, err};
}

}  // namespace

ExpansionProfile profile_over_arc(const MapSpec& f, double x, const NoiseSeq& ts, long n,
                                  double left_ext, double right_ext, int samples) {
    if (static_cast<long>(ts.size()) < n)
        throw noise_length_error("profile_over_arc: noise shorter than n");
    ExpansionProfile prof;
    prof.n = n;
    prof.tau = 0.5 * (left_ext + right_ext);

    std::vector<double> pts(n + 1);
    pts[0] = wrap(x);
    for (long j = 0; j < n; ++j) pts[j + 1] = step(f, pts[j], ts[j]);

    auto pb = pullback_extents(f, pts, ts, n, left_ext, right_ext);
    prof.U = Arc{wrap(pts[0] - pb.el), pb.el + pb.er};
    prof.endpoint_error = pb.endpoint_error;

    if (samples < 2) {
        prof.sample_count = 0;
        return prof;
    }
    const int count = dyadic_probe_count(samples);
    prof.sample_count = count;

    double min_log_prod = std::numeric_limits<double>::max();
    double max_sum = 0.0;
    std::vector<double> logd(n);
    const double alpha = f.alpha();
    for (int i = 0; i < count; ++i) {
        double s = static_cast<double>(i) / (count - 1);
        double y = wrap(pts[0] - pb.el + (pb.el + pb.er) * s);
        for (long j = 0; j < n; ++j) {
            logd[j] = std::log(f.deriv(y, Side::Right));
            y = step(f, y, ts[j]);
        }
        // suffix log-cocycles: Df^{n-j} from step j onward
        double suffix = 0.0;
        double sum = 0.0;
        for (long j = n - 1; j >= 0; --j) {
            suffix += logd[j];
            sum += std::exp(-alpha * suffix);
        }
        min_log_prod = std::min(min_log_prod, suffix);
        max_sum = std::max(max_sum, sum);
    }
    prof.log_lambda = min_log_prod;
    prof.lambda = std::exp(min_log_prod);
    prof.ldist = max_sum;
    return prof;
}

ExpansionProfile pullback_U(const MapSpec& f, double x, const NoiseSeq& ts, long n,
                            double tau) {
    if (!(tau > 0.0 && tau < 0.5)) throw precondition_error("pullback_U: tau in (0, 1/2)");
    return profile_over_arc(f, x, ts, n, tau, tau, 0);
}

ExpansionProfile expansion_profile(const MapSpec& f, double x, const NoiseSeq& ts, long n,
                                   double tau, int samples) {
    if (!(tau > 0.0 && tau < 0.5))
        throw precondition_error("expansion_profile: tau in (0, 1/2)");
    if (samples < 2) throw precondition_error("expansion_profile: samples >= 2");
    return profile_over_arc(f, x, ts, n, tau, tau, samples);
}

CensoredTime m_scale_expansion_time(const MapSpec& f, const NeighborhoodI& I,
                                    const Constants& c, double x, const NoiseSeq& ts,
                                    double K, long horizon, int samples) {
    if (!(K > 0.0)) throw precondition_error("m_scale_expansion_time: K > 0");
    CensoredTime E = escape_time(f, I, x, ts, horizon);
    if (E.censored) return CensoredTime::censor(horizon);
    for (long m = std::max(E.value, 1L); m <= horizon; ++m) {
        auto prof = expansion_profile(f, x, ts, m, c.tau_star, samples);
        if (prof.ldist <= K) return CensoredTime::at(m);
    }
    return CensoredTime::censor(horizon);
}

bool omega_hat_member(const NoiseSeq& ts, long n) {
    if (static_cast<long>(ts.size()) < n)
        throw noise_length_error("omega_hat_member: sequence shorter than n");
    double s = 0.0;
    for (long k = 0; k < n; ++k) s += std::fabs(ts[k]);
    return s <= ts.epsilon() * n / 4.0;
}

namespace {

BadVerdict bad_member_prefix(const std::vector<double>& prefix, std::size_t offset,
                             double N, double eps, double alpha, long n_horizon) {
    BadVerdict v;
    const double i_bound = N * std::pow(eps, -alpha) * Constants::varphi(eps);
    const double n_low = N * std::pow(eps, -alpha);
    const long n0 = static_cast<long>(std::ceil(n_low - 1e-12));
    v.n_horizon = n_horizon;
    const long have = static_cast<long>(prefix.size()) - 1 - static_cast<long>(offset);
    for (long i = 0; i < i_bound; ++i) {
        if (i + n_horizon > have)
            throw noise_length_error("bad_member: noise shorter than i + n_horizon");
        double base = prefix[offset + i];
        for (long n = std::max(n0, 1L); n <= n_horizon; ++n) {
            if (prefix[offset + i + n] - base <= eps * n / 4.0) {
                v.member = true;
                v.witness_i = i;
                v.witness_n = n;
                return v;
            }
        }
    }
    return v;
}

std::vector<double> abs_prefix(const NoiseSeq& ts) {
    std::vector<double> p(ts.size() + 1, 0.0);
    for (std::size_t k = 0; k < ts.size(); ++k) p[k + 1] = p[k] + std::fabs(ts[k]);
    return p;
}

}  // namespace

BadVerdict bad_member(const NoiseSeq& ts, double N, double eps, double alpha,
                      long n_horizon) {
    if (!(eps > 0.0 && eps < 1.0))
        throw precondition_error("bad_member: eps in (0,1)");
    if (n_horizon <= 0)
        n_horizon = static_cast<long>(std::ceil(16.0 * N * std::pow(eps, -alpha)));
    auto prefix = abs_prefix(ts);
    return bad_member_prefix(prefix, 0, N, eps, alpha, n_horizon);
}

long m_tilde(long m, double eps, double alpha) {
    if (m < 0) throw precondition_error("m_tilde: m >= 0");
    if (!(eps > 0.0 && eps < 1.0)) throw precondition_error("m_tilde: eps in (0,1)");
    return static_cast<long>(std::floor(m * std::pow(eps, alpha) / Constants::varphi(eps))) + 1;
}

ReturnTrace special_returns(const MapSpec& f, const NeighborhoodI& I, double x,
                            const NoiseSeq& ts, double eps, int k_max, long horizon,
                            long n_horizon) {
    ReturnTrace out;
    auto prefix = abs_prefix(ts);
    const double alpha = f.alpha();

    double g = wrap(x);
    long base = 0;  // absolute start time of the current G_k
    bool first = true;
    while (static_cast<int>(out.special_durations.size()) < k_max) {
        // essential returns of (G_k, sigma^base t), scanned on the shared orbit
        NoiseSeq tail = ts.shifted(base);
        long local_horizon = horizon - base;
        if (local_horizon <= 0) {
            out.censored = true;
            break;
        }
        int inner_cap = static_cast<int>(std::min<long>(local_horizon, 1000000L));
        ReturnTrace ess = essential_returns(f, I, g, tail, inner_cap, local_horizon);
        if (first) {
            out.escape = ess.escape;
            first = false;
        }
        bool found = false;
        for (std::size_t j = 0; j < ess.essential_returns.size(); ++j) {
            long r = ess.essential_returns[j];
            long rt = m_tilde(r, eps, alpha);
            long nh = n_horizon > 0
                          ? n_horizon
                          : static_cast<long>(std::ceil(16.0 * rt * std::pow(eps, -alpha)));
            BadVerdict bv = bad_member_prefix(prefix, base, static_cast<double>(rt), eps,
                                              alpha, nh);
            out.bad_truncated = true;
            if (!bv.member) {
                out.special_durations.push_back(r);
                base += r;
                g = ess.return_points[j];
                out.special_points.push_back(g);
                found = true;
                break;
            }
        }
        if (!found) {
            out.censored = true;
            break;
        }
    }
    return out;
}

std::size_t pliss_select(const std::vector<double>& a, double C) {
    if (a.empty()) throw precondition_error("pliss_select: empty sequence");
    const std::size_t n = a.size() - 1;
    double total = 0.0;
    for (double v : a) total += v;
    if (total > (static_cast<double>(n) + 1.0) * C * (1.0 + 1e-12))
        throw precondition_error("pliss_select: sum exceeds (n+1)C");
    // T_k = sum_{i<=k} (a_i - C); k valid iff T_k <= min(0, T_0, ..., T_{k-1})
    std::vector<double> T(a.size());
    double run = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        run += a[i] - C;
        T[i] = run;
    }
    std::vector<double> prefix_min(a.size() + 1);
    prefix_min[0] = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        prefix_min[i + 1] = std::min(prefix_min[i], T[i]);
    const double slack = 1e-12 * std::max(1.0, std::fabs(C));
    for (std::size_t k = a.size(); k-- > 0;)
        if (T[k] <= prefix_min[k] + slack) return k;
    throw precondition_error("pliss_select: no valid index (unreachable)");
}

CensoredTime m_hat(const MapSpec& f, const NeighborhoodI& I, const Constants& c, double x,
                   const NoiseSeq& ts, double eps, long horizon, int samples) {
    CensoredTime E = escape_time(f, I, x, ts, horizon);
    if (E.censored) return CensoredTime::censor(horizon);
    const double near = std::pow(eps, 2.0 * c.gamma);
    const double ball = std::pow(eps, c.gamma);
    const double budget = std::pow(eps, -c.gamma * f.alpha());

    double y = wrap(x);
    for (long m = 0; m < std::max(E.value, 1L); ++m) y = step(f, y, ts[m]);
    for (long m = std::max(E.value, 1L); m <= horizon; ++m) {
        // invariant: y = f_t^m(x)
        if (f.dist_to_fixed_points(y) < near) {
            // locate the fixed point and pull back the gamma-ball around it
            double best = 1.0, p0 = 0.0;
            for (double p : f.fixed_points()) {
                double d = circle_dist(y, p);
                if (d < best) {
                    best = d;
                    p0 = p;
                }
            }
            double del = circle_delta(wrap(p0 - ball), y);   // distance from arc lo to y
            double der = circle_delta(y, wrap(p0 + ball));   // distance from y to arc hi
            auto prof = profile_over_arc(f, x, ts, m, del, der, samples);
            if (prof.ldist <= budget) return CensoredTime::at(m);
        }
        if (m < horizon) y = step(f, y, ts[m]);
    }
    return CensoredTime::censor(horizon);
}

NiceSetReport nice_set_check(const MapSpec& f, double eps, double delta, long horizon,
                             int samples, std::uint64_t seed) {
    NiceSetReport rep;
    rep.delta = delta;
    rep.eps = eps;
    rep.horizon = horizon;
    rep.samples = eps > 0.0 ? samples : 1;
    rep.certified_horizon = horizon;
    NeighborhoodI V = NeighborhoodI::around_fixed_points(f, delta);
    constexpr double kCertCap = 1e-9;
    for (double b : V.boundary_points()) {
        for (int s = 0; s < rep.samples; ++s) {
            CounterRng rng(seed, static_cast<std::uint64_t>(s));
            double y = b;
            double err = 4e-16;  // representation error of the boundary point
            long certified = horizon;
            for (long n = 1; n <= horizon; ++n) {
                err = f.deriv(y, Side::Right) * err + 4e-16;
                y = step(f, y, eps > 0.0 ? rng.next_symmetric(eps) : 0.0);
                if (err > kCertCap && certified == horizon) certified = n - 1;
                int j = V.component_of(y);
                if (j >= 0) {
                    // certain violation only: inside V by more than the error
                    double margin =
                        V.components()[j].radius - circle_dist(y, V.components()[j].p0);
                    if (margin > err) {
                        rep.violations.push_back({b, static_cast<std::uint64_t>(s), n, y});
                        break;
                    }
                }
            }
            rep.certified_horizon = std::min(rep.certified_horizon, certified);
        }
    }
    return rep;
}

InducedReturn induced_return(const MapSpec& f, const NeighborhoodI& V, const Constants& c,
                             double x, const NoiseSeq& ts, long horizon, int samples) {
    if (!V.contains(x)) throw precondition_error("induced_return: x must start in V");
    if (static_cast<long>(ts.size()) < horizon)
        throw noise_length_error("induced_return: noise shorter than horizon");
    InducedReturn out;
    double y = wrap(x);
    for (long m = 1; m <= horizon; ++m) {
        y = step(f, y, ts[m - 1]);
        if (!V.contains(y)) continue;
        auto prof = expansion_profile(f, x, ts, m, c.tau_star, samples);
        if (prof.lambda >= c.lambda_star) {
            out.time = CensoredTime::at(m);
            out.lambda = prof.lambda;
            out.ldist = prof.ldist;
            return out;
        }
    }
    out.time = CensoredTime::censor(horizon);
    return out;
}

}  // namespace rdslab
