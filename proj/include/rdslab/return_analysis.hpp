#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "rdslab/circle.hpp"
#include "rdslab/circle_map.hpp"
#include "rdslab/random_orbit.hpp"

namespace rdslab {

/// An "integer or censored at the horizon" outcome. Censored observations are
/// right-censored: statistics count them in ">= horizon" tails, never drop them.
struct CensoredTime {
    long value = 0;
    bool censored = false;
    long horizon = 0;

    static CensoredTime at(long m) { return {m, false, 0}; }
    static CensoredTime censor(long h) { return {h, true, h}; }
};

/// Union of one open ball per fixed point. Components are indexed in the
/// order of MapSpec::fixed_points().
class NeighborhoodI {
public:
    struct Component {
        double p0;
        double radius;
    };

    NeighborhoodI() = default;
    NeighborhoodI(std::vector<Component> comps, double eps)
        : components_(std::move(comps)), eps_(eps) {}

    /// Unvalidated ball union B_radius(P0); used for nice-set candidates.
    static NeighborhoodI around_fixed_points(const MapSpec& f, double radius);

    const std::vector<Component>& components() const { return components_; }
    double eps() const { return eps_; }
    bool contains(double x) const { return component_of(x) >= 0; }
    int component_of(double x) const;
    double total_length() const;
    /// All 2*|P0| boundary points.
    std::vector<double> boundary_points() const;
    const std::array<bool, 4>& conditions() const { return conditions_; }

private:
    friend NeighborhoodI build_I(const MapSpec&, double, const std::vector<double>&, int);
    std::vector<Component> components_;
    double eps_ = 0.0;
    std::array<bool, 4> conditions_{false, false, false, false};
};

/// Construct and validate the escape neighborhood: (i) f(I) compactly
/// contains I, (ii) f|I injective, (iii) one-step exits stay out one more
/// step, (iv) consecutive visits stay in one component -- each checked for f
/// and for f_t at |t| = eps on component endpoints and a sample grid.
/// Throws neighborhood_error naming the failed condition and a witness.
NeighborhoodI build_I(const MapSpec& f, double eps, const std::vector<double>& radii,
                      int grid = 4096);

/// x in I with d(f(x), x) <= delta (the displacement-thin core of I).
bool in_I_delta(const MapSpec& f, const NeighborhoodI& I, double x, double delta);

/// True if x lies in I on a neutral side of its fixed point (inf Df = 1 there).
bool in_parabolic_side(const MapSpec& f, const NeighborhoodI& I, double x);

/// tau_*: half the distance from f^{-1}(I) /\ I to the complement of I.
double compute_tau_star(const MapSpec& f, const NeighborhoodI& I, int grid = 16384);

/// lambda_*: inf of Df outside f^{-3}(I) /\ I (> 1 for class maps).
double compute_lambda_star(const MapSpec& f, const NeighborhoodI& I, int grid = 65536);

/// The scale/exponent bookkeeping constants:
/// kappa in (alpha,1) with kappa(1+alpha) > 1, gamma in (1-kappa, alpha/(2(1+alpha))),
/// and varphi(eps) = log(1/eps).
struct Constants {
    double tau_star;
    double lambda_star;
    double kappa;
    double gamma;

    static Constants defaults(const MapSpec& f, const NeighborhoodI& I);
    void validate(double alpha) const;
    static double varphi(double eps) { return std::log(1.0 / eps); }
};

// --- escape and return times -------------------------------------------------

/// E(x,t): first m >= 0 with f_t^m(x) outside I; censored past the horizon.
CensoredTime escape_time(const MapSpec& f, const NeighborhoodI& I, double x,
                         const NoiseSeq& ts, long horizon);

/// Escape time driven by an on-the-fly noise source (same semantics;
/// noise_fn(k) must return t_k).
template <class NoiseFn>
CensoredTime escape_time_stream(const MapSpec& f, const NeighborhoodI& I, double x,
                                NoiseFn&& noise_fn, long horizon) {
    double y = wrap(x);
    for (long m = 0; m <= horizon; ++m) {
        if (!I.contains(y)) return CensoredTime::at(m);
        if (m == horizon) break;
        y = step(f, y, noise_fn(m));
    }
    return CensoredTime::censor(horizon);
}

struct ReturnTrace {
    CensoredTime escape;                  // E(x, t)
    std::vector<long> essential_returns;  // absolute times r_1 < r_2 < ...
    std::vector<double> return_points;    // F_k = f_t^{r_k}(x)
    std::vector<long> special_durations;  // R_0, R_1, ... (durations between G_k)
    std::vector<double> special_points;   // G_1, G_2, ...
    bool censored = false;                // horizon hit mid-search
    bool bad_truncated = false;           // BAD checks used a finite n-horizon
};

/// Essential return times r_k: re-entries into I after the previous return
/// point has fully escaped.
ReturnTrace essential_returns(const MapSpec& f, const NeighborhoodI& I, double x,
                              const NoiseSeq& ts, int k_max, long horizon);

// --- pullbacks, expansion and distortion --------------------------------------

struct ExpansionProfile {
    long n = 0;
    double tau = 0.0;
    Arc U;                   // pullback interval around x
    double lambda = 0.0;     // sampled min of Df_t^n over U (lower expansion bound)
    double log_lambda = 0.0;
    double ldist = 0.0;      // sampled max of the distortion-budget sum
    int sample_count = 0;
    /// max circle distance between forward images of U's endpoints and the
    /// endpoints of the target ball (pullback verification)
    double endpoint_error = 0.0;
};

/// U_tau^{(n)}(x,t): the component of (f_t^n)^{-1}(B_tau(f_t^n x)) containing x,
/// by backward branch-local pullback of the ball endpoints. Only U and the
/// endpoint verification are filled in.
ExpansionProfile pullback_U(const MapSpec& f, double x, const NoiseSeq& ts, long n,
                            double tau);

/// Full profile: Lambda = min over probes of Df_t^n(y^+), and the distortion
/// budget sum maximized over probes. Probes are U's endpoints plus dyadic
/// interior points, so doubling `samples` refines a superset (monotone).
ExpansionProfile expansion_profile(const MapSpec& f, double x, const NoiseSeq& ts, long n,
                                   double tau, int samples = 33);

/// Same machinery over an arbitrary target arc around f_t^n(x): extents
/// (left_ext, right_ext) from the endpoint positions of the arc.
ExpansionProfile profile_over_arc(const MapSpec& f, double x, const NoiseSeq& ts, long n,
                                  double left_ext, double right_ext, int samples);

/// m_K(x,t): minimal m >= max(E,1) with distortion budget <= K at scale tau_*.
CensoredTime m_scale_expansion_time(const MapSpec& f, const NeighborhoodI& I,
                                    const Constants& c, double x, const NoiseSeq& ts,
                                    double K, long horizon, int samples = 33);

// --- noise-side sets -----------------------------------------------------------

/// t in Omega-hat(n): sum_{k<n} |t_k| <= eps*n/4.
bool omega_hat_member(const NoiseSeq& ts, long n);

struct BadVerdict {
    bool member = false;
    long n_horizon = 0;   // the truncation applied to the unbounded quantifier
    long witness_i = -1;  // satisfying pair when member
    long witness_n = -1;
};

/// Finite-horizon membership in BAD_eps(N): exists i < N eps^-alpha phi(eps)
/// and n in [N eps^-alpha, n_horizon] with sigma^i(t) in Omega-hat(n).
/// Pass n_horizon = 0 for the default 16 * N * eps^-alpha.
BadVerdict bad_member(const NoiseSeq& ts, double N, double eps, double alpha,
                      long n_horizon = 0);

/// m-tilde of Eq-style rescaling: floor(m eps^alpha / phi(eps)) + 1.
long m_tilde(long m, double eps, double alpha);

/// Special returns: the minimal essential return r with t not in BAD(r-tilde),
/// restarted from each special return point G_k with the shifted noise.
ReturnTrace special_returns(const MapSpec& f, const NeighborhoodI& I, double x,
                            const NoiseSeq& ts, double eps, int k_max, long horizon,
                            long n_horizon = 0);

// --- Pliss selection -----------------------------------------------------------

/// Largest k <= n with a_k <= C, a_{k-1}+a_k <= 2C, ..., a_0+...+a_k <= (k+1)C.
/// Requires sum a_i <= (n+1)C (throws precondition_error otherwise).
std::size_t pliss_select(const std::vector<double>& a, double C);

// --- inducing to small scales ---------------------------------------------------

/// m-hat: minimal m >= E with f_t^m(x) within eps^{2 gamma} of P0 and the
/// pullback J of B_{eps^gamma}(P0) carrying a distortion-budget sum <= eps^{-gamma alpha}.
CensoredTime m_hat(const MapSpec& f, const NeighborhoodI& I, const Constants& c, double x,
                   const NoiseSeq& ts, double eps, long horizon, int samples = 33);

struct NiceSetViolation {
    double boundary_point;
    std::uint64_t stream;
    long n;
    double landing;
};

struct NiceSetReport {
    double delta = 0.0;
    double eps = 0.0;
    long horizon = 0;
    int samples = 0;
    std::vector<NiceSetViolation> violations;
    /// Largest depth to which the orbit positions were still certifiable in
    /// floating point (propagated derivative error below the certification
    /// threshold); entries beyond this depth can neither be certified clean
    /// nor violated.
    long certified_horizon = 0;
    bool clean() const { return violations.empty(); }
};

/// Empirical nice-set check for V = B_delta(P0): boundary orbits must stay out
/// of V up to the horizon, across sampled noise realizations. A violation is
/// recorded only when it is certain: the landing point is inside V by more
/// than the accumulated floating-point error of the orbit (the error of a
/// boundary orbit grows like the derivative cocycle, so deep certification is
/// impossible for expanding maps; the attained depth is reported).
NiceSetReport nice_set_check(const MapSpec& f, double eps, double delta, long horizon,
                             int samples, std::uint64_t seed);

struct InducedReturn {
    CensoredTime time;
    double lambda = 0.0;  // Lambda^{(m)} at the accepted return
    double ldist = 0.0;   // distortion budget alongside
};

/// m_V: first return to V with sampled expansion Lambda^{(m)} >= lambda_*.
InducedReturn induced_return(const MapSpec& f, const NeighborhoodI& V, const Constants& c,
                             double x, const NoiseSeq& ts, long horizon, int samples = 17);

}  // namespace rdslab
