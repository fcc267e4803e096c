#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "rdslab/return_analysis.hpp"
#include "rdslab/stats.hpp"
#include "rdslab/transfer_operator.hpp"

namespace rdslab {

using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

/// How to choose the log-log fit window of a survival curve.
struct FitWindowSpec {
    /// explicit window when hi > 0
    long lo = 0;
    long hi = 0;
    /// otherwise: octave around the crossover when level > 0 (the window
    /// [m*/2, 2 m*] with m* the first m where survival drops below level);
    /// else the floor rule: [lo_min, last m with survival > max(10 eps, 100/samples)]
    double crossover_level = 0.0;
    long lo_min = 16;

    static FitWindowSpec explicit_window(long lo, long hi) { return {lo, hi, 0.0, 16}; }
    static FitWindowSpec crossover(double level) { return {0, 0, level, 4}; }
    static FitWindowSpec floor_rule(long lo_min = 16) { return {0, 0, 0.0, lo_min}; }
};

struct TailReport {
    std::vector<long> m_grid;
    std::vector<double> survival;
    std::vector<double> wilson_lo;
    std::vector<double> wilson_hi;
    double censored_fraction = 0.0;
    SlopeFit fit;
    double target_slope = 0.0;
    std::string window_rule;
    long samples = 0;
    double eps = 0.0;
    std::uint64_t seed = 0;
    ConfigEcho config;
};

/// Survival of the escape time E over x ~ Lebesgue, t ~ product noise.
TailReport tail_escape(const MapSpec& f, const NeighborhoodI& I, double eps, long samples,
                       long m_max, std::uint64_t seed, int threads = 1,
                       FitWindowSpec window = FitWindowSpec::floor_rule());

/// Survival of the K-scale expansion time m_K over x ~ Lebesgue.
TailReport tail_mK(const MapSpec& f, const NeighborhoodI& I, const Constants& c, double eps,
                   double K, long samples, long m_max, std::uint64_t seed, int threads = 1,
                   double alpha_bar = 0.0, int probes = 17,
                   FitWindowSpec window = FitWindowSpec::floor_rule());

/// Survival of the induced return time m_V over x ~ Lebesgue restricted to V.
TailReport tail_mV(const MapSpec& f, const NeighborhoodI& V, const Constants& c, double eps,
                   long samples, long m_max, std::uint64_t seed, int threads = 1,
                   int probes = 17, FitWindowSpec window = FitWindowSpec::floor_rule());

struct BadsetReport {
    double eps = 0.0;
    double alpha = 0.0;
    // Omega-hat occupation: exact quadrature curve plus Monte Carlo spot checks
    std::vector<long> n_grid;
    std::vector<double> theta_exact;
    std::vector<double> theta_mc;       // quiet NaN where not sampled / zero hits
    std::vector<double> theta_mc_lo, theta_mc_hi;
    SlopeFit log_linear_fit;            // log theta_exact vs n
    // BAD-set frequency per N
    std::vector<double> N_list;
    std::vector<double> bad_freq;
    std::vector<double> bad_freq_lo, bad_freq_hi;
    long mc_samples = 0;
    long n_horizon = 0;
    std::uint64_t seed = 0;
    ConfigEcho config;
};

/// Occupation probability of the small-total-noise sets and decay of the BAD
/// frequency. theta(n) is computed exactly by convolution quadrature (the
/// probabilities fall below Monte Carlo reach well before n = 64) and
/// validated by Monte Carlo at small n.
BadsetReport badset_decay(double eps, double alpha, const std::vector<double>& N_list,
                          long samples, long n_max, std::uint64_t seed, int threads = 1);

/// Exact quadrature for P(sum_{k<n} |t_k| <= eps n / 4) (independent of eps).
std::vector<double> omega_hat_theta_exact(long n_max, int grid_per_unit = 512);

struct StabilityReport {
    std::vector<double> eps_grid;      // strictly decreasing
    std::vector<double> l1;            // || zeta_eps - zeta ||_1 on the base grid
    std::vector<double> l1_refined;    // same on the bisected grid
    std::vector<double> error_bar;     // |l1 - l1_refined|
    std::vector<double> l1_core_excluded;
    double core_mass = 0.0;            // Lebesgue measure excluded near P0
    int grid_n = 0;
    long iterations_total = 0;
    ConfigEcho config;
};

/// Deterministic invariant density vs annealed stationary densities along a
/// decreasing noise grid, with grid-refinement error bars.
StabilityReport stability_sweep(const MapSpec& f, const std::vector<double>& eps_list,
                                const Grid& grid, double tol = 1e-11,
                                double core_exclusion = 1e-4);

struct Observable {
    std::string name;
    std::function<double(double)> fn;
    /// exact average of fn over a cell [lo, hi]
    std::function<double(double, double)> cell_average;
    double lipschitz = 0.0;            // sup |fn'| over smooth parts
    std::vector<double> jump_points;   // discontinuities (indicator boundaries)
};

/// cos 2 pi x, sin 2 pi x, and the indicator of B_radius(P0).
std::vector<Observable> default_observables(const MapSpec& f, double radius = 0.1);

struct BirkhoffLine {
    std::string name;
    double time_average = 0.0;
    double ulam_integral = 0.0;
    double mc_stderr = 0.0;     // batch-means standard error of the time average
    double grid_bound = 0.0;    // projection bound for this observable
    double tolerance = 0.0;     // 3 (mc_stderr + grid_bound)
    bool pass = false;
};

struct BirkhoffReport {
    std::vector<BirkhoffLine> lines;
    long steps = 0;
    long burn_in = 0;
    double eps = 0.0;
    std::uint64_t seed = 0;
    long stationary_iterations = 0;
    ConfigEcho config;
};

/// Time averages along one long noisy orbit against integrals of the Ulam
/// stationary density of the annealed operator.
BirkhoffReport birkhoff_check(const MapSpec& f, double eps,
                              const std::vector<Observable>& obs, long steps, long burn_in,
                              std::uint64_t seed, const Grid& grid, double tol = 1e-11);

}  // namespace rdslab
