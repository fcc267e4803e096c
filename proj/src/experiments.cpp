#include "rdslab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rdslab/parallel.hpp"
#include "rdslab/rng.hpp"

namespace rdslab {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// shared survival-curve assembly from a per-sample hitting-time histogram
void fill_tail_report(TailReport& rep, const std::vector<long>& hist, long censored,
                      long samples, long m_max) {
    rep.m_grid.resize(m_max);
    rep.survival.resize(m_max);
    rep.wilson_lo.resize(m_max);
    rep.wilson_hi.resize(m_max);
    long tail = 0;
    std::vector<long> tail_counts(m_max + 1, 0);
    for (long m = m_max; m >= 1; --m) {
        tail += hist[m];
        tail_counts[m] = tail;
    }
    for (long m = 1; m <= m_max; ++m) {
        rep.m_grid[m - 1] = m;
        rep.survival[m - 1] = static_cast<double>(tail_counts[m]) / samples;
        auto w = wilson_interval(tail_counts[m], samples);
        rep.wilson_lo[m - 1] = w.lo;
        rep.wilson_hi[m - 1] = w.hi;
    }
    rep.censored_fraction = static_cast<double>(censored) / samples;
    rep.samples = samples;
}

void fit_tail(TailReport& rep, const FitWindowSpec& spec, long samples) {
    auto octave_window = [&rep](double level, long lo_min, long& lo, long& hi) {
        long mstar = rep.m_grid.back();
        for (std::size_t i = 0; i < rep.m_grid.size(); ++i)
            if (rep.survival[i] < level) {
                mstar = rep.m_grid[i];
                break;
            }
        lo = std::max(lo_min, mstar / 2);
        hi = 2 * mstar;
        std::ostringstream os;
        os << "octave around crossover m*=" << mstar << " at level " << fmt(level);
        return os.str();
    };

    long lo = 0, hi = 0;
    if (spec.hi > 0) {
        lo = spec.lo;
        hi = spec.hi;
        rep.window_rule = "explicit";
    } else if (spec.crossover_level > 0.0) {
        rep.window_rule = octave_window(spec.crossover_level, spec.lo_min, lo, hi);
    } else {
        double floor_level = std::max(10.0 * rep.eps, 100.0 / samples);
        hi = 0;
        for (std::size_t i = 0; i < rep.m_grid.size(); ++i)
            if (rep.survival[i] > floor_level) hi = rep.m_grid[i];
        lo = spec.lo_min;
        std::ostringstream os;
        os << "survival floor " << fmt(floor_level);
        rep.window_rule = os.str();
    }
    try {
        rep.fit = fit_slope(rep.m_grid, rep.survival, lo, hi, samples);
        return;
    } catch (const window_error&) {
        // fall through: the requested window holds too few usable points
    }
    if (rep.eps > 0.0 && !(spec.hi > 0)) {
        // noise swallowed the floor-rule window; fit the octave around the
        // point where survival crosses the plateau-bound level
        std::string rule = octave_window(8.0 * rep.eps, 4, lo, hi);
        try {
            rep.fit = fit_slope(rep.m_grid, rep.survival, lo, hi, samples);
            rep.window_rule += " -> " + rule;
            return;
        } catch (const window_error&) {
        }
    }
    rep.fit = SlopeFit{};
    rep.fit.slope = std::numeric_limits<double>::quiet_NaN();
    rep.window_rule += " (unfit: too few points)";
}

}  // namespace

TailReport tail_escape(const MapSpec& f, const NeighborhoodI& I, double eps, long samples,
                       long m_max, std::uint64_t seed, int threads, FitWindowSpec window) {
    if (samples < 1) throw precondition_error("tail_escape: samples >= 1");
    std::vector<std::vector<long>> hists(threads > 0 ? threads : 1,
                                         std::vector<long>(m_max + 1, 0));
    std::vector<long> censored_per(hists.size(), 0);
    parallel_for(samples, static_cast<int>(hists.size()),
                 [&](long lo, long hi, int w) {
                     auto& h = hists[w];
                     for (long i = lo; i < hi; ++i) {
                         CounterRng rng(seed, static_cast<std::uint64_t>(i));
                         double x = rng.next_double();
                         auto E = escape_time_stream(
                             f, I, x, [&](long) { return rng.next_symmetric(eps); }, m_max);
                         if (E.censored) ++censored_per[w];
                         h[std::min(E.value, m_max)] += 1;
                     }
                 });
    std::vector<long> hist(m_max + 1, 0);
    long censored = 0;
    for (std::size_t w = 0; w < hists.size(); ++w) {
        censored += censored_per[w];
        for (long m = 0; m <= m_max; ++m) hist[m] += hists[w][m];
    }
    TailReport rep;
    rep.eps = eps;
    rep.seed = seed;
    rep.target_slope = -1.0 / f.alpha();
    fill_tail_report(rep, hist, censored, samples, m_max);
    fit_tail(rep, window, samples);
    rep.config = {{"experiment", "tail_escape"}, {"eps", fmt(eps)},
                  {"samples", std::to_string(samples)}, {"m_max", std::to_string(m_max)},
                  {"seed", std::to_string(seed)}, {"alpha", fmt(f.alpha())}};
    return rep;
}

TailReport tail_mK(const MapSpec& f, const NeighborhoodI& I, const Constants& c, double eps,
                   double K, long samples, long m_max, std::uint64_t seed, int threads,
                   double alpha_bar, int probes, FitWindowSpec window) {
    if (alpha_bar <= 0.0) alpha_bar = 0.5 * (f.alpha() + 1.0);
    std::vector<std::vector<long>> hists(threads > 0 ? threads : 1,
                                         std::vector<long>(m_max + 1, 0));
    std::vector<long> censored_per(hists.size(), 0);
    parallel_for(samples, static_cast<int>(hists.size()),
                 [&](long lo, long hi, int w) {
                     auto& h = hists[w];
                     for (long i = lo; i < hi; ++i) {
                         CounterRng rng(seed, static_cast<std::uint64_t>(i));
                         double x = rng.next_double();
                         NoiseSeq ts = sample_noise(NoiseModel(eps), m_max, seed,
                                                    static_cast<std::uint64_t>(i) | (1ull << 62));
                         auto mk = m_scale_expansion_time(f, I, c, x, ts, K, m_max, probes);
                         if (mk.censored) ++censored_per[w];
                         h[std::min(mk.value, m_max)] += 1;
                     }
                 });
    std::vector<long> hist(m_max + 1, 0);
    long censored = 0;
    for (std::size_t w = 0; w < hists.size(); ++w) {
        censored += censored_per[w];
        for (long m = 0; m <= m_max; ++m) hist[m] += hists[w][m];
    }
    TailReport rep;
    rep.eps = eps;
    rep.seed = seed;
    rep.target_slope = -1.0 / alpha_bar;
    fill_tail_report(rep, hist, censored, samples, m_max);
    fit_tail(rep, window, samples);
    rep.config = {{"experiment", "tail_mK"}, {"eps", fmt(eps)}, {"K", fmt(K)},
                  {"samples", std::to_string(samples)}, {"m_max", std::to_string(m_max)},
                  {"seed", std::to_string(seed)}, {"alpha_bar", fmt(alpha_bar)}};
    return rep;
}

TailReport tail_mV(const MapSpec& f, const NeighborhoodI& V, const Constants& c, double eps,
                   long samples, long m_max, std::uint64_t seed, int threads, int probes,
                   FitWindowSpec window) {
    const auto& comps = V.components();
    if (comps.empty()) throw precondition_error("tail_mV: V has no components");
    double total = V.total_length();
    std::vector<std::vector<long>> hists(threads > 0 ? threads : 1,
                                         std::vector<long>(m_max + 1, 0));
    std::vector<long> censored_per(hists.size(), 0);
    parallel_for(samples, static_cast<int>(hists.size()),
                 [&](long lo, long hi, int w) {
                     auto& h = hists[w];
                     for (long i = lo; i < hi; ++i) {
                         CounterRng rng(seed, static_cast<std::uint64_t>(i));
                         // x ~ Lebesgue restricted to V
                         double u = rng.next_double() * total;
                         double x = 0.0;
                         for (const auto& comp : comps) {
                             if (u < 2.0 * comp.radius) {
                                 x = wrap(comp.p0 - comp.radius + u);
                                 break;
                             }
                             u -= 2.0 * comp.radius;
                         }
                         NoiseSeq ts = sample_noise(NoiseModel(eps), m_max, seed,
                                                    static_cast<std::uint64_t>(i) | (1ull << 62));
                         auto mv = induced_return(f, V, c, x, ts, m_max, probes);
                         if (mv.time.censored) ++censored_per[w];
                         h[std::min(mv.time.value, m_max)] += 1;
                     }
                 });
    std::vector<long> hist(m_max + 1, 0);
    long censored = 0;
    for (std::size_t w = 0; w < hists.size(); ++w) {
        censored += censored_per[w];
        for (long m = 0; m <= m_max; ++m) hist[m] += hists[w][m];
    }
    TailReport rep;
    rep.eps = eps;
    rep.seed = seed;
    rep.target_slope = -1.0 / (0.5 * (f.alpha() + 1.0));
    fill_tail_report(rep, hist, censored, samples, m_max);
    fit_tail(rep, window, samples);
    rep.config = {{"experiment", "tail_mV"}, {"eps", fmt(eps)},
                  {"samples", std::to_string(samples)}, {"m_max", std::to_string(m_max)},
                  {"seed", std::to_string(seed)}, {"V_length", fmt(total)}};
    return rep;
}

std::vector<double> omega_hat_theta_exact(long n_max, int grid_per_unit) {
    // P(S_n <= n/4), S_n a sum of n independent U[0,1]: piecewise-linear
    // density convolved n times on a fixed grid; all quantities positive, so
    // the recursion is cancellation-free.
    const double h = 1.0 / grid_per_unit;
    const long M = static_cast<long>((n_max / 4.0 + 1.5) * grid_per_unit);
    std::vector<double> F(M, 0.0);
    for (long i = 0; i < M; ++i) F[i] = (i * h <= 1.0) ? 1.0 : 0.0;
    std::vector<double> out(n_max + 1, 0.0);
    out[1] = 0.25;
    std::vector<double> cdf(M, 0.0);
    auto cdf_at = [&](double y) {
        if (y <= 0.0) return 0.0;
        double pos = y / h;
        long j = static_cast<long>(pos);
        if (j >= M - 1) return cdf[M - 1];
        double fr = pos - j;
        return cdf[j] * (1.0 - fr) + cdf[j + 1] * fr;
    };
    std::vector<double> next(M, 0.0);
    for (long n = 2; n <= n_max; ++n) {
        cdf[0] = 0.0;
        for (long i = 1; i < M; ++i) cdf[i] = cdf[i - 1] + 0.5 * (F[i] + F[i - 1]) * h;
        for (long i = 0; i < M; ++i) {
            double x = i * h;
            next[i] = cdf_at(x) - cdf_at(x - 1.0);
        }
        F.swap(next);
        cdf[0] = 0.0;
        for (long i = 1; i < M; ++i) cdf[i] = cdf[i - 1] + 0.5 * (F[i] + F[i - 1]) * h;
        out[n] = cdf_at(n / 4.0);
    }
    return out;
}

BadsetReport badset_decay(double eps, double alpha, const std::vector<double>& N_list,
                          long samples, long n_max, std::uint64_t seed, int threads) {
    BadsetReport rep;
    rep.eps = eps;
    rep.alpha = alpha;
    rep.mc_samples = samples;
    rep.seed = seed;

    auto exact = omega_hat_theta_exact(n_max);
    for (long n = 1; n <= n_max; ++n) {
        rep.n_grid.push_back(n);
        rep.theta_exact.push_back(exact[n]);
    }

    // Monte Carlo occupation of Omega-hat(n) on the same grid (0 hits leave NaN)
    std::vector<std::vector<long>> hits(threads > 0 ? threads : 1,
                                        std::vector<long>(n_max + 1, 0));
    parallel_for(samples, static_cast<int>(hits.size()),
                 [&](long lo, long hi, int w) {
                     auto& h = hits[w];
                     for (long i = lo; i < hi; ++i) {
                         CounterRng rng(seed, static_cast<std::uint64_t>(i));
                         double sum = 0.0;
                         for (long n = 1; n <= n_max; ++n) {
                             sum += std::fabs(rng.next_symmetric(eps));
                             if (sum <= eps * n / 4.0) h[n] += 1;
                         }
                     }
                 });
    std::vector<long> hit(n_max + 1, 0);
    for (auto& h : hits)
        for (long n = 1; n <= n_max; ++n) hit[n] += h[n];
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (long n = 1; n <= n_max; ++n) {
        if (hit[n] > 0) {
            rep.theta_mc.push_back(static_cast<double>(hit[n]) / samples);
            auto w = wilson_interval(hit[n], samples);
            rep.theta_mc_lo.push_back(w.lo);
            rep.theta_mc_hi.push_back(w.hi);
        } else {
            rep.theta_mc.push_back(nan);
            rep.theta_mc_lo.push_back(nan);
            rep.theta_mc_hi.push_back(nan);
        }
    }

    // log-linear decay fit on the exact curve over [4, n_max]
    std::vector<double> xs, ys;
    for (long n = 4; n <= n_max; ++n) {
        xs.push_back(static_cast<double>(n));
        ys.push_back(std::log(exact[n]));
    }
    rep.log_linear_fit = fit_line(xs, ys);

    // BAD-set frequency per N (finite-horizon membership)
    const long n_horizon =
        static_cast<long>(std::ceil(16.0 * (*std::max_element(N_list.begin(), N_list.end())) *
                                    std::pow(eps, -alpha)));
    rep.n_horizon = n_horizon;
    double max_i = 0.0;
    for (double N : N_list)
        max_i = std::max(max_i, N * std::pow(eps, -alpha) * Constants::varphi(eps));
    const long need = static_cast<long>(std::ceil(max_i)) + n_horizon + 1;
    const long bad_samples = std::min<long>(samples, 200000);
    for (double N : N_list) {
        std::vector<long> counts(hits.size(), 0);
        parallel_for(bad_samples, static_cast<int>(hits.size()),
                     [&](long lo, long hi, int w) {
                         for (long i = lo; i < hi; ++i) {
                             NoiseSeq ts = sample_noise(NoiseModel(eps), need, seed,
                                                        static_cast<std::uint64_t>(i) |
                                                            (1ull << 61));
                             if (bad_member(ts, N, eps, alpha, n_horizon).member)
                                 ++counts[w];
                         }
                     });
        long cnt = 0;
        for (long c : counts) cnt += c;
        rep.N_list.push_back(N);
        rep.bad_freq.push_back(static_cast<double>(cnt) / bad_samples);
        auto w = wilson_interval(cnt, bad_samples);
        rep.bad_freq_lo.push_back(w.lo);
        rep.bad_freq_hi.push_back(w.hi);
    }
    rep.config = {{"experiment", "badset_decay"}, {"eps", fmt(eps)}, {"alpha", fmt(alpha)},
                  {"samples", std::to_string(samples)}, {"n_max", std::to_string(n_max)},
                  {"seed", std::to_string(seed)}};
    return rep;
}

StabilityReport stability_sweep(const MapSpec& f, const std::vector<double>& eps_list,
                                const Grid& grid, double tol, double core_exclusion) {
    for (std::size_t i = 0; i + 1 < eps_list.size(); ++i)
        if (!(eps_list[i] > eps_list[i + 1]))
            throw precondition_error("stability_sweep: eps_list must be strictly decreasing");
    StabilityReport rep;
    rep.grid_n = grid.size();
    Grid fine = grid.bisected();

    // core cells excluded near each fixed point (reported separately)
    const double core_radius = core_exclusion / (2.0 * std::max<std::size_t>(1, f.fixed_points().size()));
    auto core_mask = [&](const Grid& g) {
        std::vector<bool> mask(g.size(), false);
        for (int i = 0; i < g.size(); ++i)
            if (f.dist_to_fixed_points(g.cell_mid(i)) < core_radius) mask[i] = true;
        return mask;
    };
    auto mask_base = core_mask(grid);
    for (int i = 0; i < grid.size(); ++i)
        if (mask_base[i]) rep.core_mass += grid.cell_width(i);

    auto zeta = stationary(ulam_build(f, grid), tol);
    auto zeta_fine = stationary(ulam_build(f, fine), tol);
    rep.iterations_total += zeta.iterations + zeta_fine.iterations;

    const Density* warm = nullptr;
    const Density* warm_fine = nullptr;
    Density prev, prev_fine;
    for (double eps : eps_list) {
        auto se = stationary(annealed_build(f, grid, eps), tol, 500000, warm);
        auto se_fine = stationary(annealed_build(f, fine, eps), tol, 500000, warm_fine);
        rep.iterations_total += se.iterations + se_fine.iterations;
        double d_base = l1_distance(se.density, zeta.density);
        double d_fine = l1_distance(se_fine.density, zeta_fine.density);
        rep.eps_grid.push_back(eps);
        rep.l1.push_back(d_base);
        rep.l1_refined.push_back(d_fine);
        rep.error_bar.push_back(std::fabs(d_base - d_fine));
        double d_core = 0.0;
        for (int i = 0; i < grid.size(); ++i)
            if (!mask_base[i])
                d_core += std::fabs(se.density.values[i] - zeta.density.values[i]) *
                          grid.cell_width(i);
        rep.l1_core_excluded.push_back(d_core);
        prev = se.density;
        prev_fine = se_fine.density;
        warm = &prev;
        warm_fine = &prev_fine;
    }
    std::ostringstream epss;
    for (double e : eps_list) epss << e << " ";
    rep.config = {{"experiment", "stability_sweep"}, {"eps_list", epss.str()},
                  {"grid_n", std::to_string(grid.size())}, {"tol", fmt(tol)}};
    return rep;
}

std::vector<Observable> default_observables(const MapSpec& f, double radius) {
    const double two_pi = 2.0 * M_PI;
    std::vector<Observable> obs;
    Observable c;
    c.name = "cos2pix";
    c.fn = [two_pi](double x) { return std::cos(two_pi * x); };
    c.cell_average = [two_pi](double lo, double hi) {
        return (std::sin(two_pi * hi) - std::sin(two_pi * lo)) / (two_pi * (hi - lo));
    };
    c.lipschitz = two_pi;
    obs.push_back(c);
    Observable s;
    s.name = "sin2pix";
    s.fn = [two_pi](double x) { return std::sin(two_pi * x); };
    s.cell_average = [two_pi](double lo, double hi) {
        return (std::cos(two_pi * lo) - std::cos(two_pi * hi)) / (two_pi * (hi - lo));
    };
    s.lipschitz = two_pi;
    obs.push_back(s);
    Observable ind;
    ind.name = "indicator_ball";
    auto p0s = f.fixed_points();
    ind.fn = [p0s, radius](double x) { return dist_to_set(x, p0s) < radius ? 1.0 : 0.0; };
    ind.cell_average = [p0s, radius](double lo, double hi) {
        // overlap of [lo, hi) with the union of balls, by midpoint refinement
        const int k = 64;
        double cover = 0.0;
        for (int i = 0; i < k; ++i) {
            double x = lo + (hi - lo) * (i + 0.5) / k;
            if (dist_to_set(x, p0s) < radius) cover += 1.0;
        }
        return cover / k;
    };
    ind.lipschitz = 0.0;
    for (double p : p0s) {
        ind.jump_points.push_back(wrap(p - radius));
        ind.jump_points.push_back(wrap(p + radius));
    }
    obs.push_back(ind);
    return obs;
}

BirkhoffReport birkhoff_check(const MapSpec& f, double eps,
                              const std::vector<Observable>& obs, long steps, long burn_in,
                              std::uint64_t seed, const Grid& grid, double tol) {
    BirkhoffReport rep;
    rep.steps = steps;
    rep.burn_in = burn_in;
    rep.eps = eps;
    rep.seed = seed;

    auto st = stationary(annealed_build(f, grid, eps), tol);
    rep.stationary_iterations = st.iterations;
    auto masses = st.density.cell_masses();

    // one long orbit; batch means capture the autocorrelation of the averages
    const long batches = 1000;
    const long batch_len = steps / batches;
    std::vector<std::vector<double>> batch_avx(obs.size(),
                                               std::vector<double>(batches, 0.0));
    CounterRng rng(seed, 0);
    double x = rng.next_double();
    for (long i = 0; i < burn_in; ++i) x = step(f, x, eps > 0.0 ? rng.next_symmetric(eps) : 0.0);
    for (long b = 0; b < batches; ++b) {
        std::vector<double> acc(obs.size(), 0.0);
        for (long i = 0; i < batch_len; ++i) {
            for (std::size_t k = 0; k < obs.size(); ++k) acc[k] += obs[k].fn(x);
            x = step(f, x, eps > 0.0 ? rng.next_symmetric(eps) : 0.0);
        }
        for (std::size_t k = 0; k < obs.size(); ++k)
            batch_avx[k][b] = acc[k] / static_cast<double>(batch_len);
    }

    for (std::size_t k = 0; k < obs.size(); ++k) {
        BirkhoffLine line;
        line.name = obs[k].name;
        double mean = 0.0;
        for (double v : batch_avx[k]) mean += v;
        mean /= static_cast<double>(batches);
        line.time_average = mean;
        line.mc_stderr = batch_means_stderr(batch_avx[k]);
        double integral = 0.0;
        for (int i = 0; i < grid.size(); ++i)
            integral += masses[i] * obs[k].cell_average(grid.cell_lo(i), grid.cell_hi(i));
        line.ulam_integral = integral;
        double bound = obs[k].lipschitz * grid.max_width();
        for (double j : obs[k].jump_points) bound += masses[grid.cell_of(j)];
        line.grid_bound = bound;
        line.tolerance = 3.0 * (line.mc_stderr + line.grid_bound);
        line.pass = std::fabs(line.time_average - line.ulam_integral) <= line.tolerance;
        rep.lines.push_back(line);
    }
    rep.config = {{"experiment", "birkhoff"}, {"eps", fmt(eps)},
                  {"steps", std::to_string(steps)}, {"burn_in", std::to_string(burn_in)},
                  {"seed", std::to_string(seed)}, {"grid_n", std::to_string(grid.size())}};
    return rep;
}

}  // namespace rdslab
