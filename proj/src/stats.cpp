#include "rdslab/stats.hpp"

#include <cmath>

namespace rdslab {

WilsonInterval wilson_interval(long successes, long trials, double z) {
    if (trials <= 0) throw precondition_error("wilson_interval: trials > 0");
    double n = static_cast<double>(trials);
    double p = static_cast<double>(successes) / n;
    double z2 = z * z;
    double denom = 1.0 + z2 / n;
    double center = (p + z2 / (2.0 * n)) / denom;
    double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    WilsonInterval w;
    w.lo = std::max(0.0, center - half);
    w.hi = std::min(1.0, center + half);
    return w;
}

SlopeFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw window_error("fit_line: need at least 2 points");
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw window_error("fit_line: degenerate abscissae");
    SlopeFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.points = static_cast<long>(x.size());
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double r = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += r * r;
    }
    f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    // residual-based standard error (used when no per-point sigma is known)
    if (x.size() > 2) f.stderr_slope = std::sqrt(ss_res / (n - 2.0) / sxx);
    return f;
}

SlopeFit fit_slope(const std::vector<long>& m_grid, const std::vector<double>& survival,
                   long window_lo, long window_hi, long trials) {
    std::vector<double> xs, ys, sig;
    for (std::size_t i = 0; i < m_grid.size(); ++i) {
        long m = m_grid[i];
        if (m < window_lo || m > window_hi) continue;
        double s = survival[i];
        if (!(s > 0.0)) continue;
        xs.push_back(std::log(static_cast<double>(m)));
        ys.push_back(std::log(s));
        if (trials > 0) {
            auto w = wilson_interval(static_cast<long>(std::lround(s * trials)), trials);
            double lo = std::max(w.lo, 0.5 / trials);
            sig.push_back((std::log(w.hi) - std::log(lo)) / (2.0 * 1.96));
        }
    }
    if (xs.size() < 5) throw window_error("fit_slope: fewer than 5 usable points in window");
    SlopeFit f = fit_line(xs, ys);
    f.window_lo = window_lo;
    f.window_hi = window_hi;
    if (trials > 0) {
        // propagate the per-point log-survival uncertainty through OLS weights
        double mx = 0.0;
        for (double v : xs) mx += v;
        mx /= static_cast<double>(xs.size());
        double sxx = 0.0;
        for (double v : xs) sxx += (v - mx) * (v - mx);
        double var = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            double c = (xs[i] - mx) / sxx;
            var += c * c * sig[i] * sig[i];
        }
        f.stderr_slope = std::sqrt(var);
    }
    return f;
}

double batch_means_stderr(const std::vector<double>& batch_averages) {
    const std::size_t b = batch_averages.size();
    if (b < 2) throw precondition_error("batch_means_stderr: need >= 2 batches");
    double mean = 0.0;
    for (double v : batch_averages) mean += v;
    mean /= static_cast<double>(b);
    double var = 0.0;
    for (double v : batch_averages) var += (v - mean) * (v - mean);
    var /= static_cast<double>(b - 1);
    return std::sqrt(var / static_cast<double>(b));
}

}  // namespace rdslab
