#pragma once

#include <cstdint>
#include <vector>

#include "rdslab/errors.hpp"

namespace rdslab {

struct WilsonInterval {
    double lo = 0.0;
    double hi = 1.0;
};

/// Wilson score interval for a binomial proportion.
WilsonInterval wilson_interval(long successes, long trials, double z = 1.96);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    double r2 = 0.0;
    long points = 0;
    long window_lo = 0;
    long window_hi = 0;
};

/// Ordinary least squares of log(survival) on log(m) over the index window
/// [window_lo, window_hi] (values of m), keeping points with survival > 0.
/// `trials` > 0 propagates Wilson-interval widths into the slope standard
/// error; trials == 0 means the survival values are exact.
/// Throws window_error with fewer than 5 usable points.
SlopeFit fit_slope(const std::vector<long>& m_grid, const std::vector<double>& survival,
                   long window_lo, long window_hi, long trials = 0);

/// OLS of y on x (both already transformed), exact inputs.
SlopeFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Standard error of the mean of a correlated sequence via batch means.
double batch_means_stderr(const std::vector<double>& batch_averages);

}  // namespace rdslab
