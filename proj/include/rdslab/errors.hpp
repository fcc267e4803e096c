#pragma once

#include <stdexcept>
#include <string>

namespace rdslab {

/// Root of all library errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A queried point does not lie in the image of the requested branch.
struct branch_image_error : error {
    using error::error;
};

/// Bracketed monotone root finding did not reach the requested tolerance.
struct root_finding_error : error {
    using error::error;
};

/// A neighborhood construction violated one of its defining conditions.
/// `condition` is 1..4; `witness` is a point where the check failed.
struct neighborhood_error : error {
    int condition;
    double witness;
    neighborhood_error(int cond, double w, const std::string& msg)
        : error(msg), condition(cond), witness(w) {}
};

/// A noise sequence is too short for the requested computation.
struct noise_length_error : error {
    using error::error;
};

/// Fixed-point iteration ran out of iterations.
struct convergence_error : error {
    long iterations;
    double residual;
    convergence_error(long iters, double res, const std::string& msg)
        : error(msg), iterations(iters), residual(res) {}
};

/// Two densities/matrices live on different grids.
struct grid_mismatch_error : error {
    using error::error;
};

/// Exact pushforward requested with too many inverse branch strings.
struct branch_explosion_error : error {
    using error::error;
};

/// Slope fit requested on a window with fewer than the minimum points.
struct window_error : error {
    using error::error;
};

/// A documented operation precondition does not hold.
struct precondition_error : error {
    using error::error;
};

/// Config file / CLI usage problems.
struct config_error : error {
    using error::error;
};

}  // namespace rdslab
