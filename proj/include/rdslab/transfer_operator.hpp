#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <vector>

#include "rdslab/circle.hpp"
#include "rdslab/circle_map.hpp"
#include "rdslab/errors.hpp"
#include "rdslab/random_orbit.hpp"

namespace rdslab {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Ordered partition of the circle into cells [b_i, b_{i+1}), b_0 = 0, b_N = 1.
class Grid {
public:
    Grid() = default;

    static Grid uniform(int n);
    /// Geometrically graded toward each anchor: cell widths shrink by `ratio`
    /// per step approaching the anchor, down to `min_width`, with uniform
    /// cells of width about 1/n elsewhere.
    static Grid graded(int n, const std::vector<double>& anchors, double ratio = 0.9,
                       double min_width = 1e-6);

    /// Rebuild from an explicit break vector (0 = b_0 < ... < b_N = 1).
    static Grid from_breaks(std::vector<double> breaks);

    /// Every cell split in half (refinement error bars).
    Grid bisected() const;

    int size() const { return static_cast<int>(breaks_.size()) - 1; }
    double cell_lo(int i) const { return breaks_[i]; }
    double cell_hi(int i) const { return breaks_[i + 1]; }
    double cell_width(int i) const { return breaks_[i + 1] - breaks_[i]; }
    double cell_mid(int i) const { return 0.5 * (breaks_[i] + breaks_[i + 1]); }
    double max_width() const;
    int cell_of(double x) const;
    const std::vector<double>& breaks() const { return breaks_; }
    bool same_as(const Grid& other) const;

private:
    explicit Grid(std::vector<double> breaks) : breaks_(std::move(breaks)) {}
    std::vector<double> breaks_;
};

/// Piecewise-constant probability density (per unit length) on a grid.
struct Density {
    Grid grid;
    Eigen::ArrayXd values;

    double mass() const;
    void normalize();
    /// Measure of each cell: values[i] * width[i].
    Eigen::ArrayXd cell_masses() const;
    static Density uniform(const Grid& g);
    static Density from_masses(const Grid& g, const Eigen::ArrayXd& masses);
};

/// Row-stochastic Markov transition on grid cells.
struct UlamMatrix {
    Grid grid;
    SparseRowMatrix P;
    double eps = 0.0;  // noise level it encodes; 0 = deterministic

    double max_row_sum_error() const;
};

/// Ulam projection of the deterministic transfer operator:
/// entry (i,j) = |cell_i /\ f^{-1}(cell_j)| / |cell_i|, exact up to the
/// root-finding tolerance of the branch inverses.
UlamMatrix ulam_build(const MapSpec& f, const Grid& grid);

/// The exact cell-projected circular convolution with the uniform kernel on
/// [-eps, eps] (row-stochastic; rows are trapezoid overlap integrals in
/// closed form).
UlamMatrix smoothing_matrix(const Grid& grid, double eps);

/// Right-composition with the smoothing matrix.
UlamMatrix smooth_uniform(const UlamMatrix& M, double eps);
/// Exact smoothing of a piecewise-constant density, re-projected to the grid.
Density smooth_uniform(const Density& d, double eps);

/// Annealed one-step operator: uniform smoothing after the deterministic
/// transfer operator (additive noise acts after the map).
UlamMatrix annealed_build(const MapSpec& f, const Grid& grid, double eps);

struct StationaryResult {
    Density density;
    long iterations = 0;
    double residual = 0.0;
};

/// Power iteration on the cell measure, L1-normalized each step, until
/// ||mu P - mu||_1 <= tol. Throws convergence_error past max_iters.
StationaryResult stationary(const UlamMatrix& M, double tol = 1e-11, long max_iters = 500000,
                            const Density* warm_start = nullptr);

/// Deterministic invariant density: stationary vector of ulam_build.
Density invariant_density(const MapSpec& f, const Grid& grid, double tol = 1e-11);

double l1_distance(const Density& a, const Density& b);
double tv_distance(const Density& a, const Density& b);

struct PushforwardResult {
    Density density;
    bool exact = true;
    long samples = 0;        // Monte Carlo mode only
    double max_stderr = 0.0; // per-cell density standard error bound (MC mode)
};

/// Cell averages of (f_t^n)_* (normalized Lebesgue on the arc J): exact by
/// branchwise pullback of cell endpoints when the total inverse-branch count
/// is small, Monte Carlo otherwise. `exact` forces the exact mode (throws
/// branch_explosion_error when infeasible).
PushforwardResult pushforward_density(const MapSpec& f, const Arc& J, long n,
                                      const NoiseSeq& ts, const Grid& grid,
                                      bool exact = true, long mc_samples = 1000000,
                                      std::uint64_t seed = 1, std::uint64_t stream = 0);

}  // namespace rdslab
