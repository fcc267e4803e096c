#include "rdslab/transfer_operator.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "rdslab/rng.hpp"

namespace rdslab {

namespace {

std::vector<double> finalize_breaks(std::vector<double> pts) {
    for (double& p : pts) p = wrap(p);
    pts.push_back(0.0);
    std::sort(pts.begin(), pts.end());
    std::vector<double> out;
    for (double p : pts)
        if (out.empty() || p - out.back() > 1e-13) out.push_back(p);
    out.push_back(1.0);
    return out;
}

}  // namespace

Grid Grid::uniform(int n) {
    if (n < 1) throw precondition_error("Grid::uniform: n >= 1");
    std::vector<double> b;
    for (int i = 0; i < n; ++i) b.push_back(static_cast<double>(i) / n);
    return Grid(finalize_breaks(std::move(b)));
}

Grid Grid::graded(int n, const std::vector<double>& anchors, double ratio,
                  double min_width) {
    if (n < 4) throw precondition_error("Grid::graded: n >= 4");
    if (anchors.empty()) return uniform(n);
    if (!(ratio > 0.0 && ratio < 1.0))
        throw precondition_error("Grid::graded: ratio in (0,1)");
    std::vector<double> as;
    for (double a : anchors) as.push_back(wrap(a));
    std::sort(as.begin(), as.end());
    const double h = 1.0 / n;
    std::vector<double> breaks;
    for (std::size_t k = 0; k < as.size(); ++k) {
        double a = as[k];
        double b = (k + 1 < as.size()) ? as[k + 1] : as[0] + 1.0;  // lift of next anchor
        double gap = b - a;
        breaks.push_back(a);
        // geometric ladders growing away from both anchors
        std::vector<double> left, right;  // offsets from a and from b
        double w = min_width, off = 0.0;
        while (w < h && off + w < 0.5 * gap) {
            off += w;
            left.push_back(off);
            w /= ratio;
        }
        w = min_width;
        off = 0.0;
        while (w < h && off + w < 0.5 * gap) {
            off += w;
            right.push_back(off);
            w /= ratio;
        }
        double lo = left.empty() ? 0.0 : left.back();
        double hi = right.empty() ? 0.0 : right.back();
        for (double o : left) breaks.push_back(a + o);
        for (double o : right) breaks.push_back(b - o);
        double mid_len = gap - lo - hi;
        int cells = std::max(1, static_cast<int>(std::lround(mid_len / h)));
        for (int i = 1; i < cells; ++i) breaks.push_back(a + lo + mid_len * i / cells);
    }
    return Grid(finalize_breaks(std::move(breaks)));
}

Grid Grid::from_breaks(std::vector<double> breaks) {
    if (breaks.size() < 2 || breaks.front() != 0.0 || breaks.back() != 1.0)
        throw precondition_error("Grid::from_breaks: breaks must run from 0 to 1");
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
        if (!(breaks[i] < breaks[i + 1]))
            throw precondition_error("Grid::from_breaks: breaks must be increasing");
    return Grid(std::move(breaks));
}

Grid Grid::bisected() const {
    std::vector<double> b;
    for (std::size_t i = 0; i + 1 < breaks_.size(); ++i) {
        b.push_back(breaks_[i]);
        b.push_back(0.5 * (breaks_[i] + breaks_[i + 1]));
    }
    return Grid(finalize_breaks(std::move(b)));
}

double Grid::max_width() const {
    double w = 0.0;
    for (int i = 0; i < size(); ++i) w = std::max(w, cell_width(i));
    return w;
}

int Grid::cell_of(double x) const {
    double y = wrap(x);
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), y);
    int i = static_cast<int>(it - breaks_.begin()) - 1;
    return std::clamp(i, 0, size() - 1);
}

bool Grid::same_as(const Grid& other) const {
    if (breaks_.size() != other.breaks_.size()) return false;
    for (std::size_t i = 0; i < breaks_.size(); ++i)
        if (std::fabs(breaks_[i] - other.breaks_[i]) > 1e-14) return false;
    return true;
}

double Density::mass() const {
    double s = 0.0;
    for (int i = 0; i < grid.size(); ++i) s += values[i] * grid.cell_width(i);
    return s;
}

void Density::normalize() {
    double m = mass();
    if (!(m > 0.0)) throw precondition_error("Density::normalize: zero mass");
    values /= m;
}

Eigen::ArrayXd Density::cell_masses() const {
    Eigen::ArrayXd m(grid.size());
    for (int i = 0; i < grid.size(); ++i) m[i] = values[i] * grid.cell_width(i);
    return m;
}

Density Density::uniform(const Grid& g) {
    Density d;
    d.grid = g;
    d.values = Eigen::ArrayXd::Ones(g.size());
    return d;
}

Density Density::from_masses(const Grid& g, const Eigen::ArrayXd& masses) {
    Density d;
    d.grid = g;
    d.values = masses;
    for (int i = 0; i < g.size(); ++i) d.values[i] /= g.cell_width(i);
    return d;
}

double UlamMatrix::max_row_sum_error() const {
    double worst = 0.0;
    for (int i = 0; i < P.rows(); ++i) {
        double s = 0.0;
        for (SparseRowMatrix::InnerIterator it(P, i); it; ++it) s += it.value();
        worst = std::max(worst, std::fabs(s - 1.0));
    }
    return worst;
}

UlamMatrix ulam_build(const MapSpec& f, const Grid& grid) {
    const int N = grid.size();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(N) * (f.degree() + 4));
    const auto& breaks = grid.breaks();

    for (const auto& seg : f.segments()) {
        double Wlo = seg.lift(seg.lo), Whi = seg.lift(seg.hi);
        // all source-side cut points: grid breaks inside the segment plus
        // preimages of every grid break lift-representative in (Wlo, Whi)
        std::vector<double> cuts = {seg.lo, seg.hi};
        for (double b : breaks) {
            if (b >= 1.0) continue;
            if (b > seg.lo && b < seg.hi) cuts.push_back(b);
            for (double w = b + std::ceil(Wlo - b); w <= Whi; w += 1.0) {
                if (w <= Wlo || w >= Whi) continue;
                cuts.push_back(f.lift_inverse(w));
            }
        }
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
            double u0 = cuts[k], u1 = cuts[k + 1];
            if (u1 - u0 < 1e-15) continue;
            double mid = 0.5 * (u0 + u1);
            int i = grid.cell_of(mid);
            int j = grid.cell_of(f.eval(mid));
            trips.emplace_back(i, j, (u1 - u0) / grid.cell_width(i));
        }
    }
    UlamMatrix M;
    M.grid = grid;
    M.eps = 0.0;
    M.P.resize(N, N);
    M.P.setFromTriplets(trips.begin(), trips.end());
    M.P.makeCompressed();
    return M;
}

namespace {

inline double ramp2(double u) { return u > 0.0 ? 0.5 * u * u : 0.0; }

// integral over [c, d] of the trapezoid (indicator[a,b] * indicator[-eps,eps])
inline double trapezoid_mass(double a, double b, double eps, double c, double d) {
    auto Q = [&](double u) {
        return ramp2(u - (a - eps)) - ramp2(u - (a + eps)) - ramp2(u - (b - eps)) +
               ramp2(u - (b + eps));
    };
    return Q(d) - Q(c);
}

}  // namespace

UlamMatrix smoothing_matrix(const Grid& grid, double eps) {
    if (!(eps > 0.0)) throw precondition_error("smoothing_matrix: eps > 0");
    const int N = grid.size();
    std::vector<Eigen::Triplet<double>> trips;
    for (int i = 0; i < N; ++i) {
        double a = grid.cell_lo(i), b = grid.cell_hi(i);
        double lo = a - eps, hi = b + eps;  // support of the smoothed cell
        // walk target cells as lift copies, starting at the copy containing lo
        int jj = grid.cell_of(lo);
        double pos = grid.cell_lo(jj) + std::floor(lo - grid.cell_lo(jj));
        const double norm = 2.0 * eps * grid.cell_width(i);
        while (pos < hi) {
            double m = trapezoid_mass(a, b, eps, pos, pos + grid.cell_width(jj));
            if (m > 0.0) trips.emplace_back(i, jj, m / norm);
            pos += grid.cell_width(jj);
            jj = (jj + 1) % N;
        }
    }
    UlamMatrix S;
    S.grid = grid;
    S.eps = eps;
    S.P.resize(N, N);
    S.P.setFromTriplets(trips.begin(), trips.end());
    S.P.makeCompressed();
    return S;
}

UlamMatrix smooth_uniform(const UlamMatrix& M, double eps) {
    if (!(eps > 0.0)) throw precondition_error("smooth_uniform: eps > 0");
    UlamMatrix S = smoothing_matrix(M.grid, eps);
    UlamMatrix out;
    out.grid = M.grid;
    out.eps = eps;
    out.P = M.P * S.P;
    out.P.makeCompressed();
    return out;
}

Density smooth_uniform(const Density& d, double eps) {
    if (!(eps > 0.0)) throw precondition_error("smooth_uniform: eps > 0");
    UlamMatrix S = smoothing_matrix(d.grid, eps);
    Eigen::RowVectorXd mu = d.cell_masses().matrix().transpose();
    Eigen::RowVectorXd out = mu * S.P;
    return Density::from_masses(d.grid, out.transpose().array());
}

UlamMatrix annealed_build(const MapSpec& f, const Grid& grid, double eps) {
    UlamMatrix M = ulam_build(f, grid);
    if (eps == 0.0) return M;
    return smooth_uniform(M, eps);
}

StationaryResult stationary(const UlamMatrix& M, double tol, long max_iters,
                            const Density* warm_start) {
    const int N = M.grid.size();
    Eigen::RowVectorXd mu(N);
    if (warm_start != nullptr) {
        if (!warm_start->grid.same_as(M.grid))
            throw grid_mismatch_error("stationary: warm start on a different grid");
        mu = warm_start->cell_masses().matrix().transpose();
    } else {
        for (int i = 0; i < N; ++i) mu[i] = M.grid.cell_width(i);
    }
    mu /= mu.sum();
    double res = 0.0;
    for (long it = 1; it <= max_iters; ++it) {
        Eigen::RowVectorXd next = mu * M.P;
        next /= next.sum();
        res = (next - mu).cwiseAbs().sum();
        mu = next;
        if (res <= tol) {
            StationaryResult r;
            r.density = Density::from_masses(M.grid, mu.transpose().array());
            r.iterations = it;
            r.residual = res;
            return r;
        }
    }
    throw convergence_error(max_iters, res, "stationary: power iteration did not converge");
}

Density invariant_density(const MapSpec& f, const Grid& grid, double tol) {
    return stationary(ulam_build(f, grid), tol).density;
}

double l1_distance(const Density& a, const Density& b) {
    if (!a.grid.same_as(b.grid)) throw grid_mismatch_error("l1_distance: different grids");
    double s = 0.0;
    for (int i = 0; i < a.grid.size(); ++i)
        s += std::fabs(a.values[i] - b.values[i]) * a.grid.cell_width(i);
    return s;
}

double tv_distance(const Density& a, const Density& b) { return 0.5 * l1_distance(a, b); }

PushforwardResult pushforward_density(const MapSpec& f, const Arc& J, long n,
                                      const NoiseSeq& ts, const Grid& grid, bool exact,
                                      long mc_samples, std::uint64_t seed,
                                      std::uint64_t stream) {
    if (static_cast<long>(ts.size()) < n)
        throw noise_length_error("pushforward_density: noise shorter than n");
    if (!(J.len > 0.0)) throw precondition_error("pushforward_density: empty interval");
    const int N = grid.size();
    Eigen::ArrayXd masses = Eigen::ArrayXd::Zero(N);

    if (exact) {
        // forward lift composition F and its inverse chain
        auto chain_fwd = [&](double x) {
            double y = x;
            for (long j = 0; j < n; ++j) y = f.lift(y) + ts[j];
            return y;
        };
        auto chain_inv = [&](double w) {
            double y = w;
            for (long j = n - 1; j >= 0; --j) y = f.lift_inverse(y - ts[j]);
            return y;
        };
        double Flo = chain_fwd(J.lo), Fhi = chain_fwd(J.lo + J.len);
        double span = Fhi - Flo;
        if (span * N > 4.0e6)
            throw branch_explosion_error(
                "pushforward_density: exact mode infeasible (too many branch strings)");
        // ascending lift representatives of all grid breaks inside (Flo, Fhi)
        std::vector<double> ws;
        for (double b : grid.breaks()) {
            if (b >= 1.0) continue;
            for (double w = b + std::ceil(Flo - b); w < Fhi; w += 1.0)
                if (w > Flo) ws.push_back(w);
        }
        std::sort(ws.begin(), ws.end());
        double u_prev = J.lo, w_prev = Flo;
        for (double w : ws) {
            double u = chain_inv(w);
            masses[grid.cell_of(wrap(0.5 * (w_prev + w)))] += u - u_prev;
            u_prev = u;
            w_prev = w;
        }
        masses[grid.cell_of(wrap(0.5 * (w_prev + Fhi)))] += (J.lo + J.len) - u_prev;
        masses /= J.len;
        PushforwardResult out;
        out.density = Density::from_masses(grid, masses);
        out.exact = true;
        return out;
    }

    CounterRng rng(seed, stream);
    for (long s = 0; s < mc_samples; ++s) {
        double x = wrap(J.lo + J.len * rng.next_double());
        for (long j = 0; j < n; ++j) x = step(f, x, ts[j]);
        masses[grid.cell_of(x)] += 1.0;
    }
    masses /= static_cast<double>(mc_samples);
    PushforwardResult out;
    out.density = Density::from_masses(grid, masses);
    out.exact = false;
    out.samples = mc_samples;
    double worst = 0.0;
    for (int i = 0; i < N; ++i) {
        double p = masses[i];
        double se = std::sqrt(std::max(p * (1.0 - p), 1.0 / mc_samples) / mc_samples);
        worst = std::max(worst, se / grid.cell_width(i));
    }
    out.max_stderr = worst;
    return out;
}

}  // namespace rdslab
