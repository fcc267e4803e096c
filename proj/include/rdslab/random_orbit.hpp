#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rdslab/circle.hpp"
#include "rdslab/circle_map.hpp"
#include "rdslab/errors.hpp"
#include "rdslab/rng.hpp"

namespace rdslab {

/// Additive uniform noise of amplitude epsilon on [-eps, eps].
struct NoiseModel {
    double epsilon;
    explicit NoiseModel(double eps) : epsilon(eps) {
        if (!(eps >= 0.0 && eps <= 0.25))
            throw precondition_error("NoiseModel: epsilon must lie in [0, 0.25]");
    }
};

/// A finite noise realization t_0, ..., t_{n-1} with |t_k| <= epsilon.
class NoiseSeq {
public:
    NoiseSeq() = default;
    NoiseSeq(std::vector<double> values, double epsilon);

    std::size_t size() const { return values_.size(); }
    double epsilon() const { return epsilon_; }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const { return values_; }

    /// sigma^i: drop the first i entries.
    NoiseSeq shifted(std::size_t i) const;

    /// Little-endian binary format: u64 count, f64 epsilon, count f64 values.
    void save(const std::string& path) const;
    static NoiseSeq load(const std::string& path);

private:
    std::vector<double> values_;
    double epsilon_ = 0.0;
};

/// i.i.d. uniform noise on [-eps, eps]; identical (seed, stream, n) give an
/// identical sequence.
NoiseSeq sample_noise(const NoiseModel& model, std::size_t n, std::uint64_t seed,
                      std::uint64_t stream);

/// One random step f_t(x) = f(x) + t (mod 1).
inline double step(const MapSpec& f, double x, double t) { return wrap(f.lift(wrap(x)) + t); }

/// A realized orbit with its one-sided derivative cocycle.
struct OrbitRecord {
    std::vector<double> points;             // x_0, ..., x_n
    std::vector<double> step_derivs_right;  // Df(x_j^+), j < n
    std::vector<double> step_derivs_left;   // Df(x_j^-), j < n
    std::vector<double> log_cocycle;        // prefix sums of log Df(x_j^+), size n+1
    bool hits_partition = false;            // some x_j landed exactly on P

    std::size_t steps() const { return points.size() - 1; }
    /// Df_t^m(x_j^+) ... Df over [j, j+m), from the stored right-sided cocycle.
    double cocycle(std::size_t j, std::size_t m) const;
    double log_cocycle_range(std::size_t j, std::size_t m) const {
        return log_cocycle[j + m] - log_cocycle[j];
    }
};

/// Drive x0 with the full noise sequence, recording the derivative cocycle.
OrbitRecord orbit(const MapSpec& f, double x0, const NoiseSeq& ts);

}  // namespace rdslab
