#include "rdslab/random_orbit.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace rdslab {

NoiseSeq::NoiseSeq(std::vector<double> values, double epsilon)
    : values_(std::move(values)), epsilon_(epsilon) {
    if (!(epsilon >= 0.0))
        throw precondition_error("NoiseSeq: negative epsilon");
    for (double t : values_)
        if (std::fabs(t) > epsilon)
            throw precondition_error("NoiseSeq: |t_k| exceeds epsilon");
}

NoiseSeq NoiseSeq::shifted(std::size_t i) const {
    if (i > values_.size()) throw noise_length_error("shift: index past end of sequence");
    return NoiseSeq(std::vector<double>(values_.begin() + i, values_.end()), epsilon_);
}

void NoiseSeq::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("NoiseSeq::save: cannot open " + path);
    std::uint64_t n = values_.size();
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&epsilon_), sizeof epsilon_);
    out.write(reinterpret_cast<const char*>(values_.data()),
              static_cast<std::streamsize>(n * sizeof(double)));
    if (!out) throw error("NoiseSeq::save: write failed: " + path);
}

NoiseSeq NoiseSeq::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("NoiseSeq::load: cannot open " + path);
    std::uint64_t n = 0;
    double eps = 0.0;
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    in.read(reinterpret_cast<char*>(&eps), sizeof eps);
    std::vector<double> vals(n);
    in.read(reinterpret_cast<char*>(vals.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw error("NoiseSeq::load: truncated file: " + path);
    return NoiseSeq(std::move(vals), eps);
}

NoiseSeq sample_noise(const NoiseModel& model, std::size_t n, std::uint64_t seed,
                      std::uint64_t stream) {
    CounterRng rng(seed, stream);
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i) vals[i] = rng.next_symmetric(model.epsilon);
    return NoiseSeq(std::move(vals), model.epsilon);
}

double OrbitRecord::cocycle(std::size_t j, std::size_t m) const {
    double prod = 1.0;
    for (std::size_t i = j; i < j + m; ++i) prod *= step_derivs_right[i];
    return prod;
}

OrbitRecord orbit(const MapSpec& f, double x0, const NoiseSeq& ts) {
    OrbitRecord rec;
    const std::size_t n = ts.size();
    rec.points.reserve(n + 1);
    rec.step_derivs_right.reserve(n);
    rec.step_derivs_left.reserve(n);
    rec.log_cocycle.reserve(n + 1);
    double x = wrap(x0);
    rec.points.push_back(x);
    rec.log_cocycle.push_back(0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double dr = f.deriv(x, Side::Right);
        double dl = f.deriv(x, Side::Left);
        if (dr != dl) {
            // x sits exactly on a partition point (measure zero, but reachable
            // with dyadic inputs); both one-sided values are kept
            rec.hits_partition = true;
        }
        rec.step_derivs_right.push_back(dr);
        rec.step_derivs_left.push_back(dl);
        rec.log_cocycle.push_back(rec.log_cocycle.back() + std::log(dr));
        x = step(f, x, ts[j]);
        rec.points.push_back(x);
    }
    return rec;
}

}  // namespace rdslab
