#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <functional>

#include "rdslab/random_orbit.hpp"

using namespace rdslab;

TEST_CASE("noisy step") {
    auto pm = MapSpec::pomeau_manneville(0.5);
    CHECK(step(pm, 0.25, 0.01) == doctest::Approx(0.385).epsilon(1e-14));
    CHECK(step(pm, 0.33, 0.0) == pm.eval(0.33));
    // amplitude discipline lives on the sequence type
    CHECK_THROWS_AS(NoiseSeq({0.3}, 0.25), precondition_error);
    CHECK_THROWS_AS(NoiseModel(0.3), precondition_error);
}

TEST_CASE("orbit records points and cocycle") {
    auto dbl = MapSpec::doubling();
    NoiseSeq zero({0.0, 0.0, 0.0}, 0.0);
    auto rec = orbit(dbl, 0.1, zero);
    REQUIRE(rec.points.size() == 4);
    CHECK(rec.points[1] == doctest::Approx(0.2));
    CHECK(rec.points[2] == doctest::Approx(0.4));
    CHECK(rec.points[3] == doctest::Approx(0.8));
    CHECK(rec.cocycle(0, 3) == doctest::Approx(8.0));
    CHECK(std::exp(rec.log_cocycle_range(0, 3)) == doctest::Approx(8.0));

    auto pm = MapSpec::pomeau_manneville(0.5);
    NoiseSeq zero2({0.0, 0.0}, 0.0);
    auto rec2 = orbit(pm, 0.25, zero2);
    CHECK(rec2.points[1] == doctest::Approx(0.375).epsilon(1e-14));
    CHECK(rec2.points[2] ==
          doctest::Approx(0.375 + std::pow(0.375, 1.5)).epsilon(1e-14));

    NoiseSeq empty({}, 0.0);
    auto rec3 = orbit(pm, 0.7, empty);
    CHECK(rec3.points.size() == 1);
    CHECK(rec3.cocycle(0, 0) == 1.0);
}

TEST_CASE("noise sampling is reproducible and in range") {
    NoiseModel model(0.01);
    auto empty = sample_noise(model, 0, 1, 0);
    CHECK(empty.size() == 0);

    auto a = sample_noise(model, 100000, 7, 3);
    auto b = sample_noise(model, 100000, 7, 3);
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);

    // mean |t| = eps/2 within 4 standard errors; |t| <= eps always
    const long n = 1000000;
    auto big = sample_noise(model, n, 1, 0);
    double mean_abs = 0.0, max_abs = 0.0;
    for (std::size_t i = 0; i < big.size(); ++i) {
        mean_abs += std::fabs(big[i]);
        max_abs = std::max(max_abs, std::fabs(big[i]));
    }
    mean_abs /= n;
    double se = model.epsilon / std::sqrt(12.0 * n);
    CHECK(std::fabs(mean_abs - model.epsilon / 2.0) < 4.0 * se);
    CHECK(max_abs <= model.epsilon);

    // distinct streams differ
    auto c = sample_noise(model, 16, 7, 4);
    bool all_equal = true;
    for (std::size_t i = 0; i < c.size(); ++i)
        if (c[i] != a[i]) all_equal = false;
    CHECK(!all_equal);
}

TEST_CASE("shift and orbit consistency") {
    NoiseSeq ts({0.01, -0.02, 0.005}, 0.05);
    auto s1 = ts.shifted(1);
    REQUIRE(s1.size() == 2);
    CHECK(s1[0] == -0.02);
    CHECK(s1[1] == 0.005);
    auto s0 = ts.shifted(0);
    CHECK(s0.size() == 3);
    CHECK_THROWS_AS(ts.shifted(7), noise_length_error);

    // orbit(f, x, ts).points[i..] equals the orbit of the i-th point under
    // the shifted noise, recomputed independently
    auto lsv = MapSpec::lsv(0.5);
    auto full = orbit(lsv, 0.37, ts);
    for (std::size_t i = 0; i <= ts.size(); ++i) {
        auto tail = orbit(lsv, full.points[i], ts.shifted(i));
        for (std::size_t j = 0; i + j <= ts.size(); ++j)
            CHECK(full.points[i + j] == doctest::Approx(tail.points[j]).epsilon(1e-15));
    }
}

TEST_CASE("cocycle chain rule") {
    auto pm = MapSpec::pomeau_manneville(0.5);
    NoiseModel model(0.01);
    CounterRng pick(99, 0);
    for (int trial = 0; trial < 200; ++trial) {
        long m = 1 + static_cast<long>(pick.next_double() * 20);
        long n = 1 + static_cast<long>(pick.next_double() * 20);
        double x = pick.next_double();
        auto ts = sample_noise(model, m + n, 1234, static_cast<std::uint64_t>(trial));
        auto rec = orbit(pm, x, ts);
        double lhs = rec.log_cocycle_range(0, m + n);
        double rhs = rec.log_cocycle_range(n, m) + rec.log_cocycle_range(0, n);
        CHECK(std::fabs(lhs - rhs) <= 1e-10 * std::max(1.0, std::fabs(lhs)));
    }
}

TEST_CASE("preimage count of the n-step map is degree^n") {
    auto pm = MapSpec::pomeau_manneville(0.5);
    NoiseSeq ts = sample_noise(NoiseModel(0.01), 8, 5, 0);
    // branchwise pullback of a point through the noisy composition
    std::function<long(double, long)> count = [&](double y, long depth) -> long {
        if (depth == 0) return 1;
        long total = 0;
        for (double x : pm.preimages(wrap(y - ts[depth - 1])))
            total += count(x, depth - 1);
        return total;
    };
    CHECK(count(0.3777, 8) == 256);

    auto dbl = MapSpec::doubling();
    std::function<long(double, long)> count2 = [&](double y, long depth) -> long {
        if (depth == 0) return 1;
        long total = 0;
        for (double x : dbl.preimages(wrap(y - ts[depth - 1])))
            total += count2(x, depth - 1);
        return total;
    };
    CHECK(count2(0.123, 8) == 256);
}

TEST_CASE("noise sequence binary round trip") {
    const char* path = "noise_tmp.bin";
    auto ts = sample_noise(NoiseModel(0.02), 1000, 11, 2);
    ts.save(path);
    auto back = NoiseSeq::load(path);
    REQUIRE(back.size() == ts.size());
    CHECK(back.epsilon() == ts.epsilon());
    for (std::size_t i = 0; i < ts.size(); ++i) REQUIRE(back[i] == ts[i]);
    std::remove(path);
}

TEST_CASE("orbit flags exact partition hits") {
    auto lsv = MapSpec::lsv(0.5);
    NoiseSeq zero({0.0}, 0.0);
    auto rec = orbit(lsv, 0.5, zero);  // 0.5 is a partition point
    CHECK(rec.hits_partition);
    auto rec2 = orbit(lsv, 0.3, zero);
    CHECK(!rec2.hits_partition);
}
