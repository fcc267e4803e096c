#include <doctest.h>

#include <cmath>
#include <vector>

#include "rdslab/return_analysis.hpp"
#include "rdslab/rng.hpp"

using namespace rdslab;

namespace {

NeighborhoodI pm_I(const MapSpec& f, double eps, double radius = 0.1) {
    return build_I(f, eps, std::vector<double>(f.fixed_points().size(), radius));
}

// straight-line re-implementation of the essential-return definition: every
// quantity recomputed from scratch with explicit shifts
std::vector<long> essential_returns_reference(const MapSpec& f, const NeighborhoodI& I,
                                              double x, const NoiseSeq& ts, int k_max,
                                              long horizon) {
    std::vector<long> rs;
    auto E0 = escape_time(f, I, x, ts, horizon);
    if (E0.censored) return rs;
    long gate = E0.value;  // r_k >= previous return + escape of its point
    while (static_cast<int>(rs.size()) < k_max) {
        // first s >= gate with f_t^s(x) in I, recomputed from the origin
        long r = -1;
        double y = wrap(x);
        double hit = 0.0;
        for (long s = 0; s <= horizon; ++s) {
            if (s >= gate && I.contains(y)) {
                r = s;
                hit = y;
                break;
            }
            if (s == horizon) break;
            y = step(f, y, ts[s]);
        }
        if (r < 0) break;
        rs.push_back(r);
        auto Ek = escape_time(f, I, hit, ts.shifted(r), horizon - r);
        if (Ek.censored) break;
        gate = r + Ek.value;
    }
    return rs;
}

}  // namespace

TEST_CASE("neighborhood construction validates the four conditions") {
    auto pm = MapSpec::pomeau_manneville(0.5);
    auto I = pm_I(pm, 1e-3);
    CHECK(I.conditions()[0]);
    CHECK(I.conditions()[3]);
    CHECK(I.contains(0.05));
    CHECK(I.contains(0.95));
    CHECK(!I.contains(0.5));

    // half the circle: injectivity fails for a degree-2 map
    CHECK_THROWS_AS(build_I(pm, 1e-3, {0.5}), neighborhood_error);
    try {
        build_I(pm, 1e-3, {0.5});
    } catch (const neighborhood_error& e) {
        CHECK(e.condition == 2);
    }

    auto dbl = MapSpec::doubling();
    auto Id = pm_I(dbl, 1e-3);
    // no neutral side anywhere: I^par is empty, both sides repelling
    CHECK(!in_parabolic_side(dbl, Id, 0.05));
    CHECK(!in_parabolic_side(dbl, Id, 0.95));
    // PM: right side parabolic, left side repelling
    CHECK(in_parabolic_side(pm, I, 0.05));
    CHECK(!in_parabolic_side(pm, I, 0.95));
}

TEST_CASE("displacement-thin core I_delta") {
    auto pm = MapSpec::pomeau_manneville(0.5);
    auto I = pm_I(pm, 1e-3);
    CHECK(in_I_delta(pm, I, 0.001, 1e-3));  // x^1.5 = 3e-5 <= 1e-3
    CHECK(!in_I_delta(pm, I, 0.09, 1e-3));  // displacement 0.027
    CHECK(!in_I_delta(pm, I, 0.5, 1.0));    // outside I
}

TEST_CASE("scale constants") {
    auto pm = MapSpec::pomeau_manneville(0.5);
    auto I = pm_I(pm, 1e-3);
    auto c = Constants::defaults(pm, I);
    c.validate(pm.alpha());
    CHECK(c.tau_star > 0.005);
    CHECK(c.tau_star < 0.05);
    CHECK(c.lambda_star > 1.2);
    CHECK(c.lambda_star < 1.5);

    auto dbl = MapSpec::doubling();
    auto Id = pm_I(dbl, 1e-3);
    auto cd = Constants::defaults(dbl, Id);
    CHECK(cd.lambda_star == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(Constants::varphi(std::exp(-1.0)) == doctest::Approx(1.0));
}

TEST_CASE("escape times") {
    auto pm = MapSpec::pomeau_manneville(0.5);
    auto I = pm_I(pm, 0.0);
    NoiseSeq zeros(std::vector<double>(200, 0.0), 0.0);

    CHECK(escape_time(pm, I, 0.5, zeros, 200).value == 0);  // outside I
    auto E = escape_time(pm, I, 0.01, zeros, 200);
    CHECK(!E.censored);
    CHECK(E.value >= 11);
    CHECK(E.value <= 17);
    auto Efix = escape_time(pm, I, 0.0, zeros, 200);
    CHECK(Efix.censored);  // the fixed point never escapes
}

TEST_CASE("essential returns match the reference implementation") {
    auto pm = MapSpec::pomeau_manneville(0.5);
    auto I = pm_I(pm, 1e-3);
    const long horizon = 4000;
    for (std::uint64_t s = 0; s < 10; ++s) {
        auto ts = sample_noise(NoiseModel(1e-3), horizon, 2024, s);
        CounterRng rng(55, s);
        double x = rng.next_double();
        auto tr = essential_returns(pm, I, x, ts, 8, horizon);
        auto ref = essential_returns_reference(pm, I, x, ts, 8, horizon);
        REQUIRE(tr.essential_returns.size() == ref.size());
        for (std::size_t k = 0; k < ref.size(); ++k)
            CHECK(tr.essential_returns[k] == ref[k]);
    }
}

TEST_CASE("essential return edge cases") {
    auto dbl = MapSpec::doubling();
    auto I = pm_I(dbl, 0.0);
    NoiseSeq zeros(std::vector<double>(8, 0.0), 0.0);
    // x outside I whose image lands in I: E = 0 and r_1 = 1
    double x = 0.52;  // f(x) = 0.04 in I
    auto tr = essential_returns(dbl, I, x, zeros, 3, 8);
    CHECK(tr.escape.value == 0);
    REQUIRE(!tr.essential_returns.empty());
    CHECK(tr.essential_returns[0] == 1);

    // never returning within the horizon: censored with no returns
    auto I_small = build_I(dbl, 0.0, {0.01});
    auto tr2 = essential_returns(dbl, I_small, 0.3, zeros, 3, 3);
    CHECK(tr2.escape.value == 0);
    CHECK(tr2.essential_returns.empty());
    CHECK(tr2.censored);
}

TEST_CASE("pullback interval") {
    auto dbl = MapSpec::doubling();
    NoiseSeq zeros(std::vector<double>(8, 0.0), 0.0);
    auto p0 = pullback_U(dbl, 0.37, zeros, 0, 0.1);
    CHECK(p0.U.len == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(p0.U.contains(0.37));

    auto p3 = pullback_U(dbl, 0.37, zeros, 3, 0.1);
    CHECK(p3.U.len == doctest::Approx(0.025).epsilon(1e-12));
    CHECK(circle_dist(p3.U.midpoint(), 0.37) < 1e-12);
    CHECK(p3.endpoint_error <= 1e-10);

    auto pm = MapSpec::pomeau_manneville(0.5);
    auto ts = sample_noise(NoiseModel(1e-3), 5, 7, 0);
    auto p5 = pullback_U(pm, 0.21, ts, 5, 0.05);
    CHECK(p5.endpoint_error <= 1e-10);
    CHECK(p5.U.contains(0.21));
}

TEST_CASE("expansion profile on an affine map") {
    auto dbl = MapSpec::doubling();
    NoiseSeq zeros(std::vector<double>(3, 0.0), 0.0);
    auto prof = expansion_profile(dbl, 0.37, zeros, 3, 0.1, 33);
    CHECK(prof.lambda == doctest::Approx(8.0).epsilon(1e-12));
    double a = 0.5;
    double expected = std::pow(8.0, -a) + std::pow(4.0, -a) + std::pow(2.0, -a);
    CHECK(prof.ldist == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("single-step distortion budget is the expansion bound") {
    auto pm = MapSpec::pomeau_manneville(0.5);
    auto ts = sample_noise(NoiseModel(1e-3), 1, 9, 0);
    auto prof = expansion_profile(pm, 0.33, ts, 1, 0.05, 33);
    CHECK(prof.ldist == doctest::Approx(std::pow(prof.lambda, -0.5)).epsilon(1e-10));
}

TEST_CASE("monotone probe refinement") {
    auto pm = MapSpec::pomeau_manneville(0.5);
    CounterRng rng(31, 0);
    for (int trial = 0; trial < 50; ++trial) {
        auto ts = sample_noise(NoiseModel(1e-3), 24, 100 + trial, 0);
        double x = rng.next_double();
        long n = 1 + static_cast<long>(rng.next_double() * 20);
        auto lo = expansion_profile(pm, x, ts, n, 0.02, 17);
        auto hi = expansion_profile(pm, x, ts, n, 0.02, 33);
        CHECK(hi.ldist >= lo.ldist - 1e-14);
        CHECK(hi.lambda <= lo.lambda + 1e-14);
    }
}

TEST_CASE("K-scale expansion time") {
    auto dbl = MapSpec::doubling();
    auto I = pm_I(dbl, 0.0);
    auto c = Constants::defaults(dbl, I);
    NoiseSeq zeros(std::vector<double>(64, 0.0), 0.0);
    // outside I the escape time is 0 and the first step already meets the
    // budget K >= 2^{-alpha}
    auto mk = m_scale_expansion_time(dbl, I, c, 0.3, zeros, std::pow(2.0, -0.5), 64);
    CHECK(!mk.censored);
    CHECK(mk.value == 1);
}

TEST_CASE("omega-hat membership") {
    NoiseSeq zeros(std::vector<double>(100, 0.0), 1e-2);
    for (long n : {1L, 10L, 100L}) CHECK(omega_hat_member(zeros, n));
    std::vector<double> full(100, 1e-2);
    NoiseSeq maxed(full, 1e-2);
    for (long n : {1L, 10L, 100L}) CHECK(!omega_hat_member(maxed, n));
    CHECK_THROWS_AS(omega_hat_member(zeros, 200), noise_length_error);
    // typical i.i.d. noise fails the small-sum test at large n
    for (std::uint64_t s = 0; s < 20; ++s) {
        auto ts = sample_noise(NoiseModel(0.05), 10000, 77, s);
        CHECK(!omega_hat_member(ts, 10000));
    }
}

TEST_CASE("BAD membership") {
    double eps = 0.05, alpha = 0.5;
    long need = 4000;
    NoiseSeq zeros(std::vector<double>(need, 0.0), eps);
    auto v = bad_member(zeros, 1.0, eps, alpha);
    CHECK(v.member);  // every (i, n) pair qualifies on all-zero noise
    std::vector<double> full(need, eps);
    NoiseSeq maxed(full, eps);
    CHECK(!bad_member(maxed, 1.0, eps, alpha).member);
    NoiseSeq tiny(std::vector<double>(3, 0.0), eps);
    CHECK_THROWS_AS(bad_member(tiny, 1.0, eps, alpha), noise_length_error);
}

TEST_CASE("m-tilde rescaling") {
    CHECK(m_tilde(0, 0.1, 0.5) == 1);
    double eps = std::exp(-1.0);  // phi(eps) = 1
    for (long m : {1L, 5L, 10L, 100L})
        CHECK(m_tilde(m, eps, 0.5) ==
              static_cast<long>(std::floor(m * std::exp(-0.5))) + 1);
    CounterRng rng(5, 0);
    for (int i = 0; i < 200; ++i) {
        long m = static_cast<long>(rng.next_double() * 100000);
        double e = 0.001 + 0.2 * rng.next_double();
        double a = 0.2 + 0.7 * rng.next_double();
        CHECK(m_tilde(m, e, a) <= m * std::pow(e, a) / Constants::varphi(e) + 1.0 + 1e-9);
    }
}

TEST_CASE("special returns") {
    auto pm = MapSpec::pomeau_manneville(0.5);
    double eps = 1e-3;
    auto I = pm_I(pm, eps);
    long horizon = 3000;

    // alternating max-amplitude noise is never BAD, so R_0 = r_1
    std::vector<double> alt(2 * horizon);
    for (long i = 0; i < 2 * horizon; ++i) alt[i] = (i % 2 == 0) ? eps : -eps;
    NoiseSeq ts(alt, eps);
    CounterRng rng(3, 0);
    double x = rng.next_double();
    auto sp = special_returns(pm, I, x, ts, eps, 3, horizon);
    auto ess = essential_returns(pm, I, x, ts, 3, horizon);
    REQUIRE(!sp.special_durations.empty());
    REQUIRE(!ess.essential_returns.empty());
    CHECK(sp.special_durations[0] == ess.essential_returns[0]);

    // all-zero noise: every window is BAD, no special return is ever found
    NoiseSeq zeros(std::vector<double>(20000, 0.0), eps);
    auto sp0 = special_returns(pm, I, 0.7, zeros, eps, 3, 1000);
    CHECK(sp0.special_durations.empty());
    CHECK(sp0.censored);
}

TEST_CASE("special returns match a definition-chasing reference") {
    auto pm = MapSpec::pomeau_manneville(0.5);
    double eps = 1e-3, alpha = 0.5;
    auto I = pm_I(pm, eps);
    const long horizon = 2500;
    for (std::uint64_t s = 0; s < 5; ++s) {
        auto ts = sample_noise(NoiseModel(eps), 4 * horizon + 8000, 909, s);
        CounterRng rng(44, s);
        double x = rng.next_double();
        auto sp = special_returns(pm, I, x, ts, eps, 2, horizon);

        // reference: walk essential returns of the current point explicitly
        std::vector<long> expected;
        double g = x;
        long base = 0;
        while (static_cast<int>(expected.size()) < 2) {
            auto tail = ts.shifted(base);
            auto ess = essential_returns(pm, I, g, tail, 400, horizon - base);
            long found = -1;
            for (std::size_t j = 0; j < ess.essential_returns.size(); ++j) {
                long r = ess.essential_returns[j];
                long rt = m_tilde(r, eps, alpha);
                long nh = static_cast<long>(std::ceil(16.0 * rt * std::pow(eps, -alpha)));
                if (!bad_member(tail, static_cast<double>(rt), eps, alpha, nh).member) {
                    found = r;
                    g = ess.return_points[j];
                    break;
                }
            }
            if (found < 0) break;
            expected.push_back(found);
            base += found;
        }
        REQUIRE(sp.special_durations.size() == expected.size());
        for (std::size_t k = 0; k < expected.size(); ++k)
            CHECK(sp.special_durations[k] == expected[k]);
    }
}

TEST_CASE("pliss selection") {
    CHECK(pliss_select({3, 1, 0, 4, 1}, 2.0) == 2);
    CHECK(pliss_select({1, 1, 1, 1}, 1.0) == 3);  // all a_i = C picks k = n
    CHECK(pliss_select({0}, 1.0) == 0);
    CHECK_THROWS_AS(pliss_select({3, 3, 3}, 1.0), precondition_error);

    // brute-force verification: returned k is valid and maximal
    CounterRng rng(606, 0);
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t n = 1 + static_cast<std::size_t>(rng.next_double() * 20);
        double C = 0.1 + 2.0 * rng.next_double();
        std::vector<double> a(n);
        double sum = 0.0;
        for (auto& v : a) {
            v = rng.next_double() * 2.0 * C;
            sum += v;
        }
        if (sum > n * C) {
            double scale = 0.99 * n * C / sum;
            for (auto& v : a) v *= scale;
        }
        std::size_t k = pliss_select(a, C);
        auto valid = [&](std::size_t kk) {
            double run = 0.0;
            for (std::size_t j = kk + 1; j-- > 0;) {
                run += a[j];
                if (run > (kk - j + 1) * C + 1e-9) return false;
            }
            return true;
        };
        CHECK(valid(k));
        for (std::size_t kk = k + 1; kk < n; ++kk) CHECK(!valid(kk));
    }
}

TEST_CASE("m-hat inducing time") {
    auto dbl = MapSpec::doubling();
    auto I = pm_I(dbl, 0.0);
    auto c = Constants::defaults(dbl, I);
    NoiseSeq zeros(std::vector<double>(5, 0.0), 0.0);
    // orbit of 0.3 never comes near the fixed point within 5 steps
    auto mh = m_hat(dbl, I, c, 0.3, zeros, 1e-4, 5);
    CHECK(mh.censored);

    auto pm = MapSpec::pomeau_manneville(0.5);
    double eps = 1e-3;
    auto Ipm = pm_I(pm, eps);
    auto cpm = Constants::defaults(pm, Ipm);
    long horizon = 500;
    int qualified = 0;
    for (std::uint64_t s = 0; s < 6; ++s) {
        auto ts = sample_noise(NoiseModel(eps), horizon, 42, s);
        CounterRng rng(8, s);
        double x = rng.next_double();
        auto mh2 = m_hat(pm, Ipm, cpm, x, ts, eps, horizon);
        if (mh2.censored) continue;
        ++qualified;
        auto E = escape_time(pm, Ipm, x, ts, horizon);
        CHECK(mh2.value >= std::max(E.value, 1L));
        // recheck the proximity condition at the returned time
        double y = x;
        for (long j = 0; j < mh2.value; ++j) y = step(pm, y, ts[j]);
        CHECK(pm.dist_to_fixed_points(y) < std::pow(eps, 2.0 * cpm.gamma));
    }
    CHECK(qualified > 0);
}

TEST_CASE("nice set checks") {
    auto dbl = MapSpec::doubling();
    // the real orbit of the boundary cycles outside V; no certain violation is
    // ever recorded, and the certification depth reflects the 2^n error growth
    auto rep = nice_set_check(dbl, 0.0, 0.1, 10000, 1, 1);
    CHECK(rep.clean());
    CHECK(rep.certified_horizon >= 10);
    CHECK(rep.certified_horizon < 10000);

    auto pm = MapSpec::pomeau_manneville(0.5);
    auto rep2 = nice_set_check(pm, 0.0, 0.4, 100, 1, 1);
    CHECK(!rep2.clean());
    CHECK(rep2.violations[0].n >= 1);
}

TEST_CASE("induced return to a small ball") {
    auto dbl = MapSpec::doubling();
    auto V = NeighborhoodI::around_fixed_points(dbl, 0.1);
    auto I = pm_I(dbl, 0.0);
    auto c = Constants::defaults(dbl, I);
    NoiseSeq zeros(std::vector<double>(64, 0.0), 0.0);
    // f(0.03) = 0.06 is already back inside V with one full doubling
    auto r = induced_return(dbl, V, c, 0.03, zeros, 64);
    CHECK(!r.time.censored);
    CHECK(r.time.value == 1);
    CHECK(r.lambda == doctest::Approx(2.0).epsilon(1e-10));
    // 0.05 leaves V and runs the period-4 cycle 0.2, 0.4, 0.8, 0.6: no return
    // within a horizon short enough to dodge dyadic float collapse
    auto r2 = induced_return(dbl, V, c, 0.05, zeros, 20);
    CHECK(r2.time.censored);
}

TEST_CASE("subadditivity of the distortion budget (sampled)") {
    auto pm = MapSpec::pomeau_manneville(0.5);
    double eps = 1e-3;
    double alpha = 0.5;
    CounterRng rng(17, 0);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        long m = 1 + static_cast<long>(rng.next_double() * 12);
        long n = 1 + static_cast<long>(rng.next_double() * 12);
        double tau = 0.01 + 0.03 * rng.next_double();
        double x = rng.next_double();
        auto ts =
            sample_noise(NoiseModel(eps), m + n, 2222, static_cast<std::uint64_t>(trial));
        auto whole = expansion_profile(pm, x, ts, m + n, tau, 33);
        double fnx = x;
        for (long j = 0; j < n; ++j) fnx = step(pm, fnx, ts[j]);
        auto head = expansion_profile(pm, fnx, ts.shifted(n), m, tau, 33);
        auto tail_prof = expansion_profile(pm, x, ts, n, tau, 33);
        double bound = head.ldist + std::pow(head.lambda, -alpha) * tail_prof.ldist;
        CHECK(whole.ldist <= 1.05 * bound);
        ++checked;
    }
    CHECK(checked == 200);
}

TEST_CASE("escape expansion lower bound (sampled)") {
    auto pm = MapSpec::pomeau_manneville(0.5);
    double eps = 1e-3;
    auto I = pm_I(pm, eps);
    auto c = Constants::defaults(pm, I);
    int checked = 0;
    for (std::uint64_t s = 0; s < 200 && checked < 100; ++s) {
        auto ts = sample_noise(NoiseModel(eps), 3000, 31337, s);
        CounterRng rng(1, s);
        double x = wrap(0.1 * (2.0 * rng.next_double() - 1.0));  // inside I
        if (!I.contains(x)) continue;
        auto E = escape_time(pm, I, x, ts, 3000);
        if (E.censored || E.value < 1) continue;
        auto prof = expansion_profile(pm, x, ts, E.value, c.tau_star, 33);
        CHECK(prof.lambda >= c.lambda_star - 1e-9);
        ++checked;
    }
    CHECK(checked == 100);
}

TEST_CASE("escape time is stable across the pullback interval (sampled)") {
    auto pm = MapSpec::pomeau_manneville(0.5);
    double eps = 1e-3;
    auto I = pm_I(pm, eps);
    auto c = Constants::defaults(pm, I);
    int checked = 0;
    for (std::uint64_t s = 0; s < 300 && checked < 100; ++s) {
        auto ts = sample_noise(NoiseModel(eps), 3000, 512, s);
        CounterRng rng(2, s);
        double x = wrap(0.1 * (2.0 * rng.next_double() - 1.0));
        if (!I.contains(x)) continue;
        auto E = escape_time(pm, I, x, ts, 3000);
        if (E.censored || E.value < 1) continue;
        auto prof = pullback_U(pm, x, ts, E.value, c.tau_star);
        for (int i = 0; i <= 32; ++i) {
            double z = prof.U.at(i / 32.0);
            auto Ez = escape_time(pm, I, z, ts, 3000);
            CHECK(!Ez.censored);
            CHECK(std::labs(Ez.value - E.value) <= 1);
        }
        ++checked;
    }
    CHECK(checked == 100);
}
