#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "microjudge/rng.hpp"

using namespace mj;

TEST_CASE("same seed gives the same stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; i++) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds give different streams") {
    Rng a(1), b(2);
    int same = 0;
    for (int i = 0; i < 64; i++) same += a.next_u64() == b.next_u64();
    CHECK(same == 0);
}

TEST_CASE("derive_seed is deterministic and tag-sensitive") {
    CHECK(derive_seed(7, {1, 2}) == derive_seed(7, {1, 2}));
    CHECK(derive_seed(7, {1, 2}) != derive_seed(7, {2, 1}));
    CHECK(derive_seed(7, {1, 2}) != derive_seed(8, {1, 2}));
    CHECK(derive_seed(7, {1}) != derive_seed(7, {1, 0}));
    CHECK(derive_seed(7, {}) != derive_seed(7, {0}));
}

TEST_CASE("derived streams look independent") {
    // consecutive seeds with the same tag must not collide or correlate
    std::set<std::uint64_t> first_draws;
    for (std::uint64_t s = 0; s < 256; s++) {
        Rng r(derive_seed(s, {0xABCDull}));
        first_draws.insert(r.next_u64());
    }
    CHECK(first_draws.size() == 256);
}

TEST_CASE("uniform01 stays in [0,1) and fills the range") {
    Rng r(3);
    double lo = 1.0, hi = 0.0, sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; i++) {
        double v = r.uniform01();
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
    }
    CHECK(lo < 0.001);
    CHECK(hi > 0.999);
    // mean of n uniforms: sd = 1/sqrt(12 n); allow 4 sigma
    CHECK(std::abs(sum / n - 0.5) < 4.0 / std::sqrt(12.0 * n));
}

TEST_CASE("uniform_int covers [0,n) without bias") {
    Rng r(11);
    const std::uint64_t n = 7;
    const int draws = 70000;
    std::vector<int> hist(n, 0);
    for (int i = 0; i < draws; i++) {
        std::uint64_t v = r.uniform_int(n);
        REQUIRE(v < n);
        hist[v]++;
    }
    // each bucket is binomial(draws, 1/7); 3 sigma band
    double mean = draws / double(n);
    double sd = std::sqrt(draws * (1.0 / n) * (1.0 - 1.0 / n));
    for (std::uint64_t k = 0; k < n; k++) CHECK(std::abs(hist[k] - mean) < 3.0 * sd);
}

TEST_CASE("uniform_int n=1 always returns 0") {
    Rng r(5);
    for (int i = 0; i < 100; i++) CHECK(r.uniform_int(1) == 0);
}

TEST_CASE("bernoulli respects its probability") {
    Rng r(13);
    const int n = 50000;
    int hits = 0;
    for (int i = 0; i < n; i++) hits += r.bernoulli(0.3);
    double sd = std::sqrt(n * 0.3 * 0.7);
    CHECK(std::abs(hits - 0.3 * n) < 3.0 * sd);
    for (int i = 0; i < 100; i++) CHECK_FALSE(r.bernoulli(0.0));
    for (int i = 0; i < 100; i++) CHECK(r.bernoulli(1.0));
}

TEST_CASE("categorical follows the weight vector") {
    Rng r(17);
    std::vector<double> w = {1.0, 0.0, 3.0};
    const int n = 40000;
    std::vector<int> hist(3, 0);
    for (int i = 0; i < n; i++) hist[r.categorical(w)]++;
    CHECK(hist[1] == 0);
    double p0 = 0.25;
    double sd = std::sqrt(n * p0 * (1.0 - p0));
    CHECK(std::abs(hist[0] - p0 * n) < 3.0 * sd);
}

TEST_CASE("splitmix64 is a fixed function") {
    // self-consistency plus dispersion: nearby inputs map far apart
    CHECK(splitmix64(0) == splitmix64(0));
    std::set<std::uint64_t> outs;
    for (std::uint64_t x = 0; x < 1000; x++) outs.insert(splitmix64(x));
    CHECK(outs.size() == 1000);
}
