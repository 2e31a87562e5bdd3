#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "cgt/rng.hpp"

using cgt::Rng;

TEST_CASE("splitmix64 is a deterministic bijection-like scrambler") {
    // Reference values from the published splitmix64 algorithm.
    CHECK(cgt::splitmix64(0) == 0xe220a8397b1dcdafULL);
    CHECK(cgt::splitmix64(1) != cgt::splitmix64(2));
    STATIC_CHECK(cgt::splitmix64(42) == cgt::splitmix64(42));
}

TEST_CASE("derive_seed separates streams and masters") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(cgt::derive_seed(12345, s));
    CHECK(seen.size() == 1000);
    CHECK(cgt::derive_seed(1, 0) != cgt::derive_seed(2, 0));
    CHECK(cgt::derive_seed(1, 7) == cgt::derive_seed(1, 7));
}

TEST_CASE("same seed reproduces the exact draw sequence") {
    Rng a(99), b(99), c(100);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 256; ++i) {
        const double x = a.normal();
        all_equal &= (x == b.normal());
        any_diff |= (x != c.normal());
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("uniform draws live in [0,1) with mean 1/2") {
    Rng rng(7);
    const int n = 200000;
    double sum = 0.0;
    bool in_range = true;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        in_range &= (u >= 0.0 && u < 1.0);
        sum += u;
    }
    CHECK(in_range);
    CHECK_THAT(sum / n, Catch::Matchers::WithinAbs(0.5, 0.01));
}

TEST_CASE("normal draws match N(0,1) moments") {
    Rng rng(11);
    const int n = 200000;
    double sum = 0.0, sum_sq = 0.0, sum_cu = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sum_sq += z * z;
        sum_cu += z * z * z;
    }
    const double mean = sum / n;
    CHECK_THAT(mean, Catch::Matchers::WithinAbs(0.0, 0.02));
    CHECK_THAT(sum_sq / n - mean * mean, Catch::Matchers::WithinAbs(1.0, 0.03));
    CHECK_THAT(sum_cu / n, Catch::Matchers::WithinAbs(0.0, 0.06));  // symmetry
}

TEST_CASE("uniform_index is unbiased over its range") {
    Rng rng(13);
    std::vector<int> counts(6, 0);
    const int n = 60000;
    for (int i = 0; i < n; ++i) {
        const auto k = rng.uniform_index(6);
        REQUIRE(k < 6);
        ++counts[static_cast<std::size_t>(k)];
    }
    for (int c : counts) CHECK_THAT(static_cast<double>(c), Catch::Matchers::WithinAbs(10000.0, 600.0));
}

TEST_CASE("bernoulli tracks its probability") {
    Rng rng(17);
    int hits = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) hits += rng.bernoulli(0.3) ? 1 : 0;
    CHECK_THAT(hits / static_cast<double>(n), Catch::Matchers::WithinAbs(0.3, 0.01));
}
