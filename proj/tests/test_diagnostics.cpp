#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cgt/diagnostics.hpp"
#include "cgt/rng.hpp"

using namespace cgt;

namespace {

std::vector<double> ar1(double phi, std::size_t T, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> x(T);
    double prev = 0.0;
    // burn-in so the process starts in its stationary distribution
    for (int i = 0; i < 500; ++i) prev = phi * prev + rng.normal();
    for (std::size_t t = 0; t < T; ++t) {
        prev = phi * prev + rng.normal();
        x[t] = prev;
    }
    return x;
}

}  // namespace

TEST_CASE("acf lag zero is exactly one") {
    const auto x = ar1(0.5, 500, 1);
    const auto a = acf(x, 10);
    REQUIRE(a.size() == 11);
    CHECK(a[0] == 1.0);
}

TEST_CASE("white noise autocorrelations stay inside 4 sigma bands") {
    // Monte Carlo oracle: iid noise has acf ~ N(0, 1/T) at every positive lag.
    const std::size_t T = 10000;
    Rng rng(2);
    std::vector<double> x(T);
    for (auto& v : x) v = rng.normal();
    const auto a = acf(x, 63);
    const double band = 4.0 / std::sqrt(static_cast<double>(T));
    int inside_3sigma = 0;
    for (int k = 1; k <= 63; ++k) {
        CHECK(std::abs(a[static_cast<std::size_t>(k)]) < band);
        if (std::abs(a[static_cast<std::size_t>(k)]) < 3.0 / std::sqrt(static_cast<double>(T)))
            ++inside_3sigma;
    }
    CHECK(inside_3sigma >= 63);  // >=99% of lags inside the 3-sigma band
}

TEST_CASE("AR(1) acf decays geometrically") {
    const double phi = 0.8;
    const auto x = ar1(phi, 20000, 3);
    const auto a = acf(x, 5);
    for (int k = 1; k <= 5; ++k)
        CHECK_THAT(a[static_cast<std::size_t>(k)],
                   Catch::Matchers::WithinAbs(std::pow(phi, k), 0.04));
}

TEST_CASE("AR(1) pacf cuts off after lag one") {
    const double phi = 0.8;
    const auto x = ar1(phi, 20000, 4);
    const auto p = pacf(x, 5);
    REQUIRE(p.size() == 5);
    CHECK_THAT(p[0], Catch::Matchers::WithinAbs(phi, 0.02));
    for (std::size_t k = 1; k < 5; ++k)
        CHECK_THAT(p[k], Catch::Matchers::WithinAbs(0.0, 0.03));
}

TEST_CASE("pacf lag one equals acf lag one") {
    const auto x = ar1(0.4, 3000, 5);
    const auto a = acf(x, 3);
    const auto p = pacf(x, 3);
    CHECK_THAT(p[0], Catch::Matchers::WithinAbs(a[1], 1e-12));
}

TEST_CASE("confidence bounds use the normal quantile over sqrt(T)") {
    const auto [lo, hi] = ci_bounds(400, 0.95);
    CHECK_THAT(hi, Catch::Matchers::WithinAbs(1.959963985 / 20.0, 1e-6));
    CHECK_THAT(lo, Catch::Matchers::WithinAbs(-hi, 1e-15));
    const auto [lo99, hi99] = ci_bounds(400, 0.99);
    CHECK_THAT(hi99, Catch::Matchers::WithinAbs(2.5758293 / 20.0, 1e-6));
}

TEST_CASE("degenerate inputs are rejected") {
    const std::vector<double> constant(100, 1.5);
    CHECK_THROWS_AS(acf(constant, 5), std::invalid_argument);
    const std::vector<double> tiny{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(acf(tiny, 5), std::invalid_argument);
    CHECK_THROWS_AS(pacf(tiny, 5), std::invalid_argument);
}
