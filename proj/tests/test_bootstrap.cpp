#include <catch2/catch_amalgamated.hpp>

#include <boost/math/distributions/chi_squared.hpp>
#include <vector>

#include "cgt/bootstrap.hpp"
#include "cgt/diagnostics.hpp"
#include "cgt/rng.hpp"

using namespace cgt;

namespace {

double chi2_uniformity(const std::vector<std::size_t>& counts, double total) {
    const double expected = total / static_cast<double>(counts.size());
    double stat = 0.0;
    for (std::size_t c : counts) {
        const double d = static_cast<double>(c) - expected;
        stat += d * d / expected;
    }
    return stat;
}

}  // namespace

TEST_CASE("bootstrap is deterministic in the seed and in range") {
    const auto a = stationary_bootstrap(100, 20.0, 7);
    const auto b = stationary_bootstrap(100, 20.0, 7);
    const auto c = stationary_bootstrap(100, 20.0, 8);
    REQUIRE(a.indices.size() == 100);
    CHECK(a.indices == b.indices);
    CHECK(a.indices != c.indices);
    CHECK(a.expected_block == 20.0);
    for (std::size_t idx : a.indices) CHECK(idx < 100);
}

TEST_CASE("rejects degenerate arguments") {
    CHECK_THROWS_AS(stationary_bootstrap(1, 20.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(stationary_bootstrap(100, 0.5, 0), std::invalid_argument);
}

TEST_CASE("unit expected block is the iid bootstrap") {
    // with expected_block = 1 every index restarts: uniform and independent
    const std::size_t T = 50;
    std::vector<std::size_t> counts(T, 0);
    std::size_t continuations = 0, pairs = 0, total = 0;
    for (std::uint64_t s = 0; s < 2000; ++s) {
        const auto smp = stationary_bootstrap(T, 1.0, derive_seed(43, s));
        for (std::size_t t = 0; t < smp.indices.size(); ++t) {
            ++counts[smp.indices[t]];
            ++total;
            if (t > 0) {
                ++pairs;
                if (smp.indices[t] == (smp.indices[t - 1] + 1) % T) ++continuations;
            }
        }
    }
    const boost::math::chi_squared chi(static_cast<double>(T - 1));
    const double crit = boost::math::quantile(chi, 0.99);
    CHECK(chi2_uniformity(counts, static_cast<double>(total)) < crit);
    // successor coincidences happen only by chance: rate 1/T, not ~1
    const double rate = static_cast<double>(continuations) / static_cast<double>(pairs);
    CHECK_THAT(rate, Catch::Matchers::WithinAbs(1.0 / T, 0.005));
}

TEST_CASE("mean run length matches the expected block length") {
    // runs: maximal stretches of circular successors; geometric with mean 20
    const std::size_t T = 10000;
    std::size_t draws = 0, runs = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto smp = stationary_bootstrap(T, 20.0, derive_seed(17, s));
        ++runs;  // first index opens a run
        ++draws;
        for (std::size_t t = 1; t < T; ++t) {
            ++draws;
            if (smp.indices[t] != (smp.indices[t - 1] + 1) % T) ++runs;
        }
    }
    REQUIRE(draws == 100000);
    const double mean_run = static_cast<double>(draws) / static_cast<double>(runs);
    CHECK_THAT(mean_run, Catch::Matchers::WithinAbs(20.0, 1.0));
}

TEST_CASE("restart locations are uniform") {
    const std::size_t T = 40;
    std::vector<std::size_t> counts(T, 0);
    std::size_t total = 0;
    for (std::uint64_t s = 0; s < 4000; ++s) {
        const auto smp = stationary_bootstrap(T, 5.0, derive_seed(91, s));
        ++counts[smp.indices[0]];
        ++total;
        for (std::size_t t = 1; t < T; ++t)
            if (smp.indices[t] != (smp.indices[t - 1] + 1) % T) {
                ++counts[smp.indices[t]];
                ++total;
            }
    }
    // a restart can land on the successor and be miscounted as a run
    // continuation; that removes ~1/T of restarts uniformly, so the
    // uniformity of what remains is unaffected
    const boost::math::chi_squared chi(static_cast<double>(T - 1));
    CHECK(chi2_uniformity(counts, static_cast<double>(total)) <
          boost::math::quantile(chi, 0.99));
}

TEST_CASE("block resampling preserves serial correlation, iid destroys it") {
    Rng rng(5);
    std::vector<double> series;
    double prev = 0.0;
    for (int i = 0; i < 500; ++i) prev = 0.8 * prev + rng.normal();
    for (int t = 0; t < 2000; ++t) {
        prev = 0.8 * prev + rng.normal();
        series.push_back(prev);
    }
    auto mean_acf1 = [&](double block, std::uint64_t seed) {
        double acc = 0.0;
        const int R = 200;
        for (int r = 0; r < R; ++r) {
            const auto smp = stationary_bootstrap(series.size(), block, derive_seed(seed, r));
            const auto resampled = apply_bootstrap(series, smp);
            acc += acf(resampled, 1)[1] / R;
        }
        return acc;
    };
    const double block20 = mean_acf1(20.0, 100);
    const double iid = mean_acf1(1.0, 200);
    CHECK(block20 > iid);
    CHECK(block20 > 0.5);                                  // most of phi = 0.8 survives
    CHECK_THAT(iid, Catch::Matchers::WithinAbs(0.0, 0.05));  // shuffled to white noise
}

TEST_CASE("apply_bootstrap materializes and validates") {
    const std::vector<double> src{10.0, 11.0, 12.0};
    BootstrapSample smp;
    smp.indices = {2, 0, 0};
    const auto out = apply_bootstrap(src, smp);
    CHECK(out == std::vector<double>{12.0, 10.0, 10.0});
    smp.indices = {3};
    CHECK_THROWS_AS(apply_bootstrap(src, smp), std::out_of_range);
}
