#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cgt/rng.hpp"

namespace cgt {

/// One resample of a length-T series, stored as positions into the source.
struct BootstrapSample {
    std::vector<std::size_t> indices;
    double expected_block = 1.0;
};

/// Stationary bootstrap (Politis-Romano). Runs start uniformly in [0, T) and
/// continue to the circular successor with probability 1 - 1/expected_block,
/// otherwise restart uniformly; run lengths are geometric with the given
/// mean. expected_block = 1 degenerates to the iid bootstrap.
[[nodiscard]] inline BootstrapSample stationary_bootstrap(std::size_t T, double expected_block,
                                                          std::uint64_t seed) {
    if (T < 2) throw std::invalid_argument("stationary_bootstrap: need T >= 2");
    if (!(expected_block >= 1.0))
        throw std::invalid_argument("stationary_bootstrap: expected block length must be >= 1");
    Rng rng(seed);
    const double continue_prob = 1.0 - 1.0 / expected_block;
    BootstrapSample s;
    s.expected_block = expected_block;
    s.indices.resize(T);
    std::size_t pos = rng.uniform_index(T);
    s.indices[0] = pos;
    for (std::size_t t = 1; t < T; ++t) {
        if (rng.bernoulli(continue_prob)) {
            pos = (pos + 1) % T;  // circular wrap
        } else {
            pos = rng.uniform_index(T);
        }
        s.indices[t] = pos;
    }
    return s;
}

/// Materialize the resampled values.
template <typename T>
[[nodiscard]] std::vector<T> apply_bootstrap(const std::vector<T>& source,
                                             const BootstrapSample& sample) {
    std::vector<T> out;
    out.reserve(sample.indices.size());
    for (std::size_t idx : sample.indices) {
        if (idx >= source.size())
            throw std::out_of_range("apply_bootstrap: index beyond source length");
        out.push_back(source[idx]);
    }
    return out;
}

}  // namespace cgt
