#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "cgt/timeseries.hpp"

namespace cgt {

/// Sample autocorrelation function for lags 0..max_lag.
///
/// Uses the biased (1/T) autocovariance, the standard choice for
/// stationarity diagnostics. acf[0] is 1 by construction.
[[nodiscard]] inline std::vector<double> acf(std::span<const double> series, int max_lag) {
    const auto T = static_cast<std::ptrdiff_t>(series.size());
    if (max_lag < 0) throw std::invalid_argument("acf: max_lag must be >= 0");
    if (T <= max_lag + 1)
        throw std::invalid_argument("acf: series too short for requested max_lag");
    const double m = mean_of(series);
    double c0 = 0.0;
    for (double v : series) c0 += (v - m) * (v - m);
    c0 /= static_cast<double>(T);
    if (!(c0 > 0.0)) throw std::invalid_argument("acf: undefined correlation (constant series)");
    std::vector<double> out(static_cast<std::size_t>(max_lag) + 1);
    out[0] = 1.0;
    for (int k = 1; k <= max_lag; ++k) {
        double ck = 0.0;
        for (std::ptrdiff_t t = 0; t + k < T; ++t) ck += (series[t] - m) * (series[t + k] - m);
        ck /= static_cast<double>(T);
        out[static_cast<std::size_t>(k)] = ck / c0;
    }
    return out;
}

/// Partial autocorrelation function for lags 1..max_lag via the
/// Durbin-Levinson recursion. Element k-1 holds the lag-k value.
[[nodiscard]] inline std::vector<double> pacf(std::span<const double> series, int max_lag) {
    if (max_lag < 1) throw std::invalid_argument("pacf: max_lag must be >= 1");
    const std::vector<double> rho = acf(series, max_lag);
    std::vector<double> out(static_cast<std::size_t>(max_lag));
    std::vector<double> phi_prev(static_cast<std::size_t>(max_lag) + 1, 0.0);
    std::vector<double> phi(static_cast<std::size_t>(max_lag) + 1, 0.0);
    for (int k = 1; k <= max_lag; ++k) {
        double num = rho[static_cast<std::size_t>(k)];
        double den = 1.0;
        for (int j = 1; j < k; ++j) {
            num -= phi_prev[static_cast<std::size_t>(j)] * rho[static_cast<std::size_t>(k - j)];
            den -= phi_prev[static_cast<std::size_t>(j)] * rho[static_cast<std::size_t>(j)];
        }
        if (den == 0.0) throw std::runtime_error("pacf: Durbin-Levinson recursion broke down");
        const double phi_kk = num / den;
        phi[static_cast<std::size_t>(k)] = phi_kk;
        for (int j = 1; j < k; ++j)
            phi[static_cast<std::size_t>(j)] = phi_prev[static_cast<std::size_t>(j)] -
                                               phi_kk * phi_prev[static_cast<std::size_t>(k - j)];
        out[static_cast<std::size_t>(k - 1)] = phi_kk;
        phi_prev = phi;
    }
    return out;
}

/// Two-sided white-noise confidence band for correlation estimates:
/// +/- z_{(1+level)/2} / sqrt(T).
[[nodiscard]] inline std::pair<double, double> ci_bounds(std::size_t T, double level = 0.95) {
    if (T == 0) throw std::invalid_argument("ci_bounds: T must be positive");
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("ci_bounds: level must be in (0,1)");
    const boost::math::normal_distribution<double> norm;
    const double z = boost::math::quantile(norm, 0.5 * (1.0 + level));
    const double half_width = z / std::sqrt(static_cast<double>(T));
    return {-half_width, half_width};
}

}  // namespace cgt
