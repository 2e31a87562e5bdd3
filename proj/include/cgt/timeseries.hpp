#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cgt {

/// Trading days per year; used for excess-return day counts and annualization.
inline constexpr double kTradingDaysPerYear = 252.0;

/// Daily close prices with optional aligned annualized benchmark rates.
struct PriceSeries {
    std::vector<std::string> dates;  // ISO-8601, strictly increasing
    std::vector<double> prices;      // > 0
    std::vector<double> rates;       // annualized short rate, empty or aligned 1:1

    [[nodiscard]] bool has_rates() const { return !rates.empty(); }
    [[nodiscard]] std::size_t size() const { return prices.size(); }
};

/// Daily excess log returns; one observation shorter than its price series.
struct ReturnSeries {
    std::vector<std::string> dates;
    std::vector<double> returns;

    [[nodiscard]] std::size_t size() const { return returns.size(); }
};

/// Validate PriceSeries invariants. Throws std::invalid_argument naming the
/// offending date on non-positive or non-finite prices.
inline void validate(const PriceSeries& series) {
    if (series.dates.size() != series.prices.size())
        throw std::invalid_argument("price series: dates and prices must align");
    if (series.has_rates() && series.rates.size() != series.prices.size())
        throw std::invalid_argument("price series: benchmark rates must align 1:1 with dates");
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!std::isfinite(series.prices[i]))
            throw std::invalid_argument("price series: missing or non-finite price at " +
                                        series.dates[i]);
        if (series.prices[i] <= 0.0)
            throw std::invalid_argument("price series: non-positive price at " + series.dates[i]);
        if (i > 0 && !(series.dates[i - 1] < series.dates[i]))
            throw std::invalid_argument("price series: dates not strictly increasing at " +
                                        series.dates[i]);
    }
}

/// Convert prices to daily excess log returns.
///
/// returns[t] = ln(p_{t+1}/p_t) - rate_t / 252. Without a benchmark the
/// second term is dropped and the result is a pure log return. Return t is
/// stamped with the date of the later price.
[[nodiscard]] inline ReturnSeries compute_excess_log_returns(const PriceSeries& series) {
    validate(series);
    if (series.size() < 2)
        throw std::invalid_argument("excess log returns need at least 2 price points");
    ReturnSeries out;
    out.dates.reserve(series.size() - 1);
    out.returns.reserve(series.size() - 1);
    for (std::size_t t = 0; t + 1 < series.size(); ++t) {
        double r = std::log(series.prices[t + 1] / series.prices[t]);
        if (series.has_rates()) r -= series.rates[t] / kTradingDaysPerYear;
        out.dates.push_back(series.dates[t + 1]);
        out.returns.push_back(r);
    }
    return out;
}

/// Z-score parameters. Population (1/N) standard deviation throughout.
struct ScalerParams {
    double mean = 0.0;
    double std = 1.0;
};

[[nodiscard]] inline double mean_of(std::span<const double> values) {
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

/// Population standard deviation (1/N).
[[nodiscard]] inline double std_of(std::span<const double> values) {
    const double m = mean_of(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(values.size()));
}

/// Fit z-score parameters; throws on degenerate (constant) input.
[[nodiscard]] inline ScalerParams fit_zscore(std::span<const double> values) {
    if (values.size() < 2) throw std::invalid_argument("z-score fit needs at least 2 values");
    ScalerParams p{mean_of(values), std_of(values)};
    if (!(p.std > 0.0))
        throw std::invalid_argument("z-score fit: degenerate scale (constant input)");
    return p;
}

[[nodiscard]] inline double zscore_apply(const ScalerParams& p, double x) {
    return (x - p.mean) / p.std;
}

[[nodiscard]] inline double zscore_invert(const ScalerParams& p, double z) {
    return z * p.std + p.mean;
}

[[nodiscard]] inline std::vector<double> zscore_apply(const ScalerParams& p,
                                                      std::span<const double> values) {
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = zscore_apply(p, values[i]);
    return out;
}

[[nodiscard]] inline std::vector<double> zscore_invert(const ScalerParams& p,
                                                       std::span<const double> values) {
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = zscore_invert(p, values[i]);
    return out;
}

/// Supervised lag matrix: row t holds (r_{t-1}, ..., r_{t-p}), target r_t.
struct LaggedDataset {
    Eigen::MatrixXd features;  // (T - p) x p
    Eigen::VectorXd targets;   // T - p
    int lag_count = 0;

    [[nodiscard]] Eigen::Index rows() const { return targets.size(); }
};

/// Build the lag matrix for p lags. Feature columns are ordered most recent
/// first, so no feature index ever reaches the target index (no look-ahead).
[[nodiscard]] inline LaggedDataset build_lagged(std::span<const double> returns, int p) {
    if (p <= 0) throw std::invalid_argument("lag count must be >= 1");
    const auto T = static_cast<std::ptrdiff_t>(returns.size());
    if (T <= p)
        throw std::invalid_argument("insufficient history: need more than " + std::to_string(p) +
                                    " observations, got " + std::to_string(T));
    LaggedDataset ds;
    ds.lag_count = p;
    ds.features.resize(T - p, p);
    ds.targets.resize(T - p);
    for (std::ptrdiff_t t = p; t < T; ++t) {
        for (int j = 0; j < p; ++j) ds.features(t - p, j) = returns[t - 1 - j];
        ds.targets(t - p) = returns[t];
    }
    return ds;
}

[[nodiscard]] inline LaggedDataset build_lagged(const ReturnSeries& series, int p) {
    return build_lagged(std::span<const double>(series.returns), p);
}

}  // namespace cgt
