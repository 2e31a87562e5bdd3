#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace cgt {

namespace detail {

/// Ranks 1..n with tied values sharing their average rank. `largest_first`
/// ranks the largest value 1 (the convention for "method ranked best").
[[nodiscard]] inline std::vector<double> average_ranks(std::span<const double> values,
                                                       bool largest_first) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return largest_first ? values[a] > values[b] : values[a] < values[b];
    });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double shared = 0.5 * static_cast<double>(i + j) + 1.0;  // mean of ranks i+1..j+1
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

[[nodiscard]] inline double binomial_coefficient(std::size_t n, std::size_t k) {
    if (k > n) return 0.0;
    k = std::min(k, n - k);
    double c = 1.0;
    for (std::size_t i = 0; i < k; ++i)
        c = c * static_cast<double>(n - i) / static_cast<double>(i + 1);
    return c;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Robust location/scale summary

struct RobustSummary {
    double median = 0.0;
    double mad = 0.0;                         // MEAN absolute deviation about the median
    std::array<double, 5> quantiles{};        // 0, 25, 50, 75, 100 percent
};

/// Quantile with linear interpolation between order statistics; `sorted`
/// must be ascending, q in [0, 1].
[[nodiscard]] inline double quantile_linear(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile: empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q outside [0, 1]");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

/// Median, mean absolute deviation about the median (the paper's MAD — not
/// the median absolute deviation), and the five quartile points.
[[nodiscard]] inline RobustSummary robust_summary(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("robust_summary: empty sample");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());

    RobustSummary out;
    out.median = quantile_linear(sorted, 0.5);
    double dev = 0.0;
    for (double v : sorted) dev += std::abs(v - out.median);
    out.mad = dev / static_cast<double>(sorted.size());
    const std::array<double, 5> qs{0.0, 0.25, 0.5, 0.75, 1.0};
    for (std::size_t i = 0; i < qs.size(); ++i) out.quantiles[i] = quantile_linear(sorted, qs[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Wilcoxon rank-sum (Mann-Whitney), two-sided

/// Two-sided rank-sum test that the two samples come from the same
/// distribution. Small problems (up to ~1e5 subsets) are solved by exact
/// enumeration of all rank splits, conditioned on the observed (possibly
/// tied) pooled values; larger ones use the normal approximation with
/// average-rank tie correction and continuity correction.
[[nodiscard]] inline double wilcoxon_rank_sum(std::span<const double> a,
                                              std::span<const double> b) {
    const std::size_t n = a.size(), m = b.size(), N = n + m;
    if (n < 2 || m < 2) throw std::invalid_argument("wilcoxon_rank_sum: each sample needs >= 2");

    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const std::vector<double> ranks = detail::average_ranks(pooled, /*largest_first=*/false);

    double W = 0.0;
    for (std::size_t i = 0; i < n; ++i) W += ranks[i];
    const double mu = static_cast<double>(n) * static_cast<double>(N + 1) / 2.0;

    if (detail::binomial_coefficient(N, n) <= 1e5) {
        // Exact conditional test: enumerate every n-subset of the pooled
        // ranks and count those at least as far from the mean rank sum.
        const double observed_dev = std::abs(W - mu);
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::size_t extreme = 0, total = 0;
        while (true) {
            double w = 0.0;
            for (std::size_t i : idx) w += ranks[i];
            if (std::abs(w - mu) >= observed_dev - 1e-12) ++extreme;
            ++total;
            // advance to the next combination in lexicographic order
            std::size_t i = n;
            while (i > 0) {
                --i;
                if (idx[i] != i + N - n) {
                    ++idx[i];
                    for (std::size_t j = i + 1; j < n; ++j) idx[j] = idx[j - 1] + 1;
                    break;
                }
                if (i == 0) {
                    return static_cast<double>(extreme) / static_cast<double>(total);
                }
            }
        }
    }

    // tie-corrected variance of the rank sum
    std::vector<double> sorted(pooled);
    std::sort(sorted.begin(), sorted.end());
    double tie_term = 0.0;
    std::size_t i = 0;
    while (i < N) {
        std::size_t j = i;
        while (j + 1 < N && sorted[j + 1] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    const double Nd = static_cast<double>(N);
    const double var = static_cast<double>(n) * static_cast<double>(m) / 12.0 *
                       ((Nd + 1.0) - tie_term / (Nd * (Nd - 1.0)));
    if (!(var > 0.0)) return 1.0;  // all pooled values identical

    const double z = std::max(0.0, std::abs(W - mu) - 0.5) / std::sqrt(var);
    const boost::math::normal_distribution<double> norm;
    return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(norm, z)));
}

// ---------------------------------------------------------------------------
// Friedman test across methods, blocked by asset

struct FriedmanResult {
    std::vector<double> avg_ranks;  // per method; rank 1 = largest value in the row
    double chi2 = 0.0;
    double p_value = 1.0;
};

/// Rows are blocks (assets), columns are methods. Each row is ranked with
/// rank 1 for the LARGEST value (higher metric = better method); ties share
/// average ranks. chi^2 = 12N/(k(k+1)) * sum_j (Rbar_j - (k+1)/2)^2 on k-1
/// degrees of freedom.
[[nodiscard]] inline FriedmanResult friedman_test(const Eigen::MatrixXd& values) {
    const Eigen::Index N = values.rows(), k = values.cols();
    if (N < 2) throw std::invalid_argument("friedman_test: need >= 2 rows");
    if (k < 2) throw std::invalid_argument("friedman_test: need >= 2 methods");

    FriedmanResult out;
    out.avg_ranks.assign(static_cast<std::size_t>(k), 0.0);
    std::vector<double> row(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) row[static_cast<std::size_t>(j)] = values(i, j);
        const auto ranks = detail::average_ranks(row, /*largest_first=*/true);
        for (Eigen::Index j = 0; j < k; ++j)
            out.avg_ranks[static_cast<std::size_t>(j)] += ranks[static_cast<std::size_t>(j)];
    }
    for (double& r : out.avg_ranks) r /= static_cast<double>(N);

    const double kd = static_cast<double>(k), Nd = static_cast<double>(N);
    double dev = 0.0;
    for (double r : out.avg_ranks) dev += (r - (kd + 1.0) / 2.0) * (r - (kd + 1.0) / 2.0);
    out.chi2 = 12.0 * Nd / (kd * (kd + 1.0)) * dev;

    const boost::math::chi_squared_distribution<double> dist(kd - 1.0);
    out.p_value = boost::math::cdf(boost::math::complement(dist, out.chi2));
    return out;
}

// ---------------------------------------------------------------------------
// Holm step-down multiple-comparison correction

struct HolmResult {
    std::vector<std::size_t> order;   // indices of p-values, ascending
    std::vector<double> thresholds;   // alpha/(m-i) for sorted position i (0-based)
    std::vector<bool> reject;         // per ORIGINAL index
};

/// Step-down Holm procedure: sort p ascending, compare the i-th smallest
/// (1-based) against alpha/(m-i+1), and stop at the first failure, so the
/// rejections always form a prefix of the sorted order.
[[nodiscard]] inline HolmResult holm_correction(std::span<const double> p_values, double alpha) {
    const std::size_t m = p_values.size();
    if (m == 0) throw std::invalid_argument("holm_correction: no p-values");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("holm_correction: alpha in (0,1)");
    for (double p : p_values)
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("holm_correction: p-value outside [0, 1]");

    HolmResult out;
    out.order.resize(m);
    std::iota(out.order.begin(), out.order.end(), 0);
    std::stable_sort(out.order.begin(), out.order.end(),
                     [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });

    out.thresholds.resize(m);
    out.reject.assign(m, false);
    bool alive = true;
    for (std::size_t i = 0; i < m; ++i) {
        out.thresholds[i] = alpha / static_cast<double>(m - i);
        if (alive && p_values[out.order[i]] <= out.thresholds[i])
            out.reject[out.order[i]] = true;
        else
            alive = false;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Results matrix: assets x methods with NaN marking missing cells

struct ResultsMatrix {
    std::vector<std::string> assets;   // row labels
    std::vector<std::string> methods;  // column labels
    Eigen::MatrixXd values;            // NaN = missing

    /// Rows with any missing cell are dropped (listwise deletion).
    [[nodiscard]] Eigen::MatrixXd complete_rows() const {
        std::vector<Eigen::Index> keep;
        for (Eigen::Index i = 0; i < values.rows(); ++i)
            if (!values.row(i).hasNaN()) keep.push_back(i);
        Eigen::MatrixXd out(static_cast<Eigen::Index>(keep.size()), values.cols());
        for (std::size_t i = 0; i < keep.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = values.row(keep[i]);
        return out;
    }

    /// One method's observed values, missing cells skipped.
    [[nodiscard]] std::vector<double> column(std::size_t method) const {
        if (method >= methods.size()) throw std::out_of_range("column: method index");
        std::vector<double> out;
        for (Eigen::Index i = 0; i < values.rows(); ++i) {
            const double v = values(i, static_cast<Eigen::Index>(method));
            if (!std::isnan(v)) out.push_back(v);
        }
        return out;
    }
};

[[nodiscard]] inline FriedmanResult friedman_test(const ResultsMatrix& matrix) {
    return friedman_test(matrix.complete_rows());
}

}  // namespace cgt
