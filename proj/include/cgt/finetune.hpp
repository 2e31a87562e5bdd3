#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cgt/learners.hpp"
#include "cgt/metrics.hpp"
#include "cgt/rng.hpp"
#include "cgt/splits.hpp"
#include "cgt/timeseries.hpp"

namespace cgt {

// ---------------------------------------------------------------------------
// Hyperparameter grids, in their published listing order (ties in the search
// resolve to the earlier entry, so this order is part of the contract)

[[nodiscard]] inline std::vector<LearnerSpec> ridge_grid() {
    std::vector<LearnerSpec> grid;
    for (double a : {0.00001, 0.00005, 0.0001, 0.0005, 0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0})
        grid.push_back({LearnerKind::ridge, {{"shrinkage", a}}});
    return grid;
}

[[nodiscard]] inline std::vector<LearnerSpec> gbt_grid() {
    std::vector<LearnerSpec> grid;
    for (double trees : {50.0, 100.0, 200.0})
        for (double lr : {0.0001, 0.001, 0.01, 0.1, 1.0})
            for (double depth : {1.0, 3.0, 5.0})
                grid.push_back({LearnerKind::gbt,
                                {{"trees", trees}, {"learning_rate", lr}, {"max_depth", depth}}});
    return grid;
}

[[nodiscard]] inline std::vector<LearnerSpec> mlp_grid() {
    std::vector<LearnerSpec> grid;
    for (double neurons : {20.0, 50.0, 100.0, 200.0})
        for (double decay : {0.001, 0.01, 0.1, 1.0})
            grid.push_back({LearnerKind::mlp, {{"neurons", neurons}, {"weight_decay", decay}}});
    return grid;
}

// ---------------------------------------------------------------------------
// Grid-search result

struct GridResult {
    std::vector<LearnerSpec> grid;   // searched specs, selection ties go to the earlier index
    Eigen::MatrixXd scores;          // |grid| x B fold utilities; NaN = fold failed
    std::vector<double> mean_perf;   // mean over available folds; NaN when disqualified
    std::vector<bool> disqualified;  // more than half the folds missing
    std::size_t selected = 0;        // argmax of mean_perf among qualified entries
    std::string scheme_name;
};

namespace detail {

[[nodiscard]] inline LaggedDataset subset_rows(const LaggedDataset& ds,
                                               const std::vector<std::size_t>& rows) {
    LaggedDataset out;
    out.lag_count = ds.lag_count;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), ds.features.cols());
    out.targets.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= static_cast<std::size_t>(ds.rows()))
            throw std::out_of_range("fold index exceeds the lagged dataset");
        out.features.row(static_cast<Eigen::Index>(i)) =
            ds.features.row(static_cast<Eigen::Index>(rows[i]));
        out.targets(static_cast<Eigen::Index>(i)) =
            ds.targets(static_cast<Eigen::Index>(rows[i]));
    }
    return out;
}

/// Validation utility of one fitted model: annualized Sharpe ratio of the
/// identity-signal strategy returns on the validation slice.
[[nodiscard]] inline double fold_utility(const FittedModel& fitted, const Eigen::MatrixXd& X_val,
                                         const Eigen::VectorXd& y_val) {
    const Eigen::VectorXd pred = predict(fitted, X_val);
    std::vector<double> strat(static_cast<std::size_t>(y_val.size()));
    for (Eigen::Index t = 0; t < y_val.size(); ++t)
        strat[static_cast<std::size_t>(t)] = y_val(t) * pred(t);
    return sharpe(strat);
}

/// Fill mean_perf / disqualified / selected from the score matrix. A
/// hyperparameter missing more than half its folds is disqualified; among
/// the rest the argmax of the mean utility wins, earlier index on ties.
inline void select_from_scores(GridResult& result) {
    const auto B = static_cast<std::size_t>(result.scores.cols());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    result.mean_perf.assign(result.grid.size(), nan);
    result.disqualified.assign(result.grid.size(), false);

    bool any = false;
    double best = 0.0;
    for (std::size_t i = 0; i < result.grid.size(); ++i) {
        std::size_t present = 0;
        double sum = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
            const double s = result.scores(static_cast<Eigen::Index>(i),
                                           static_cast<Eigen::Index>(b));
            if (!std::isnan(s)) {
                ++present;
                sum += s;
            }
        }
        if (2 * (B - present) > B) {
            result.disqualified[i] = true;
            continue;
        }
        result.mean_perf[i] = sum / static_cast<double>(present);
        if (!any || result.mean_perf[i] > best) {
            any = true;
            best = result.mean_perf[i];
            result.selected = i;
        }
    }
    if (!any)
        throw std::runtime_error("grid_search: every hyperparameter was disqualified");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Grid search over classical validation schemes

/// Score every spec on every fold of `plan` and pick the best mean utility.
/// Fold indices address rows of the lag matrix built here, so construct the
/// plan with T = in_sample.size() - lags. Fits are seeded per (spec, fold)
/// cell; a failing fold (unfittable spec, zero-volatility validation) scores
/// as missing rather than aborting the search.
[[nodiscard]] inline GridResult grid_search(const SplitPlan& plan,
                                            const std::vector<LearnerSpec>& grid,
                                            const ReturnSeries& in_sample, int lags,
                                            std::uint64_t seed) {
    if (grid.empty()) throw std::invalid_argument("grid_search: empty grid");
    if (plan.folds.empty()) throw std::invalid_argument("grid_search: plan has no folds");
    const LaggedDataset ds = build_lagged(in_sample, lags);

    GridResult result;
    result.grid = grid;
    result.scheme_name = plan.scheme_name;
    const std::size_t B = plan.folds.size();
    result.scores.resize(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(B));

    for (std::size_t b = 0; b < B; ++b) {
        const LaggedDataset train = detail::subset_rows(ds, plan.folds[b].train);
        const LaggedDataset val = detail::subset_rows(ds, plan.folds[b].val);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            double score = std::numeric_limits<double>::quiet_NaN();
            try {
                const auto fitted =
                    fit(grid[i], train, derive_seed(seed, static_cast<std::uint64_t>(i * B + b)));
                score = detail::fold_utility(fitted, val.features, val.targets);
            } catch (const std::exception&) {
                // missing fold
            }
            result.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) = score;
        }
    }
    detail::select_from_scores(result);
    return result;
}

// ---------------------------------------------------------------------------
// Grid search over synthetic sample paths

/// Score every spec on every synthetic path: fit on the lag rows whose target
/// lies in the path's training segment, score utility on the rows targeting
/// the validation segment (whose lag windows may reach back into the training
/// tail — ordinary walk-forward). Real data never enters; it is used again
/// only when the winner is refit by finalize_and_test.
[[nodiscard]] inline GridResult grid_search(const std::vector<SyntheticSplit>& splits,
                                            const std::vector<LearnerSpec>& grid, int lags,
                                            std::uint64_t seed,
                                            std::string scheme_name = "cgan") {
    if (grid.empty()) throw std::invalid_argument("grid_search: empty grid");
    if (splits.empty()) throw std::invalid_argument("grid_search: no synthetic paths");

    GridResult result;
    result.grid = grid;
    result.scheme_name = std::move(scheme_name);
    const std::size_t B = splits.size();
    result.scores.resize(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(B));

    for (std::size_t b = 0; b < B; ++b) {
        std::vector<double> path = splits[b].train;
        path.insert(path.end(), splits[b].val.begin(), splits[b].val.end());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            double score = std::numeric_limits<double>::quiet_NaN();
            try {
                if (splits[b].train.size() <= static_cast<std::size_t>(lags))
                    throw std::invalid_argument("synthetic training segment shorter than lags");
                const LaggedDataset ds = build_lagged(path, lags);
                const auto boundary =
                    static_cast<Eigen::Index>(splits[b].train.size()) - lags;
                LaggedDataset train, val;
                train.lag_count = val.lag_count = lags;
                train.features = ds.features.topRows(boundary);
                train.targets = ds.targets.head(boundary);
                val.features = ds.features.bottomRows(ds.rows() - boundary);
                val.targets = ds.targets.tail(ds.rows() - boundary);
                const auto fitted =
                    fit(grid[i], train, derive_seed(seed, static_cast<std::uint64_t>(i * B + b)));
                score = detail::fold_utility(fitted, val.features, val.targets);
            } catch (const std::exception&) {
                // missing fold
            }
            result.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) = score;
        }
    }
    detail::select_from_scores(result);
    return result;
}

// ---------------------------------------------------------------------------
// Final refit and holdout evaluation

/// Refit the selected spec on the FULL real in-sample series (synthetic data
/// only ever influenced the selection) and report holdout performance. The
/// first holdout predictions condition on the in-sample tail, so no holdout
/// value is ever visible to its own feature window.
[[nodiscard]] inline BacktestReport finalize_and_test(const GridResult& result,
                                                      const ReturnSeries& in_sample,
                                                      const ReturnSeries& holdout, int lags,
                                                      std::uint64_t seed) {
    if (result.selected >= result.grid.size())
        throw std::invalid_argument("finalize_and_test: selection out of range");
    if (holdout.size() == 0) throw std::invalid_argument("finalize_and_test: empty holdout");
    if (in_sample.size() <= static_cast<std::size_t>(lags))
        throw std::invalid_argument("finalize_and_test: in-sample shorter than lag window");
    if (!in_sample.dates.empty() && !holdout.dates.empty() &&
        !(in_sample.dates.back() < holdout.dates.front()))
        throw std::invalid_argument("finalize_and_test: holdout must lie strictly after in-sample");
    const auto [lo, hi] = std::minmax_element(holdout.returns.begin(), holdout.returns.end());
    if (*lo == *hi)
        throw std::invalid_argument("finalize_and_test: holdout has zero volatility");

    const auto fitted = fit(result.grid[result.selected], build_lagged(in_sample, lags), seed);

    std::vector<double> combined = in_sample.returns;
    combined.insert(combined.end(), holdout.returns.begin(), holdout.returns.end());
    const LaggedDataset all = build_lagged(combined, lags);
    const auto first =
        static_cast<Eigen::Index>(in_sample.size()) - lags;  // row targeting holdout[0]
    const Eigen::MatrixXd Xh = all.features.bottomRows(all.rows() - first);
    const Eigen::VectorXd pred = predict(fitted, Xh);

    return backtest(holdout.returns,
                    std::vector<double>(pred.data(), pred.data() + pred.size()));
}

}  // namespace cgt
