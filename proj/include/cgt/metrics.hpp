#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "cgt/timeseries.hpp"

namespace cgt {

/// Identity trading signal: hold the predicted return as the position, so
/// the strategy earns r_t * r_hat_t each day.
[[nodiscard]] inline std::vector<double> strategy_returns(std::span<const double> actual,
                                                          std::span<const double> predicted) {
    if (actual.size() != predicted.size())
        throw std::invalid_argument("strategy_returns: length mismatch");
    std::vector<double> out(actual.size());
    for (std::size_t i = 0; i < actual.size(); ++i) out[i] = actual[i] * predicted[i];
    return out;
}

/// Running sum of log returns (additive cumulative path).
[[nodiscard]] inline std::vector<double> cumulative_returns(std::span<const double> returns) {
    std::vector<double> out(returns.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < returns.size(); ++i) {
        acc += returns[i];
        out[i] = acc;
    }
    return out;
}

/// Annualized Sharpe ratio with population volatility: mean*252 / (std*sqrt(252)).
[[nodiscard]] inline double sharpe(std::span<const double> returns) {
    if (returns.size() < 2) throw std::invalid_argument("sharpe: need at least 2 returns");
    const double sd = std_of(returns);
    if (!(sd > 0.0)) throw std::invalid_argument("sharpe: zero volatility");
    return mean_of(returns) * kTradingDaysPerYear / (sd * std::sqrt(kTradingDaysPerYear));
}

/// Deepest drop of the additive cumulative path below its running peak. The
/// path implicitly starts at 0, so a first negative return already draws
/// down. Always <= 0.
[[nodiscard]] inline double max_drawdown(std::span<const double> returns) {
    if (returns.empty()) throw std::invalid_argument("max_drawdown: empty returns");
    double cum = 0.0, peak = 0.0, mdd = 0.0;
    for (double r : returns) {
        cum += r;
        peak = std::max(peak, cum);
        mdd = std::min(mdd, cum - peak);
    }
    return mdd;
}

/// Annualized mean return over the magnitude of the maximum drawdown.
[[nodiscard]] inline double calmar(std::span<const double> returns) {
    const double mdd = max_drawdown(returns);
    if (!(mdd < 0.0))
        throw std::invalid_argument("calmar: undefined on a monotone path (zero drawdown)");
    return mean_of(returns) * kTradingDaysPerYear / (-mdd);
}

[[nodiscard]] inline double rmse(std::span<const double> actual,
                                 std::span<const double> predicted) {
    if (actual.empty()) throw std::invalid_argument("rmse: empty input");
    if (actual.size() != predicted.size()) throw std::invalid_argument("rmse: length mismatch");
    double ss = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double d = actual[i] - predicted[i];
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(actual.size()));
}

/// Everything a strategy backtest reports. Undefined ratios (zero volatility
/// or zero drawdown) are carried as NaN rather than thrown, so one degenerate
/// path cannot abort a batch of experiments; calmar is finite iff mdd < 0.
struct BacktestReport {
    double sharpe = std::numeric_limits<double>::quiet_NaN();
    double calmar = std::numeric_limits<double>::quiet_NaN();
    double mdd = 0.0;
    double rmse = 0.0;
    std::vector<double> strat_returns;
    std::vector<double> cum_returns;
};

[[nodiscard]] inline BacktestReport backtest(std::span<const double> actual,
                                             std::span<const double> predicted) {
    BacktestReport rep;
    rep.rmse = rmse(actual, predicted);
    rep.strat_returns = strategy_returns(actual, predicted);
    rep.cum_returns = cumulative_returns(rep.strat_returns);
    rep.mdd = max_drawdown(rep.strat_returns);
    if (rep.strat_returns.size() >= 2 && std_of(rep.strat_returns) > 0.0)
        rep.sharpe = sharpe(rep.strat_returns);
    if (rep.mdd < 0.0) rep.calmar = calmar(rep.strat_returns);
    return rep;
}

/// Rescale returns so the realized annualized volatility (population std *
/// sqrt(252)) equals target_vol.
[[nodiscard]] inline std::vector<double> vol_scale(std::span<const double> returns,
                                                   double target_vol) {
    if (returns.size() < 2) throw std::invalid_argument("vol_scale: need at least 2 returns");
    if (target_vol < 0.0) throw std::invalid_argument("vol_scale: negative target volatility");
    const double realized = std_of(returns) * std::sqrt(kTradingDaysPerYear);
    if (!(realized > 0.0)) throw std::invalid_argument("vol_scale: zero realized volatility");
    const double factor = target_vol / realized;
    std::vector<double> out(returns.size());
    for (std::size_t i = 0; i < returns.size(); ++i) out[i] = returns[i] * factor;
    return out;
}

}  // namespace cgt
