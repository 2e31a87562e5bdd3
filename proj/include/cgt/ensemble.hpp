#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "cgt/bootstrap.hpp"
#include "cgt/cgan.hpp"
#include "cgt/learners.hpp"
#include "cgt/rng.hpp"
#include "cgt/timeseries.hpp"

namespace cgt {

// ---------------------------------------------------------------------------
// Resamplers: how each ensemble member obtains its own training series

/// Members train on stationary-bootstrap resamples of the real series.
struct BootstrapResampler {
    double expected_block = 20.0;
};

/// Members train on recursive sample paths drawn from a trained conditional
/// generator — the generative analogue of a bootstrap draw.
struct CganResampler {
    const CganModel* model = nullptr;
    std::string label = "cgan";  // reporting label, e.g. "cgan_small"
};

using Resampler = std::variant<BootstrapResampler, CganResampler>;

[[nodiscard]] inline std::string resampler_name(const Resampler& resampler) {
    if (std::holds_alternative<BootstrapResampler>(resampler)) return "stat_boot";
    return std::get<CganResampler>(resampler).label;
}

// ---------------------------------------------------------------------------
// Ensemble model

/// Bag of base learners aggregated by the arithmetic mean. All members share
/// one learner kind and hyperparameter set; they differ only through their
/// resampled training series and per-member fit seeds.
struct EnsembleModel {
    std::vector<FittedModel> members;
    std::string resampler;  // name of the resampler that produced the members
    LearnerSpec base_spec;
    int lags = 0;  // lag-window width of every member's feature matrix

    [[nodiscard]] std::size_t size() const { return members.size(); }
};

/// Fit B base learners, one per independent resample of `in_sample` (pass the
/// in-sample slice only; holdout data must never reach this function).
///
/// Seeds are split per member index, so the first 20 members of a B=100
/// ensemble are identical to the B=20 ensemble built from the same master
/// seed; incremental performance-vs-B curves therefore describe nested
/// ensembles. The lag matrix is rebuilt from scratch on every resampled
/// series and every learner refits its own scalers (bagging hygiene).
[[nodiscard]] inline EnsembleModel build_ensemble(const Resampler& resampler,
                                                  const LearnerSpec& base_spec,
                                                  const ReturnSeries& in_sample, int lags, int B,
                                                  std::uint64_t seed) {
    if (B < 1) throw std::invalid_argument("build_ensemble: B must be >= 1");
    if (lags < 1) throw std::invalid_argument("build_ensemble: lags must be >= 1");
    EnsembleModel ensemble;
    ensemble.resampler = resampler_name(resampler);
    ensemble.base_spec = base_spec;
    ensemble.lags = lags;
    ensemble.members.reserve(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b) {
        const std::uint64_t member_seed = derive_seed(seed, static_cast<std::uint64_t>(b));
        const std::uint64_t draw_seed = derive_seed(member_seed, 0);
        const std::uint64_t fit_seed = derive_seed(member_seed, 1);
        try {
            std::vector<double> series;
            if (const auto* boot = std::get_if<BootstrapResampler>(&resampler)) {
                const BootstrapSample draw =
                    stationary_bootstrap(in_sample.size(), boot->expected_block, draw_seed);
                series = apply_bootstrap(in_sample.returns, draw);
            } else {
                const auto& cgan = std::get<CganResampler>(resampler);
                if (cgan.model == nullptr)
                    throw std::invalid_argument("cgan resampler carries no model");
                series = sample_path(*cgan.model, in_sample, SampleMode::recursive, draw_seed);
            }
            ensemble.members.push_back(fit(base_spec, build_lagged(series, lags), fit_seed));
        } catch (const std::exception& e) {
            throw std::runtime_error("build_ensemble: member " + std::to_string(b) + ": " +
                                     e.what());
        }
    }
    return ensemble;
}

/// Mean prediction of the first `use_members` members. Evaluating at
/// use_members = 1, 2, ..., B yields the performance-per-added-member curve.
[[nodiscard]] inline Eigen::VectorXd ensemble_predict(const EnsembleModel& ensemble,
                                                      const Eigen::MatrixXd& features,
                                                      std::size_t use_members) {
    if (use_members == 0 || use_members > ensemble.members.size())
        throw std::invalid_argument("ensemble_predict: member count out of range");
    Eigen::VectorXd acc = predict(ensemble.members[0], features);
    for (std::size_t b = 1; b < use_members; ++b) acc += predict(ensemble.members[b], features);
    return acc / static_cast<double>(use_members);
}

[[nodiscard]] inline Eigen::VectorXd ensemble_predict(const EnsembleModel& ensemble,
                                                      const Eigen::MatrixXd& features) {
    return ensemble_predict(ensemble, features, ensemble.members.size());
}

// ---------------------------------------------------------------------------
// Why averaging helps: variance decomposition of member predictions

/// Empirical decomposition of ensemble prediction variance. With B members of
/// average variance sigma^2 and average pairwise correlation rho, the
/// variance of the member mean is approximately sigma^2*(1/B + (B-1)*rho/B),
/// which never exceeds sigma^2 and falls to sigma^2/B for independent
/// members.
struct VarianceDecomposition {
    double avg_variance = 0.0;       // sigma^2: mean over members of prediction variance
    double avg_correlation = 0.0;    // rho: mean pairwise Pearson correlation
    double ensemble_variance = 0.0;  // variance of the pointwise member mean
};

/// `member_predictions` holds one member per row (B x n). Population moments
/// throughout. Throws if any member's predictions are constant (its
/// correlation with the others is undefined).
[[nodiscard]] inline VarianceDecomposition variance_decomposition(
    const Eigen::MatrixXd& member_predictions) {
    const Eigen::Index B = member_predictions.rows();
    const Eigen::Index n = member_predictions.cols();
    if (B < 2) throw std::invalid_argument("variance_decomposition: need >= 2 members");
    if (n < 2) throw std::invalid_argument("variance_decomposition: need >= 2 prediction points");

    const Eigen::VectorXd row_means = member_predictions.rowwise().mean();
    const Eigen::MatrixXd centered = member_predictions.colwise() - row_means;
    const Eigen::VectorXd variances = centered.rowwise().squaredNorm() / static_cast<double>(n);
    for (Eigen::Index i = 0; i < B; ++i)
        if (!(variances(i) > 0.0))
            throw std::invalid_argument("variance_decomposition: member " + std::to_string(i) +
                                        " has zero prediction variance");

    VarianceDecomposition out;
    out.avg_variance = variances.mean();

    double corr_sum = 0.0;
    for (Eigen::Index i = 0; i < B; ++i)
        for (Eigen::Index j = i + 1; j < B; ++j) {
            const double cov = centered.row(i).dot(centered.row(j)) / static_cast<double>(n);
            corr_sum += cov / std::sqrt(variances(i) * variances(j));
        }
    out.avg_correlation = corr_sum / (static_cast<double>(B) * static_cast<double>(B - 1) / 2.0);

    const Eigen::RowVectorXd ensemble_path = member_predictions.colwise().mean();
    const double path_mean = ensemble_path.mean();
    out.ensemble_variance =
        (ensemble_path.array() - path_mean).square().sum() / static_cast<double>(n);
    return out;
}

}  // namespace cgt
