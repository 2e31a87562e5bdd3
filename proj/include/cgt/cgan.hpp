#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cgt/net.hpp"
#include "cgt/rng.hpp"
#include "cgt/timeseries.hpp"

namespace cgt {

/// Size class of the generator/discriminator hidden layer.
enum class NetSize { small, medium, large };

[[nodiscard]] inline int hidden_neurons(NetSize size) {
    switch (size) {
        case NetSize::small: return 5;
        case NetSize::medium: return 100;
        case NetSize::large: return 500;
    }
    throw std::logic_error("unknown net size");
}

[[nodiscard]] inline std::string to_string(NetSize size) {
    switch (size) {
        case NetSize::small: return "small";
        case NetSize::medium: return "medium";
        case NetSize::large: return "large";
    }
    throw std::logic_error("unknown net size");
}

[[nodiscard]] inline NetSize net_size_from_string(const std::string& s) {
    if (s == "small") return NetSize::small;
    if (s == "medium") return NetSize::medium;
    if (s == "large") return NetSize::large;
    throw std::invalid_argument("unknown net size '" + s + "' (small|medium|large)");
}

struct CganConfig {
    int p = 252;           // conditioning lags
    int noise_dim = 252;   // standard-normal noise inputs, sized to match p
    int gen_hidden = 100;  // neurons in the single generator hidden layer
    int disc_hidden = 100;
    int epochs = 20000;      // one D step + one G step per epoch
    int batch = 252;         // minibatch rows L
    int snap = 200;          // snapshot/evaluation period in epochs
    int eval_samples = 50;   // C teacher-forced paths averaged per snapshot
    nn::SgdConfig sgd{.learning_rate = 0.01, .batch_size = 252, .epochs = 1, .seed = 0};
    // Generator step size as a fraction of the discriminator's. 1.0 gives the
    // shared-rate protocol; smaller values let the discriminator stay close to
    // optimal between generator moves, damping the adversarial oscillation
    // (two-timescale update rule).
    double gen_lr_scale = 1.0;

    void validate() const {
        if (p <= 0 || noise_dim <= 0 || gen_hidden <= 0 || disc_hidden <= 0 || epochs <= 0 ||
            batch <= 0 || snap <= 0 || eval_samples <= 0 || sgd.learning_rate <= 0.0 ||
            gen_lr_scale <= 0.0)
            throw std::invalid_argument("cgan config values must be positive");
    }
};

/// Table-driven default configuration for a given size class.
[[nodiscard]] inline CganConfig make_cgan_config(NetSize size) {
    CganConfig cfg;
    cfg.gen_hidden = hidden_neurons(size);
    cfg.disc_hidden = hidden_neurons(size);
    return cfg;
}

/// Generator/discriminator pair captured every `snap` epochs.
struct GeneratorSnapshot {
    nn::MlpNet generator;      // input [noise; lags], linear scalar output
    nn::MlpNet discriminator;  // input [y; lags], sigmoid scalar output
    int epoch = 0;
    double rmse = 0.0;
    ScalerParams feature_scaler;  // fit on lag-matrix entries of training data
    ScalerParams target_scaler;   // fit on training targets
};

struct CganModel {
    GeneratorSnapshot selected;
    std::vector<std::pair<int, double>> rmse_curve;  // (epoch, mean sample RMSE)
    CganConfig config;
    std::uint64_t seed = 0;
};

enum class SampleMode { teacher_forced, recursive };

[[nodiscard]] inline std::string to_string(SampleMode m) {
    return m == SampleMode::teacher_forced ? "teacher_forced" : "recursive";
}

namespace detail {

/// Scaled supervised view of the training series: conditioning columns are
/// batch samples (p x rows), targets scaled separately.
struct ScaledLagged {
    Eigen::MatrixXd conditioning;  // p x rows, feature-scaled, most recent lag first
    Eigen::VectorXd targets;       // rows, target-scaled
    ScalerParams feature_scaler;
    ScalerParams target_scaler;
};

[[nodiscard]] inline ScaledLagged scale_lagged(const LaggedDataset& raw) {
    ScaledLagged out;
    const std::span<const double> feat_view(raw.features.data(),
                                            static_cast<std::size_t>(raw.features.size()));
    const std::span<const double> tgt_view(raw.targets.data(),
                                           static_cast<std::size_t>(raw.targets.size()));
    out.feature_scaler = fit_zscore(feat_view);
    out.target_scaler = fit_zscore(tgt_view);
    out.conditioning =
        ((raw.features.array() - out.feature_scaler.mean) / out.feature_scaler.std)
            .matrix()
            .transpose();
    out.targets = ((raw.targets.array() - out.target_scaler.mean) / out.target_scaler.std).matrix();
    return out;
}

[[nodiscard]] inline Eigen::MatrixXd draw_noise(int noise_dim, Eigen::Index cols, Rng& rng) {
    Eigen::MatrixXd z(noise_dim, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (int r = 0; r < noise_dim; ++r) z(r, c) = rng.normal();
    return z;
}

/// Stack rows of `top` above `bottom` (shared column/batch dimension).
[[nodiscard]] inline Eigen::MatrixXd vstack(const Eigen::MatrixXd& top,
                                            const Eigen::MatrixXd& bottom) {
    Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
    out.topRows(top.rows()) = top;
    out.bottomRows(bottom.rows()) = bottom;
    return out;
}

}  // namespace detail

/// Draw one conditional sample path in return units. `teacher_forced`
/// conditions every step on the real lags of `conditioning` (pointwise
/// comparable to it); `recursive` seeds the lag window with the FIRST p real
/// values and then feeds generated values back in. Output length is
/// conditioning.size() - p either way.
[[nodiscard]] inline std::vector<double> sample_path(const GeneratorSnapshot& snapshot, int p,
                                                     int noise_dim,
                                                     std::span<const double> conditioning,
                                                     SampleMode mode, std::uint64_t seed) {
    if (static_cast<int>(conditioning.size()) <= p)
        throw std::invalid_argument("sample_path: conditioning shorter than lag window");
    Rng rng(seed);
    const auto& fs = snapshot.feature_scaler;
    const auto& ts = snapshot.target_scaler;
    const std::size_t total = conditioning.size();
    const auto steps = total - static_cast<std::size_t>(p);
    std::vector<double> out(steps);

    // lag window in feature-scaled units, most recent first
    Eigen::VectorXd window(p);
    for (int j = 0; j < p; ++j)
        window(j) = zscore_apply(fs, conditioning[static_cast<std::size_t>(p - 1 - j)]);

    Eigen::MatrixXd input(noise_dim + p, 1);
    for (std::size_t t = 0; t < steps; ++t) {
        for (int r = 0; r < noise_dim; ++r) input(r, 0) = rng.normal();
        input.bottomRows(p).col(0) = window;
        const double y_scaled = nn::forward(snapshot.generator, input).output()(0, 0);
        out[t] = zscore_invert(ts, y_scaled);

        const double next = (mode == SampleMode::teacher_forced)
                                ? conditioning[static_cast<std::size_t>(p) + t]
                                : out[t];
        // shift window: new value becomes lag 1
        for (int j = p - 1; j > 0; --j) window(j) = window(j - 1);
        window(0) = zscore_apply(fs, next);
    }
    return out;
}

[[nodiscard]] inline std::vector<double> sample_path(const CganModel& model,
                                                     const ReturnSeries& conditioning,
                                                     SampleMode mode, std::uint64_t seed) {
    return sample_path(model.selected, model.config.p, model.config.noise_dim,
                       conditioning.returns, mode, seed);
}

/// Goodness-of-fit of one snapshot: mean over C teacher-forced paths of
/// sqrt( sum_{t=p+1}^{T} (y_t - y*_t)^2 / (T - p - 1) ).
[[nodiscard]] inline double sample_rmse(const GeneratorSnapshot& snapshot, int p, int noise_dim,
                                        std::span<const double> returns, int C,
                                        std::uint64_t seed) {
    if (C <= 0) throw std::invalid_argument("sample_rmse: C must be positive");
    const auto T = returns.size();
    if (static_cast<int>(T) <= p + 1)
        throw std::invalid_argument("sample_rmse: series shorter than p+2");
    const double denom = static_cast<double>(T) - p - 1.0;
    double total = 0.0;
    for (int c = 0; c < C; ++c) {
        const auto path = sample_path(snapshot, p, noise_dim, returns,
                                      SampleMode::teacher_forced, derive_seed(seed, c));
        double ss = 0.0;
        for (std::size_t t = 0; t < path.size(); ++t) {
            const double diff = returns[static_cast<std::size_t>(p) + t] - path[t];
            ss += diff * diff;
        }
        total += std::sqrt(ss / denom);
    }
    return total / C;
}

[[nodiscard]] inline double sample_rmse(const CganModel& model, const ReturnSeries& returns, int C,
                                        std::uint64_t seed) {
    return sample_rmse(model.selected, model.config.p, model.config.noise_dim, returns.returns, C,
                       seed);
}

/// Mean discriminator verdict on real pairs and freshly generated fakes;
/// both approach 1/2 at the adversarial equilibrium.
struct DiscriminatorBalance {
    double mean_real = 0.0;
    double mean_fake = 0.0;
};

[[nodiscard]] inline DiscriminatorBalance discriminator_balance(const CganModel& model,
                                                                const ReturnSeries& returns,
                                                                std::uint64_t seed) {
    const auto raw = build_lagged(returns.returns, model.config.p);
    auto scaled = detail::scale_lagged(raw);
    // evaluate with the scalers stored at training time
    scaled.conditioning =
        ((raw.features.array() - model.selected.feature_scaler.mean) /
         model.selected.feature_scaler.std)
            .matrix()
            .transpose();
    scaled.targets = ((raw.targets.array() - model.selected.target_scaler.mean) /
                      model.selected.target_scaler.std)
                         .matrix();
    Rng rng(seed);
    const Eigen::MatrixXd real_in =
        detail::vstack(scaled.targets.transpose(), scaled.conditioning);
    const Eigen::MatrixXd z =
        detail::draw_noise(model.config.noise_dim, scaled.conditioning.cols(), rng);
    const Eigen::MatrixXd fake =
        nn::forward(model.selected.generator, detail::vstack(z, scaled.conditioning)).output();
    const Eigen::MatrixXd fake_in = detail::vstack(fake, scaled.conditioning);
    DiscriminatorBalance b;
    b.mean_real = nn::forward(model.selected.discriminator, real_in).output().mean();
    b.mean_fake = nn::forward(model.selected.discriminator, fake_in).output().mean();
    return b;
}

/// Adversarial training with periodic snapshot selection.
///
/// Each epoch: one discriminator step (ascending mean log D(y|v) +
/// log(1 - D(G(z|v)|v)) on L rows drawn with replacement), then one
/// generator step on the same conditioning rows with fresh noise
/// (ascending mean log D(G(z|v)|v), the non-saturating form). Every
/// `snap` epochs the pair is snapshotted and scored by `sample_rmse`
/// with a dedicated evaluation RNG stream; the snapshot minimizing the
/// curve (earliest on ties) is returned.
[[nodiscard]] inline CganModel train_and_select(const ReturnSeries& returns,
                                                const CganConfig& config, std::uint64_t seed) {
    config.validate();
    if (static_cast<int>(returns.size()) <= config.p + 1)
        throw std::invalid_argument("train_and_select: need more than p+1 observations");

    const auto raw = build_lagged(returns.returns, config.p);
    const auto scaled = detail::scale_lagged(raw);
    const auto rows = scaled.targets.size();
    const int L = config.batch;
    const double lr = config.sgd.learning_rate;

    Rng init_g(derive_seed(seed, 0));
    Rng init_d(derive_seed(seed, 1));
    Rng train_rng(derive_seed(seed, 2));

    nn::MlpNet gen = nn::make_mlp({config.noise_dim + config.p, config.gen_hidden, 1},
                                  nn::Activation::relu, nn::Activation::linear, 0.0, init_g);
    nn::MlpNet disc = nn::make_mlp({1 + config.p, config.disc_hidden, 1}, nn::Activation::relu,
                                   nn::Activation::sigmoid, 0.0, init_d);

    CganModel model;
    model.config = config;
    model.seed = seed;

    Eigen::MatrixXd cond(config.p, L);
    Eigen::MatrixXd real_y(1, L);

    int best_index = -1;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        // minibatch: L lag-window rows with replacement
        for (int c = 0; c < L; ++c) {
            const auto idx =
                static_cast<Eigen::Index>(train_rng.uniform_index(static_cast<std::uint64_t>(rows)));
            cond.col(c) = scaled.conditioning.col(idx);
            real_y(0, c) = scaled.targets(idx);
        }

        // --- discriminator step ---
        const Eigen::MatrixXd z_d = detail::draw_noise(config.noise_dim, L, train_rng);
        const Eigen::MatrixXd fake_y =
            nn::forward(gen, detail::vstack(z_d, cond)).output();  // no G update here

        const auto real_pass = nn::forward(disc, detail::vstack(real_y, cond));
        // minimize -(1/L) sum log D(real): upstream = -1/(L*D)
        const Eigen::MatrixXd up_real = (-1.0 / (L * real_pass.output().array())).matrix();
        const auto grads_real = nn::backward(disc, real_pass, up_real);

        const auto fake_pass = nn::forward(disc, detail::vstack(fake_y, cond));
        // minimize -(1/L) sum log(1-D(fake)): upstream = +1/(L*(1-D))
        const Eigen::MatrixXd up_fake = (1.0 / (L * (1.0 - fake_pass.output().array()))).matrix();
        const auto grads_fake = nn::backward(disc, fake_pass, up_fake);

        for (std::size_t l = 0; l < disc.layer_count(); ++l) {
            disc.weights[l] -= lr * (grads_real.weight_grads[l] + grads_fake.weight_grads[l]);
            disc.biases[l] -= lr * (grads_real.bias_grads[l] + grads_fake.bias_grads[l]);
        }

        // --- generator step: same conditioning rows, fresh noise ---
        const Eigen::MatrixXd z_g = detail::draw_noise(config.noise_dim, L, train_rng);
        const auto gen_pass = nn::forward(gen, detail::vstack(z_g, cond));
        const auto disc_pass = nn::forward(disc, detail::vstack(gen_pass.output(), cond));
        // minimize -(1/L) sum log D(fake): upstream = -1/(L*D)
        const Eigen::MatrixXd up_gen = (-1.0 / (L * disc_pass.output().array())).matrix();
        const auto disc_grads = nn::backward(disc, disc_pass, up_gen);  // discriminator frozen
        const auto gen_grads = nn::backward(gen, gen_pass, disc_grads.input_grad.topRows(1));
        nn::sgd_step(gen, gen_grads, lr * config.gen_lr_scale);

        if (!nn::all_finite(gen) || !nn::all_finite(disc))
            throw nn::TrainingDivergence(epoch, "non-finite cgan parameters");

        if (epoch % config.snap == 0) {
            GeneratorSnapshot snap;
            snap.generator = gen;
            snap.discriminator = disc;
            snap.epoch = epoch;
            snap.feature_scaler = scaled.feature_scaler;
            snap.target_scaler = scaled.target_scaler;
            const auto k = model.rmse_curve.size();
            snap.rmse = sample_rmse(snap, config.p, config.noise_dim, returns.returns,
                                    config.eval_samples, derive_seed(seed, 1000 + k));
            if (!std::isfinite(snap.rmse))
                throw nn::TrainingDivergence(epoch, "non-finite sample RMSE");
            model.rmse_curve.emplace_back(epoch, snap.rmse);
            if (best_index < 0 || snap.rmse < model.selected.rmse) {
                model.selected = std::move(snap);
                best_index = static_cast<int>(k);
            }
        }
    }
    if (best_index < 0)
        throw std::invalid_argument("train_and_select: snap exceeds epochs, nothing snapshotted");
    return model;
}

}  // namespace cgt
