#pragma once

#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cgt/cgan.hpp"
#include "cgt/rng.hpp"
#include "cgt/timeseries.hpp"

namespace cgt {

/// One train/validation pair of row indices.
struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
};

/// A full validation scheme over T rows: every fold's indices plus the
/// parameters that produced them, for audit and reproduction.
struct SplitPlan {
    std::vector<Fold> folds;
    std::string scheme_name;
    std::map<std::string, double> params;
};

namespace detail {

[[nodiscard]] inline std::vector<std::size_t> iota_range(std::size_t first, std::size_t last) {
    std::vector<std::size_t> out(last - first);
    std::iota(out.begin(), out.end(), first);
    return out;
}

/// Indices of [0, T) outside [lo, hi) and outside the guard zones of `gap`
/// rows on each side of it.
[[nodiscard]] inline std::vector<std::size_t> complement_with_gap(std::size_t T, std::size_t lo,
                                                                  std::size_t hi,
                                                                  std::size_t gap) {
    std::vector<std::size_t> out;
    const std::size_t left_end = lo > gap ? lo - gap : 0;
    const std::size_t right_begin = hi + gap;
    for (std::size_t i = 0; i < left_end; ++i) out.push_back(i);
    for (std::size_t i = right_begin; i < T; ++i) out.push_back(i);
    return out;
}

}  // namespace detail

/// In-sample "validation": a single fold whose validation set IS the training
/// set. The baseline every honest scheme is compared against.
[[nodiscard]] inline SplitPlan split_naive(std::size_t T) {
    if (T == 0) throw std::invalid_argument("split_naive: empty series");
    SplitPlan plan;
    plan.scheme_name = "naive";
    Fold f;
    f.train = detail::iota_range(0, T);
    f.val = f.train;
    plan.folds.push_back(std::move(f));
    return plan;
}

/// Single holdout: train on the first T-h rows, validate on the final h.
[[nodiscard]] inline SplitPlan split_one_split(std::size_t T, std::size_t h) {
    if (h == 0) throw std::invalid_argument("split_one_split: holdout must be non-empty");
    if (h >= T) throw std::invalid_argument("split_one_split: holdout must leave training rows");
    SplitPlan plan;
    plan.scheme_name = "one_split";
    plan.params["h"] = static_cast<double>(h);
    Fold f;
    f.train = detail::iota_range(0, T - h);
    f.val = detail::iota_range(T - h, T);
    plan.folds.push_back(std::move(f));
    return plan;
}

/// Walk-forward pairs: train on [s, s+window), validate on the following
/// window (clipped at T), advancing s by stride. The tail that cannot fill
/// another fold is unused.
[[nodiscard]] inline SplitPlan split_sliding(std::size_t T, std::size_t window,
                                             std::size_t stride) {
    if (window == 0 || stride == 0)
        throw std::invalid_argument("split_sliding: window and stride must be positive");
    if (T < window + stride)
        throw std::invalid_argument("split_sliding: series shorter than window + stride");
    const std::size_t fold_count = (T - window) / stride;
    SplitPlan plan;
    plan.scheme_name = "sliding";
    plan.params["window"] = static_cast<double>(window);
    plan.params["stride"] = static_cast<double>(stride);
    for (std::size_t i = 0; i < fold_count; ++i) {
        const std::size_t s = i * stride;
        Fold f;
        f.train = detail::iota_range(s, s + window);
        f.val = detail::iota_range(s + window, std::min(s + 2 * window, T));
        plan.folds.push_back(std::move(f));
    }
    return plan;
}

/// k-fold on contiguous blocks: [0, T) is cut into k consecutive segments
/// (the first T mod k get one extra row); each is validation once, the rest
/// train. Rows are never shuffled.
[[nodiscard]] inline SplitPlan split_kfold(std::size_t T, std::size_t k) {
    if (k < 2) throw std::invalid_argument("split_kfold: need at least 2 folds");
    if (k > T) throw std::invalid_argument("split_kfold: more folds than rows");
    SplitPlan plan;
    plan.scheme_name = "kfold";
    plan.params["k"] = static_cast<double>(k);
    const std::size_t base = T / k;
    const std::size_t extra = T % k;
    std::size_t lo = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t len = base + (i < extra ? 1 : 0);
        const std::size_t hi = lo + len;
        Fold f;
        f.val = detail::iota_range(lo, hi);
        f.train = detail::complement_with_gap(T, lo, hi, 0);
        plan.folds.push_back(std::move(f));
        lo = hi;
    }
    return plan;
}

/// Block cross-validation: consecutive blocks of `block` rows, each once as
/// validation with everything else as training. The final block absorbs any
/// remainder so validation folds cover [0, T) exactly once.
[[nodiscard]] inline SplitPlan split_block(std::size_t T, std::size_t block) {
    if (block == 0) throw std::invalid_argument("split_block: block must be positive");
    if (block > T) throw std::invalid_argument("split_block: block exceeds series length");
    const std::size_t fold_count = T / block;
    SplitPlan plan;
    plan.scheme_name = "block";
    plan.params["block"] = static_cast<double>(block);
    for (std::size_t i = 0; i < fold_count; ++i) {
        const std::size_t lo = i * block;
        const std::size_t hi = (i + 1 == fold_count) ? T : lo + block;
        Fold f;
        f.val = detail::iota_range(lo, hi);
        f.train = detail::complement_with_gap(T, lo, hi, 0);
        plan.folds.push_back(std::move(f));
    }
    return plan;
}

/// Block cross-validation with a guard zone: `gap` rows on each side of the
/// validation block are dropped from training (validation untouched), so
/// serial correlation cannot leak across the boundary. Edge blocks have only
/// one neighbouring gap.
[[nodiscard]] inline SplitPlan split_hv_block(std::size_t T, std::size_t block, std::size_t gap) {
    auto plan = split_block(T, block);
    plan.scheme_name = "hv_block";
    plan.params["gap"] = static_cast<double>(gap);
    for (auto& f : plan.folds) {
        const std::size_t lo = f.val.front();
        const std::size_t hi = f.val.back() + 1;
        f.train = detail::complement_with_gap(T, lo, hi, gap);
        if (f.train.empty())
            throw std::invalid_argument("split_hv_block: gap leaves an empty training set");
    }
    return plan;
}

[[nodiscard]] inline nlohmann::json split_plan_to_json(const SplitPlan& plan) {
    nlohmann::json j;
    j["scheme"] = plan.scheme_name;
    j["params"] = plan.params;
    j["folds"] = nlohmann::json::array();
    for (const auto& f : plan.folds) j["folds"].push_back({{"train", f.train}, {"val", f.val}});
    return j;
}

[[nodiscard]] inline SplitPlan split_plan_from_json(const nlohmann::json& j) {
    SplitPlan plan;
    plan.scheme_name = j.at("scheme").get<std::string>();
    plan.params = j.at("params").get<std::map<std::string, double>>();
    for (const auto& jf : j.at("folds")) {
        Fold f;
        f.train = jf.at("train").get<std::vector<std::size_t>>();
        f.val = jf.at("val").get<std::vector<std::size_t>>();
        plan.folds.push_back(std::move(f));
    }
    return plan;
}

/// One synthetic resample of the training series, already cut into the
/// in-sample and holdout segments used for validation.
struct SyntheticSplit {
    std::vector<double> train;
    std::vector<double> val;
};

/// Draw B recursive sample paths from a trained generator, each split at the
/// same point as a one-split holdout of the last h values. Path b uses the
/// b-th derived sub-seed, so the ensemble is reproducible and diverse.
[[nodiscard]] inline std::vector<SyntheticSplit> cgan_splits(const CganModel& model,
                                                             const ReturnSeries& conditioning,
                                                             int B, std::size_t h,
                                                             std::uint64_t seed) {
    if (B <= 0) throw std::invalid_argument("cgan_splits: need at least one path");
    const auto p = static_cast<std::size_t>(model.config.p);
    if (conditioning.size() <= p)
        throw std::invalid_argument("cgan_splits: conditioning shorter than lag window");
    const std::size_t path_len = conditioning.size() - p;
    if (h == 0) throw std::invalid_argument("cgan_splits: holdout must be non-empty");
    if (h >= path_len)
        throw std::invalid_argument("cgan_splits: holdout must leave synthetic training rows");
    std::vector<SyntheticSplit> out;
    out.reserve(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b) {
        const auto path = sample_path(model, conditioning, SampleMode::recursive,
                                      derive_seed(seed, static_cast<std::uint64_t>(b)));
        SyntheticSplit s;
        s.train.assign(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(path_len - h));
        s.val.assign(path.begin() + static_cast<std::ptrdiff_t>(path_len - h), path.end());
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace cgt
