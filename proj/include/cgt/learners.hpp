#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "cgt/net.hpp"
#include "cgt/rng.hpp"
#include "cgt/timeseries.hpp"

namespace cgt {

enum class LearnerKind { ridge, reg_tree, gbt, mlp };

[[nodiscard]] inline std::string to_string(LearnerKind k) {
    switch (k) {
        case LearnerKind::ridge: return "ridge";
        case LearnerKind::reg_tree: return "reg_tree";
        case LearnerKind::gbt: return "gbt";
        case LearnerKind::mlp: return "mlp";
    }
    throw std::logic_error("unknown learner kind");
}

[[nodiscard]] inline LearnerKind learner_kind_from_string(const std::string& s) {
    if (s == "ridge") return LearnerKind::ridge;
    if (s == "reg_tree") return LearnerKind::reg_tree;
    if (s == "gbt") return LearnerKind::gbt;
    if (s == "mlp") return LearnerKind::mlp;
    throw std::invalid_argument("unknown learner kind: " + s);
}

/// A learner plus its hyperparameter assignment.
struct LearnerSpec {
    LearnerKind kind = LearnerKind::ridge;
    std::map<std::string, double> hyperparams;

    [[nodiscard]] double param(const std::string& key, double fallback) const {
        const auto it = hyperparams.find(key);
        return it == hyperparams.end() ? fallback : it->second;
    }
    [[nodiscard]] double required(const std::string& key) const {
        const auto it = hyperparams.find(key);
        if (it == hyperparams.end())
            throw std::invalid_argument(to_string(kind) + ": missing hyperparameter " + key);
        return it->second;
    }
};

// ---------------------------------------------------------------------------
// Fitted representations

struct RidgeModel {
    Eigen::VectorXd coef;                      // on z-scored features
    double intercept = 0.0;                    // mean target
    std::vector<ScalerParams> feature_scalers;  // per column
};

/// Flat binary tree; node 0 is the root, feature < 0 marks a leaf.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    double value = 0.0;
    int left = -1;
    int right = -1;
};

struct TreeModel {
    std::vector<TreeNode> nodes;
};

struct GbtModel {
    double init = 0.0;
    double learning_rate = 1.0;
    std::vector<TreeModel> trees;
};

struct MlpModel {
    nn::MlpNet net;
    std::vector<ScalerParams> feature_scalers;
    ScalerParams target_scaler;
};

struct FittedModel {
    LearnerKind kind = LearnerKind::ridge;
    std::variant<RidgeModel, TreeModel, GbtModel, MlpModel> model;
    Eigen::Index feature_width = 0;
};

namespace detail {

/// Z-score parameters that tolerate constant columns (unit scale instead of
/// throwing), so degenerate lag columns cannot abort a fit.
[[nodiscard]] inline ScalerParams tolerant_zscore(std::span<const double> values) {
    ScalerParams p{mean_of(values), std_of(values)};
    if (!(p.std > 0.0)) p.std = 1.0;
    return p;
}

[[nodiscard]] inline std::vector<ScalerParams> fit_column_scalers(const Eigen::MatrixXd& X) {
    std::vector<ScalerParams> out;
    out.reserve(static_cast<std::size_t>(X.cols()));
    std::vector<double> col(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        for (Eigen::Index i = 0; i < X.rows(); ++i) col[static_cast<std::size_t>(i)] = X(i, j);
        out.push_back(tolerant_zscore(col));
    }
    return out;
}

[[nodiscard]] inline Eigen::MatrixXd apply_column_scalers(
    const Eigen::MatrixXd& X, const std::vector<ScalerParams>& scalers) {
    if (static_cast<std::size_t>(X.cols()) != scalers.size())
        throw std::invalid_argument("feature width does not match fitted scalers");
    Eigen::MatrixXd out(X.rows(), X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j)
        out.col(j) = (X.col(j).array() - scalers[static_cast<std::size_t>(j)].mean) /
                     scalers[static_cast<std::size_t>(j)].std;
    return out;
}

/// Mean of a multiset computed in sorted order, so the result is identical
/// under any permutation of the rows that produced it. A constant multiset
/// returns that constant exactly (no summation round-off).
[[nodiscard]] inline double stable_mean(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    if (values.front() == values.back()) return values.front();
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc / static_cast<double>(values.size());
}

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double sse = 0.0;
};

/// Exhaustive best split: squared-error criterion, thresholds at midpoints
/// of consecutive distinct values. Candidates are scanned feature-ascending
/// then threshold-ascending with a strict comparison, so ties resolve to the
/// lowest feature index and lowest threshold.
[[nodiscard]] inline SplitChoice best_split(const Eigen::MatrixXd& X,
                                            const Eigen::VectorXd& y,
                                            const std::vector<int>& rows) {
    SplitChoice best;
    const auto n = rows.size();
    std::vector<std::pair<double, double>> order(n);  // (feature value, target)
    for (int j = 0; j < X.cols(); ++j) {
        for (std::size_t i = 0; i < n; ++i) order[i] = {X(rows[i], j), y(rows[i])};
        std::sort(order.begin(), order.end());
        // prefix sums in sorted order: deterministic under row permutation
        double sum_left = 0.0, sumsq_left = 0.0;
        double sum_right = 0.0, sumsq_right = 0.0;
        for (const auto& [xv, yv] : order) {
            sum_right += yv;
            sumsq_right += yv * yv;
        }
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double yv = order[i].second;
            sum_left += yv;
            sumsq_left += yv * yv;
            sum_right -= yv;
            sumsq_right -= yv * yv;
            if (order[i].first == order[i + 1].first) continue;  // no boundary here
            const auto nl = static_cast<double>(i + 1);
            const auto nr = static_cast<double>(n - i - 1);
            const double sse =
                (sumsq_left - sum_left * sum_left / nl) + (sumsq_right - sum_right * sum_right / nr);
            if (!best.found || sse < best.sse) {
                best.found = true;
                best.feature = j;
                best.threshold = 0.5 * (order[i].first + order[i + 1].first);
                best.sse = sse;
            }
        }
    }
    return best;
}

inline int grow_tree(TreeModel& tree, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const std::vector<int>& rows, int depth, int max_depth, int min_split) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    std::vector<double> targets;
    targets.reserve(rows.size());
    for (int r : rows) targets.push_back(y(r));
    tree.nodes[node_id].value = stable_mean(targets);

    const auto [tmin, tmax] = std::minmax_element(targets.begin(), targets.end());
    const bool pure = *tmin == *tmax;
    const bool depth_capped = max_depth > 0 && depth >= max_depth;
    if (static_cast<int>(rows.size()) < min_split || depth_capped || pure)
        return node_id;  // pure or unsplittable: leaf

    const auto choice = best_split(X, y, rows);
    if (!choice.found) return node_id;  // all features constant on this node

    std::vector<int> left_rows, right_rows;
    for (int r : rows)
        (X(r, choice.feature) <= choice.threshold ? left_rows : right_rows).push_back(r);

    tree.nodes[node_id].feature = choice.feature;
    tree.nodes[node_id].threshold = choice.threshold;
    const int left = grow_tree(tree, X, y, left_rows, depth + 1, max_depth, min_split);
    const int right = grow_tree(tree, X, y, right_rows, depth + 1, max_depth, min_split);
    tree.nodes[node_id].left = left;
    tree.nodes[node_id].right = right;
    return node_id;
}

[[nodiscard]] inline TreeModel fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                        int max_depth, int min_split) {
    TreeModel tree;
    std::vector<int> rows(static_cast<std::size_t>(X.rows()));
    std::iota(rows.begin(), rows.end(), 0);
    grow_tree(tree, X, y, rows, 0, max_depth, min_split);
    return tree;
}

[[nodiscard]] inline double tree_predict_row(const TreeModel& tree, const Eigen::MatrixXd& X,
                                             Eigen::Index row) {
    int node = 0;
    while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
        node = X(row, nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
    return tree.nodes[static_cast<std::size_t>(node)].value;
}

[[nodiscard]] inline Eigen::VectorXd tree_predict(const TreeModel& tree,
                                                  const Eigen::MatrixXd& X) {
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = tree_predict_row(tree, X, i);
    return out;
}

}  // namespace detail

/// Train one learner on a supervised lag dataset. Only the MLP consumes the
/// seed; the other three are deterministic functions of the data.
[[nodiscard]] inline FittedModel fit(const LearnerSpec& spec, const LaggedDataset& data,
                                     std::uint64_t seed) {
    if (data.rows() == 0) throw std::invalid_argument("fit: empty dataset");
    FittedModel fitted;
    fitted.kind = spec.kind;
    fitted.feature_width = data.features.cols();

    switch (spec.kind) {
        case LearnerKind::ridge: {
            const double alpha = spec.required("shrinkage");
            if (!(alpha > 0.0))
                throw std::invalid_argument("ridge: shrinkage must be positive");
            RidgeModel m;
            m.feature_scalers = detail::fit_column_scalers(data.features);
            const Eigen::MatrixXd Xs =
                detail::apply_column_scalers(data.features, m.feature_scalers);
            m.intercept = data.targets.mean();
            const Eigen::VectorXd yc = data.targets.array() - m.intercept;
            const Eigen::MatrixXd gram =
                Xs.transpose() * Xs +
                alpha * Eigen::MatrixXd::Identity(Xs.cols(), Xs.cols());
            m.coef = gram.ldlt().solve(Xs.transpose() * yc);
            fitted.model = std::move(m);
            break;
        }
        case LearnerKind::reg_tree: {
            const int min_split = static_cast<int>(spec.param("min_split", 2));
            const int max_depth = static_cast<int>(spec.param("max_depth", 0));  // 0 = unlimited
            if (min_split < 2) throw std::invalid_argument("reg_tree: min_split must be >= 2");
            fitted.model = detail::fit_tree(data.features, data.targets, max_depth, min_split);
            break;
        }
        case LearnerKind::gbt: {
            const int rounds = static_cast<int>(spec.param("trees", 100));
            const double lr = spec.param("learning_rate", 0.1);
            const int max_depth = static_cast<int>(spec.param("max_depth", 3));
            if (rounds < 1) throw std::invalid_argument("gbt: need at least one tree");
            if (!(lr > 0.0)) throw std::invalid_argument("gbt: learning rate must be positive");
            if (max_depth < 1) throw std::invalid_argument("gbt: max depth must be >= 1");
            GbtModel m;
            m.learning_rate = lr;
            {
                std::vector<double> t(data.targets.data(), data.targets.data() + data.targets.size());
                m.init = detail::stable_mean(std::move(t));
            }
            Eigen::VectorXd pred = Eigen::VectorXd::Constant(data.rows(), m.init);
            for (int r = 0; r < rounds; ++r) {
                const Eigen::VectorXd residual = data.targets - pred;
                auto tree = detail::fit_tree(data.features, residual, max_depth, 2);
                pred += lr * detail::tree_predict(tree, data.features);
                m.trees.push_back(std::move(tree));
            }
            fitted.model = std::move(m);
            break;
        }
        case LearnerKind::mlp: {
            const int neurons = static_cast<int>(spec.param("neurons", 200));
            const double decay = spec.param("weight_decay", 1e-5);
            if (neurons < 1) throw std::invalid_argument("mlp: need at least one neuron");
            if (decay < 0.0) throw std::invalid_argument("mlp: negative weight decay");
            MlpModel m;
            // canonical row order: scaler sums and minibatch draws then see
            // identical data however the caller ordered the rows
            std::vector<Eigen::Index> order(static_cast<std::size_t>(data.rows()));
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
                for (Eigen::Index j = 0; j < data.features.cols(); ++j)
                    if (data.features(a, j) != data.features(b, j))
                        return data.features(a, j) < data.features(b, j);
                return data.targets(a) < data.targets(b);
            });
            Eigen::MatrixXd Xo(data.rows(), data.features.cols());
            Eigen::VectorXd yo(data.rows());
            for (Eigen::Index i = 0; i < data.rows(); ++i) {
                Xo.row(i) = data.features.row(order[static_cast<std::size_t>(i)]);
                yo(i) = data.targets(order[static_cast<std::size_t>(i)]);
            }

            m.feature_scalers = detail::fit_column_scalers(Xo);
            {
                std::vector<double> t(yo.data(), yo.data() + yo.size());
                m.target_scaler = detail::tolerant_zscore(t);
            }
            const Eigen::MatrixXd Xs = detail::apply_column_scalers(Xo, m.feature_scalers);
            Eigen::VectorXd ys = (yo.array() - m.target_scaler.mean) / m.target_scaler.std;

            Rng init_rng(derive_seed(seed, 0));
            m.net = nn::make_mlp({static_cast<int>(data.features.cols()), neurons, 1},
                                 nn::Activation::tanh, nn::Activation::linear, decay, init_rng);
            nn::SgdConfig sgd;
            sgd.learning_rate = spec.param("learning_rate", 0.01);
            sgd.batch_size = static_cast<int>(spec.param("batch", 252));
            sgd.epochs = static_cast<int>(spec.param("epochs", 200));
            sgd.seed = derive_seed(seed, 1);
            nn::train_regressor(m.net, Xs, ys, sgd);
            fitted.model = std::move(m);
            break;
        }
    }
    return fitted;
}

/// Deterministic, side-effect-free prediction on a feature matrix whose
/// columns match the training layout.
[[nodiscard]] inline Eigen::VectorXd predict(const FittedModel& fitted,
                                             const Eigen::MatrixXd& features) {
    if (features.cols() != fitted.feature_width)
        throw std::invalid_argument("predict: feature width mismatch");
    switch (fitted.kind) {
        case LearnerKind::ridge: {
            const auto& m = std::get<RidgeModel>(fitted.model);
            const Eigen::MatrixXd Xs = detail::apply_column_scalers(features, m.feature_scalers);
            return (Xs * m.coef).array() + m.intercept;
        }
        case LearnerKind::reg_tree:
            return detail::tree_predict(std::get<TreeModel>(fitted.model), features);
        case LearnerKind::gbt: {
            const auto& m = std::get<GbtModel>(fitted.model);
            Eigen::VectorXd out = Eigen::VectorXd::Constant(features.rows(), m.init);
            for (const auto& tree : m.trees)
                out += m.learning_rate * detail::tree_predict(tree, features);
            return out;
        }
        case LearnerKind::mlp: {
            const auto& m = std::get<MlpModel>(fitted.model);
            const Eigen::MatrixXd Xs = detail::apply_column_scalers(features, m.feature_scalers);
            const Eigen::MatrixXd out = nn::forward(m.net, Xs.transpose()).output();
            return (out.row(0).transpose().array() * m.target_scaler.std) + m.target_scaler.mean;
        }
    }
    throw std::logic_error("unknown learner kind");
}

}  // namespace cgt
