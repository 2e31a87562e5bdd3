#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <vector>

#include "cgt/learners.hpp"
#include "cgt/rng.hpp"

using namespace cgt;
using Catch::Matchers::WithinAbs;

namespace {

LaggedDataset random_dataset(Eigen::Index n, Eigen::Index p, std::uint64_t seed,
                             double noise = 0.1) {
    Rng rng(seed);
    LaggedDataset ds;
    ds.lag_count = static_cast<int>(p);
    ds.features.resize(n, p);
    ds.targets.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double y = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            ds.features(i, j) = rng.normal();
            y += (j % 2 == 0 ? 0.5 : -0.3) * ds.features(i, j);
        }
        ds.targets(i) = y + noise * rng.normal();
    }
    return ds;
}

LaggedDataset permuted(const LaggedDataset& ds, std::uint64_t seed) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(ds.rows()));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.uniform_index(i)]);
    LaggedDataset out;
    out.lag_count = ds.lag_count;
    out.features.resize(ds.features.rows(), ds.features.cols());
    out.targets.resize(ds.targets.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        out.features.row(static_cast<Eigen::Index>(i)) = ds.features.row(order[i]);
        out.targets(static_cast<Eigen::Index>(i)) = ds.targets(order[i]);
    }
    return out;
}

double r_squared(const Eigen::VectorXd& actual, const Eigen::VectorXd& pred) {
    const double mean = actual.mean();
    const double ss_tot = (actual.array() - mean).square().sum();
    const double ss_res = (actual - pred).squaredNorm();
    return 1.0 - ss_res / ss_tot;
}

}  // namespace

TEST_CASE("learner kinds round-trip through strings") {
    for (auto k : {LearnerKind::ridge, LearnerKind::reg_tree, LearnerKind::gbt, LearnerKind::mlp})
        CHECK(learner_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(learner_kind_from_string("forest"), std::invalid_argument);
}

TEST_CASE("ridge matches an independent normal-equations oracle") {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto ds = random_dataset(40, 5, 100 + s);
        const double alpha = 0.3;
        const auto fitted = fit({LearnerKind::ridge, {{"shrinkage", alpha}}}, ds, 0);
        const auto& m = std::get<RidgeModel>(fitted.model);

        // oracle: explicit inverse on independently standardized features
        Eigen::MatrixXd Xs(ds.features.rows(), ds.features.cols());
        for (Eigen::Index j = 0; j < ds.features.cols(); ++j) {
            const double mean = ds.features.col(j).mean();
            const double sd = std::sqrt((ds.features.col(j).array() - mean).square().sum() /
                                        static_cast<double>(ds.features.rows()));
            Xs.col(j) = (ds.features.col(j).array() - mean) / sd;
        }
        const double ybar = ds.targets.mean();
        const Eigen::MatrixXd gram =
            Xs.transpose() * Xs + alpha * Eigen::MatrixXd::Identity(5, 5);
        const Eigen::VectorXd beta = gram.inverse() * Xs.transpose() *
                                     (ds.targets.array() - ybar).matrix();
        REQUIRE(m.coef.size() == beta.size());
        for (Eigen::Index j = 0; j < beta.size(); ++j)
            CHECK_THAT(m.coef(j), WithinAbs(beta(j), 1e-8));
        CHECK_THAT(m.intercept, WithinAbs(ybar, 1e-12));
    }
}

TEST_CASE("huge shrinkage collapses ridge to the mean predictor") {
    const auto ds = random_dataset(60, 4, 7);
    const auto fitted = fit({LearnerKind::ridge, {{"shrinkage", 1e12}}}, ds, 0);
    const auto& m = std::get<RidgeModel>(fitted.model);
    for (Eigen::Index j = 0; j < m.coef.size(); ++j) CHECK(std::abs(m.coef(j)) < 1e-9);
    const auto pred = predict(fitted, ds.features);
    for (Eigen::Index i = 0; i < pred.size(); ++i)
        CHECK_THAT(pred(i), WithinAbs(ds.targets.mean(), 1e-6));
}

TEST_CASE("ridge recovers an exactly linear map") {
    const auto ds = random_dataset(200, 6, 11, /*noise=*/0.0);
    const auto fitted = fit({LearnerKind::ridge, {{"shrinkage", 1e-5}}}, ds, 0);
    CHECK(r_squared(ds.targets, predict(fitted, ds.features)) > 0.999);
}

TEST_CASE("permuting feature columns permutes ridge coefficients") {
    const auto ds = random_dataset(50, 3, 13);
    LaggedDataset swapped = ds;
    swapped.features.col(0) = ds.features.col(1);
    swapped.features.col(1) = ds.features.col(0);
    const LearnerSpec spec{LearnerKind::ridge, {{"shrinkage", 0.05}}};
    const auto a = std::get<RidgeModel>(fit(spec, ds, 0).model);
    const auto b = std::get<RidgeModel>(fit(spec, swapped, 0).model);
    CHECK_THAT(a.coef(0), WithinAbs(b.coef(1), 1e-10));
    CHECK_THAT(a.coef(1), WithinAbs(b.coef(0), 1e-10));
    CHECK_THAT(a.coef(2), WithinAbs(b.coef(2), 1e-10));
}

TEST_CASE("ridge rejects missing or non-positive shrinkage") {
    const auto ds = random_dataset(20, 2, 17);
    CHECK_THROWS_AS(fit({LearnerKind::ridge, {}}, ds, 0), std::invalid_argument);
    CHECK_THROWS_AS(fit({LearnerKind::ridge, {{"shrinkage", 0.0}}}, ds, 0),
                    std::invalid_argument);
}

TEST_CASE("unlimited tree memorizes distinct inputs") {
    const auto ds = random_dataset(30, 3, 19);
    const auto fitted = fit({LearnerKind::reg_tree, {}}, ds, 0);
    const auto pred = predict(fitted, ds.features);
    for (Eigen::Index i = 0; i < pred.size(); ++i)
        CHECK_THAT(pred(i), WithinAbs(ds.targets(i), 1e-12));
}

TEST_CASE("tree on constant targets is a single exact leaf") {
    auto ds = random_dataset(25, 3, 23);
    ds.targets.setConstant(0.0125);
    const auto fitted = fit({LearnerKind::reg_tree, {}}, ds, 0);
    CHECK(std::get<TreeModel>(fitted.model).nodes.size() == 1);
    const auto pred = predict(fitted, ds.features);
    for (Eigen::Index i = 0; i < pred.size(); ++i) CHECK(pred(i) == 0.0125);
}

TEST_CASE("depth-one tree is a stump") {
    const auto ds = random_dataset(80, 4, 29);
    const auto fitted = fit({LearnerKind::reg_tree, {{"max_depth", 1}}}, ds, 0);
    const auto& tree = std::get<TreeModel>(fitted.model);
    REQUIRE(tree.nodes.size() == 3);
    CHECK(tree.nodes[0].feature >= 0);
    CHECK(tree.nodes[1].feature < 0);
    CHECK(tree.nodes[2].feature < 0);
    // stump prediction takes exactly two values
    const auto pred = predict(fitted, ds.features);
    std::vector<double> uniq(pred.data(), pred.data() + pred.size());
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    CHECK(uniq.size() == 2);
}

TEST_CASE("tree fits are invariant to training row order") {
    const auto ds = random_dataset(60, 3, 31);
    const auto shuffled = permuted(ds, 5);
    const auto a = fit({LearnerKind::reg_tree, {}}, ds, 0);
    const auto b = fit({LearnerKind::reg_tree, {}}, shuffled, 0);
    const auto probe = random_dataset(40, 3, 37).features;
    const Eigen::VectorXd pa = predict(a, probe);
    const Eigen::VectorXd pb = predict(b, probe);
    for (Eigen::Index i = 0; i < pa.size(); ++i) CHECK(pa(i) == pb(i));  // bitwise
}

TEST_CASE("single-round unit-rate boosting equals a stump fit") {
    const auto ds = random_dataset(70, 3, 41);
    const auto gbt = fit(
        {LearnerKind::gbt, {{"trees", 1}, {"learning_rate", 1.0}, {"max_depth", 1}}}, ds, 0);
    const auto stump = fit({LearnerKind::reg_tree, {{"max_depth", 1}}}, ds, 0);
    const auto probe = random_dataset(30, 3, 43).features;
    const Eigen::VectorXd pg = predict(gbt, probe);
    const Eigen::VectorXd ps = predict(stump, probe);
    for (Eigen::Index i = 0; i < pg.size(); ++i) CHECK_THAT(pg(i), WithinAbs(ps(i), 1e-12));
}

TEST_CASE("boosting training loss is non-increasing round by round") {
    const auto ds = random_dataset(90, 4, 47);
    const auto fitted = fit(
        {LearnerKind::gbt, {{"trees", 30}, {"learning_rate", 0.1}, {"max_depth", 2}}}, ds, 0);
    const auto& m = std::get<GbtModel>(fitted.model);
    REQUIRE(m.trees.size() == 30);
    Eigen::VectorXd pred = Eigen::VectorXd::Constant(ds.rows(), m.init);
    double prev_mse = (ds.targets - pred).squaredNorm();
    for (const auto& tree : m.trees) {
        pred += m.learning_rate * detail::tree_predict(tree, ds.features);
        const double mse = (ds.targets - pred).squaredNorm();
        CHECK(mse <= prev_mse + 1e-12);
        prev_mse = mse;
    }
}

TEST_CASE("every learner reproduces a constant target") {
    auto ds = random_dataset(40, 3, 53);
    ds.targets.setConstant(0.5);
    for (const auto& spec : {LearnerSpec{LearnerKind::ridge, {{"shrinkage", 0.01}}},
                             LearnerSpec{LearnerKind::reg_tree, {}},
                             LearnerSpec{LearnerKind::gbt, {{"trees", 10}}},
                             LearnerSpec{LearnerKind::mlp,
                                         {{"neurons", 16}, {"epochs", 5000}, {"learning_rate", 0.1}}}}) {
        const auto pred = predict(fit(spec, ds, 1), ds.features);
        const double tol = spec.kind == LearnerKind::mlp ? 0.05 : 1e-10;
        for (Eigen::Index i = 0; i < pred.size(); ++i) CHECK_THAT(pred(i), WithinAbs(0.5, tol));
    }
}

TEST_CASE("mlp learner is seed-deterministic and row-order invariant") {
    const auto ds = random_dataset(50, 3, 59);
    const LearnerSpec spec{LearnerKind::mlp, {{"neurons", 8}, {"epochs", 40}}};
    const auto probe = random_dataset(20, 3, 61).features;
    const Eigen::VectorXd a = predict(fit(spec, ds, 5), probe);
    const Eigen::VectorXd b = predict(fit(spec, ds, 5), probe);
    const Eigen::VectorXd c = predict(fit(spec, ds, 6), probe);
    const Eigen::VectorXd d = predict(fit(spec, permuted(ds, 9), 5), probe);
    CHECK(a == b);
    CHECK(a != c);
    CHECK(a == d);  // canonical internal ordering
}

TEST_CASE("mlp learns a linear signal well enough to rank") {
    const auto ds = random_dataset(300, 4, 67, /*noise=*/0.05);
    const auto fitted =
        fit({LearnerKind::mlp, {{"neurons", 32}, {"epochs", 300}}}, ds, 3);
    CHECK(r_squared(ds.targets, predict(fitted, ds.features)) > 0.8);
}

TEST_CASE("prediction rejects feature width mismatch and fit rejects empties") {
    const auto ds = random_dataset(30, 3, 71);
    const auto fitted = fit({LearnerKind::reg_tree, {}}, ds, 0);
    CHECK_THROWS_AS(predict(fitted, Eigen::MatrixXd::Zero(4, 2)), std::invalid_argument);
    LaggedDataset empty;
    empty.features.resize(0, 3);
    empty.targets.resize(0);
    CHECK_THROWS_AS(fit({LearnerKind::reg_tree, {}}, empty, 0), std::invalid_argument);
    CHECK_THROWS_AS(fit({LearnerKind::gbt, {{"trees", 0}}}, ds, 0), std::invalid_argument);
    CHECK_THROWS_AS(fit({LearnerKind::mlp, {{"neurons", 0}}}, ds, 0), std::invalid_argument);
}
