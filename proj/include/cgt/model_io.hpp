#pragma once

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cgt/cgan.hpp"
#include "cgt/net.hpp"

namespace cgt {

namespace detail {

[[nodiscard]] inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

[[nodiscard]] inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    const auto rows = j.size();
    if (rows == 0) throw std::invalid_argument("matrix json: empty");
    const auto cols = j.at(0).size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        if (j.at(r).size() != cols) throw std::invalid_argument("matrix json: ragged rows");
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j.at(r).at(c);
    }
    return m;
}

}  // namespace detail

[[nodiscard]] inline nlohmann::json net_to_json(const nn::MlpNet& net) {
    nlohmann::json j;
    j["layer_dims"] = net.layer_dims;
    j["hidden_activation"] = nn::to_string(net.hidden_activation);
    j["output_activation"] = nn::to_string(net.output_activation);
    j["weight_decay"] = net.weight_decay;
    j["weights"] = nlohmann::json::array();
    j["biases"] = nlohmann::json::array();
    for (const auto& w : net.weights) j["weights"].push_back(detail::matrix_to_json(w));
    for (const auto& b : net.biases) {
        nlohmann::json arr = nlohmann::json::array();
        for (Eigen::Index i = 0; i < b.size(); ++i) arr.push_back(b(i));
        j["biases"].push_back(std::move(arr));
    }
    return j;
}

[[nodiscard]] inline nn::MlpNet net_from_json(const nlohmann::json& j) {
    nn::MlpNet net;
    net.layer_dims = j.at("layer_dims").get<std::vector<int>>();
    net.hidden_activation = nn::activation_from_string(j.at("hidden_activation"));
    net.output_activation = nn::activation_from_string(j.at("output_activation"));
    net.weight_decay = j.at("weight_decay");
    for (const auto& wj : j.at("weights")) net.weights.push_back(detail::matrix_from_json(wj));
    for (const auto& bj : j.at("biases")) {
        Eigen::VectorXd b(static_cast<Eigen::Index>(bj.size()));
        for (std::size_t i = 0; i < bj.size(); ++i) b(static_cast<Eigen::Index>(i)) = bj.at(i);
        net.biases.push_back(std::move(b));
    }
    if (net.weights.size() + 1 != net.layer_dims.size() ||
        net.biases.size() != net.weights.size())
        throw std::invalid_argument("net json: layer structure inconsistent");
    return net;
}

[[nodiscard]] inline nlohmann::json scaler_to_json(const ScalerParams& p) {
    return {{"mean", p.mean}, {"std", p.std}};
}

[[nodiscard]] inline ScalerParams scaler_from_json(const nlohmann::json& j) {
    return ScalerParams{j.at("mean"), j.at("std")};
}

[[nodiscard]] inline nlohmann::json cgan_config_to_json(const CganConfig& c) {
    return {{"p", c.p},
            {"noise_dim", c.noise_dim},
            {"gen_hidden", c.gen_hidden},
            {"disc_hidden", c.disc_hidden},
            {"epochs", c.epochs},
            {"batch", c.batch},
            {"snap", c.snap},
            {"eval_samples", c.eval_samples},
            {"learning_rate", c.sgd.learning_rate},
            {"gen_lr_scale", c.gen_lr_scale}};
}

[[nodiscard]] inline CganConfig cgan_config_from_json(const nlohmann::json& j) {
    CganConfig c;
    c.p = j.at("p");
    c.noise_dim = j.at("noise_dim");
    c.gen_hidden = j.at("gen_hidden");
    c.disc_hidden = j.at("disc_hidden");
    c.epochs = j.at("epochs");
    c.batch = j.at("batch");
    c.snap = j.at("snap");
    c.eval_samples = j.at("eval_samples");
    c.sgd.learning_rate = j.at("learning_rate");
    c.gen_lr_scale = j.value("gen_lr_scale", 1.0);
    return c;
}

/// Persist a trained model as model.json (network blob) plus a small
/// manifest.json sidecar (config, seed, RMSE curve) for audit.
inline void save_cgan(const CganModel& model, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json blob;
    blob["generator"] = net_to_json(model.selected.generator);
    blob["discriminator"] = net_to_json(model.selected.discriminator);
    blob["epoch"] = model.selected.epoch;
    blob["rmse"] = model.selected.rmse;
    blob["feature_scaler"] = scaler_to_json(model.selected.feature_scaler);
    blob["target_scaler"] = scaler_to_json(model.selected.target_scaler);
    {
        std::ofstream out(dir / "model.json");
        if (!out) throw std::runtime_error("cannot write " + (dir / "model.json").string());
        out << blob.dump(1) << '\n';
    }
    nlohmann::json manifest;
    manifest["config"] = cgan_config_to_json(model.config);
    manifest["seed"] = model.seed;
    manifest["rmse_curve"] = nlohmann::json::array();
    for (const auto& [epoch, rmse] : model.rmse_curve)
        manifest["rmse_curve"].push_back({{"epoch", epoch}, {"rmse", rmse}});
    std::ofstream out(dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(1) << '\n';
}

[[nodiscard]] inline CganModel load_cgan(const std::filesystem::path& dir) {
    const auto read = [](const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot read " + path.string());
        return nlohmann::json::parse(in);
    };
    const auto blob = read(dir / "model.json");
    const auto manifest = read(dir / "manifest.json");
    CganModel model;
    model.selected.generator = net_from_json(blob.at("generator"));
    model.selected.discriminator = net_from_json(blob.at("discriminator"));
    model.selected.epoch = blob.at("epoch");
    model.selected.rmse = blob.at("rmse");
    model.selected.feature_scaler = scaler_from_json(blob.at("feature_scaler"));
    model.selected.target_scaler = scaler_from_json(blob.at("target_scaler"));
    model.config = cgan_config_from_json(manifest.at("config"));
    model.seed = manifest.at("seed");
    for (const auto& pt : manifest.at("rmse_curve"))
        model.rmse_curve.emplace_back(pt.at("epoch"), pt.at("rmse"));
    return model;
}

}  // namespace cgt
