#pragma once
// Experiment orchestration: a flat text config carrying the full protocol
// defaults, deterministic seed fan-out per (asset, scheme, learner), the two
// batch experiments (ensemble combination and hyperparameter fine-tuning),
// generator diagnostics bundles, and the output writers for their reports.

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include <cgt/bootstrap.hpp>
#include <cgt/cgan.hpp>
#include <cgt/csv.hpp>
#include <cgt/diagnostics.hpp>
#include <cgt/ensemble.hpp>
#include <cgt/finetune.hpp>
#include <cgt/model_io.hpp>
#include <cgt/report.hpp>
#include <cgt/splits.hpp>

namespace cgt {

/// Configuration problems map to their own exception so the CLI can separate
/// "bad input" (exit 1) from "some work units failed" (exit 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Flat key=value experiment configuration. The shipped defaults reproduce the
/// published protocol: generator training (252 lags / 252 noise inputs /
/// minibatch 252 / snapshot every 200 of 20000 epochs / 50 evaluation paths /
/// learning rate 0.01; hidden sizes 5/100/500), combination runs (block size
/// 20, B in {20,100,500}, deep tree + 200-neuron net), and fine-tuning runs
/// (10 schemes; sliding window/stride 252; CV block 252; gap 10; k=10;
/// validation one-split 1260; 100 synthetic paths; holdout 1260; full
/// hyperparameter grids).
struct ExperimentConfig {
    std::vector<std::pair<std::string, std::string>> assets;  // (name, csv path)
    int holdout = 1260;
    int lags = 252;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    int workers = 1;

    // Conditional-generator training protocol.
    int cgan_lags = 252;
    int cgan_noise_dim = 252;
    int cgan_batch = 252;
    int cgan_epochs = 20000;
    int cgan_snap = 200;
    int cgan_eval_samples = 50;
    double cgan_learning_rate = 0.01;
    double cgan_gen_lr_scale = 1.0;
    int cgan_hidden_small = 5;
    int cgan_hidden_medium = 100;
    int cgan_hidden_large = 500;

    // Combination experiment.
    std::vector<std::string> case1_resamplers = {"stat_boot", "cgan_small", "cgan_medium",
                                                 "cgan_large"};
    std::vector<std::string> case1_learners = {"reg_tree", "mlp"};
    std::vector<int> case1_B = {20, 100, 500};
    double case1_block = 20.0;
    int case1_mlp_neurons = 200;
    double case1_mlp_decay = 0.00001;
    int case1_mlp_epochs = 200;

    // Fine-tuning experiment.
    std::vector<std::string> case2_schemes = {"naive",  "one_split", "sliding",    "hv_block",
                                              "block",  "kfold",     "stat_boot",  "cgan_small",
                                              "cgan_medium", "cgan_large"};
    std::vector<std::string> case2_learners = {"ridge", "mlp", "gbt"};
    int case2_B = 100;          // synthetic paths per bootstrap/generator scheme
    int one_split_h = 1260;     // validation block of the one-split scheme
    int sliding_window = 252;
    int sliding_stride = 252;
    int cv_block = 252;
    int hv_gap = 10;
    int kfolds = 10;

    // Hyperparameter grids (fine-tuning); listing order is selection order.
    std::vector<double> ridge_shrinkages = {0.00001, 0.00005, 0.0001, 0.0005, 0.001, 0.005,
                                            0.01,    0.05,    0.1,    0.5,    1.0};
    std::vector<double> gbt_trees = {50, 100, 200};
    std::vector<double> gbt_learning_rates = {0.0001, 0.001, 0.01, 0.1, 1.0};
    std::vector<double> gbt_depths = {1, 3, 5};
    std::vector<double> mlp_neurons = {20, 50, 100, 200};
    std::vector<double> mlp_decays = {0.001, 0.01, 0.1, 1.0};
    int mlp_epochs = 200;  // fit epochs for every net trained during search
};

namespace detail {

[[nodiscard]] inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

/// Scheme names are case-insensitive and accept '-' for '_'
/// ("hv-block" == "HV_Block" == "hv_block"); "k-fold" maps to "kfold".
[[nodiscard]] inline std::string normalize_name(std::string s) {
    for (char& c : s) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (c == '-') c = '_';
    }
    if (s == "k_fold") return "kfold";
    return s;
}

[[nodiscard]] inline std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

[[nodiscard]] inline double config_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': malformed number '" + value + "'");
    }
}

[[nodiscard]] inline int config_int(const std::string& key, const std::string& value) {
    const double v = config_double(key, value);
    if (v != std::floor(v)) throw ConfigError("config key '" + key + "': expected integer");
    return static_cast<int>(v);
}

[[nodiscard]] inline std::vector<double> config_doubles(const std::string& key,
                                                        const std::string& value) {
    std::vector<double> out;
    for (const auto& item : split_list(value)) out.push_back(config_double(key, item));
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
}

[[nodiscard]] inline std::vector<int> config_ints(const std::string& key,
                                                  const std::string& value) {
    std::vector<int> out;
    for (const auto& item : split_list(value)) out.push_back(config_int(key, item));
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
}

inline const std::set<std::string> kKnownSchemes = {
    "naive",     "one_split",  "sliding",     "hv_block",   "block",
    "kfold",     "stat_boot",  "cgan_small",  "cgan_medium", "cgan_large"};
inline const std::set<std::string> kCase2Learners = {"ridge", "mlp", "gbt"};
inline const std::set<std::string> kCase1Learners = {"reg_tree", "mlp"};

[[nodiscard]] inline std::vector<std::string> config_names(const std::string& key,
                                                           const std::string& value,
                                                           const std::set<std::string>& allowed) {
    std::vector<std::string> out;
    for (auto item : split_list(value)) {
        item = normalize_name(item);
        if (!allowed.contains(item))
            throw ConfigError("config key '" + key + "': unknown name '" + item + "'");
        out.push_back(item);
    }
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
}

}  // namespace detail

inline void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                               const std::string& value) {
    using namespace detail;
    if (key == "asset") {
        const auto colon = value.find(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == value.size())
            throw ConfigError("config key 'asset': expected NAME:PATH, got '" + value + "'");
        cfg.assets.emplace_back(trim(value.substr(0, colon)), trim(value.substr(colon + 1)));
    } else if (key == "holdout") {
        cfg.holdout = config_int(key, value);
    } else if (key == "lags") {
        cfg.lags = config_int(key, value);
    } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(config_double(key, value));
    } else if (key == "out_dir") {
        cfg.out_dir = value;
    } else if (key == "workers") {
        cfg.workers = config_int(key, value);
    } else if (key == "cgan.lags") {
        cfg.cgan_lags = config_int(key, value);
    } else if (key == "cgan.noise_dim") {
        cfg.cgan_noise_dim = config_int(key, value);
    } else if (key == "cgan.batch") {
        cfg.cgan_batch = config_int(key, value);
    } else if (key == "cgan.epochs") {
        cfg.cgan_epochs = config_int(key, value);
    } else if (key == "cgan.snap") {
        cfg.cgan_snap = config_int(key, value);
    } else if (key == "cgan.eval_samples") {
        cfg.cgan_eval_samples = config_int(key, value);
    } else if (key == "cgan.learning_rate") {
        cfg.cgan_learning_rate = config_double(key, value);
    } else if (key == "cgan.gen_lr_scale") {
        cfg.cgan_gen_lr_scale = config_double(key, value);
    } else if (key == "cgan.hidden.small") {
        cfg.cgan_hidden_small = config_int(key, value);
    } else if (key == "cgan.hidden.medium") {
        cfg.cgan_hidden_medium = config_int(key, value);
    } else if (key == "cgan.hidden.large") {
        cfg.cgan_hidden_large = config_int(key, value);
    } else if (key == "case1.resamplers") {
        cfg.case1_resamplers = config_names(key, value, kKnownSchemes);
    } else if (key == "case1.learners") {
        cfg.case1_learners = config_names(key, value, kCase1Learners);
    } else if (key == "case1.B") {
        cfg.case1_B = config_ints(key, value);
    } else if (key == "case1.block") {
        cfg.case1_block = config_double(key, value);
    } else if (key == "case1.mlp.neurons") {
        cfg.case1_mlp_neurons = config_int(key, value);
    } else if (key == "case1.mlp.decay") {
        cfg.case1_mlp_decay = config_double(key, value);
    } else if (key == "case1.mlp.epochs") {
        cfg.case1_mlp_epochs = config_int(key, value);
    } else if (key == "case2.schemes") {
        cfg.case2_schemes = config_names(key, value, kKnownSchemes);
    } else if (key == "case2.learners") {
        cfg.case2_learners = config_names(key, value, kCase2Learners);
    } else if (key == "case2.B") {
        cfg.case2_B = config_int(key, value);
    } else if (key == "case2.one_split_h") {
        cfg.one_split_h = config_int(key, value);
    } else if (key == "case2.sliding.window") {
        cfg.sliding_window = config_int(key, value);
    } else if (key == "case2.sliding.stride") {
        cfg.sliding_stride = config_int(key, value);
    } else if (key == "case2.cv_block") {
        cfg.cv_block = config_int(key, value);
    } else if (key == "case2.hv_gap") {
        cfg.hv_gap = config_int(key, value);
    } else if (key == "case2.kfolds") {
        cfg.kfolds = config_int(key, value);
    } else if (key == "grid.ridge.shrinkage") {
        cfg.ridge_shrinkages = config_doubles(key, value);
    } else if (key == "grid.gbt.trees") {
        cfg.gbt_trees = config_doubles(key, value);
    } else if (key == "grid.gbt.learning_rate") {
        cfg.gbt_learning_rates = config_doubles(key, value);
    } else if (key == "grid.gbt.max_depth") {
        cfg.gbt_depths = config_doubles(key, value);
    } else if (key == "grid.mlp.neurons") {
        cfg.mlp_neurons = config_doubles(key, value);
    } else if (key == "grid.mlp.weight_decay") {
        cfg.mlp_decays = config_doubles(key, value);
    } else if (key == "grid.mlp.epochs") {
        cfg.mlp_epochs = config_int(key, value);
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

inline void validate_config(const ExperimentConfig& cfg) {
    auto positive = [](long long v, const char* what) {
        if (v <= 0) throw ConfigError(std::string(what) + " must be positive");
    };
    positive(cfg.holdout, "holdout");
    positive(cfg.lags, "lags");
    positive(cfg.workers, "workers");
    positive(cfg.cgan_lags, "cgan.lags");
    positive(cfg.cgan_noise_dim, "cgan.noise_dim");
    positive(cfg.cgan_batch, "cgan.batch");
    positive(cfg.cgan_epochs, "cgan.epochs");
    positive(cfg.cgan_snap, "cgan.snap");
    positive(cfg.cgan_eval_samples, "cgan.eval_samples");
    positive(cfg.cgan_hidden_small, "cgan.hidden.small");
    positive(cfg.cgan_hidden_medium, "cgan.hidden.medium");
    positive(cfg.cgan_hidden_large, "cgan.hidden.large");
    positive(cfg.case2_B, "case2.B");
    positive(cfg.one_split_h, "case2.one_split_h");
    positive(cfg.sliding_window, "case2.sliding.window");
    positive(cfg.sliding_stride, "case2.sliding.stride");
    positive(cfg.cv_block, "case2.cv_block");
    positive(cfg.kfolds, "case2.kfolds");
    positive(cfg.mlp_epochs, "grid.mlp.epochs");
    positive(cfg.case1_mlp_epochs, "case1.mlp.epochs");
    positive(cfg.case1_mlp_neurons, "case1.mlp.neurons");
    if (cfg.hv_gap < 0) throw ConfigError("case2.hv_gap must be non-negative");
    if (!(cfg.case1_block >= 1.0)) throw ConfigError("case1.block must be >= 1");
    if (!(cfg.cgan_learning_rate > 0.0)) throw ConfigError("cgan.learning_rate must be positive");
    if (!(cfg.cgan_gen_lr_scale > 0.0)) throw ConfigError("cgan.gen_lr_scale must be positive");
    if (!(cfg.case1_mlp_decay >= 0.0)) throw ConfigError("case1.mlp.decay must be >= 0");
    if (cfg.case1_B.empty()) throw ConfigError("case1.B must list at least one ensemble size");
    for (int b : cfg.case1_B) positive(b, "case1.B entries");
    for (double s : cfg.ridge_shrinkages)
        if (!(s > 0.0)) throw ConfigError("grid.ridge.shrinkage entries must be positive");
    std::set<std::string> names;
    for (const auto& [name, path] : cfg.assets) {
        if (name.empty() || path.empty()) throw ConfigError("asset entries need NAME:PATH");
        if (!names.insert(name).second) throw ConfigError("duplicate asset name '" + name + "'");
    }
}

[[nodiscard]] inline ExperimentConfig parse_experiment_config(std::istream& in) {
    ExperimentConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) +
                                           ": empty key");
        apply_config_entry(cfg, key, value);
    }
    validate_config(cfg);
    return cfg;
}

[[nodiscard]] inline ExperimentConfig parse_experiment_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    return parse_experiment_config(in);
}

/// Canonical serialization: every key in fixed order, one per line. Feeding
/// it back through the parser reproduces the config; its hash stamps reports.
[[nodiscard]] inline std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    auto num = [](double v) { return detail::format_full(v); };
    auto list_d = [&](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
        return s;
    };
    auto list_i = [](const std::vector<int>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
        return s;
    };
    auto list_s = [](const std::vector<std::string>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
        return s;
    };
    for (const auto& [name, path] : cfg.assets) out << "asset = " << name << ':' << path << '\n';
    out << "case1.B = " << list_i(cfg.case1_B) << '\n';
    out << "case1.block = " << num(cfg.case1_block) << '\n';
    out << "case1.learners = " << list_s(cfg.case1_learners) << '\n';
    out << "case1.mlp.decay = " << num(cfg.case1_mlp_decay) << '\n';
    out << "case1.mlp.epochs = " << cfg.case1_mlp_epochs << '\n';
    out << "case1.mlp.neurons = " << cfg.case1_mlp_neurons << '\n';
    out << "case1.resamplers = " << list_s(cfg.case1_resamplers) << '\n';
    out << "case2.B = " << cfg.case2_B << '\n';
    out << "case2.cv_block = " << cfg.cv_block << '\n';
    out << "case2.hv_gap = " << cfg.hv_gap << '\n';
    out << "case2.kfolds = " << cfg.kfolds << '\n';
    out << "case2.learners = " << list_s(cfg.case2_learners) << '\n';
    out << "case2.one_split_h = " << cfg.one_split_h << '\n';
    out << "case2.schemes = " << list_s(cfg.case2_schemes) << '\n';
    out << "case2.sliding.stride = " << cfg.sliding_stride << '\n';
    out << "case2.sliding.window = " << cfg.sliding_window << '\n';
    out << "cgan.batch = " << cfg.cgan_batch << '\n';
    out << "cgan.epochs = " << cfg.cgan_epochs << '\n';
    out << "cgan.eval_samples = " << cfg.cgan_eval_samples << '\n';
    out << "cgan.gen_lr_scale = " << num(cfg.cgan_gen_lr_scale) << '\n';
    out << "cgan.hidden.large = " << cfg.cgan_hidden_large << '\n';
    out << "cgan.hidden.medium = " << cfg.cgan_hidden_medium << '\n';
    out << "cgan.hidden.small = " << cfg.cgan_hidden_small << '\n';
    out << "cgan.lags = " << cfg.cgan_lags << '\n';
    out << "cgan.learning_rate = " << num(cfg.cgan_learning_rate) << '\n';
    out << "cgan.noise_dim = " << cfg.cgan_noise_dim << '\n';
    out << "cgan.snap = " << cfg.cgan_snap << '\n';
    out << "grid.gbt.learning_rate = " << list_d(cfg.gbt_learning_rates) << '\n';
    out << "grid.gbt.max_depth = " << list_d(cfg.gbt_depths) << '\n';
    out << "grid.gbt.trees = " << list_d(cfg.gbt_trees) << '\n';
    out << "grid.mlp.epochs = " << cfg.mlp_epochs << '\n';
    out << "grid.mlp.neurons = " << list_d(cfg.mlp_neurons) << '\n';
    out << "grid.mlp.weight_decay = " << list_d(cfg.mlp_decays) << '\n';
    out << "grid.ridge.shrinkage = " << list_d(cfg.ridge_shrinkages) << '\n';
    out << "holdout = " << cfg.holdout << '\n';
    out << "lags = " << cfg.lags << '\n';
    out << "out_dir = " << cfg.out_dir << '\n';
    out << "seed = " << cfg.seed << '\n';
    out << "workers = " << cfg.workers << '\n';
    return out.str();
}

/// Fingerprint of the result-determining configuration. Execution-only keys
/// (worker count, output directory) are excluded: runs that differ only in
/// where they write or how many threads they use produce identical rows and
/// must stamp them with the same hash.
[[nodiscard]] inline std::uint64_t config_hash(const ExperimentConfig& cfg) {
    ExperimentConfig canonical = cfg;
    canonical.out_dir = ExperimentConfig{}.out_dir;
    canonical.workers = ExperimentConfig{}.workers;
    return fnv1a_hash(serialize_config(canonical));
}

// ---------------------------------------------------------------------------
// Deterministic seed fan-out
// ---------------------------------------------------------------------------

namespace detail {

/// Fixed stream ids per scheme/learner so dropping entries from a config list
/// never shifts the seeds of the remaining combinations.
[[nodiscard]] inline std::uint64_t scheme_stream_id(const std::string& scheme) {
    static const std::map<std::string, std::uint64_t> ids = {
        {"naive", 0},     {"one_split", 1},  {"sliding", 2},     {"hv_block", 3},
        {"block", 4},     {"kfold", 5},      {"stat_boot", 6},   {"cgan_small", 7},
        {"cgan_medium", 8}, {"cgan_large", 9}};
    return ids.at(scheme);
}

[[nodiscard]] inline std::uint64_t learner_stream_id(const std::string& learner) {
    static const std::map<std::string, std::uint64_t> ids = {
        {"ridge", 0}, {"mlp", 1}, {"gbt", 2}, {"reg_tree", 3}};
    return ids.at(learner);
}

}  // namespace detail

/// Seed root for one asset: a function of the master seed and the asset NAME,
/// so per-asset results do not depend on the asset's position in the config.
[[nodiscard]] inline std::uint64_t asset_seed(const ExperimentConfig& cfg,
                                              const std::string& asset_name) {
    return derive_seed(cfg.seed, fnv1a_hash(asset_name));
}

// ---------------------------------------------------------------------------
// Shared per-asset machinery
// ---------------------------------------------------------------------------

struct AssetFailure {
    std::string asset;
    std::string stage;
    std::string message;
};

struct AssetData {
    std::string name;
    ReturnSeries full;
    ReturnSeries in_sample;
    ReturnSeries holdout;
};

[[nodiscard]] inline AssetData load_asset(const std::string& name, const std::string& path,
                                          int holdout, int lags) {
    AssetData data;
    data.name = name;
    data.full = read_return_csv(path);
    const std::size_t T = data.full.size();
    const auto h = static_cast<std::size_t>(holdout);
    if (T <= h + static_cast<std::size_t>(lags) + 1)
        throw std::runtime_error("series too short: " + std::to_string(T) + " observations for " +
                                 std::to_string(holdout) + " holdout + " + std::to_string(lags) +
                                 " lags");
    const std::size_t split = T - h;
    data.in_sample.dates.assign(data.full.dates.begin(),
                                data.full.dates.begin() + static_cast<long>(split));
    data.in_sample.returns.assign(data.full.returns.begin(),
                                  data.full.returns.begin() + static_cast<long>(split));
    data.holdout.dates.assign(data.full.dates.begin() + static_cast<long>(split),
                              data.full.dates.end());
    data.holdout.returns.assign(data.full.returns.begin() + static_cast<long>(split),
                                data.full.returns.end());
    return data;
}

[[nodiscard]] inline CganConfig cgan_config_for(const ExperimentConfig& cfg, int hidden) {
    CganConfig c;
    c.p = cfg.cgan_lags;
    c.noise_dim = cfg.cgan_noise_dim;
    c.gen_hidden = hidden;
    c.disc_hidden = hidden;
    c.epochs = cfg.cgan_epochs;
    c.batch = cfg.cgan_batch;
    c.snap = cfg.cgan_snap;
    c.eval_samples = cfg.cgan_eval_samples;
    c.sgd.learning_rate = cfg.cgan_learning_rate;
    c.gen_lr_scale = cfg.cgan_gen_lr_scale;
    return c;
}

namespace detail {

[[nodiscard]] inline int cgan_size_id(const std::string& size) {
    if (size == "small") return 0;
    if (size == "medium") return 1;
    if (size == "large") return 2;
    throw std::invalid_argument("unknown generator size '" + size + "'");
}

[[nodiscard]] inline int cgan_hidden_for(const ExperimentConfig& cfg, const std::string& size) {
    switch (cgan_size_id(size)) {
        case 0: return cfg.cgan_hidden_small;
        case 1: return cfg.cgan_hidden_medium;
        default: return cfg.cgan_hidden_large;
    }
}

/// Train (or reuse) the in-sample generator of one size class for one asset.
inline const CganModel& cached_cgan(std::map<std::string, CganModel>& cache,
                                    const ExperimentConfig& cfg, const AssetData& asset,
                                    const std::string& size) {
    auto it = cache.find(size);
    if (it != cache.end()) return it->second;
    const CganConfig cc = cgan_config_for(cfg, cgan_hidden_for(cfg, size));
    const std::uint64_t seed =
        derive_seed(asset_seed(cfg, asset.name), 1 + static_cast<std::uint64_t>(cgan_size_id(size)));
    return cache.emplace(size, train_and_select(asset.in_sample, cc, seed)).first->second;
}

/// "cgan_small" -> "small"; empty for non-generator schemes.
[[nodiscard]] inline std::string cgan_size_of(const std::string& scheme) {
    if (scheme.rfind("cgan_", 0) == 0) return scheme.substr(5);
    return "";
}

[[nodiscard]] inline std::string describe_spec(const LearnerSpec& spec) {
    std::string out;
    for (const auto& [key, value] : spec.hyperparams) {
        if (!out.empty()) out += ';';
        out += key + "=" + format_full(value);
    }
    return out;
}

/// Run fn(i) over [0, n) on `workers` threads; exceptions surface after join.
template <typename Fn>
inline void parallel_for(std::size_t n, int workers, Fn&& fn) {
    const int use = std::max(1, std::min<int>(workers, static_cast<int>(n)));
    if (use == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(use));
    for (int w = 0; w < use; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Combination experiment (ensembles of weak learners)
// ---------------------------------------------------------------------------

struct CurvePoint {
    int b = 0;  // members aggregated so far
    double sharpe = std::numeric_limits<double>::quiet_NaN();
    double calmar = std::numeric_limits<double>::quiet_NaN();
    double rmse = 0.0;
};

struct Case1Result {
    std::vector<ReportRow> rows;
    // "asset/resampler/learner" -> holdout metrics per ensemble prefix size.
    std::map<std::string, std::vector<CurvePoint>> curves;
    std::vector<AssetFailure> failures;
};

[[nodiscard]] inline LearnerSpec case1_member_spec(const ExperimentConfig& cfg,
                                                   const std::string& learner) {
    if (learner == "reg_tree")
        return {LearnerKind::reg_tree, {{"min_split", 2.0}, {"max_depth", 0.0}}};
    if (learner == "mlp")
        return {LearnerKind::mlp,
                {{"neurons", static_cast<double>(cfg.case1_mlp_neurons)},
                 {"weight_decay", cfg.case1_mlp_decay},
                 {"epochs", static_cast<double>(cfg.case1_mlp_epochs)}}};
    throw std::invalid_argument("unknown combination learner '" + learner + "'");
}

namespace detail {

struct Case1AssetOutput {
    std::vector<ReportRow> rows;
    std::map<std::string, std::vector<CurvePoint>> curves;
    std::vector<AssetFailure> failures;
};

inline Case1AssetOutput run_case1_asset(const ExperimentConfig& cfg, const std::string& name,
                                        const std::string& path) {
    Case1AssetOutput out;
    AssetData asset;
    try {
        asset = load_asset(name, path, cfg.holdout, cfg.lags);
    } catch (const std::exception& e) {
        out.failures.push_back({name, "load", e.what()});
        return out;
    }

    const int B_max = *std::max_element(cfg.case1_B.begin(), cfg.case1_B.end());
    std::map<std::string, CganModel> cgans;

    // Holdout features condition on the in-sample tail (walk-forward).
    const LaggedDataset full_ds = build_lagged(asset.full, cfg.lags);
    const auto first_hold =
        static_cast<Eigen::Index>(asset.in_sample.size() - static_cast<std::size_t>(cfg.lags));
    const Eigen::MatrixXd X_hold = full_ds.features.bottomRows(full_ds.rows() - first_hold);
    const Eigen::VectorXd y_hold = full_ds.targets.tail(full_ds.rows() - first_hold);
    std::vector<double> actual(y_hold.data(), y_hold.data() + y_hold.size());

    for (const auto& resampler_name : cfg.case1_resamplers) {
        Resampler resampler = BootstrapResampler{cfg.case1_block};
        const std::string size = cgan_size_of(resampler_name);
        if (!size.empty()) {
            try {
                const CganModel& model = cached_cgan(cgans, cfg, asset, size);
                resampler = CganResampler{&model, resampler_name};
            } catch (const std::exception& e) {
                out.failures.push_back({name, "cgan_train/" + size, e.what()});
                continue;
            }
        }
        for (const auto& learner : cfg.case1_learners) {
            const std::string combo = name + "/" + resampler_name + "/" + learner;
            try {
                const std::uint64_t seed =
                    derive_seed(asset_seed(cfg, name), 100 + 10 * scheme_stream_id(resampler_name) +
                                                           learner_stream_id(learner));
                const EnsembleModel ens = build_ensemble(
                    resampler, case1_member_spec(cfg, learner), asset.in_sample, cfg.lags, B_max,
                    seed);

                // Running mean over members; the b-th snapshot matches the
                // b-member prefix prediction bit for bit.
                Eigen::VectorXd acc = Eigen::VectorXd::Zero(X_hold.rows());
                std::vector<CurvePoint> curve;
                curve.reserve(static_cast<std::size_t>(B_max));
                for (int b = 0; b < B_max; ++b) {
                    acc += predict(ens.members[static_cast<std::size_t>(b)], X_hold);
                    const Eigen::VectorXd mean = acc / static_cast<double>(b + 1);
                    std::vector<double> pred(mean.data(), mean.data() + mean.size());
                    const BacktestReport rep = backtest(actual, pred);
                    curve.push_back({b + 1, rep.sharpe, rep.calmar, rep.rmse});
                    if (std::find(cfg.case1_B.begin(), cfg.case1_B.end(), b + 1) !=
                        cfg.case1_B.end()) {
                        ReportRow row;
                        row.asset = name;
                        row.scheme = resampler_name;
                        row.strategy = learner;
                        row.ensemble_size = b + 1;
                        row.sharpe = rep.sharpe;
                        row.calmar = rep.calmar;
                        row.mdd = rep.mdd;
                        row.rmse = rep.rmse;
                        out.rows.push_back(std::move(row));
                    }
                }
                out.curves.emplace(combo, std::move(curve));
            } catch (const std::exception& e) {
                out.failures.push_back({name, "case1/" + resampler_name + "/" + learner,
                                        e.what()});
            }
        }
    }
    return out;
}

}  // namespace detail

[[nodiscard]] inline Case1Result run_case1(const ExperimentConfig& cfg) {
    validate_config(cfg);
    std::vector<detail::Case1AssetOutput> slots(cfg.assets.size());
    detail::parallel_for(cfg.assets.size(), cfg.workers, [&](std::size_t i) {
        slots[i] = detail::run_case1_asset(cfg, cfg.assets[i].first, cfg.assets[i].second);
    });
    Case1Result result;
    for (auto& slot : slots) {
        result.rows.insert(result.rows.end(), slot.rows.begin(), slot.rows.end());
        for (auto& [key, curve] : slot.curves) result.curves[key] = std::move(curve);
        result.failures.insert(result.failures.end(), slot.failures.begin(),
                               slot.failures.end());
    }
    return result;
}

// ---------------------------------------------------------------------------
// Fine-tuning experiment (hyperparameter selection across schemes)
// ---------------------------------------------------------------------------

struct Case2Result {
    std::vector<ReportRow> rows;
    std::vector<AssetFailure> failures;
};

[[nodiscard]] inline std::vector<LearnerSpec> make_learner_grid(const ExperimentConfig& cfg,
                                                                const std::string& learner) {
    std::vector<LearnerSpec> grid;
    if (learner == "ridge") {
        for (double a : cfg.ridge_shrinkages)
            grid.push_back({LearnerKind::ridge, {{"shrinkage", a}}});
    } else if (learner == "gbt") {
        for (double trees : cfg.gbt_trees)
            for (double lr : cfg.gbt_learning_rates)
                for (double depth : cfg.gbt_depths)
                    grid.push_back({LearnerKind::gbt,
                                    {{"trees", trees},
                                     {"learning_rate", lr},
                                     {"max_depth", depth}}});
    } else if (learner == "mlp") {
        for (double neurons : cfg.mlp_neurons)
            for (double decay : cfg.mlp_decays)
                grid.push_back({LearnerKind::mlp,
                                {{"neurons", neurons},
                                 {"weight_decay", decay},
                                 {"epochs", static_cast<double>(cfg.mlp_epochs)}}});
    } else {
        throw std::invalid_argument("unknown fine-tuning learner '" + learner + "'");
    }
    return grid;
}

namespace detail {

/// Validation block for synthetic paths: the configured one-split horizon,
/// capped at half the path so short paths keep a usable training side.
[[nodiscard]] inline std::size_t synthetic_val_h(const ExperimentConfig& cfg,
                                                 std::size_t path_len) {
    return std::min<std::size_t>(static_cast<std::size_t>(cfg.one_split_h), path_len / 2);
}

[[nodiscard]] inline std::vector<SyntheticSplit> bootstrap_splits(const ExperimentConfig& cfg,
                                                                  const ReturnSeries& in_sample,
                                                                  std::uint64_t seed) {
    const std::size_t T = in_sample.size();
    const std::size_t h = synthetic_val_h(cfg, T);
    if (h == 0) throw std::runtime_error("bootstrap scheme: in-sample too short to split");
    std::vector<SyntheticSplit> splits;
    splits.reserve(static_cast<std::size_t>(cfg.case2_B));
    for (int b = 0; b < cfg.case2_B; ++b) {
        const auto sample =
            stationary_bootstrap(T, cfg.case1_block, derive_seed(seed, static_cast<std::uint64_t>(b)));
        const std::vector<double> path = apply_bootstrap(in_sample.returns, sample);
        SyntheticSplit s;
        s.train.assign(path.begin(), path.begin() + static_cast<long>(T - h));
        s.val.assign(path.begin() + static_cast<long>(T - h), path.end());
        splits.push_back(std::move(s));
    }
    return splits;
}

struct Case2AssetOutput {
    std::vector<ReportRow> rows;
    std::vector<AssetFailure> failures;
};

inline Case2AssetOutput run_case2_asset(const ExperimentConfig& cfg, const std::string& name,
                                        const std::string& path) {
    Case2AssetOutput out;
    AssetData asset;
    try {
        asset = load_asset(name, path, cfg.holdout, cfg.lags);
    } catch (const std::exception& e) {
        out.failures.push_back({name, "load", e.what()});
        return out;
    }
    const std::size_t T_rows = asset.in_sample.size() - static_cast<std::size_t>(cfg.lags);
    std::map<std::string, CganModel> cgans;
    const std::uint64_t root = asset_seed(cfg, name);

    for (const auto& scheme : cfg.case2_schemes) {
        // Classical schemes index the real series; synthetic schemes carry
        // value paths. Failures at scheme scope skip its learners.
        SplitPlan plan;
        std::vector<SyntheticSplit> synthetic;
        bool is_synthetic = false;
        try {
            const std::uint64_t split_seed = derive_seed(root, 200 + scheme_stream_id(scheme));
            if (scheme == "naive") {
                plan = split_naive(T_rows);
            } else if (scheme == "one_split") {
                plan = split_one_split(T_rows, static_cast<std::size_t>(cfg.one_split_h));
            } else if (scheme == "sliding") {
                plan = split_sliding(T_rows, static_cast<std::size_t>(cfg.sliding_window),
                                     static_cast<std::size_t>(cfg.sliding_stride));
            } else if (scheme == "hv_block") {
                plan = split_hv_block(T_rows, static_cast<std::size_t>(cfg.cv_block),
                                      static_cast<std::size_t>(cfg.hv_gap));
            } else if (scheme == "block") {
                plan = split_block(T_rows, static_cast<std::size_t>(cfg.cv_block));
            } else if (scheme == "kfold") {
                plan = split_kfold(T_rows, static_cast<std::size_t>(cfg.kfolds));
            } else if (scheme == "stat_boot") {
                synthetic = bootstrap_splits(cfg, asset.in_sample, split_seed);
                is_synthetic = true;
            } else {
                const std::string size = cgan_size_of(scheme);
                const CganModel& model = cached_cgan(cgans, cfg, asset, size);
                const std::size_t path_len =
                    asset.in_sample.size() - static_cast<std::size_t>(model.config.p);
                const std::size_t h = synthetic_val_h(cfg, path_len);
                if (h == 0) throw std::runtime_error("synthetic path too short to split");
                synthetic = cgan_splits(model, asset.in_sample, cfg.case2_B, h, split_seed);
                is_synthetic = true;
            }
        } catch (const std::exception& e) {
            out.failures.push_back({name, "case2/" + scheme, e.what()});
            continue;
        }

        for (const auto& learner : cfg.case2_learners) {
            try {
                const std::vector<LearnerSpec> grid = make_learner_grid(cfg, learner);
                const std::uint64_t search_seed =
                    derive_seed(root, 300 + 10 * scheme_stream_id(scheme) +
                                          learner_stream_id(learner));
                const GridResult result =
                    is_synthetic
                        ? grid_search(synthetic, grid, cfg.lags, search_seed, scheme)
                        : grid_search(plan, grid, asset.in_sample, cfg.lags, search_seed);
                const std::uint64_t final_seed =
                    derive_seed(root, 400 + 10 * scheme_stream_id(scheme) +
                                          learner_stream_id(learner));
                const BacktestReport rep =
                    finalize_and_test(result, asset.in_sample, asset.holdout, cfg.lags,
                                      final_seed);
                ReportRow row;
                row.asset = name;
                row.scheme = scheme;
                row.strategy = learner;
                row.ensemble_size = static_cast<int>(result.scores.cols());
                row.selected = describe_spec(result.grid[result.selected]);
                row.sharpe = rep.sharpe;
                row.calmar = rep.calmar;
                row.mdd = rep.mdd;
                row.rmse = rep.rmse;
                out.rows.push_back(std::move(row));
            } catch (const std::exception& e) {
                out.failures.push_back({name, "case2/" + scheme + "/" + learner, e.what()});
            }
        }
    }
    return out;
}

}  // namespace detail

[[nodiscard]] inline Case2Result run_case2(const ExperimentConfig& cfg) {
    validate_config(cfg);
    std::vector<detail::Case2AssetOutput> slots(cfg.assets.size());
    detail::parallel_for(cfg.assets.size(), cfg.workers, [&](std::size_t i) {
        slots[i] = detail::run_case2_asset(cfg, cfg.assets[i].first, cfg.assets[i].second);
    });
    Case2Result result;
    for (auto& slot : slots) {
        result.rows.insert(result.rows.end(), slot.rows.begin(), slot.rows.end());
        result.failures.insert(result.failures.end(), slot.failures.begin(),
                               slot.failures.end());
    }
    return result;
}

// ---------------------------------------------------------------------------
// Output writers
// ---------------------------------------------------------------------------

namespace detail {

inline void write_failures_json(const std::vector<AssetFailure>& failures,
                                const std::filesystem::path& path) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& f : failures)
        arr.push_back({{"asset", f.asset}, {"stage", f.stage}, {"message", f.message}});
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << arr.dump(2) << '\n';
}

[[nodiscard]] inline std::string sanitize_filename(std::string s) {
    for (char& c : s)
        if (c == '/' || c == '\\' || c == ':') c = '_';
    return s;
}

}  // namespace detail

/// Write rows, aggregate tables, per-prefix curves, and the failure manifest.
inline void write_case1_outputs(const ExperimentConfig& cfg, const Case1Result& result) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir / "case1_curves");
    const std::uint64_t hash = config_hash(cfg);
    write_report_csv(result.rows, hash, (dir / "case1_rows.csv").string());

    const std::vector<std::string> metrics = {"sharpe", "calmar", "rmse"};
    const auto medians = median_mad_table(result.rows, cfg.case1_learners, metrics, cfg.case1_B,
                                          cfg.case1_resamplers);
    std::ofstream med_out(dir / "case1_median_mad.csv");
    write_median_mad_csv(medians, med_out);

    const bool has_pair =
        std::count(cfg.case1_resamplers.begin(), cfg.case1_resamplers.end(), "cgan_large") > 0 &&
        std::count(cfg.case1_resamplers.begin(), cfg.case1_resamplers.end(), "stat_boot") > 0;
    if (has_pair) {
        const auto pvals = pairwise_pvalue_table(result.rows, cfg.case1_learners, metrics,
                                                 cfg.case1_B, "cgan_large", "stat_boot");
        std::ofstream p_out(dir / "case1_pvalues.csv");
        write_pairwise_pvalue_csv(pvals, "cgan_large", "stat_boot", p_out);
    }

    for (const auto& [key, curve] : result.curves) {
        std::ofstream out(dir / "case1_curves" / (detail::sanitize_filename(key) + ".csv"));
        out << "b,sharpe,calmar,rmse\n";
        for (const auto& pt : curve)
            out << pt.b << ',' << detail::format_full(pt.sharpe) << ','
                << detail::format_full(pt.calmar) << ',' << detail::format_full(pt.rmse) << '\n';
    }
    detail::write_failures_json(result.failures, dir / "case1_failures.json");
}

/// Write rows, quantile spread, rank tables, and the failure manifest.
/// Returns warnings for strategies whose rank table could not be built
/// (these are data-size facts, not work-unit failures).
inline std::vector<std::string> write_case2_outputs(const ExperimentConfig& cfg,
                                                    const Case2Result& result) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    const std::uint64_t hash = config_hash(cfg);
    write_report_csv(result.rows, hash, (dir / "case2_rows.csv").string());

    const std::vector<std::string> metrics = {"sharpe", "calmar"};
    const auto quantiles = quantile_table(result.rows, cfg.case2_learners, metrics,
                                          cfg.case2_schemes);
    std::ofstream q_out(dir / "case2_quantiles.csv");
    write_quantile_csv(quantiles, q_out);

    std::vector<std::string> warnings;
    std::vector<RankTable> tables;
    for (const auto& learner : cfg.case2_learners) {
        try {
            const auto matrix = results_matrix(result.rows, learner, "sharpe", cfg.case2_schemes);
            tables.push_back(make_rank_table(matrix, learner));
        } catch (const std::exception& e) {
            warnings.push_back("rank table skipped for " + learner + ": " + e.what());
        }
    }
    std::ofstream r_out(dir / "case2_ranks.csv");
    write_rank_table_csv(tables, r_out);
    detail::write_failures_json(result.failures, dir / "case2_failures.json");
    return warnings;
}

// ---------------------------------------------------------------------------
// Generator diagnostics bundle
// ---------------------------------------------------------------------------

/// Emit plot-ready CSVs for a trained generator: its stored selection curve,
/// recursive sample paths with cumulative sums, and data-vs-sample ACF/PACF
/// with white-noise confidence bounds.
inline void diagnose(const CganModel& model, const ReturnSeries& input,
                     const std::string& out_dir, int n_paths = 20, int max_lag = 63,
                     std::uint64_t seed = 0) {
    if (n_paths < 1) throw std::invalid_argument("diagnose: need at least one sample path");
    namespace fs = std::filesystem;
    const fs::path dir(out_dir);
    fs::create_directories(dir);

    {
        std::ofstream out(dir / "rmse_curve.csv");
        out << "epoch,rmse\n";
        for (const auto& [epoch, rmse] : model.rmse_curve)
            out << epoch << ',' << detail::format_full(rmse) << '\n';
    }

    std::vector<std::vector<double>> paths;
    paths.reserve(static_cast<std::size_t>(n_paths));
    for (int k = 0; k < n_paths; ++k)
        paths.push_back(sample_path(model, input, SampleMode::recursive,
                                    derive_seed(seed, 2000 + static_cast<std::uint64_t>(k))));
    const std::size_t steps = paths.front().size();

    {
        std::ofstream out(dir / "sample_paths.csv");
        std::ofstream cum_out(dir / "cumulative_paths.csv");
        for (int k = 0; k < n_paths; ++k) {
            out << (k ? "," : "") << "path_" << k;
            cum_out << (k ? "," : "") << "path_" << k;
        }
        out << '\n';
        cum_out << '\n';
        std::vector<double> running(static_cast<std::size_t>(n_paths), 0.0);
        for (std::size_t t = 0; t < steps; ++t) {
            for (int k = 0; k < n_paths; ++k) {
                const double v = paths[static_cast<std::size_t>(k)][t];
                running[static_cast<std::size_t>(k)] += v;
                out << (k ? "," : "") << detail::format_full(v);
                cum_out << (k ? "," : "") << detail::format_full(running[static_cast<std::size_t>(k)]);
            }
            out << '\n';
            cum_out << '\n';
        }
    }

    const auto data_acf = acf(input.returns, max_lag);
    const auto data_pacf = pacf(input.returns, max_lag);
    std::vector<double> mean_acf(static_cast<std::size_t>(max_lag) + 1, 0.0);
    std::vector<double> mean_pacf(static_cast<std::size_t>(max_lag) + 1, 0.0);
    for (const auto& path : paths) {
        const auto a = acf(path, max_lag);
        const auto p = pacf(path, max_lag);
        for (std::size_t i = 0; i < mean_acf.size(); ++i) {
            mean_acf[i] += a[i] / static_cast<double>(n_paths);
            mean_pacf[i] += p[i] / static_cast<double>(n_paths);
        }
    }
    const auto [lo, hi] = ci_bounds(input.size());
    {
        std::ofstream out(dir / "acf_pacf.csv");
        out << "lag,data_acf,data_pacf,sample_mean_acf,sample_mean_pacf,ci_lo,ci_hi\n";
        for (int lag = 0; lag <= max_lag; ++lag) {
            const auto i = static_cast<std::size_t>(lag);
            out << lag << ',' << detail::format_full(data_acf[i]) << ','
                << detail::format_full(data_pacf[i]) << ',' << detail::format_full(mean_acf[i])
                << ',' << detail::format_full(mean_pacf[i]) << ',' << detail::format_full(lo)
                << ',' << detail::format_full(hi) << '\n';
        }
    }
}

}  // namespace cgt
