// Command-line front end: ingest return data, train and diagnose conditional
// generators, run single ensemble/fine-tuning evaluations, aggregate report
// files, and drive the two full batch experiments from a config file.
//
// Exit codes: 0 success, 1 configuration/input error, 2 completed with
// partial per-asset failures (see the emitted failure manifest).

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cgt/experiment.hpp>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitPartialFailure = 2;

int default_workers() {
    if (const char* env = std::getenv("CGT_WORKERS")) {
        try {
            const int w = std::stoi(env);
            if (w >= 1) return w;
        } catch (const std::exception&) {
        }
        std::cerr << "warning: ignoring invalid CGT_WORKERS value '" << env << "'\n";
    }
    return 1;
}

cgt::ReturnSeries load_series(const std::string& path) { return cgt::read_return_csv(path); }

nlohmann::json report_json(const cgt::BacktestReport& rep) {
    nlohmann::json j;
    j["sharpe"] = rep.sharpe;
    j["calmar"] = rep.calmar;
    j["mdd"] = rep.mdd;
    j["rmse"] = rep.rmse;
    return j;
}

void write_json(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

struct IngestArgs {
    std::string input;
    std::string out;
    bool prices = false;
};

int run_ingest(const IngestArgs& args) {
    cgt::ReturnSeries series;
    if (args.prices) {
        const cgt::PriceSeries prices = cgt::read_price_csv(args.input);
        series = cgt::compute_excess_log_returns(prices);
    } else {
        series = load_series(args.input);
    }
    if (!args.out.empty()) cgt::write_return_csv(series, args.out);
    const double mean = cgt::mean_of(series.returns);
    const double vol = cgt::std_of(series.returns);
    std::cout << "observations: " << series.size() << '\n'
              << "first date:   " << (series.size() ? series.dates.front() : "-") << '\n'
              << "last date:    " << (series.size() ? series.dates.back() : "-") << '\n'
              << "daily mean:   " << mean << '\n'
              << "daily vol:    " << vol << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct CganTrainArgs {
    std::string input;
    std::string size = "medium";
    std::string out;
    cgt::ExperimentConfig cfg;  // reuses the protocol defaults + overrides
    std::uint64_t seed = 0;
};

int run_cgan_train(const CganTrainArgs& args) {
    const cgt::ReturnSeries series = load_series(args.input);
    const int hidden = cgt::detail::cgan_hidden_for(args.cfg, args.size);
    const cgt::CganConfig cc = cgt::cgan_config_for(args.cfg, hidden);
    std::cerr << "training " << args.size << " generator (" << hidden << " hidden) for "
              << cc.epochs << " epochs on " << series.size() << " observations\n";
    const cgt::CganModel model = cgt::train_and_select(series, cc, args.seed);
    cgt::save_cgan(model, args.out);
    std::ofstream curve(std::filesystem::path(args.out) / "rmse_curve.csv");
    curve << "epoch,rmse\n";
    for (const auto& [epoch, rmse] : model.rmse_curve) curve << epoch << ',' << rmse << '\n';
    std::cerr << "selected snapshot: epoch " << model.selected.epoch << " (rmse "
              << model.selected.rmse << ") -> " << args.out << '\n';
    return kExitOk;
}

struct CganDiagnoseArgs {
    std::string model_dir;
    std::string input;
    std::string out;
    int paths = 20;
    int max_lag = 63;
    std::uint64_t seed = 0;
};

int run_cgan_diagnose(const CganDiagnoseArgs& args) {
    const cgt::CganModel model = cgt::load_cgan(args.model_dir);
    const cgt::ReturnSeries series = load_series(args.input);
    cgt::diagnose(model, series, args.out, args.paths, args.max_lag, args.seed);
    std::cerr << "diagnostics bundle in " << args.out << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct EnsembleArgs {
    std::string input;
    std::string resampler = "stat_boot";
    std::string learner = "reg_tree";
    int B = 100;
    std::string model_dir;
    int holdout = 1260;
    int lags = 252;
    double block = 20.0;
    std::uint64_t seed = 0;
    std::string out;
    std::string curve_out;
};

int run_ensemble(const EnsembleArgs& args) {
    cgt::ExperimentConfig cfg;
    cfg.holdout = args.holdout;
    cfg.lags = args.lags;
    cfg.case1_block = args.block;
    cfg.case1_resamplers = {cgt::detail::normalize_name(args.resampler)};
    cfg.case1_learners = {args.learner};
    cfg.case1_B = {args.B};
    cfg.seed = args.seed;

    const std::string resampler = cfg.case1_resamplers.front();
    cgt::AssetData asset = cgt::load_asset("input", args.input, cfg.holdout, cfg.lags);

    cgt::Resampler rs = cgt::BootstrapResampler{cfg.case1_block};
    cgt::CganModel model;
    if (resampler.rfind("cgan_", 0) == 0) {
        if (args.model_dir.empty())
            throw cgt::ConfigError("--model is required for generator resamplers");
        model = cgt::load_cgan(args.model_dir);
        rs = cgt::CganResampler{&model, resampler};
    }
    const cgt::EnsembleModel ens =
        cgt::build_ensemble(rs, cgt::case1_member_spec(cfg, args.learner), asset.in_sample,
                            cfg.lags, args.B, cfg.seed);

    const cgt::LaggedDataset full_ds = cgt::build_lagged(asset.full, cfg.lags);
    const auto first_hold = static_cast<Eigen::Index>(asset.in_sample.size() -
                                                      static_cast<std::size_t>(cfg.lags));
    const Eigen::MatrixXd X = full_ds.features.bottomRows(full_ds.rows() - first_hold);
    const Eigen::VectorXd y = full_ds.targets.tail(full_ds.rows() - first_hold);
    const std::vector<double> actual(y.data(), y.data() + y.size());

    Eigen::VectorXd acc = Eigen::VectorXd::Zero(X.rows());
    std::vector<cgt::CurvePoint> curve;
    cgt::BacktestReport final_rep;
    for (int b = 0; b < args.B; ++b) {
        acc += cgt::predict(ens.members[static_cast<std::size_t>(b)], X);
        const Eigen::VectorXd mean = acc / static_cast<double>(b + 1);
        const std::vector<double> pred(mean.data(), mean.data() + mean.size());
        const cgt::BacktestReport rep = cgt::backtest(actual, pred);
        curve.push_back({b + 1, rep.sharpe, rep.calmar, rep.rmse});
        if (b + 1 == args.B) final_rep = rep;
    }

    nlohmann::json j;
    j["schema_version"] = cgt::kReportSchemaVersion;
    j["resampler"] = resampler;
    j["learner"] = args.learner;
    j["B"] = args.B;
    j["holdout"] = args.holdout;
    j["lags"] = args.lags;
    j["seed"] = args.seed;
    j["report"] = report_json(final_rep);
    write_json(j, args.out);

    if (!args.curve_out.empty()) {
        std::ofstream out(args.curve_out);
        out << "b,sharpe,calmar,rmse\n";
        for (const auto& pt : curve)
            out << pt.b << ',' << cgt::detail::format_full(pt.sharpe) << ','
                << cgt::detail::format_full(pt.calmar) << ','
                << cgt::detail::format_full(pt.rmse) << '\n';
    }
    std::cout << "holdout sharpe " << final_rep.sharpe << ", calmar " << final_rep.calmar
              << ", mdd " << final_rep.mdd << ", rmse " << final_rep.rmse << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct FinetuneArgs {
    std::string input;
    std::string scheme = "one_split";
    std::string learner = "ridge";
    int holdout = 1260;
    int lags = 252;
    int B = 100;
    int val_h = 1260;
    std::string model_dir;
    std::uint64_t seed = 0;
    std::string out;
};

int run_finetune(const FinetuneArgs& args) {
    cgt::ExperimentConfig cfg;
    cfg.holdout = args.holdout;
    cfg.lags = args.lags;
    cfg.case2_B = args.B;
    cfg.one_split_h = args.val_h;
    cfg.seed = args.seed;
    const std::string scheme = cgt::detail::normalize_name(args.scheme);
    if (!cgt::detail::kKnownSchemes.contains(scheme))
        throw cgt::ConfigError("unknown scheme '" + args.scheme + "'");

    const cgt::AssetData asset = cgt::load_asset("input", args.input, cfg.holdout, cfg.lags);
    const std::size_t T_rows = asset.in_sample.size() - static_cast<std::size_t>(cfg.lags);
    const std::vector<cgt::LearnerSpec> grid = cgt::make_learner_grid(cfg, args.learner);

    cgt::GridResult result;
    if (scheme == "stat_boot") {
        const auto splits = cgt::detail::bootstrap_splits(cfg, asset.in_sample,
                                                          cgt::derive_seed(args.seed, 1));
        result = cgt::grid_search(splits, grid, cfg.lags, args.seed, scheme);
    } else if (scheme.rfind("cgan_", 0) == 0) {
        if (args.model_dir.empty())
            throw cgt::ConfigError("--model is required for generator schemes");
        const cgt::CganModel model = cgt::load_cgan(args.model_dir);
        const std::size_t path_len =
            asset.in_sample.size() - static_cast<std::size_t>(model.config.p);
        const std::size_t h = cgt::detail::synthetic_val_h(cfg, path_len);
        if (h == 0) throw std::runtime_error("synthetic path too short to split");
        const auto splits =
            cgt::cgan_splits(model, asset.in_sample, args.B, h, cgt::derive_seed(args.seed, 1));
        result = cgt::grid_search(splits, grid, cfg.lags, args.seed, scheme);
    } else {
        cgt::SplitPlan plan;
        if (scheme == "naive") plan = cgt::split_naive(T_rows);
        else if (scheme == "one_split")
            plan = cgt::split_one_split(T_rows, static_cast<std::size_t>(args.val_h));
        else if (scheme == "sliding")
            plan = cgt::split_sliding(T_rows, static_cast<std::size_t>(cfg.sliding_window),
                                      static_cast<std::size_t>(cfg.sliding_stride));
        else if (scheme == "hv_block")
            plan = cgt::split_hv_block(T_rows, static_cast<std::size_t>(cfg.cv_block),
                                       static_cast<std::size_t>(cfg.hv_gap));
        else if (scheme == "block")
            plan = cgt::split_block(T_rows, static_cast<std::size_t>(cfg.cv_block));
        else
            plan = cgt::split_kfold(T_rows, static_cast<std::size_t>(cfg.kfolds));
        result = cgt::grid_search(plan, grid, asset.in_sample, cfg.lags, args.seed);
    }
    const cgt::BacktestReport rep = cgt::finalize_and_test(
        result, asset.in_sample, asset.holdout, cfg.lags, cgt::derive_seed(args.seed, 2));

    nlohmann::json j;
    j["schema_version"] = cgt::kReportSchemaVersion;
    j["scheme"] = result.scheme_name;
    j["learner"] = args.learner;
    j["selected_index"] = result.selected;
    j["selected_params"] = cgt::detail::describe_spec(result.grid[result.selected]);
    j["mean_perf"] = result.mean_perf;
    j["disqualified"] = result.disqualified;
    nlohmann::json scores = nlohmann::json::array();
    for (Eigen::Index i = 0; i < result.scores.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index b = 0; b < result.scores.cols(); ++b) row.push_back(result.scores(i, b));
        scores.push_back(std::move(row));
    }
    j["scores"] = std::move(scores);
    j["report"] = report_json(rep);
    write_json(j, args.out);
    std::cout << "selected " << j["selected_params"].get<std::string>() << " | holdout sharpe "
              << rep.sharpe << ", calmar " << rep.calmar << ", rmse " << rep.rmse << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct AggregateArgs {
    int experiment = 1;
    std::string rows_path;
    std::string out_dir;
};

int run_aggregate(const AggregateArgs& args) {
    const cgt::ReportFile file = cgt::read_report_csv(args.rows_path);
    std::set<std::string> strategy_set, scheme_set;
    std::set<int> b_set;
    for (const auto& r : file.rows) {
        strategy_set.insert(r.strategy);
        scheme_set.insert(r.scheme);
        b_set.insert(r.ensemble_size);
    }
    const std::vector<std::string> strategies(strategy_set.begin(), strategy_set.end());
    const std::vector<std::string> schemes(scheme_set.begin(), scheme_set.end());
    const std::vector<int> b_values(b_set.begin(), b_set.end());

    namespace fs = std::filesystem;
    fs::create_directories(args.out_dir);
    if (args.experiment == 1) {
        const std::vector<std::string> metrics = {"sharpe", "calmar", "rmse"};
        const auto medians =
            cgt::median_mad_table(file.rows, strategies, metrics, b_values, schemes);
        std::ofstream med_out(fs::path(args.out_dir) / "median_mad.csv");
        cgt::write_median_mad_csv(medians, med_out);
        if (scheme_set.contains("cgan_large") && scheme_set.contains("stat_boot")) {
            const auto pvals = cgt::pairwise_pvalue_table(file.rows, strategies, metrics,
                                                          b_values, "cgan_large", "stat_boot");
            std::ofstream p_out(fs::path(args.out_dir) / "pvalues.csv");
            cgt::write_pairwise_pvalue_csv(pvals, "cgan_large", "stat_boot", p_out);
        }
    } else {
        const std::vector<std::string> metrics = {"sharpe", "calmar"};
        const auto quantiles = cgt::quantile_table(file.rows, strategies, metrics, schemes);
        std::ofstream q_out(fs::path(args.out_dir) / "quantiles.csv");
        cgt::write_quantile_csv(quantiles, q_out);
        std::vector<cgt::RankTable> tables;
        for (const auto& strategy : strategies) {
            try {
                const auto matrix = cgt::results_matrix(file.rows, strategy, "sharpe", schemes);
                tables.push_back(cgt::make_rank_table(matrix, strategy));
            } catch (const std::exception& e) {
                std::cerr << "warning: rank table skipped for " << strategy << ": " << e.what()
                          << '\n';
            }
        }
        std::ofstream r_out(fs::path(args.out_dir) / "ranks.csv");
        cgt::write_rank_table_csv(tables, r_out);
    }
    std::cout << "aggregated " << file.rows.size() << " rows into " << args.out_dir << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct BatchArgs {
    std::string config_path;
    std::string out_dir;  // optional override
    int workers = 0;      // optional override
};

cgt::ExperimentConfig load_batch_config(const BatchArgs& args) {
    cgt::ExperimentConfig cfg = cgt::parse_experiment_config_file(args.config_path);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.workers > 0)
        cfg.workers = args.workers;
    else if (cfg.workers == 1)
        cfg.workers = default_workers();
    return cfg;
}

int run_batch_case1(const BatchArgs& args) {
    const cgt::ExperimentConfig cfg = load_batch_config(args);
    if (cfg.assets.empty())
        std::cerr << "warning: no assets configured; emitting empty reports\n";
    const cgt::Case1Result result = cgt::run_case1(cfg);
    cgt::write_case1_outputs(cfg, result);
    std::cout << result.rows.size() << " rows, " << result.failures.size() << " failures -> "
              << cfg.out_dir << '\n';
    for (const auto& f : result.failures)
        std::cerr << "failure: " << f.asset << " [" << f.stage << "] " << f.message << '\n';
    return result.failures.empty() ? kExitOk : kExitPartialFailure;
}

int run_batch_case2(const BatchArgs& args) {
    const cgt::ExperimentConfig cfg = load_batch_config(args);
    if (cfg.assets.empty())
        std::cerr << "warning: no assets configured; emitting empty reports\n";
    const cgt::Case2Result result = cgt::run_case2(cfg);
    const auto warnings = cgt::write_case2_outputs(cfg, result);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    std::cout << result.rows.size() << " rows, " << result.failures.size() << " failures -> "
              << cfg.out_dir << '\n';
    for (const auto& f : result.failures)
        std::cerr << "failure: " << f.asset << " [" << f.stage << "] " << f.message << '\n';
    return result.failures.empty() ? kExitOk : kExitPartialFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Resampling-based trading strategy experiments"};
    app.require_subcommand(1);

    IngestArgs ingest_args;
    auto* ingest = app.add_subcommand("ingest", "Validate and normalize a return CSV");
    ingest->add_option("--input", ingest_args.input, "input CSV (date,value per line)")
        ->required();
    ingest->add_option("--out", ingest_args.out, "write normalized return CSV here");
    ingest->add_flag("--prices", ingest_args.prices,
                     "input holds prices; convert to excess log returns");

    auto* cgan = app.add_subcommand("cgan", "Train or inspect conditional generators");
    cgan->require_subcommand(1);
    CganTrainArgs train_args;
    auto* cgan_train = cgan->add_subcommand("train", "Train a generator and save the model");
    cgan_train->add_option("--input", train_args.input, "in-sample return CSV")->required();
    cgan_train->add_option("--size", train_args.size, "small | medium | large")
        ->check(CLI::IsMember({"small", "medium", "large"}));
    cgan_train->add_option("--out", train_args.out, "model output directory")->required();
    cgan_train->add_option("--seed", train_args.seed, "training seed");
    cgan_train->add_option("--lags", train_args.cfg.cgan_lags, "conditioning lags");
    cgan_train->add_option("--noise-dim", train_args.cfg.cgan_noise_dim, "noise inputs");
    cgan_train->add_option("--epochs", train_args.cfg.cgan_epochs, "training epochs");
    cgan_train->add_option("--batch", train_args.cfg.cgan_batch, "minibatch rows");
    cgan_train->add_option("--snap", train_args.cfg.cgan_snap, "snapshot period");
    cgan_train->add_option("--eval-samples", train_args.cfg.cgan_eval_samples,
                           "paths per snapshot evaluation");
    cgan_train->add_option("--lr", train_args.cfg.cgan_learning_rate, "learning rate");
    cgan_train->add_option("--gen-lr-scale", train_args.cfg.cgan_gen_lr_scale,
                           "generator step scale");
    cgan_train->add_option("--hidden-small", train_args.cfg.cgan_hidden_small,
                           "hidden neurons of the small class");
    cgan_train->add_option("--hidden-medium", train_args.cfg.cgan_hidden_medium,
                           "hidden neurons of the medium class");
    cgan_train->add_option("--hidden-large", train_args.cfg.cgan_hidden_large,
                           "hidden neurons of the large class");

    CganDiagnoseArgs diag_args;
    auto* cgan_diag = cgan->add_subcommand("diagnose", "Emit plot-ready diagnostics CSVs");
    cgan_diag->add_option("--model", diag_args.model_dir, "saved model directory")->required();
    cgan_diag->add_option("--input", diag_args.input, "return CSV to condition on")->required();
    cgan_diag->add_option("--out", diag_args.out, "diagnostics output directory")->required();
    cgan_diag->add_option("--paths", diag_args.paths, "recursive sample paths");
    cgan_diag->add_option("--max-lag", diag_args.max_lag, "ACF/PACF lags");
    cgan_diag->add_option("--seed", diag_args.seed, "sampling seed");

    auto* ensemble = app.add_subcommand("ensemble", "Ensemble combination runs");
    ensemble->require_subcommand(1);
    EnsembleArgs ens_args;
    auto* ens_run = ensemble->add_subcommand("run", "Build one ensemble and backtest it");
    ens_run->add_option("--input", ens_args.input, "full return CSV (holdout split off the end)")
        ->required();
    ens_run->add_option("--resampler", ens_args.resampler,
                        "stat_boot | cgan-small | cgan-medium | cgan-large");
    ens_run->add_option("--learner", ens_args.learner, "reg_tree | mlp");
    ens_run->add_option("--B", ens_args.B, "ensemble members");
    ens_run->add_option("--model", ens_args.model_dir, "saved generator (cgan resamplers)");
    ens_run->add_option("--holdout", ens_args.holdout, "holdout observations");
    ens_run->add_option("--lags", ens_args.lags, "feature lags");
    ens_run->add_option("--block", ens_args.block, "bootstrap expected block length");
    ens_run->add_option("--seed", ens_args.seed, "seed");
    ens_run->add_option("--out", ens_args.out, "report JSON path")->required();
    ens_run->add_option("--curve", ens_args.curve_out, "per-member-count curve CSV path");

    auto* finetune = app.add_subcommand("finetune", "Hyperparameter fine-tuning runs");
    finetune->require_subcommand(1);
    FinetuneArgs ft_args;
    auto* ft_run = finetune->add_subcommand("run", "Grid-search one scheme and backtest");
    ft_run->add_option("--input", ft_args.input, "full return CSV (holdout split off the end)")
        ->required();
    ft_run->add_option("--scheme", ft_args.scheme,
                       "naive | one-split | sliding | hv-block | block | kfold | stat_boot | "
                       "cgan-small | cgan-medium | cgan-large");
    ft_run->add_option("--learner", ft_args.learner, "ridge | mlp | gbt");
    ft_run->add_option("--holdout", ft_args.holdout, "holdout observations");
    ft_run->add_option("--lags", ft_args.lags, "feature lags");
    ft_run->add_option("--B", ft_args.B, "synthetic paths for bootstrap/generator schemes");
    ft_run->add_option("--val-h", ft_args.val_h, "validation block for one-split/synthetic");
    ft_run->add_option("--model", ft_args.model_dir, "saved generator (cgan schemes)");
    ft_run->add_option("--seed", ft_args.seed, "seed");
    ft_run->add_option("--out", ft_args.out, "result JSON path")->required();

    auto* report = app.add_subcommand("report", "Aggregate emitted report rows");
    report->require_subcommand(1);
    AggregateArgs agg_args;
    auto* agg = report->add_subcommand("aggregate", "Rebuild aggregate tables from a rows CSV");
    agg->add_option("--case", agg_args.experiment, "1 (combination) or 2 (fine-tuning)")
        ->check(CLI::IsMember({1, 2}));
    agg->add_option("--rows", agg_args.rows_path, "rows CSV emitted by a batch run")->required();
    agg->add_option("--out-dir", agg_args.out_dir, "output directory")->required();

    BatchArgs case1_args;
    auto* case1 = app.add_subcommand("case1", "Full combination experiment from a config file");
    case1->add_option("--config", case1_args.config_path, "experiment config file")->required();
    case1->add_option("--out-dir", case1_args.out_dir, "override configured output directory");
    case1->add_option("--workers", case1_args.workers, "override worker count");

    BatchArgs case2_args;
    auto* case2 = app.add_subcommand("case2", "Full fine-tuning experiment from a config file");
    case2->add_option("--config", case2_args.config_path, "experiment config file")->required();
    case2->add_option("--out-dir", case2_args.out_dir, "override configured output directory");
    case2->add_option("--workers", case2_args.workers, "override worker count");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) return run_ingest(ingest_args);
        if (cgan_train->parsed()) return run_cgan_train(train_args);
        if (cgan_diag->parsed()) return run_cgan_diagnose(diag_args);
        if (ens_run->parsed()) return run_ensemble(ens_args);
        if (ft_run->parsed()) return run_finetune(ft_args);
        if (agg->parsed()) return run_aggregate(agg_args);
        if (case1->parsed()) return run_batch_case1(case1_args);
        if (case2->parsed()) return run_batch_case2(case2_args);
    } catch (const cgt::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfigError;
    }
    return kExitConfigError;
}
