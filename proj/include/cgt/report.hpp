#pragma once
// Report rows for experiment runs, versioned CSV serialization, and the
// aggregate tables built from them: median/MAD comparisons, quantile spreads,
// pairwise rank-sum p-values, and average-rank tables with Friedman tests and
// Holm-corrected pairwise comparisons against the best-ranked method.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <cgt/stats.hpp>

namespace cgt {

inline constexpr int kReportSchemaVersion = 1;

/// 64-bit FNV-1a over raw bytes; used to stamp every report row with a hash
/// of the configuration that produced it.
[[nodiscard]] inline std::uint64_t fnv1a_hash(std::string_view text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

/// One holdout evaluation: an asset run under a scheme (resampler or
/// validation scheme) with a learner and an ensemble/fold count B.
struct ReportRow {
    std::string asset;
    std::string scheme;
    std::string strategy;
    int ensemble_size = 0;  // B: members (combination) or folds (fine-tuning)
    std::string selected;   // chosen hyperparameters, empty for combination runs
    double sharpe = std::numeric_limits<double>::quiet_NaN();
    double calmar = std::numeric_limits<double>::quiet_NaN();
    double mdd = 0.0;
    double rmse = 0.0;
};

namespace detail {

/// Round-trippable decimal rendering: 17 significant digits reproduce the
/// exact double on parse, keeping emitted files byte-stable across runs.
[[nodiscard]] inline std::string format_full(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

[[nodiscard]] inline std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace detail

inline void write_report_csv(std::span<const ReportRow> rows, std::uint64_t config_hash,
                             std::ostream& out) {
    out << "schema_version,config_hash,asset,scheme,strategy,B,selected,sharpe,calmar,mdd,rmse\n";
    for (const auto& r : rows) {
        out << kReportSchemaVersion << ',' << config_hash << ',' << detail::csv_escape(r.asset)
            << ',' << detail::csv_escape(r.scheme) << ',' << detail::csv_escape(r.strategy) << ','
            << r.ensemble_size << ',' << detail::csv_escape(r.selected) << ','
            << detail::format_full(r.sharpe) << ',' << detail::format_full(r.calmar) << ','
            << detail::format_full(r.mdd) << ',' << detail::format_full(r.rmse) << '\n';
    }
}

inline void write_report_csv(std::span<const ReportRow> rows, std::uint64_t config_hash,
                             const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_report_csv: cannot open " + path);
    write_report_csv(rows, config_hash, out);
}

struct ReportFile {
    std::vector<ReportRow> rows;
    std::uint64_t config_hash = 0;
};

namespace detail {

/// Split one CSV record, honoring double-quoted fields with "" escapes.
[[nodiscard]] inline std::vector<std::string> split_report_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

[[nodiscard]] inline double parse_report_double(const std::string& field, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        double v = std::stod(field, &pos);
        if (pos != field.size()) throw std::invalid_argument(field);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("report line " + std::to_string(line_no) +
                                 ": malformed number '" + field + "'");
    }
}

}  // namespace detail

[[nodiscard]] inline ReportFile read_report_csv(std::istream& in) {
    ReportFile file;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("report file is empty");
    const std::string expected =
        "schema_version,config_hash,asset,scheme,strategy,B,selected,sharpe,calmar,mdd,rmse";
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected) throw std::runtime_error("report header mismatch: " + line);
    std::size_t line_no = 1;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = detail::split_report_line(line);
        if (f.size() != 11)
            throw std::runtime_error("report line " + std::to_string(line_no) +
                                     ": expected 11 fields, got " + std::to_string(f.size()));
        if (std::stoi(f[0]) != kReportSchemaVersion)
            throw std::runtime_error("unsupported report schema version " + f[0]);
        const std::uint64_t hash = std::stoull(f[1]);
        if (first) {
            file.config_hash = hash;
            first = false;
        } else if (hash != file.config_hash) {
            throw std::runtime_error("report line " + std::to_string(line_no) +
                                     ": config hash differs from the first row");
        }
        ReportRow r;
        r.asset = f[2];
        r.scheme = f[3];
        r.strategy = f[4];
        r.ensemble_size = std::stoi(f[5]);
        r.selected = f[6];
        r.sharpe = detail::parse_report_double(f[7], line_no);
        r.calmar = detail::parse_report_double(f[8], line_no);
        r.mdd = detail::parse_report_double(f[9], line_no);
        r.rmse = detail::parse_report_double(f[10], line_no);
        file.rows.push_back(std::move(r));
    }
    return file;
}

[[nodiscard]] inline ReportFile read_report_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_report_csv: cannot open " + path);
    return read_report_csv(in);
}

/// Metric accessor by column name; the names double as CSV/table labels.
[[nodiscard]] inline double metric_value(const ReportRow& row, const std::string& metric) {
    if (metric == "sharpe") return row.sharpe;
    if (metric == "calmar") return row.calmar;
    if (metric == "mdd") return row.mdd;
    if (metric == "rmse") return row.rmse;
    throw std::invalid_argument("unknown metric: " + metric);
}

/// Pivot rows into an asset x scheme matrix of one metric for one strategy
/// (optionally one B). Assets are sorted by name; combos a row never reported
/// stay NaN so rank statistics can apply listwise deletion.
[[nodiscard]] inline ResultsMatrix results_matrix(std::span<const ReportRow> rows,
                                                  const std::string& strategy,
                                                  const std::string& metric,
                                                  const std::vector<std::string>& schemes,
                                                  int ensemble_size = -1) {
    std::set<std::string> asset_set;
    for (const auto& r : rows)
        if (r.strategy == strategy && (ensemble_size < 0 || r.ensemble_size == ensemble_size))
            asset_set.insert(r.asset);
    ResultsMatrix m;
    m.assets.assign(asset_set.begin(), asset_set.end());
    m.methods = schemes;
    m.values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(m.assets.size()),
                                         static_cast<Eigen::Index>(schemes.size()),
                                         std::numeric_limits<double>::quiet_NaN());
    std::map<std::string, std::size_t> asset_idx;
    for (std::size_t i = 0; i < m.assets.size(); ++i) asset_idx[m.assets[i]] = i;
    std::map<std::string, std::size_t> scheme_idx;
    for (std::size_t j = 0; j < schemes.size(); ++j) scheme_idx[schemes[j]] = j;
    for (const auto& r : rows) {
        if (r.strategy != strategy) continue;
        if (ensemble_size >= 0 && r.ensemble_size != ensemble_size) continue;
        auto it = scheme_idx.find(r.scheme);
        if (it == scheme_idx.end()) continue;
        m.values(static_cast<Eigen::Index>(asset_idx.at(r.asset)),
                 static_cast<Eigen::Index>(it->second)) = metric_value(r, metric);
    }
    return m;
}

// ---------------------------------------------------------------------------
// Aggregate tables (long/plot-ready format, one statistic per line)
// ---------------------------------------------------------------------------

struct MedianMadRow {
    std::string strategy;
    std::string metric;
    int ensemble_size = 0;
    std::string scheme;
    double median = std::numeric_limits<double>::quiet_NaN();
    double mad = std::numeric_limits<double>::quiet_NaN();
    std::size_t count = 0;  // assets contributing (NaN entries dropped)
};

/// Median and mean-absolute-deviation of each metric across assets, per
/// (strategy, B, scheme) cell — the combination-experiment summary layout.
[[nodiscard]] inline std::vector<MedianMadRow> median_mad_table(
    std::span<const ReportRow> rows, const std::vector<std::string>& strategies,
    const std::vector<std::string>& metrics, const std::vector<int>& ensemble_sizes,
    const std::vector<std::string>& schemes) {
    std::vector<MedianMadRow> table;
    for (const auto& strategy : strategies)
        for (const auto& metric : metrics)
            for (int B : ensemble_sizes)
                for (const auto& scheme : schemes) {
                    std::vector<double> vals;
                    for (const auto& r : rows) {
                        if (r.strategy != strategy || r.scheme != scheme ||
                            r.ensemble_size != B)
                            continue;
                        const double v = metric_value(r, metric);
                        if (std::isfinite(v)) vals.push_back(v);
                    }
                    MedianMadRow out{strategy, metric, B, scheme,
                                     std::numeric_limits<double>::quiet_NaN(),
                                     std::numeric_limits<double>::quiet_NaN(), vals.size()};
                    if (!vals.empty()) {
                        const auto summary = robust_summary(vals);
                        out.median = summary.median;
                        out.mad = summary.mad;
                    }
                    table.push_back(std::move(out));
                }
    return table;
}

inline void write_median_mad_csv(std::span<const MedianMadRow> table, std::ostream& out) {
    out << "strategy,metric,B,scheme,median,mad,assets\n";
    for (const auto& r : table)
        out << r.strategy << ',' << r.metric << ',' << r.ensemble_size << ',' << r.scheme << ','
            << detail::format_full(r.median) << ',' << detail::format_full(r.mad) << ','
            << r.count << '\n';
}

struct PairwisePvalueRow {
    std::string strategy;
    std::string metric;
    int ensemble_size = 0;
    double p_value = std::numeric_limits<double>::quiet_NaN();
    std::size_t n_a = 0;  // finite observations for each scheme
    std::size_t n_b = 0;
};

/// Two-sided rank-sum p-values comparing two schemes' per-asset metric
/// distributions per (strategy, metric, B) cell.
[[nodiscard]] inline std::vector<PairwisePvalueRow> pairwise_pvalue_table(
    std::span<const ReportRow> rows, const std::vector<std::string>& strategies,
    const std::vector<std::string>& metrics, const std::vector<int>& ensemble_sizes,
    const std::string& scheme_a, const std::string& scheme_b) {
    std::vector<PairwisePvalueRow> table;
    for (const auto& strategy : strategies)
        for (const auto& metric : metrics)
            for (int B : ensemble_sizes) {
                std::vector<double> a, b;
                for (const auto& r : rows) {
                    if (r.strategy != strategy || r.ensemble_size != B) continue;
                    const double v = metric_value(r, metric);
                    if (!std::isfinite(v)) continue;
                    if (r.scheme == scheme_a) a.push_back(v);
                    if (r.scheme == scheme_b) b.push_back(v);
                }
                PairwisePvalueRow out{strategy, metric, B,
                                      std::numeric_limits<double>::quiet_NaN(), a.size(),
                                      b.size()};
                if (!a.empty() && !b.empty()) out.p_value = wilcoxon_rank_sum(a, b);
                table.push_back(out);
            }
    return table;
}

inline void write_pairwise_pvalue_csv(std::span<const PairwisePvalueRow> table,
                                      const std::string& scheme_a, const std::string& scheme_b,
                                      std::ostream& out) {
    out << "strategy,metric,B,scheme_a,scheme_b,p_value,n_a,n_b\n";
    for (const auto& r : table)
        out << r.strategy << ',' << r.metric << ',' << r.ensemble_size << ',' << scheme_a << ','
            << scheme_b << ',' << detail::format_full(r.p_value) << ',' << r.n_a << ',' << r.n_b
            << '\n';
}

struct QuantileRow {
    std::string strategy;
    std::string metric;
    double quantile = 0.0;  // 0, 0.25, 0.5, 0.75, 1
    std::string scheme;
    double value = std::numeric_limits<double>::quiet_NaN();
    std::size_t count = 0;
};

/// Five-number summary (min/quartiles/max) of each metric across assets per
/// (strategy, scheme) — the fine-tuning spread layout.
[[nodiscard]] inline std::vector<QuantileRow> quantile_table(
    std::span<const ReportRow> rows, const std::vector<std::string>& strategies,
    const std::vector<std::string>& metrics, const std::vector<std::string>& schemes) {
    constexpr double qs[5] = {0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<QuantileRow> table;
    for (const auto& strategy : strategies)
        for (const auto& metric : metrics)
            for (double q : qs)
                for (const auto& scheme : schemes) {
                    std::vector<double> vals;
                    for (const auto& r : rows) {
                        if (r.strategy != strategy || r.scheme != scheme) continue;
                        const double v = metric_value(r, metric);
                        if (std::isfinite(v)) vals.push_back(v);
                    }
                    QuantileRow out{strategy, metric, q, scheme,
                                    std::numeric_limits<double>::quiet_NaN(), vals.size()};
                    if (!vals.empty()) {
                        std::sort(vals.begin(), vals.end());
                        out.value = quantile_linear(vals, q);
                    }
                    table.push_back(std::move(out));
                }
    return table;
}

inline void write_quantile_csv(std::span<const QuantileRow> table, std::ostream& out) {
    out << "strategy,metric,quantile,scheme,value,assets\n";
    for (const auto& r : table)
        out << r.strategy << ',' << r.metric << ',' << detail::format_full(r.quantile) << ','
            << r.scheme << ',' << detail::format_full(r.value) << ',' << r.count << '\n';
}

// ---------------------------------------------------------------------------
// Average-rank table: Friedman test plus Holm-corrected pairwise comparisons
// of every scheme against the best-ranked one.
// ---------------------------------------------------------------------------

struct RankTableRow {
    std::string method;
    double avg_rank = 0.0;
    // Rank-sum p-value vs. the best-ranked method; NaN on the best row itself.
    double p_value = std::numeric_limits<double>::quiet_NaN();
    double holm_threshold = std::numeric_limits<double>::quiet_NaN();
    bool reject = false;
};

struct RankTable {
    std::string strategy;
    std::vector<RankTableRow> rows;  // ascending p-value; best method last
    double friedman_chi2 = 0.0;
    double friedman_p = 1.0;
    std::size_t assets_used = 0;  // complete rows entering the comparison
};

/// Build the rank comparison for one strategy from an asset x scheme matrix.
/// Only assets with a value for every scheme enter (listwise deletion), so the
/// rank test and the pairwise comparisons see the same sample.
[[nodiscard]] inline RankTable make_rank_table(const ResultsMatrix& matrix,
                                               const std::string& strategy, double alpha = 0.05) {
    const Eigen::MatrixXd complete = matrix.complete_rows();
    if (complete.rows() < 2)
        throw std::invalid_argument("make_rank_table: need at least two complete assets");
    const auto k = static_cast<std::size_t>(complete.cols());
    if (k < 2) throw std::invalid_argument("make_rank_table: need at least two methods");

    RankTable table;
    table.strategy = strategy;
    table.assets_used = static_cast<std::size_t>(complete.rows());
    const FriedmanResult fr = friedman_test(complete);
    table.friedman_chi2 = fr.chi2;
    table.friedman_p = fr.p_value;

    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j)
        if (fr.avg_ranks[j] < fr.avg_ranks[best]) best = j;

    std::vector<std::size_t> others;
    std::vector<double> p_values;
    std::vector<double> best_col(static_cast<std::size_t>(complete.rows()));
    for (Eigen::Index i = 0; i < complete.rows(); ++i)
        best_col[static_cast<std::size_t>(i)] = complete(i, static_cast<Eigen::Index>(best));
    for (std::size_t j = 0; j < k; ++j) {
        if (j == best) continue;
        std::vector<double> col(static_cast<std::size_t>(complete.rows()));
        for (Eigen::Index i = 0; i < complete.rows(); ++i)
            col[static_cast<std::size_t>(i)] = complete(i, static_cast<Eigen::Index>(j));
        others.push_back(j);
        p_values.push_back(wilcoxon_rank_sum(col, best_col));
    }

    const HolmResult holm = holm_correction(p_values, alpha);
    for (std::size_t i = 0; i < holm.order.size(); ++i) {
        const std::size_t idx = holm.order[i];
        RankTableRow row;
        row.method = matrix.methods[others[idx]];
        row.avg_rank = fr.avg_ranks[others[idx]];
        row.p_value = p_values[idx];
        row.holm_threshold = holm.thresholds[i];
        row.reject = holm.reject[idx];
        table.rows.push_back(std::move(row));
    }
    RankTableRow best_row;
    best_row.method = matrix.methods[best];
    best_row.avg_rank = fr.avg_ranks[best];
    table.rows.push_back(std::move(best_row));
    return table;
}

inline void write_rank_table_csv(std::span<const RankTable> tables, std::ostream& out) {
    out << "strategy,method,avg_rank,p_value,holm_threshold,reject,friedman_chi2,friedman_p,"
           "assets\n";
    for (const auto& t : tables)
        for (const auto& r : t.rows)
            out << t.strategy << ',' << r.method << ',' << detail::format_full(r.avg_rank) << ','
                << detail::format_full(r.p_value) << ','
                << detail::format_full(r.holm_threshold) << ',' << (r.reject ? 1 : 0) << ','
                << detail::format_full(t.friedman_chi2) << ','
                << detail::format_full(t.friedman_p) << ',' << t.assets_used << '\n';
}

}  // namespace cgt
