#pragma once

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cgt/timeseries.hpp"

namespace cgt {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    fields.push_back(field);
    return fields;
}

inline double parse_double(const std::string& field, const std::string& context) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw std::invalid_argument("csv: cannot parse number '" + field + "' (" + context + ")");
    return value;
}

/// Format a double with enough digits to round-trip exactly.
inline std::string format_double(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

}  // namespace detail

/// Read a price CSV with header `date,price[,rate]`. ISO-8601 dates, decimal
/// point, UTF-8. Missing price fields reject with the offending date.
[[nodiscard]] inline PriceSeries read_price_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("csv: empty input");
    auto header = detail::split_csv_line(line);
    if (header.size() < 2 || header[0] != "date" || header[1] != "price")
        throw std::invalid_argument("csv: expected header 'date,price[,rate]'");
    const bool has_rate = header.size() >= 3 && header[2] == "rate";
    if (header.size() > (has_rate ? 3u : 2u))
        throw std::invalid_argument("csv: unexpected extra columns in header");

    PriceSeries series;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw std::invalid_argument("csv: wrong field count on line starting '" +
                                        (fields.empty() ? std::string() : fields[0]) + "'");
        const std::string& date = fields[0];
        if (fields[1].empty())
            throw std::invalid_argument("price series: missing price at " + date);
        series.dates.push_back(date);
        series.prices.push_back(detail::parse_double(fields[1], "price at " + date));
        if (has_rate) {
            if (fields[2].empty())
                throw std::invalid_argument("price series: missing rate at " + date);
            series.rates.push_back(detail::parse_double(fields[2], "rate at " + date));
        }
    }
    validate(series);
    return series;
}

[[nodiscard]] inline PriceSeries read_price_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("csv: cannot open " + path);
    return read_price_csv(in);
}

/// Read a return CSV with header `date,return`.
[[nodiscard]] inline ReturnSeries read_return_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("csv: empty input");
    auto header = detail::split_csv_line(line);
    if (header.size() != 2 || header[0] != "date" || header[1] != "return")
        throw std::invalid_argument("csv: expected header 'date,return'");
    ReturnSeries series;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 2)
            throw std::invalid_argument("csv: wrong field count on line starting '" +
                                        (fields.empty() ? std::string() : fields[0]) + "'");
        series.dates.push_back(fields[0]);
        series.returns.push_back(detail::parse_double(fields[1], "return at " + fields[0]));
    }
    for (std::size_t i = 1; i < series.dates.size(); ++i)
        if (!(series.dates[i - 1] < series.dates[i]))
            throw std::invalid_argument("return series: dates not strictly increasing at " +
                                        series.dates[i]);
    return series;
}

[[nodiscard]] inline ReturnSeries read_return_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("csv: cannot open " + path);
    return read_return_csv(in);
}

inline void write_return_csv(const ReturnSeries& series, std::ostream& out) {
    out << "date,return\n";
    for (std::size_t i = 0; i < series.size(); ++i)
        out << series.dates[i] << ',' << detail::format_double(series.returns[i]) << '\n';
}

inline void write_return_csv(const ReturnSeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("csv: cannot open " + path + " for writing");
    write_return_csv(series, out);
}

}  // namespace cgt
