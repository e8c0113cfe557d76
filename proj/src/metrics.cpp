#include "baro/metrics.hpp"

#include "baro/errors.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace baro {
namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) {
        return {};
    }
    auto e = s.find_last_not_of(ws);
    s = s.substr(b, e - b + 1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        s = s.substr(1, s.size() - 2);
    }
    return s;
}

std::vector<std::string_view> split(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

std::optional<double> parse_number(std::string_view cell) {
    if (cell.empty()) {
        return kMissing;
    }
    auto lc = lower(cell);
    if (lc == "nan" || lc == "-nan") {
        return kMissing;
    }
    if (cell.front() == '+') {
        cell.remove_prefix(1);
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        return std::nullopt;
    }
    return value;
}

bool contains_any(std::string_view haystack, std::initializer_list<std::string_view> needles) {
    return std::any_of(needles.begin(), needles.end(),
                       [&](std::string_view n) { return haystack.find(n) != std::string_view::npos; });
}

}  // namespace

std::string_view to_string(MetricKind kind) {
    switch (kind) {
    case MetricKind::Traffic:
        return "Traffic";
    case MetricKind::Saturation:
        return "Saturation";
    case MetricKind::Latency:
        return "Latency";
    case MetricKind::Errors:
        return "Errors";
    case MetricKind::Unknown:
        break;
    }
    return "Unknown";
}

MetricKind parse_kind(std::string_view name) {
    auto lc = lower(trim(name));
    for (auto kind : {MetricKind::Traffic, MetricKind::Saturation, MetricKind::Latency, MetricKind::Errors,
                      MetricKind::Unknown}) {
        if (lower(to_string(kind)) == lc) {
            return kind;
        }
    }
    if (lc == "error") {
        return MetricKind::Errors;
    }
    throw ConfigError("unknown metric kind '" + std::string(name) + "'");
}

MetricKind classify_kind(std::string_view metric_name, const KindOverrides& overrides) {
    if (auto it = overrides.find(metric_name); it != overrides.end()) {
        return it->second;
    }
    auto name = lower(metric_name);
    // Priority order matters: "request_duration" is a latency, not traffic.
    if (contains_any(name, {"latency", "duration", "response"})) {
        return MetricKind::Latency;
    }
    if (contains_any(name, {"error", "fail", "5xx"})) {
        return MetricKind::Errors;
    }
    if (contains_any(name, {"request", "rps", "qps", "throughput", "traffic"})) {
        return MetricKind::Traffic;
    }
    if (contains_any(name, {"cpu", "mem", "disk", "io", "usage", "util"})) {
        return MetricKind::Saturation;
    }
    return MetricKind::Unknown;
}

std::pair<std::string, std::string> split_column_name(std::string_view column) {
    auto pos = column.find('_');
    if (pos == std::string_view::npos || pos == 0 || pos + 1 == column.size()) {
        throw FormatError("column '" + std::string(column) + "' is not of the form <service>_<metric>");
    }
    return {std::string(column.substr(0, pos)), std::string(column.substr(pos + 1))};
}

MetricsWindow::MetricsWindow(std::vector<double> timestamps, std::vector<MetricId> columns, Eigen::MatrixXd values)
    : timestamps_(std::move(timestamps)), columns_(std::move(columns)), values_(std::move(values)) {
    if (values_.rows() != static_cast<Index>(timestamps_.size()) ||
        values_.cols() != static_cast<Index>(columns_.size())) {
        throw ShapeError("values matrix is " + std::to_string(values_.rows()) + "x" +
                         std::to_string(values_.cols()) + ", expected " + std::to_string(timestamps_.size()) +
                         "x" + std::to_string(columns_.size()));
    }
    for (std::size_t i = 1; i < timestamps_.size(); ++i) {
        if (!(timestamps_[i] > timestamps_[i - 1])) {
            throw DataError("timestamps must be strictly increasing (row " + std::to_string(i) + ")");
        }
    }
    std::set<std::pair<std::string_view, std::string_view>> seen;
    for (const auto& id : columns_) {
        if (id.service.empty() || id.metric.empty()) {
            throw DataError("metric identity has an empty service or metric name");
        }
        if (!seen.emplace(id.service, id.metric).second) {
            throw DataError("duplicate column '" + id.name() + "'");
        }
    }
}

std::optional<Index> MetricsWindow::find(std::string_view service, std::string_view metric) const {
    for (std::size_t c = 0; c < columns_.size(); ++c) {
        if (columns_[c].service == service && columns_[c].metric == metric) {
            return static_cast<Index>(c);
        }
    }
    return std::nullopt;
}

bool MetricsWindow::has_missing() const { return values_.hasNaN(); }

Index MetricsWindow::row_at_or_after(double t) const {
    auto it = std::lower_bound(timestamps_.begin(), timestamps_.end(), t);
    return static_cast<Index>(it - timestamps_.begin());
}

MetricsWindow MetricsWindow::with_values(Eigen::MatrixXd values) const {
    return MetricsWindow(timestamps_, columns_, std::move(values));
}

MetricsWindow MetricsWindow::select_columns(const std::vector<Index>& indices) const {
    std::vector<MetricId> ids;
    Eigen::MatrixXd sub(rows(), static_cast<Index>(indices.size()));
    for (std::size_t k = 0; k < indices.size(); ++k) {
        ids.push_back(column_id(indices[k]));
        sub.col(static_cast<Index>(k)) = values_.col(indices[k]);
    }
    return MetricsWindow(timestamps_, std::move(ids), std::move(sub));
}

MetricsWindow select_kinds(const MetricsWindow& window, const std::set<MetricKind>& kinds) {
    std::vector<Index> keep;
    for (Index c = 0; c < window.cols(); ++c) {
        if (kinds.contains(window.column_id(c).kind)) {
            keep.push_back(c);
        }
    }
    return window.select_columns(keep);
}

ImputeResult impute(const MetricsWindow& window) {
    Eigen::MatrixXd values = window.values();
    std::vector<std::string> warnings;
    const Index n = values.rows();
    for (Index c = 0; c < values.cols(); ++c) {
        auto col = values.col(c);
        Index first = 0;
        while (first < n && std::isnan(col(first))) {
            ++first;
        }
        if (first == n) {
            if (n > 0) {
                col.setZero();
                warnings.push_back("column '" + window.column_id(c).name() + "' is entirely missing; filled with 0");
            }
            continue;
        }
        for (Index r = 0; r < first; ++r) {
            col(r) = col(first);
        }
        for (Index r = first + 1; r < n; ++r) {
            if (std::isnan(col(r))) {
                col(r) = col(r - 1);
            }
        }
    }
    return {window.with_values(std::move(values)), std::move(warnings)};
}

MetricsWindow read_csv(std::istream& in, const ColumnOverrides& overrides) {
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("empty csv: missing header");
    }
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        line.erase(0, 3);
    }
    auto header = split(line);
    if (header.empty() || header.front() != "time") {
        throw FormatError("first header cell must be 'time'");
    }
    if (header.size() < 2) {
        throw FormatError("csv has no metric columns");
    }

    std::vector<MetricId> columns;
    std::set<std::string, std::less<>> names;
    for (std::size_t c = 1; c < header.size(); ++c) {
        std::string name(header[c]);
        if (name.empty()) {
            throw FormatError("empty column name at position " + std::to_string(c));
        }
        if (!names.insert(name).second) {
            throw DataError("duplicate column name '" + name + "'");
        }
        MetricId id;
        if (auto it = overrides.identities.find(name); it != overrides.identities.end()) {
            std::tie(id.service, id.metric) = it->second;
        } else {
            std::tie(id.service, id.metric) = split_column_name(name);
        }
        if (auto it = overrides.kinds.find(name); it != overrides.kinds.end()) {
            id.kind = it->second;
        } else {
            id.kind = classify_kind(id.metric, overrides.kinds);
        }
        columns.push_back(std::move(id));
    }

    std::vector<std::pair<double, std::vector<double>>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        auto cells = split(line);
        if (cells.size() != header.size()) {
            throw FormatError("row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                              " cells, expected " + std::to_string(header.size()));
        }
        std::vector<double> row(columns.size());
        double time = 0.0;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            auto v = parse_number(cells[c]);
            if (!v || (c == 0 && std::isnan(*v))) {
                throw ParseError("cannot parse '" + std::string(cells[c]) + "' at row " + std::to_string(line_no) +
                                 ", column '" + std::string(header[c]) + "'");
            }
            if (c == 0) {
                time = *v;
            } else {
                row[c - 1] = *v;
            }
        }
        rows.emplace_back(time, std::move(row));
    }

    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<double> timestamps;
    Eigen::MatrixXd values(static_cast<Index>(rows.size()), static_cast<Index>(columns.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (r > 0 && rows[r].first == rows[r - 1].first) {
            throw DataError("duplicate timestamp " + std::to_string(rows[r].first));
        }
        timestamps.push_back(rows[r].first);
        for (std::size_t c = 0; c < columns.size(); ++c) {
            values(static_cast<Index>(r), static_cast<Index>(c)) = rows[r].second[c];
        }
    }
    return MetricsWindow(std::move(timestamps), std::move(columns), std::move(values));
}

MetricsWindow load_csv(const std::filesystem::path& path, const ColumnOverrides& overrides) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open '" + path.string() + "'");
    }
    try {
        return read_csv(in, overrides);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

namespace {

void write_number(std::ostream& out, double v) {
    if (std::isnan(v)) {
        return;
    }
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    out.write(buf.data(), ptr - buf.data());
}

}  // namespace

void write_csv(const MetricsWindow& window, std::ostream& out) {
    out << "time";
    for (const auto& id : window.columns()) {
        out << ',' << id.name();
    }
    out << '\n';
    for (Index r = 0; r < window.rows(); ++r) {
        write_number(out, window.timestamps()[static_cast<std::size_t>(r)]);
        for (Index c = 0; c < window.cols(); ++c) {
            out << ',';
            write_number(out, window.values()(r, c));
        }
        out << '\n';
    }
}

void write_csv(const MetricsWindow& window, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw FormatError("cannot write '" + path.string() + "'");
    }
    write_csv(window, out);
}

ColumnOverrides read_overrides(std::istream& in) {
    ColumnOverrides result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto body = trim(std::string_view(line).substr(0, line.find('#')));
        if (body.empty()) {
            continue;
        }
        auto cells = split(body);
        if ((cells.size() != 2 && cells.size() != 4) || cells[0].empty()) {
            throw FormatError("override line " + std::to_string(line_no) +
                              ": expected 'column,kind' or 'column,kind,service,metric'");
        }
        std::string column(cells[0]);
        result.kinds[column] = parse_kind(cells[1]);
        if (cells.size() == 4) {
            if (cells[2].empty() || cells[3].empty()) {
                throw FormatError("override line " + std::to_string(line_no) + ": empty service or metric");
            }
            result.identities[column] = {std::string(cells[2]), std::string(cells[3])};
        }
    }
    return result;
}

ColumnOverrides load_overrides(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open '" + path.string() + "'");
    }
    return read_overrides(in);
}

}  // namespace baro
