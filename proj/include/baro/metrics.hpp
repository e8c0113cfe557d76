#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace baro {

using Index = Eigen::Index;

/// The four golden signals plus a catch-all.
enum class MetricKind { Traffic, Saturation, Latency, Errors, Unknown };

std::string_view to_string(MetricKind kind);

/// Case-insensitive; throws ConfigError on an unknown name.
MetricKind parse_kind(std::string_view name);

struct MetricId {
    std::string service;
    std::string metric;
    MetricKind kind = MetricKind::Unknown;

    /// `<service>_<metric>`, the CSV column name.
    std::string name() const { return service + "_" + metric; }

    friend bool operator==(const MetricId&, const MetricId&) = default;
};

using KindOverrides = std::map<std::string, MetricKind, std::less<>>;

/// Sidecar overrides for nonconforming column names. Keys are full CSV column
/// names; kind lookups also fall back to the bare metric name.
struct ColumnOverrides {
    KindOverrides kinds;
    std::map<std::string, std::pair<std::string, std::string>, std::less<>> identities;
};

MetricKind classify_kind(std::string_view metric_name, const KindOverrides& overrides = {});

/// Splits a column name at the first underscore into (service, metric).
std::pair<std::string, std::string> split_column_name(std::string_view column);

/// A T x D window of metric samples. Rows are time points, columns metrics.
/// Missing samples are stored as NaN. Immutable after construction.
class MetricsWindow {
public:
    MetricsWindow() = default;
    MetricsWindow(std::vector<double> timestamps, std::vector<MetricId> columns, Eigen::MatrixXd values);

    Index rows() const { return values_.rows(); }
    Index cols() const { return values_.cols(); }
    bool empty() const { return values_.size() == 0; }

    const std::vector<double>& timestamps() const { return timestamps_; }
    const std::vector<MetricId>& columns() const { return columns_; }
    const Eigen::MatrixXd& values() const { return values_; }

    const MetricId& column_id(Index c) const { return columns_.at(static_cast<std::size_t>(c)); }
    auto column(Index c) const { return values_.col(c); }

    std::optional<Index> find(std::string_view service, std::string_view metric) const;
    std::optional<Index> find(const MetricId& id) const { return find(id.service, id.metric); }

    bool has_missing() const;

    /// First row whose timestamp is >= t (rows() when none).
    Index row_at_or_after(double t) const;

    /// Same data with a new value matrix of identical shape.
    MetricsWindow with_values(Eigen::MatrixXd values) const;

    /// Sub-window over the listed columns, in the given order.
    MetricsWindow select_columns(const std::vector<Index>& indices) const;

private:
    std::vector<double> timestamps_;
    std::vector<MetricId> columns_;
    Eigen::MatrixXd values_;
};

MetricsWindow select_kinds(const MetricsWindow& window, const std::set<MetricKind>& kinds);

struct ImputeResult {
    MetricsWindow window;
    std::vector<std::string> warnings;
};

/// Forward fill, then back fill leading gaps. All-missing columns become 0.
ImputeResult impute(const MetricsWindow& window);

MetricsWindow read_csv(std::istream& in, const ColumnOverrides& overrides = {});
MetricsWindow load_csv(const std::filesystem::path& path, const ColumnOverrides& overrides = {});

/// Writes shortest round-trip decimal; NaN is written as an empty cell.
void write_csv(const MetricsWindow& window, std::ostream& out);
void write_csv(const MetricsWindow& window, const std::filesystem::path& path);

/// One `column_name,kind[,service,metric]` entry per line. `#` starts a comment.
ColumnOverrides read_overrides(std::istream& in);
ColumnOverrides load_overrides(const std::filesystem::path& path);

}  // namespace baro
