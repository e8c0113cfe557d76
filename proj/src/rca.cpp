#include "baro/rca.hpp"

#include "baro/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace baro::rca {
namespace {

struct Periods {
    std::span<const double> normal;
    std::span<const double> abnormal;
};

Periods split(std::span<const double> column, Index t_hat, const ScorerOptions& opts) {
    const auto n = static_cast<Index>(column.size());
    if (t_hat <= 0 || t_hat >= n) {
        throw RangeError("detection time " + std::to_string(t_hat) + " must lie strictly inside the window [0, " +
                         std::to_string(n) + ")");
    }
    const auto cut = static_cast<std::size_t>(t_hat);
    const auto normal_len = opts.inclusive_boundary ? cut + 1 : cut;
    return {column.first(normal_len), column.subspan(cut)};
}

std::vector<double> column_values(const MetricsWindow& window, const MetricId& id) {
    auto c = window.find(id);
    if (!c) {
        throw RangeError("column '" + id.name() + "' not in window");
    }
    const auto col = window.column(*c);
    return {col.data(), col.data() + col.size()};
}

double max_deviation(std::span<const double> abnormal, double center, double spread, double eps) {
    const double denom = std::max(spread, eps);
    double best = 0.0;
    for (double x : abnormal) {
        best = std::max(best, std::abs(x - center) / denom);
    }
    return best;
}

}  // namespace

std::string_view to_string(Scorer scorer) { return scorer == Scorer::Robust ? "robust" : "nsigma"; }

Scorer parse_scorer(std::string_view name) {
    if (name == "robust") {
        return Scorer::Robust;
    }
    if (name == "nsigma" || name == "n-sigma") {
        return Scorer::NSigma;
    }
    throw ConfigError("unknown scorer '" + std::string(name) + "' (expected robust or nsigma)");
}

double quantile(std::span<const double> values, double q) {
    if (values.empty()) {
        throw DataError("quantile of an empty sequence");
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

RobustStats robust_stats(std::span<const double> values) {
    if (values.empty()) {
        throw DataError("robust statistics need at least one value");
    }
    RobustStats s;
    s.med = quantile(values, 0.5);
    s.iqr = std::max(0.0, quantile(values, 0.75) - quantile(values, 0.25));
    return s;
}

double robust_score(std::span<const double> column, Index t_hat, const ScorerOptions& opts) {
    const auto [normal, abnormal] = split(column, t_hat, opts);
    const auto stats = robust_stats(normal);
    return max_deviation(abnormal, stats.med, stats.iqr, opts.epsilon);
}

double robust_score(const MetricsWindow& window, const MetricId& column, Index t_hat, const ScorerOptions& opts) {
    const auto values = column_values(window, column);
    return robust_score(values, t_hat, opts);
}

double nsigma_score(std::span<const double> column, Index t_hat, const ScorerOptions& opts) {
    const auto [normal, abnormal] = split(column, t_hat, opts);
    const double n = static_cast<double>(normal.size());
    const double mean = std::accumulate(normal.begin(), normal.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : normal) {
        ss += (x - mean) * (x - mean);
    }
    // A one-sample normal period has no spread estimate; the epsilon floor takes over.
    const double sd = normal.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    return max_deviation(abnormal, mean, sd, opts.epsilon);
}

double nsigma_score(const MetricsWindow& window, const MetricId& column, Index t_hat, const ScorerOptions& opts) {
    const auto values = column_values(window, column);
    return nsigma_score(values, t_hat, opts);
}

double score(Scorer scorer, std::span<const double> column, Index t_hat, const ScorerOptions& opts) {
    return scorer == Scorer::Robust ? robust_score(column, t_hat, opts) : nsigma_score(column, t_hat, opts);
}

std::vector<std::string> RootCauseRanking::service_names() const {
    std::vector<std::string> names;
    names.reserve(services.size());
    for (const auto& s : services) {
        names.push_back(s.service);
    }
    return names;
}

RootCauseRanking rank(const MetricsWindow& window, Index t_hat, Scorer scorer, const ScorerOptions& opts) {
    if (window.cols() == 0 || window.rows() == 0) {
        throw DataError("cannot rank an empty window");
    }
    if (window.has_missing()) {
        throw DataError("window has missing values; impute before ranking");
    }
    RootCauseRanking out;
    out.detection_time = t_hat;
    out.metrics.reserve(static_cast<std::size_t>(window.cols()));
    std::vector<double> buffer(static_cast<std::size_t>(window.rows()));
    for (Index c = 0; c < window.cols(); ++c) {
        Eigen::Map<Eigen::VectorXd>(buffer.data(), window.rows()) = window.column(c);
        double s = score(scorer, buffer, t_hat, opts);
        if (!std::isfinite(s)) {
            throw DataError("non-finite score for column '" + window.column_id(c).name() + "'");
        }
        out.metrics.push_back({window.column_id(c), s});
    }
    std::stable_sort(out.metrics.begin(), out.metrics.end(),
                     [](const ScoredMetric& a, const ScoredMetric& b) { return a.score > b.score; });
    std::set<std::string, std::less<>> seen;
    for (const auto& m : out.metrics) {
        if (seen.insert(m.metric.service).second) {
            out.services.push_back({m.metric.service, m.score});
        }
    }
    return out;
}

RootCauseRanking truncate(RootCauseRanking ranking, std::size_t k) {
    if (ranking.metrics.size() > k) {
        ranking.metrics.resize(k);
    }
    if (ranking.services.size() > k) {
        ranking.services.resize(k);
    }
    return ranking;
}

}  // namespace baro::rca
