#pragma once

#include "baro/metrics.hpp"

#include <Eigen/Core>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace baro::rca {

enum class Scorer { Robust, NSigma };

std::string_view to_string(Scorer scorer);
Scorer parse_scorer(std::string_view name);

struct ScorerOptions {
    /// Floor applied to IQR / standard deviation.
    double epsilon = 1e-9;
    /// When set, the row at t_hat belongs to both periods (literal pseudocode
    /// mode). Otherwise the normal period is [0, t_hat) and the abnormal one
    /// [t_hat, T).
    bool inclusive_boundary = false;
};

struct RobustStats {
    double med = 0.0;
    double iqr = 0.0;
};

/// Quantile by linear interpolation at position q * (n - 1) of the sorted data.
double quantile(std::span<const double> values, double q);

RobustStats robust_stats(std::span<const double> values);

struct ScoredMetric {
    MetricId metric;
    double score = 0.0;
};

struct ServiceScore {
    std::string service;
    double score = 0.0;
};

struct RootCauseRanking {
    std::vector<ScoredMetric> metrics;  ///< descending score, ties by column order
    std::vector<ServiceScore> services; ///< first occurrence of each service in `metrics`
    Index detection_time = 0;           ///< row index used for the split

    std::vector<std::string> service_names() const;
};

/// max over the abnormal period of |x - med| / max(IQR, eps).
double robust_score(std::span<const double> column, Index t_hat, const ScorerOptions& opts = {});
double robust_score(const MetricsWindow& window, const MetricId& column, Index t_hat, const ScorerOptions& opts = {});

/// max over the abnormal period of |x - mean| / max(sd, eps), sample sd.
double nsigma_score(std::span<const double> column, Index t_hat, const ScorerOptions& opts = {});
double nsigma_score(const MetricsWindow& window, const MetricId& column, Index t_hat, const ScorerOptions& opts = {});

double score(Scorer scorer, std::span<const double> column, Index t_hat, const ScorerOptions& opts = {});

/// Scores every column of the window and sorts.
RootCauseRanking rank(const MetricsWindow& window, Index t_hat, Scorer scorer = Scorer::Robust,
                      const ScorerOptions& opts = {});

/// Keeps the first `k` entries of both lists.
RootCauseRanking truncate(RootCauseRanking ranking, std::size_t k);

}  // namespace baro::rca
