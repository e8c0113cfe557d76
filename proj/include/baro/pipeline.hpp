#pragma once

#include "baro/bocpd.hpp"
#include "baro/metrics.hpp"
#include "baro/rca.hpp"

#include <optional>
#include <set>

namespace baro {

struct BaroConfig {
    bocpd::BocpdConfig bocpd;
    std::set<MetricKind> detection_kinds{MetricKind::Latency, MetricKind::Errors};
    /// Detect on every column when none matches `detection_kinds`.
    bool fallback_all_kinds = true;
    rca::Scorer scorer = rca::Scorer::Robust;
    rca::ScorerOptions scorer_options;

    void validate() const;
};

struct BaroOutcome {
    bocpd::DetectionResult detection;
    std::optional<rca::RootCauseRanking> ranking;  ///< present iff an anomaly was detected
    bool used_fallback = false;
};

struct DetectionInput {
    MetricsWindow window;
    bool used_fallback = false;
};

/// The columns detection runs on: `detection_kinds`, or everything when none
/// match and fallback is on.
DetectionInput detection_input(const MetricsWindow& window, const BaroConfig& cfg);

/// Detects on the Latency/Errors sub-window, then ranks every column at the
/// first change point.
BaroOutcome run_baro(const MetricsWindow& window, const BaroConfig& cfg = {});

/// Ranks at a caller-supplied row index, skipping detection.
rca::RootCauseRanking run_with_fixed_time(const MetricsWindow& window, Index t_hat,
                                          rca::Scorer scorer = rca::Scorer::Robust,
                                          const rca::ScorerOptions& opts = {});

}  // namespace baro
