#include "baro/pipeline.hpp"

#include "baro/errors.hpp"

namespace baro {

void BaroConfig::validate() const {
    bocpd.validate();
    if (detection_kinds.empty()) {
        throw ConfigError("detection_kinds must not be empty");
    }
    if (!(scorer_options.epsilon > 0.0)) {
        throw ConfigError("scorer epsilon must be positive");
    }
}

DetectionInput detection_input(const MetricsWindow& window, const BaroConfig& cfg) {
    DetectionInput in{select_kinds(window, cfg.detection_kinds), false};
    if (in.window.cols() == 0) {
        if (!cfg.fallback_all_kinds) {
            throw ConfigError("no columns match the detection kinds and fallback is disabled");
        }
        in.window = window;
        in.used_fallback = true;
    }
    return in;
}

BaroOutcome run_baro(const MetricsWindow& window, const BaroConfig& cfg) {
    cfg.validate();
    BaroOutcome outcome;
    const auto in = detection_input(window, cfg);
    outcome.used_fallback = in.used_fallback;
    outcome.detection = bocpd::detect(in.window, cfg.bocpd);
    if (outcome.detection.anomaly) {
        outcome.ranking = run_with_fixed_time(window, *outcome.detection.anomaly_time, cfg.scorer, cfg.scorer_options);
    }
    return outcome;
}

rca::RootCauseRanking run_with_fixed_time(const MetricsWindow& window, Index t_hat, rca::Scorer scorer,
                                          const rca::ScorerOptions& opts) {
    return rca::rank(window, t_hat, scorer, opts);
}

}  // namespace baro
