#include "baro/bocpd.hpp"

namespace baro::bocpd {

IwPrior<double> fit_prior(const MetricsWindow& window) {
    if (window.has_missing()) {
        throw DataError("window has missing values; impute before fitting");
    }
    return fit_prior(window.values());
}

Eigen::MatrixXd standardize_columns(const Eigen::MatrixXd& values, Index reference_rows) {
    const Index n = values.rows();
    Eigen::MatrixXd out(n, values.cols());
    if (n == 0) {
        return out;
    }
    const Index ref = std::clamp<Index>(reference_rows, 1, n);
    for (Index c = 0; c < values.cols(); ++c) {
        const auto col = values.col(c);
        const double mean = col.mean();
        const double var = n > 1 ? (col.array() - mean).square().sum() / double(n - 1) : 0.0;
        const double sd = std::sqrt(var);
        if (!(sd > 0.0) || !std::isfinite(sd)) {
            out.col(c).setZero();
            continue;
        }
        const double center = col.head(ref).mean();
        out.col(c) = (col.array() - center) / sd;
    }
    return out;
}

std::vector<Index> change_points_from_trace(const std::vector<Index>& trace, const BocpdConfig& cfg, Index dim) {
    const Index warmup = cfg.effective_warmup(dim);
    std::vector<Index> points;
    for (std::size_t t = 1; t < trace.size(); ++t) {
        if (static_cast<Index>(t) <= warmup) {
            continue;
        }
        const Index prev = trace[t - 1];
        const Index cur = trace[t];
        // A run pinned at the truncation cap cannot grow; that plateau is not a change.
        if (cur == cfg.max_run_length && prev == cfg.max_run_length) {
            continue;
        }
        if (cfg.strict_drop ? cur < prev : cur <= prev) {
            points.push_back(static_cast<Index>(t));
        }
    }
    return points;
}

DetectionResult detect(const Eigen::MatrixXd& values, const BocpdConfig& cfg) {
    cfg.validate();
    if (values.cols() < 1) {
        throw ConfigError("no columns selected for detection");
    }
    if (values.rows() < cfg.warmup + 2) {
        throw DataError("detection needs at least warmup + 2 = " + std::to_string(cfg.warmup + 2) + " rows, got " +
                        std::to_string(values.rows()));
    }
    if (values.hasNaN()) {
        throw DataError("detection input has missing values; impute first");
    }

    const Eigen::MatrixXd data = cfg.standardize ? standardize_columns(values, std::max<Index>(cfg.warmup, 2)) : values;

    DetectionResult result;
    const Index n = data.rows();
    result.run_length_trace.reserve(static_cast<std::size_t>(n));

    std::optional<IwPrior<double>> prior;
    try {
        prior = fit_prior(data);
    } catch (const DataError&) {
        // zero pooled variance, handled below
    }
    if (!prior) {
        // Every column is constant: the distribution never changes.
        for (Index t = 0; t < n; ++t) {
            result.run_length_trace.push_back(std::min(t, cfg.max_run_length));
        }
        return result;
    }

    RunLengthState<double> state;
    for (Index t = 0; t < n; ++t) {
        state = step(std::move(state), data.row(t).transpose(), *prior, cfg);
        result.run_length_trace.push_back(state.map_run_length());
    }

    result.change_points = change_points_from_trace(result.run_length_trace, cfg, data.cols());
    result.anomaly = !result.change_points.empty();
    if (result.anomaly) {
        result.anomaly_time = result.change_points.front();
    }
    return result;
}

DetectionResult detect(const MetricsWindow& window, const BocpdConfig& cfg) { return detect(window.values(), cfg); }

}  // namespace baro::bocpd
