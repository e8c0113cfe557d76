#pragma once

#include "baro/metrics.hpp"

#include <Eigen/Core>

#include <random>
#include <string>
#include <vector>

namespace testing_support {

/// Window with columns named s<i>_m<i> and timestamps 0..T-1.
inline baro::MetricsWindow make_window(const Eigen::MatrixXd& values) {
    std::vector<double> ts(static_cast<std::size_t>(values.rows()));
    for (std::size_t i = 0; i < ts.size(); ++i) {
        ts[i] = static_cast<double>(i);
    }
    std::vector<baro::MetricId> cols;
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
        cols.push_back({"s" + std::to_string(c), "m" + std::to_string(c), baro::MetricKind::Unknown});
    }
    return {std::move(ts), std::move(cols), values};
}

inline Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = n(rng);
        }
    }
    return m;
}

}  // namespace testing_support
