#pragma once

// Multivariate Bayesian online change point detection.
//
// Observations are modelled as x_t ~ N(0, Sigma) with an inverse-Wishart prior
// Sigma ~ IW(n0, V0). For a run of h points with scatter S = sum x x^T the
// marginal likelihood is available in closed form, so the run-length posterior
// can be propagated one observation at a time. Everything is kept in log space.

#include "baro/errors.hpp"
#include "baro/metrics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace baro::bocpd {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct BocpdConfig {
    double hazard_lambda = 1e6;
    Index max_run_length = 200;
    double prune_threshold = 1e-8;
    Index warmup = 10;
    /// Change points are masked for at least this many rows per dimension.
    Index warmup_per_dim = 3;
    bool standardize = true;
    /// Report a change only when the MAP run length strictly drops.
    bool strict_drop = false;

    void validate() const {
        if (!(hazard_lambda > 1.0)) {
            throw ConfigError("hazard_lambda must be > 1");
        }
        if (!(prune_threshold >= 0.0 && prune_threshold < 1.0)) {
            throw ConfigError("prune_threshold must be in [0, 1)");
        }
        if (max_run_length < 1) {
            throw ConfigError("max_run_length must be >= 1");
        }
        if (warmup < 0) {
            throw ConfigError("warmup must be >= 0");
        }
        if (warmup_per_dim < 0) {
            throw ConfigError("warmup_per_dim must be >= 0");
        }
    }

    Index effective_warmup(Index dim) const { return std::max(warmup, warmup_per_dim * dim); }
};

/// log Gamma_d(a) = d(d-1)/4 log(pi) + sum_{j=1..d} log Gamma(a + (1-j)/2).
template <typename Scalar>
Scalar log_multivariate_gamma(Index d, Scalar a) {
    if (d < 1) {
        throw RangeError("multivariate gamma dimension must be positive");
    }
    if (!(a > Scalar(d - 1) / 2)) {
        throw RangeError("multivariate gamma argument must exceed (d-1)/2");
    }
    using std::lgamma;
    using std::log;
    Scalar result = Scalar(d) * Scalar(d - 1) / 4 * log(std::numbers::pi_v<Scalar>);
    for (Index j = 1; j <= d; ++j) {
        result += lgamma(a + Scalar(1 - j) / 2);
    }
    return result;
}

/// log|M| for a symmetric positive-definite M. Retries once with a small
/// diagonal jitter before giving up.
template <typename Derived>
typename Derived::Scalar log_det_spd(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    Matrix<Scalar> work = m;
    Eigen::LLT<Matrix<Scalar>> llt(work);
    if (llt.info() != Eigen::Success) {
        const Index d = work.rows();
        const Scalar jitter = Scalar(1e-9) * std::max(work.trace() / Scalar(d), Scalar(1e-300));
        work.diagonal().array() += jitter;
        llt.compute(work);
        if (llt.info() != Eigen::Success) {
            throw NumericalError("matrix is not positive definite");
        }
    }
    return Scalar(2) * llt.matrixLLT().diagonal().array().log().sum();
}

template <typename Scalar = double>
struct IwPrior {
    Scalar dof = 0;             ///< n0, set to the dimension count
    Matrix<Scalar> scale;       ///< V0 = pooled_variance * I
    Scalar pooled_variance = 0;
    Scalar log_det_scale = 0;   ///< cached log|V0|
    Scalar log_gamma_dof = 0;   ///< cached log Gamma_D(n0/2)

    Index dim() const { return scale.rows(); }

    static IwPrior make(Index dim, Scalar dof, Scalar pooled_variance) {
        if (dim < 1) {
            throw DataError("prior needs at least one dimension");
        }
        if (!(pooled_variance > 0) || !std::isfinite(static_cast<double>(pooled_variance))) {
            throw DataError("pooled variance is zero; data is degenerate");
        }
        if (!(dof > Scalar(dim - 1))) {
            throw ConfigError("inverse-Wishart degrees of freedom must exceed D - 1");
        }
        IwPrior p;
        p.dof = dof;
        p.pooled_variance = pooled_variance;
        p.scale = pooled_variance * Matrix<Scalar>::Identity(dim, dim);
        using std::log;
        p.log_det_scale = Scalar(dim) * log(pooled_variance);
        p.log_gamma_dof = log_multivariate_gamma(dim, dof / 2);
        return p;
    }
};

/// Fits V0 from the mean of the per-column sample variances; n0 = D.
template <typename Derived>
IwPrior<typename Derived::Scalar> fit_prior(const Eigen::MatrixBase<Derived>& data) {
    using Scalar = typename Derived::Scalar;
    if (data.rows() < 2) {
        throw DataError("prior fit needs at least 2 rows");
    }
    if (data.cols() < 1) {
        throw DataError("prior fit needs at least 1 column");
    }
    const auto n = static_cast<Scalar>(data.rows());
    const auto centered = (data.rowwise() - data.colwise().mean()).eval();
    const Scalar pooled = (centered.array().square().colwise().sum() / (n - 1)).mean();
    return IwPrior<Scalar>::make(data.cols(), static_cast<Scalar>(data.cols()), pooled);
}

IwPrior<double> fit_prior(const MetricsWindow& window);

/// log p(x_1..x_h) under the zero-mean Gaussian / inverse-Wishart model, given
/// the scatter S of the h points.
template <typename Derived, typename Scalar>
Scalar log_marginal_likelihood(const Eigen::MatrixBase<Derived>& scatter, Index h, const IwPrior<Scalar>& prior) {
    const Index d = prior.dim();
    if (scatter.rows() != d || scatter.cols() != d) {
        throw ShapeError("scatter is " + std::to_string(scatter.rows()) + "x" + std::to_string(scatter.cols()) +
                         ", prior dimension is " + std::to_string(d));
    }
    if (h < 0) {
        throw RangeError("window length must be non-negative");
    }
    if (h == 0) {
        return Scalar(0);
    }
    using std::log;
    const Scalar n0 = prior.dof;
    const Scalar hs = static_cast<Scalar>(h);
    const Scalar log_det_post = log_det_spd(prior.scale + scatter);
    return -(hs * Scalar(d) / 2) * log(std::numbers::pi_v<Scalar>) + (n0 / 2) * prior.log_det_scale -
           ((n0 + hs) / 2) * log_det_post + log_multivariate_gamma(d, (n0 + hs) / 2) - prior.log_gamma_dof;
}

/// One run-length hypothesis with its sufficient statistics.
template <typename Scalar>
struct Hypothesis {
    Index run_length = 0;
    Scalar log_prob = 0;
    Matrix<Scalar> scatter;  ///< sum of x x^T over the points in the run
    Index count = 0;         ///< points in the run (run_length + 1 until the cap merges)
    Scalar log_marginal = 0; ///< cached log_marginal_likelihood(scatter, count)
};

/// Posterior over run lengths after `observations` points. r_t = 0 means the
/// latest point starts a new segment. Hypotheses are sorted by run length.
template <typename Scalar = double>
struct RunLengthState {
    Index observations = 0;
    std::vector<Hypothesis<Scalar>> hypotheses;

    Scalar total_probability() const {
        Scalar total = 0;
        for (const auto& h : hypotheses) {
            total += std::exp(h.log_prob);
        }
        return total;
    }

    /// Most probable run length; the smaller one wins ties.
    Index map_run_length() const {
        if (hypotheses.empty()) {
            return 0;
        }
        auto it = std::max_element(hypotheses.begin(), hypotheses.end(),
                                   [](const auto& a, const auto& b) { return a.log_prob < b.log_prob; });
        return it->run_length;
    }
};

namespace detail {

template <typename Scalar>
Scalar log_add_exp(Scalar a, Scalar b) {
    if (a == -std::numeric_limits<Scalar>::infinity()) {
        return b;
    }
    if (b == -std::numeric_limits<Scalar>::infinity()) {
        return a;
    }
    const Scalar m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

template <typename Scalar>
Scalar log_sum_exp(const std::vector<Hypothesis<Scalar>>& hs) {
    Scalar m = -std::numeric_limits<Scalar>::infinity();
    for (const auto& h : hs) {
        m = std::max(m, h.log_prob);
    }
    if (!std::isfinite(static_cast<double>(m))) {
        return m;
    }
    Scalar acc = 0;
    for (const auto& h : hs) {
        acc += std::exp(h.log_prob - m);
    }
    return m + std::log(acc);
}

template <typename Scalar>
void normalize(std::vector<Hypothesis<Scalar>>& hs) {
    const Scalar z = log_sum_exp(hs);
    if (!std::isfinite(static_cast<double>(z))) {
        throw NumericalError("run-length posterior collapsed to zero mass");
    }
    for (auto& h : hs) {
        h.log_prob -= z;
    }
}

}  // namespace detail

/// Advances the run-length posterior by one observation.
template <typename Scalar, typename Derived>
RunLengthState<Scalar> step(RunLengthState<Scalar> state, const Eigen::MatrixBase<Derived>& x,
                            const IwPrior<Scalar>& prior, const BocpdConfig& cfg) {
    const Index d = prior.dim();
    if (x.size() != d) {
        throw ShapeError("observation has dimension " + std::to_string(x.size()) + ", prior expects " +
                         std::to_string(d));
    }
    const Vector<Scalar> xv = x.template cast<Scalar>();
    const Matrix<Scalar> outer = xv * xv.transpose();
    const Scalar log_hazard = -std::log(static_cast<Scalar>(cfg.hazard_lambda));
    const Scalar log_survival = std::log1p(-Scalar(1) / static_cast<Scalar>(cfg.hazard_lambda));

    std::vector<Hypothesis<Scalar>> next;
    next.reserve(state.hypotheses.size() + 1);

    // Change point: x_t opens a new run and is scored under the prior alone.
    Hypothesis<Scalar> fresh;
    fresh.run_length = 0;
    fresh.scatter = outer;
    fresh.count = 1;
    fresh.log_marginal = log_marginal_likelihood(outer, 1, prior);
    fresh.log_prob = fresh.log_marginal;
    if (!state.hypotheses.empty()) {
        fresh.log_prob += log_hazard + detail::log_sum_exp(state.hypotheses);
    }
    next.push_back(std::move(fresh));

    for (auto& h : state.hypotheses) {
        Hypothesis<Scalar> grown;
        grown.run_length = std::min(h.run_length + 1, cfg.max_run_length);
        grown.scatter = std::move(h.scatter);
        grown.scatter += outer;
        grown.count = h.count + 1;
        grown.log_marginal = log_marginal_likelihood(grown.scatter, grown.count, prior);
        grown.log_prob = h.log_prob + log_survival + (grown.log_marginal - h.log_marginal);
        if (!next.empty() && next.back().run_length == grown.run_length) {
            // Truncation merge at the cap: masses add, the heavier run keeps its statistics.
            auto& kept = next.back();
            const Scalar merged = detail::log_add_exp(kept.log_prob, grown.log_prob);
            if (grown.log_prob > kept.log_prob) {
                kept = std::move(grown);
            }
            kept.log_prob = merged;
            continue;
        }
        next.push_back(std::move(grown));
    }

    detail::normalize(next);
    if (cfg.prune_threshold > 0.0 && next.size() > 1) {
        const Scalar log_threshold = std::log(static_cast<Scalar>(cfg.prune_threshold));
        const Scalar best = std::max_element(next.begin(), next.end(), [](const auto& a, const auto& b) {
                                return a.log_prob < b.log_prob;
                            })->log_prob;
        std::erase_if(next, [&](const auto& h) { return h.log_prob < log_threshold && h.log_prob < best; });
        detail::normalize(next);
    }

    state.hypotheses = std::move(next);
    ++state.observations;
    return state;
}

struct DetectionResult {
    bool anomaly = false;
    std::optional<Index> anomaly_time;   ///< row index of the first change point
    std::vector<Index> change_points;    ///< row indices, ascending
    std::vector<Index> run_length_trace; ///< MAP run length per row
};

/// Column-wise standardization used before modelling. Columns are centered on
/// the mean of the first `reference_rows` rows and scaled by the full-window
/// standard deviation; constant columns become zero.
Eigen::MatrixXd standardize_columns(const Eigen::MatrixXd& values, Index reference_rows);

/// Extracts change points from a MAP run-length trace of `dim`-dimensional data.
std::vector<Index> change_points_from_trace(const std::vector<Index>& trace, const BocpdConfig& cfg, Index dim = 1);

DetectionResult detect(const Eigen::MatrixXd& values, const BocpdConfig& cfg = {});
DetectionResult detect(const MetricsWindow& window, const BocpdConfig& cfg = {});

}  // namespace baro::bocpd
