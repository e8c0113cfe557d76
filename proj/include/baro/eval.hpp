#pragma once

#include "baro/metrics.hpp"
#include "baro/pipeline.hpp"
#include "baro/rca.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace baro::eval {

enum class CaseLabel { Normal, Abnormal };

std::string_view to_string(CaseLabel label);
CaseLabel parse_label(std::string_view name);

struct FailureCase {
    std::string id;
    MetricsWindow window;
    std::optional<Index> inject_time;           ///< row index
    std::vector<std::string> true_root_services;
    std::vector<std::string> true_root_metrics; ///< `<service>_<metric>` names, optional
    CaseLabel label = CaseLabel::Abnormal;

    /// Abnormal cases need a root service and an injection time.
    void validate() const;
};

using Ranking = std::vector<std::string>;
using Truth = std::vector<std::string>;

/// Mean over cases of |top-k ∩ truth| / min(k, |truth|), clamped at 1.
double ac_at_k(const std::vector<Ranking>& rankings, const std::vector<Truth>& truths, int k);

/// (1/k) * sum_{j=1..k} AC@j.
double avg_at_k(const std::vector<Ranking>& rankings, const std::vector<Truth>& truths, int k);

struct DetectionScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Abnormal is the positive class. Any 0/0 ratio is 0.
DetectionScores detection_prf(const std::vector<bool>& predictions, const std::vector<CaseLabel>& labels);

enum class FaultShape { Step, Ramp, SpikeTrain };

std::string_view to_string(FaultShape shape);
FaultShape parse_fault_shape(std::string_view name);

struct Propagation {
    std::string service;
    Index lag = 0;
    /// Propagated services see a level shift of gain * magnitude baseline sigmas.
    double gain = 0.5;
};

struct SyntheticSpec {
    Index n_services = 5;
    Index metrics_per_service = 4;
    Index length = 300;
    Index shift_time = 150;
    std::string root_service = "svc0";
    std::string root_metric = "cpu";
    FaultShape fault_shape = FaultShape::Step;
    double magnitude = 8.0;
    std::vector<Propagation> propagation;
    CaseLabel label = CaseLabel::Abnormal;
    double spike_probability = 0.25;
    Index ramp_length = 30;

    void validate() const;
};

/// Metric names used by the generator, in column order within a service.
std::vector<std::string> synthetic_metric_names(Index metrics_per_service);
std::string synthetic_service_name(Index i);

/// Gaussian baseline per column with randomized mean and sigma; the root
/// column carries the fault shape from `shift_time` on.
FailureCase generate_synthetic_case(const SyntheticSpec& spec, std::uint64_t seed);

/// Reads `data.csv` + `case.json` from a case directory.
FailureCase load_case_dir(const std::filesystem::path& dir, const ColumnOverrides& overrides = {});
void write_case_dir(const FailureCase& failure_case, const std::filesystem::path& dir);

struct LoadedSuite {
    std::vector<FailureCase> cases;
    std::vector<std::string> errors;
};

/// Every subdirectory holding a `case.json`, in name order.
LoadedSuite load_suite(const std::filesystem::path& dir, const ColumnOverrides& overrides = {});

enum class EvalMode { Auto, Inject };

struct CaseResult {
    std::string id;
    CaseLabel label = CaseLabel::Abnormal;
    std::optional<std::size_t> first_hit_rank;  ///< 1-based rank of the first true root service
    std::optional<Index> detected_time;
    bool predicted_anomaly = false;
    Ranking services;
    Truth truth;
    std::optional<std::string> error;
};

struct EvalReport {
    std::string method;
    std::map<int, double> ac_at;
    std::map<int, double> avg_at;
    std::optional<DetectionScores> detection;  ///< auto mode only
    std::vector<CaseResult> per_case;
    std::vector<std::string> warnings;
    double wall_seconds = 0.0;
};

inline const std::vector<int> kReportKs{1, 3, 5};

/// Runs the pipeline (auto) or ranks at the injection time (inject) on every
/// case; `jobs` bounds the worker threads.
EvalReport evaluate(const std::vector<FailureCase>& cases, EvalMode mode, const BaroConfig& cfg, unsigned jobs = 1);

/// Aggregates AC@k / Avg@k over abnormal per-case results.
void aggregate(EvalReport& report);

struct SweepPoint {
    double ac1 = 0.0;
    double ac3 = 0.0;
    double avg5 = 0.0;
    std::size_t evaluated = 0;
    std::size_t skipped = 0;
};

struct SweepReport {
    std::string method;
    std::map<int, SweepPoint> points;
    std::vector<std::string> warnings;
};

/// Ranks each case at t_inject + bias for every bias.
SweepReport sensitivity_sweep(const std::vector<FailureCase>& cases, rca::Scorer scorer,
                              const std::vector<int>& biases, const rca::ScorerOptions& opts = {},
                              unsigned jobs = 1);

}  // namespace baro::eval
