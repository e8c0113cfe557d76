#pragma once

#include "baro/bocpd.hpp"
#include "baro/eval.hpp"
#include "baro/pipeline.hpp"
#include "baro/rca.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace baro {

using Json = nlohmann::json;

// Row indices are written as the window's timestamps when a window is given.

Json to_json(const bocpd::DetectionResult& result, const MetricsWindow* window = nullptr);
Json to_json(const rca::RootCauseRanking& ranking, const MetricsWindow* window = nullptr);
Json to_json(const BaroOutcome& outcome, const MetricsWindow* window = nullptr);
Json to_json(const eval::EvalReport& report);
Json to_json(const eval::SweepReport& report);
Json to_json(const eval::SyntheticSpec& spec);

eval::SyntheticSpec synthetic_spec_from_json(const Json& j);

/// Aligned method x {AC@1, AC@3, Avg@5, P, R, F1} table.
std::string format_table(const std::vector<eval::EvalReport>& reports);

/// bias x {AC@1, AC@3, Avg@5} per method.
std::string format_sweep_table(const std::vector<eval::SweepReport>& reports);

}  // namespace baro
