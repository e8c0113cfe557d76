#include "baro/serialize.hpp"

#include "baro/errors.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace baro {
namespace {

Json time_value(Index row, const MetricsWindow* window) {
    if (window == nullptr || row < 0 || row >= window->rows()) {
        return row;
    }
    const double t = window->timestamps()[static_cast<std::size_t>(row)];
    double ip = 0.0;
    if (std::modf(t, &ip) == 0.0 && std::abs(t) < 9e15) {
        return static_cast<std::int64_t>(t);
    }
    return t;
}

std::string cell(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) {
        s.append(width - s.size(), ' ');
    }
    return s;
}

}  // namespace

Json to_json(const bocpd::DetectionResult& result, const MetricsWindow* window) {
    Json j;
    j["anomaly"] = result.anomaly;
    j["anomaly_time"] = result.anomaly_time ? time_value(*result.anomaly_time, window) : Json(nullptr);
    j["change_points"] = Json::array();
    for (auto cp : result.change_points) {
        j["change_points"].push_back(time_value(cp, window));
    }
    j["run_length_trace"] = result.run_length_trace;
    return j;
}

Json to_json(const rca::RootCauseRanking& ranking, const MetricsWindow* window) {
    Json j;
    j["detection_time"] = time_value(ranking.detection_time, window);
    j["metrics"] = Json::array();
    for (const auto& m : ranking.metrics) {
        j["metrics"].push_back({{"service", m.metric.service}, {"metric", m.metric.metric}, {"score", m.score}});
    }
    j["services"] = Json::array();
    for (const auto& s : ranking.services) {
        j["services"].push_back({{"service", s.service}, {"score", s.score}});
    }
    return j;
}

Json to_json(const BaroOutcome& outcome, const MetricsWindow* window) {
    Json j;
    j["detection"] = to_json(outcome.detection, window);
    j["ranking"] = outcome.ranking ? to_json(*outcome.ranking, window) : Json(nullptr);
    j["used_fallback"] = outcome.used_fallback;
    return j;
}

Json to_json(const eval::EvalReport& report) {
    Json j;
    j["method"] = report.method;
    Json ac = Json::object();
    for (const auto& [k, v] : report.ac_at) {
        ac[std::to_string(k)] = v;
    }
    Json avg = Json::object();
    for (const auto& [k, v] : report.avg_at) {
        avg[std::to_string(k)] = v;
    }
    j["ac_at"] = ac;
    j["avg_at"] = avg;
    if (report.detection) {
        j["detection"] = {{"precision", report.detection->precision},
                          {"recall", report.detection->recall},
                          {"f1", report.detection->f1}};
    } else {
        j["detection"] = nullptr;
    }
    j["per_case"] = Json::array();
    for (const auto& c : report.per_case) {
        Json pc;
        pc["id"] = c.id;
        pc["label"] = std::string(eval::to_string(c.label));
        pc["rank"] = c.first_hit_rank ? Json(*c.first_hit_rank) : Json(nullptr);
        pc["detected_time"] = c.detected_time ? Json(*c.detected_time) : Json(nullptr);
        pc["predicted_anomaly"] = c.predicted_anomaly;
        if (c.error) {
            pc["error"] = *c.error;
        }
        j["per_case"].push_back(std::move(pc));
    }
    j["warnings"] = report.warnings;
    j["wall_seconds"] = report.wall_seconds;
    return j;
}

Json to_json(const eval::SweepReport& report) {
    Json j;
    j["method"] = report.method;
    j["points"] = Json::array();
    for (const auto& [bias, p] : report.points) {
        j["points"].push_back({{"bias", bias},
                               {"ac1", p.ac1},
                               {"ac3", p.ac3},
                               {"avg5", p.avg5},
                               {"evaluated", p.evaluated},
                               {"skipped", p.skipped}});
    }
    j["warnings"] = report.warnings;
    return j;
}

Json to_json(const eval::SyntheticSpec& spec) {
    Json j;
    j["n_services"] = spec.n_services;
    j["metrics_per_service"] = spec.metrics_per_service;
    j["length"] = spec.length;
    j["shift_time"] = spec.shift_time;
    j["root"] = {{"service", spec.root_service}, {"metric", spec.root_metric}};
    j["fault_shape"] = std::string(eval::to_string(spec.fault_shape));
    j["magnitude"] = spec.magnitude;
    j["propagation"] = Json::array();
    for (const auto& p : spec.propagation) {
        j["propagation"].push_back({{"service", p.service}, {"lag", p.lag}, {"gain", p.gain}});
    }
    j["label"] = std::string(eval::to_string(spec.label));
    j["spike_probability"] = spec.spike_probability;
    j["ramp_length"] = spec.ramp_length;
    return j;
}

eval::SyntheticSpec synthetic_spec_from_json(const Json& j) {
    eval::SyntheticSpec s;
    try {
        s.n_services = j.value("n_services", s.n_services);
        s.metrics_per_service = j.value("metrics_per_service", s.metrics_per_service);
        s.length = j.value("length", s.length);
        s.shift_time = j.value("shift_time", s.shift_time);
        if (j.contains("root")) {
            const auto& r = j.at("root");
            if (r.is_array()) {
                s.root_service = r.at(0).get<std::string>();
                s.root_metric = r.at(1).get<std::string>();
            } else {
                s.root_service = r.at("service").get<std::string>();
                s.root_metric = r.at("metric").get<std::string>();
            }
        }
        if (j.contains("fault_shape")) {
            s.fault_shape = eval::parse_fault_shape(j.at("fault_shape").get<std::string>());
        }
        s.magnitude = j.value("magnitude", s.magnitude);
        if (j.contains("propagation")) {
            for (const auto& p : j.at("propagation")) {
                eval::Propagation prop;
                if (p.is_array()) {
                    prop.service = p.at(0).get<std::string>();
                    prop.lag = p.at(1).get<Index>();
                } else {
                    prop.service = p.at("service").get<std::string>();
                    prop.lag = p.value("lag", Index{0});
                    prop.gain = p.value("gain", prop.gain);
                }
                s.propagation.push_back(std::move(prop));
            }
        }
        if (j.contains("label")) {
            s.label = eval::parse_label(j.at("label").get<std::string>());
        }
        s.spike_probability = j.value("spike_probability", s.spike_probability);
        s.ramp_length = j.value("ramp_length", s.ramp_length);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("malformed synthetic spec: ") + e.what());
    }
    s.validate();
    return s;
}

std::string format_table(const std::vector<eval::EvalReport>& reports) {
    std::size_t width = 6;
    for (const auto& r : reports) {
        width = std::max(width, r.method.size());
    }
    std::ostringstream out;
    out << pad("method", width);
    for (const char* h : {"AC@1", "AC@3", "Avg@5", "P", "R", "F1"}) {
        out << "  " << pad(h, 6);
    }
    out << '\n';
    auto value_or_dash = [](const std::map<int, double>& m, int k) {
        auto it = m.find(k);
        return it == m.end() ? std::string("-") : cell(it->second);
    };
    for (const auto& r : reports) {
        out << pad(r.method, width);
        out << "  " << pad(value_or_dash(r.ac_at, 1), 6);
        out << "  " << pad(value_or_dash(r.ac_at, 3), 6);
        out << "  " << pad(value_or_dash(r.avg_at, 5), 6);
        if (r.detection) {
            out << "  " << pad(cell(r.detection->precision), 6) << "  " << pad(cell(r.detection->recall), 6) << "  "
                << pad(cell(r.detection->f1), 6);
        } else {
            out << "  " << pad("-", 6) << "  " << pad("-", 6) << "  " << pad("-", 6);
        }
        out << '\n';
    }
    return out.str();
}

std::string format_sweep_table(const std::vector<eval::SweepReport>& reports) {
    std::ostringstream out;
    for (const auto& r : reports) {
        out << r.method << '\n';
        out << pad("bias", 6) << "  " << pad("AC@1", 6) << "  " << pad("AC@3", 6) << "  " << pad("Avg@5", 6) << "  "
            << "cases\n";
        for (const auto& [bias, p] : r.points) {
            out << pad(std::to_string(bias), 6) << "  " << pad(cell(p.ac1), 6) << "  " << pad(cell(p.ac3), 6) << "  "
                << pad(cell(p.avg5), 6) << "  " << p.evaluated << '\n';
        }
    }
    return out.str();
}

}  // namespace baro
