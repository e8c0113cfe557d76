#include "baro/eval.hpp"

#include "baro/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <thread>

namespace baro::eval {
namespace {

using nlohmann::json;

template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
    const auto workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (auto i = next++; i < n; i = next++) {
                fn(i);
            }
        });
    }
}

void check_inputs(const std::vector<Ranking>& rankings, const std::vector<Truth>& truths, int k) {
    if (rankings.size() != truths.size()) {
        throw ShapeError("rankings and truths differ in length (" + std::to_string(rankings.size()) + " vs " +
                         std::to_string(truths.size()) + ")");
    }
    if (rankings.empty()) {
        throw DataError("no cases to evaluate");
    }
    if (k < 1) {
        throw RangeError("k must be positive");
    }
    for (const auto& t : truths) {
        if (t.empty()) {
            throw DataError("empty root-cause truth set");
        }
    }
}

std::optional<std::size_t> first_hit(const Ranking& ranking, const Truth& truth) {
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        if (std::find(truth.begin(), truth.end(), ranking[i]) != truth.end()) {
            return i + 1;
        }
    }
    return std::nullopt;
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("missing " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError("malformed json in " + path.string() + ": " + e.what());
    }
}

}  // namespace

std::string_view to_string(CaseLabel label) { return label == CaseLabel::Normal ? "normal" : "abnormal"; }

CaseLabel parse_label(std::string_view name) {
    if (name == "normal") {
        return CaseLabel::Normal;
    }
    if (name == "abnormal") {
        return CaseLabel::Abnormal;
    }
    throw FormatError("label must be 'normal' or 'abnormal', got '" + std::string(name) + "'");
}

void FailureCase::validate() const {
    if (label != CaseLabel::Abnormal) {
        return;
    }
    if (true_root_services.empty()) {
        throw DataError("case '" + id + "': abnormal case without root services");
    }
    if (!inject_time) {
        throw DataError("case '" + id + "': abnormal case without inject_time");
    }
}

double ac_at_k(const std::vector<Ranking>& rankings, const std::vector<Truth>& truths, int k) {
    check_inputs(rankings, truths, k);
    double total = 0.0;
    for (std::size_t a = 0; a < rankings.size(); ++a) {
        const std::set<std::string> truth(truths[a].begin(), truths[a].end());
        const auto top = std::min<std::size_t>(static_cast<std::size_t>(k), rankings[a].size());
        std::size_t hits = 0;
        for (std::size_t i = 0; i < top; ++i) {
            hits += truth.contains(rankings[a][i]) ? 1 : 0;
        }
        const auto denom = std::min<std::size_t>(static_cast<std::size_t>(k), truth.size());
        total += std::min(1.0, static_cast<double>(hits) / static_cast<double>(denom));
    }
    return total / static_cast<double>(rankings.size());
}

double avg_at_k(const std::vector<Ranking>& rankings, const std::vector<Truth>& truths, int k) {
    check_inputs(rankings, truths, k);
    double sum = 0.0;
    for (int j = 1; j <= k; ++j) {
        sum += ac_at_k(rankings, truths, j);
    }
    return sum / static_cast<double>(k);
}

DetectionScores detection_prf(const std::vector<bool>& predictions, const std::vector<CaseLabel>& labels) {
    if (predictions.size() != labels.size()) {
        throw ShapeError("predictions and labels differ in length");
    }
    if (predictions.empty()) {
        throw DataError("no predictions to score");
    }
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool abnormal = labels[i] == CaseLabel::Abnormal;
        tp += (predictions[i] && abnormal) ? 1 : 0;
        fp += (predictions[i] && !abnormal) ? 1 : 0;
        fn += (!predictions[i] && abnormal) ? 1 : 0;
    }
    auto ratio = [](double num, double den) { return den == 0.0 ? 0.0 : num / den; };
    DetectionScores s;
    s.precision = ratio(tp, tp + fp);
    s.recall = ratio(tp, tp + fn);
    s.f1 = ratio(2.0 * s.precision * s.recall, s.precision + s.recall);
    return s;
}

std::string_view to_string(FaultShape shape) {
    switch (shape) {
    case FaultShape::Step:
        return "step";
    case FaultShape::Ramp:
        return "ramp";
    case FaultShape::SpikeTrain:
        break;
    }
    return "spike-train";
}

FaultShape parse_fault_shape(std::string_view name) {
    if (name == "step") {
        return FaultShape::Step;
    }
    if (name == "ramp") {
        return FaultShape::Ramp;
    }
    if (name == "spike-train" || name == "spike_train") {
        return FaultShape::SpikeTrain;
    }
    throw ConfigError("unknown fault shape '" + std::string(name) + "'");
}

std::vector<std::string> synthetic_metric_names(Index metrics_per_service) {
    static const std::vector<std::string> base{"latency", "cpu", "mem", "error", "request", "disk", "net"};
    std::vector<std::string> names;
    for (Index j = 0; j < metrics_per_service; ++j) {
        names.push_back(j < static_cast<Index>(base.size()) ? base[static_cast<std::size_t>(j)]
                                                            : "m" + std::to_string(j));
    }
    return names;
}

std::string synthetic_service_name(Index i) { return "svc" + std::to_string(i); }

void SyntheticSpec::validate() const {
    if (n_services < 1 || metrics_per_service < 1) {
        throw ConfigError("need at least one service and one metric per service");
    }
    if (length < 3) {
        throw ConfigError("length must be at least 3");
    }
    if (shift_time <= 0 || shift_time >= length) {
        throw ConfigError("shift_time must lie strictly inside (0, length)");
    }
    if (!(magnitude > 0.0) || !std::isfinite(magnitude)) {
        throw ConfigError("magnitude must be positive");
    }
    if (!(spike_probability > 0.0 && spike_probability <= 1.0)) {
        throw ConfigError("spike_probability must be in (0, 1]");
    }
    if (ramp_length < 1) {
        throw ConfigError("ramp_length must be >= 1");
    }
    auto service_exists = [&](const std::string& s) {
        for (Index i = 0; i < n_services; ++i) {
            if (synthetic_service_name(i) == s) {
                return true;
            }
        }
        return false;
    };
    if (!service_exists(root_service)) {
        throw ConfigError("root service '" + root_service + "' is not generated");
    }
    const auto names = synthetic_metric_names(metrics_per_service);
    if (std::find(names.begin(), names.end(), root_metric) == names.end()) {
        throw ConfigError("root metric '" + root_metric + "' is not generated");
    }
    for (const auto& p : propagation) {
        if (!service_exists(p.service)) {
            throw ConfigError("propagation service '" + p.service + "' is not generated");
        }
        if (p.lag < 0 || !(p.gain >= 0.0)) {
            throw ConfigError("propagation lag and gain must be non-negative");
        }
    }
}

FailureCase generate_synthetic_case(const SyntheticSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mean_dist(10.0, 100.0);
    std::uniform_real_distribution<double> sigma_dist(0.5, 5.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    const auto metric_names = synthetic_metric_names(spec.metrics_per_service);
    const Index d = spec.n_services * spec.metrics_per_service;
    const Index n = spec.length;

    std::vector<MetricId> columns;
    std::vector<double> sigmas;
    Eigen::MatrixXd values(n, d);
    for (Index i = 0; i < spec.n_services; ++i) {
        for (const auto& m : metric_names) {
            const Index c = static_cast<Index>(columns.size());
            columns.push_back({synthetic_service_name(i), m, classify_kind(m)});
            const double mu = mean_dist(rng);
            const double sigma = sigma_dist(rng);
            sigmas.push_back(sigma);
            for (Index t = 0; t < n; ++t) {
                values(t, c) = mu + sigma * noise(rng);
            }
        }
    }

    auto column_of = [&](const std::string& service, const std::string& metric) {
        for (Index c = 0; c < d; ++c) {
            if (columns[static_cast<std::size_t>(c)].service == service &&
                columns[static_cast<std::size_t>(c)].metric == metric) {
                return c;
            }
        }
        throw ConfigError("no column " + service + "_" + metric);
    };

    FailureCase out;
    out.id = "synthetic-" + std::to_string(seed);
    out.label = spec.label;
    if (spec.label == CaseLabel::Abnormal) {
        const Index root = column_of(spec.root_service, spec.root_metric);
        const double scale = spec.magnitude * sigmas[static_cast<std::size_t>(root)];
        for (Index t = spec.shift_time; t < n; ++t) {
            double delta = 0.0;
            switch (spec.fault_shape) {
            case FaultShape::Step:
                delta = scale;
                break;
            case FaultShape::Ramp:
                delta = scale * std::min(1.0, double(t - spec.shift_time + 1) / double(spec.ramp_length));
                break;
            case FaultShape::SpikeTrain:
                // Pareto(alpha = 1.5, x_min = 1) spike sizes.
                if (unit(rng) < spec.spike_probability) {
                    delta = scale * std::pow(1.0 - unit(rng), -1.0 / 1.5);
                }
                break;
            }
            values(t, root) += delta;
        }
        for (const auto& p : spec.propagation) {
            const Index c = column_of(p.service, metric_names.front());
            const double shift = p.gain * spec.magnitude * sigmas[static_cast<std::size_t>(c)];
            for (Index t = spec.shift_time + p.lag; t < n; ++t) {
                values(t, c) += shift;
            }
        }
        out.inject_time = spec.shift_time;
        out.true_root_services = {spec.root_service};
        out.true_root_metrics = {spec.root_service + "_" + spec.root_metric};
    }

    std::vector<double> timestamps(static_cast<std::size_t>(n));
    for (Index t = 0; t < n; ++t) {
        timestamps[static_cast<std::size_t>(t)] = static_cast<double>(t);
    }
    out.window = MetricsWindow(std::move(timestamps), std::move(columns), std::move(values));
    return out;
}

FailureCase load_case_dir(const std::filesystem::path& dir, const ColumnOverrides& overrides) {
    const auto data_path = dir / "data.csv";
    const auto meta_path = dir / "case.json";
    if (!std::filesystem::exists(meta_path)) {
        throw FormatError("missing " + meta_path.string());
    }
    if (!std::filesystem::exists(data_path)) {
        throw FormatError("missing " + data_path.string());
    }
    const json meta = read_json(meta_path);

    FailureCase out;
    out.id = dir.filename().string();
    if (out.id.empty()) {
        out.id = dir.parent_path().filename().string();
    }
    auto raw = load_csv(data_path, overrides);
    auto imputed = impute(raw);
    out.window = std::move(imputed.window);

    try {
        out.label = parse_label(meta.value("label", std::string("abnormal")));
        if (meta.contains("root_services")) {
            out.true_root_services = meta.at("root_services").get<std::vector<std::string>>();
        }
        if (meta.contains("root_metrics") && !meta.at("root_metrics").is_null()) {
            out.true_root_metrics = meta.at("root_metrics").get<std::vector<std::string>>();
        }
        if (meta.contains("inject_time") && !meta.at("inject_time").is_null()) {
            const double t = meta.at("inject_time").get<double>();
            const Index row = out.window.row_at_or_after(t);
            if (row >= out.window.rows()) {
                throw RangeError("inject_time " + std::to_string(t) + " is after the last sample in " +
                                 data_path.string());
            }
            out.inject_time = row;
        }
    } catch (const json::exception& e) {
        throw FormatError("malformed " + meta_path.string() + ": " + e.what());
    }
    out.validate();
    return out;
}

void write_case_dir(const FailureCase& failure_case, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_csv(failure_case.window, dir / "data.csv");
    json meta;
    meta["label"] = std::string(to_string(failure_case.label));
    meta["root_services"] = failure_case.true_root_services;
    meta["root_metrics"] = failure_case.true_root_metrics;
    if (failure_case.inject_time) {
        meta["inject_time"] = failure_case.window.timestamps().at(static_cast<std::size_t>(*failure_case.inject_time));
    } else {
        meta["inject_time"] = nullptr;
    }
    std::ofstream out(dir / "case.json");
    if (!out) {
        throw FormatError("cannot write " + (dir / "case.json").string());
    }
    out << meta.dump(2) << '\n';
}

LoadedSuite load_suite(const std::filesystem::path& dir, const ColumnOverrides& overrides) {
    if (!std::filesystem::is_directory(dir)) {
        throw FormatError("'" + dir.string() + "' is not a directory");
    }
    std::vector<std::filesystem::path> dirs;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_directory() && std::filesystem::exists(entry.path() / "case.json")) {
            dirs.push_back(entry.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    LoadedSuite suite;
    for (const auto& d : dirs) {
        try {
            suite.cases.push_back(load_case_dir(d, overrides));
        } catch (const Error& e) {
            suite.errors.push_back(d.filename().string() + ": " + e.what());
        }
    }
    return suite;
}

void aggregate(EvalReport& report) {
    report.ac_at.clear();
    report.avg_at.clear();
    std::vector<Ranking> rankings;
    std::vector<Truth> truths;
    for (const auto& r : report.per_case) {
        if (r.label != CaseLabel::Abnormal || r.error) {
            continue;
        }
        rankings.push_back(r.services);
        truths.push_back(r.truth);
    }
    if (rankings.empty()) {
        report.warnings.push_back("no abnormal cases evaluated; AC@k/Avg@k undefined");
        return;
    }
    for (int k : kReportKs) {
        report.ac_at[k] = ac_at_k(rankings, truths, k);
        report.avg_at[k] = avg_at_k(rankings, truths, k);
    }
}

EvalReport evaluate(const std::vector<FailureCase>& cases, EvalMode mode, const BaroConfig& cfg, unsigned jobs) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    EvalReport report;
    report.method = std::string(mode == EvalMode::Auto ? "baro-auto" : "inject") + "/" +
                    std::string(rca::to_string(cfg.scorer));
    report.per_case.resize(cases.size());

    parallel_for(cases.size(), jobs, [&](std::size_t i) {
        const auto& c = cases[i];
        auto& res = report.per_case[i];
        res.id = c.id;
        res.label = c.label;
        res.truth = c.true_root_services;
        try {
            std::optional<rca::RootCauseRanking> ranking;
            if (mode == EvalMode::Auto) {
                auto outcome = run_baro(c.window, cfg);
                res.predicted_anomaly = outcome.detection.anomaly;
                res.detected_time = outcome.detection.anomaly_time;
                ranking = std::move(outcome.ranking);
            } else if (c.label == CaseLabel::Abnormal) {
                c.validate();
                ranking = run_with_fixed_time(c.window, *c.inject_time, cfg.scorer, cfg.scorer_options);
                res.detected_time = c.inject_time;
            }
            if (ranking) {
                res.services = ranking->service_names();
                res.first_hit_rank = first_hit(res.services, c.true_root_services);
            }
        } catch (const Error& e) {
            res.error = e.what();
        }
    });

    for (const auto& r : report.per_case) {
        if (r.error) {
            report.warnings.push_back(r.id + ": " + *r.error);
        }
    }
    aggregate(report);

    if (mode == EvalMode::Auto) {
        std::vector<bool> predictions;
        std::vector<CaseLabel> labels;
        for (const auto& r : report.per_case) {
            if (!r.error) {
                predictions.push_back(r.predicted_anomaly);
                labels.push_back(r.label);
            }
        }
        if (!predictions.empty()) {
            report.detection = detection_prf(predictions, labels);
        }
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

SweepReport sensitivity_sweep(const std::vector<FailureCase>& cases, rca::Scorer scorer,
                              const std::vector<int>& biases, const rca::ScorerOptions& opts, unsigned jobs) {
    SweepReport report;
    report.method = std::string(rca::to_string(scorer));
    std::mutex warn_mutex;
    for (int bias : biases) {
        std::vector<std::optional<Ranking>> rankings(cases.size());
        parallel_for(cases.size(), jobs, [&](std::size_t i) {
            const auto& c = cases[i];
            if (c.label != CaseLabel::Abnormal) {
                return;
            }
            auto warn = [&](const std::string& msg) {
                std::lock_guard lock(warn_mutex);
                report.warnings.push_back(msg);
            };
            if (!c.inject_time || c.true_root_services.empty()) {
                warn(c.id + ": no inject_time or root services; skipped");
                return;
            }
            const Index t_hat = *c.inject_time + bias;
            if (t_hat <= 0 || t_hat >= c.window.rows()) {
                warn(c.id + ": bias " + std::to_string(bias) + " moves the detection time outside the window; skipped");
                return;
            }
            rankings[i] = run_with_fixed_time(c.window, t_hat, scorer, opts).service_names();
        });

        std::vector<Ranking> ranked;
        std::vector<Truth> truths;
        SweepPoint point;
        for (std::size_t i = 0; i < cases.size(); ++i) {
            if (cases[i].label != CaseLabel::Abnormal) {
                continue;
            }
            if (rankings[i]) {
                ranked.push_back(std::move(*rankings[i]));
                truths.push_back(cases[i].true_root_services);
            } else {
                ++point.skipped;
            }
        }
        point.evaluated = ranked.size();
        if (!ranked.empty()) {
            point.ac1 = ac_at_k(ranked, truths, 1);
            point.ac3 = ac_at_k(ranked, truths, 3);
            point.avg5 = avg_at_k(ranked, truths, 5);
        }
        report.points[bias] = point;
    }
    std::sort(report.warnings.begin(), report.warnings.end());
    return report;
}

}  // namespace baro::eval
