#include "cli.hpp"

#include "baro/errors.hpp"
#include "baro/eval.hpp"
#include "baro/serialize.hpp"

#include "CLI11.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace baro::cli {
namespace {

namespace fs = std::filesystem;

int to_int(std::string_view s) {
    int v = 0;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || p != end) {
        throw ConfigError("bad integer '" + std::string(s) + "' in bias list");
    }
    return v;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

// Raw option values as bound to CLI11; converted into CliConfig after parsing.
struct Options {
    double hazard_lambda = 0;
    Index max_run_length = 0;
    double prune_threshold = 0;
    Index warmup = 0;
    Index warmup_per_dim = 0;
    bool no_standardize = false;
    bool strict_drop = false;
    std::vector<std::string> detection_kinds;
    bool no_fallback = false;
    std::string scorer = "robust";
    double epsilon = 0;
    bool inclusive_boundary = false;
    std::size_t top = 0;
    unsigned jobs = 1;
    std::uint64_t seed = 0;
    int repeats = 1;
    bool json = false;
    bool show_config = false;
    std::string overrides;

    Options() {
        const BaroConfig d;
        hazard_lambda = d.bocpd.hazard_lambda;
        max_run_length = d.bocpd.max_run_length;
        prune_threshold = d.bocpd.prune_threshold;
        warmup = d.bocpd.warmup;
        warmup_per_dim = d.bocpd.warmup_per_dim;
        for (auto k : d.detection_kinds) {
            detection_kinds.emplace_back(to_string(k));
        }
        epsilon = d.scorer_options.epsilon;
    }
};

void bind(CLI::App& app, Options& o) {
    app.add_option("--hazard-lambda,--hazard_lambda", o.hazard_lambda, "expected run length (hazard 1/lambda)")
        ->capture_default_str();
    app.add_option("--max-run-length,--max_run_length", o.max_run_length, "run-length truncation cap")
        ->capture_default_str();
    app.add_option("--prune-threshold,--prune_threshold", o.prune_threshold, "drop hypotheses below this mass")
        ->capture_default_str();
    app.add_option("--warmup", o.warmup, "rows before change points may be reported")->capture_default_str();
    app.add_option("--warmup-per-dim,--warmup_per_dim", o.warmup_per_dim, "minimum masked rows per dimension")
        ->capture_default_str();
    app.add_flag("--no-standardize,--no_standardize", o.no_standardize, "model raw values");
    app.add_flag("--strict-drop,--strict_drop", o.strict_drop, "change only when the MAP run length drops");
    app.add_option("--detection-kinds,--detection_kinds", o.detection_kinds, "metric kinds used for detection")
        ->delimiter(',')
        ->capture_default_str();
    app.add_flag("--no-fallback,--no_fallback", o.no_fallback, "fail when no column matches the detection kinds");
    app.add_option("--scorer", o.scorer, "robust, nsigma (eval also takes all)")->capture_default_str();
    app.add_option("--epsilon", o.epsilon, "floor for IQR and standard deviation")->capture_default_str();
    app.add_flag("--inclusive-boundary,--inclusive_boundary", o.inclusive_boundary,
                 "the detection row belongs to both periods");
    app.add_option("--top", o.top, "keep the first k entries (0 keeps all)")->capture_default_str();
    app.add_option("--jobs", o.jobs, "worker threads for eval")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--seed", o.seed, "first seed for gen")->capture_default_str();
    app.add_option("--repeats", o.repeats, "repeat eval and average")->capture_default_str()->check(
        CLI::PositiveNumber);
    app.add_flag("--json", o.json, "print a single JSON document");
    app.add_option("--overrides", o.overrides, "column,kind[,service,metric] override file");
    app.add_flag("--show-config,--show_config", o.show_config, "print the effective configuration and exit");
}

CliConfig to_config(const Options& o) {
    CliConfig c;
    auto& b = c.baro.bocpd;
    b.hazard_lambda = o.hazard_lambda;
    b.max_run_length = o.max_run_length;
    b.prune_threshold = o.prune_threshold;
    b.warmup = o.warmup;
    b.warmup_per_dim = o.warmup_per_dim;
    b.standardize = !o.no_standardize;
    b.strict_drop = o.strict_drop;
    c.baro.detection_kinds.clear();
    for (const auto& k : o.detection_kinds) {
        c.baro.detection_kinds.insert(parse_kind(trim(k)));
    }
    c.baro.fallback_all_kinds = !o.no_fallback;
    if (o.scorer != "all") {
        c.baro.scorer = rca::parse_scorer(o.scorer);
    }
    c.baro.scorer_options.epsilon = o.epsilon;
    c.baro.scorer_options.inclusive_boundary = o.inclusive_boundary;
    c.top = o.top;
    c.jobs = o.jobs;
    c.seed = o.seed;
    c.repeats = o.repeats;
    c.json = o.json;
    c.overrides = o.overrides;
    c.baro.validate();
    return c;
}

ColumnOverrides overrides_of(const CliConfig& c) {
    return c.overrides.empty() ? ColumnOverrides{} : load_overrides(c.overrides);
}

MetricsWindow load_input(const std::string& path, const CliConfig& c, std::ostream& err) {
    auto imputed = impute(load_csv(path, overrides_of(c)));
    for (const auto& w : imputed.warnings) {
        err << "warning: " << w << '\n';
    }
    return std::move(imputed.window);
}

Index row_for_time(const MetricsWindow& w, double t) {
    const Index row = w.row_at_or_after(t);
    if (row <= 0 || row >= w.rows()) {
        throw RangeError("time " + CLI::detail::to_string(t) +
                         " leaves an empty normal or abnormal period; it must fall after the first sample and "
                         "no later than the last");
    }
    return row;
}

void print(std::ostream& out, const Json& j) { out << j.dump(2) << '\n'; }

int cmd_detect(const std::string& input, const CliConfig& c, std::ostream& out, std::ostream& err) {
    const auto w = load_input(input, c, err);
    const auto in = detection_input(w, c.baro);
    if (in.used_fallback) {
        err << "warning: no column matches the detection kinds; detecting on all columns\n";
    }
    const auto res = bocpd::detect(in.window, c.baro.bocpd);
    print(out, to_json(res, &w));
    return res.anomaly ? 2 : 0;
}

int cmd_rca(const std::string& input, const std::string& time, const CliConfig& c, std::ostream& out,
            std::ostream& err) {
    const auto w = load_input(input, c, err);
    Index t_hat = 0;
    if (time == "auto") {
        const auto outcome = run_baro(w, c.baro);
        if (!outcome.detection.anomaly) {
            throw DataError("no anomaly detected; pass --time to rank at a given time");
        }
        t_hat = *outcome.detection.anomaly_time;
    } else {
        double t = 0;
        try {
            std::size_t used = 0;
            t = std::stod(time, &used);
            if (used != time.size()) {
                throw std::invalid_argument(time);
            }
        } catch (const std::logic_error&) {
            throw ConfigError("--time must be a number or 'auto', got '" + time + "'");
        }
        t_hat = row_for_time(w, t);
    }
    auto ranking = rca::rank(w, t_hat, c.baro.scorer, c.baro.scorer_options);
    if (c.top > 0) {
        ranking = rca::truncate(std::move(ranking), c.top);
    }
    print(out, to_json(ranking, &w));
    return 0;
}

int cmd_run(const std::string& input, const CliConfig& c, std::ostream& out, std::ostream& err) {
    const auto w = load_input(input, c, err);
    auto outcome = run_baro(w, c.baro);
    if (outcome.used_fallback) {
        err << "warning: no column matches the detection kinds; detecting on all columns\n";
    }
    if (outcome.ranking && c.top > 0) {
        outcome.ranking = rca::truncate(std::move(*outcome.ranking), c.top);
    }
    print(out, to_json(outcome, &w));
    return 0;
}

std::vector<rca::Scorer> scorers_of(const std::string& name, const CliConfig& c) {
    if (name == "all") {
        return {rca::Scorer::Robust, rca::Scorer::NSigma};
    }
    return {c.baro.scorer};
}

int cmd_eval(const std::string& dir, const std::string& mode, const std::string& scorer_name, const CliConfig& c,
             std::ostream& out, std::ostream& err) {
    auto suite = eval::load_suite(dir, overrides_of(c));
    for (const auto& e : suite.errors) {
        err << "warning: " << e << '\n';
    }
    if (suite.cases.empty()) {
        throw DataError("no loadable cases under '" + dir + "'");
    }
    const auto scorers = scorers_of(scorer_name, c);

    if (mode.rfind("bias=", 0) == 0) {
        const auto biases = parse_bias_list(mode.substr(5));
        std::vector<eval::SweepReport> sweeps;
        for (auto s : scorers) {
            sweeps.push_back(eval::sensitivity_sweep(suite.cases, s, biases, c.baro.scorer_options, c.jobs));
        }
        if (c.json) {
            Json j;
            j["sweeps"] = Json::array();
            for (const auto& s : sweeps) {
                j["sweeps"].push_back(to_json(s));
            }
            j["load_errors"] = suite.errors;
            print(out, j);
        } else {
            for (const auto& s : sweeps) {
                for (const auto& w : s.warnings) {
                    err << "warning: " << w << '\n';
                }
            }
            out << format_sweep_table(sweeps);
        }
        return 0;
    }

    eval::EvalMode m;
    if (mode == "auto") {
        m = eval::EvalMode::Auto;
    } else if (mode == "inject") {
        m = eval::EvalMode::Inject;
    } else {
        throw ConfigError("--mode must be auto, inject or bias=<list>, got '" + mode + "'");
    }

    std::vector<eval::EvalReport> reports;
    bool any_ok = false;
    for (auto s : scorers) {
        auto cfg = c.baro;
        cfg.scorer = s;
        eval::EvalReport rep;
        double wall = 0.0;
        for (int r = 0; r < c.repeats; ++r) {
            rep = eval::evaluate(suite.cases, m, cfg, c.jobs);
            wall += rep.wall_seconds;
        }
        rep.wall_seconds = wall / c.repeats;
        for (const auto& pc : rep.per_case) {
            any_ok = any_ok || !pc.error;
        }
        reports.push_back(std::move(rep));
    }
    if (c.json) {
        Json j;
        j["reports"] = Json::array();
        for (const auto& r : reports) {
            j["reports"].push_back(to_json(r));
        }
        j["repeats"] = c.repeats;
        j["load_errors"] = suite.errors;
        print(out, j);
    } else {
        for (const auto& r : reports) {
            for (const auto& w : r.warnings) {
                err << "warning: " << w << '\n';
            }
        }
        out << format_table(reports);
    }
    if (!any_ok) {
        err << "error: every case failed\n";
        return 1;
    }
    return 0;
}

int cmd_gen(const std::string& spec_path, const std::string& out_dir, int seeds, const CliConfig& c,
            std::ostream& out) {
    std::ifstream in(spec_path);
    if (!in) {
        throw FormatError("cannot open '" + spec_path + "'");
    }
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::exception& e) {
        throw FormatError("malformed " + spec_path + ": " + e.what());
    }
    const auto spec = synthetic_spec_from_json(j);
    std::vector<std::string> written;
    for (int i = 0; i < seeds; ++i) {
        const auto seed = c.seed + static_cast<std::uint64_t>(i);
        const auto fc = eval::generate_synthetic_case(spec, seed);
        const auto dir = fs::path(out_dir) / fc.id;
        eval::write_case_dir(fc, dir);
        written.push_back(dir.string());
    }
    if (c.json) {
        print(out, Json{{"written", written}});
    } else {
        out << "wrote " << written.size() << " case" << (written.size() == 1 ? "" : "s") << " to " << out_dir << '\n';
    }
    return 0;
}

}  // namespace

std::vector<int> parse_bias_list(std::string_view spec) {
    const std::string s = trim(spec);
    std::vector<int> out;
    if (s.empty()) {
        return out;
    }
    const auto dots = s.find("..");
    if (dots == std::string::npos) {
        std::size_t start = 0;
        while (start <= s.size()) {
            const auto comma = s.find(',', start);
            const auto item = trim(std::string_view(s).substr(start, comma == std::string::npos ? std::string::npos
                                                                                              : comma - start));
            out.push_back(to_int(item));
            if (comma == std::string::npos) {
                break;
            }
            start = comma + 1;
        }
        return out;
    }
    const int lo = to_int(trim(std::string_view(s).substr(0, dots)));
    std::string rest = s.substr(dots + 2);
    int step = 10;
    if (const auto kw = rest.find("step"); kw != std::string::npos) {
        step = to_int(trim(std::string_view(rest).substr(kw + 4)));
        rest = rest.substr(0, kw);
    } else if (const auto colon = rest.find(':'); colon != std::string::npos) {
        step = to_int(trim(std::string_view(rest).substr(colon + 1)));
        rest = rest.substr(0, colon);
    }
    const int hi = to_int(trim(rest));
    if (step <= 0) {
        throw ConfigError("bias step must be positive");
    }
    if (hi < lo) {
        throw ConfigError("bias range is empty");
    }
    for (int b = lo; b <= hi; b += step) {
        out.push_back(b);
    }
    return out;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Change point detection and root cause ranking for service metrics"};
    app.name("baro");
    app.set_config("--config", "", "TOML key = value file; flags override it");
    app.fallthrough();
    app.require_subcommand(0, 1);
    Options o;
    bind(app, o);

    std::string input;
    std::string time = "auto";
    std::string mode = "inject";
    std::string spec_path;
    std::string out_dir;
    int seeds = 1;

    auto* detect = app.add_subcommand("detect", "detect a change point; exit 2 when one is found");
    detect->add_option("input", input, "metrics CSV")->required();
    auto* rca_cmd = app.add_subcommand("rca", "rank root-cause metrics and services");
    rca_cmd->add_option("input", input, "metrics CSV")->required();
    rca_cmd->add_option("--time", time, "timestamp of the detection, or auto")->capture_default_str();
    auto* run_cmd = app.add_subcommand("run", "detect, then rank when an anomaly is found");
    run_cmd->add_option("input", input, "metrics CSV")->required();
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a directory of cases");
    eval_cmd->add_option("cases", input, "directory of case directories")->required();
    eval_cmd->add_option("--mode", mode, "auto, inject or bias=<list>")->capture_default_str();
    auto* gen = app.add_subcommand("gen", "write seeded synthetic cases");
    gen->add_option("spec", spec_path, "synthetic spec JSON")->required();
    gen->add_option("--out", out_dir, "output directory")->required();
    gen->add_option("--seeds", seeds, "number of cases")->capture_default_str()->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        const auto cfg = to_config(o);
        if (o.show_config) {
            out << app.config_to_str(true, false);
            return 0;
        }
        if (detect->parsed()) {
            return cmd_detect(input, cfg, out, err);
        }
        if (rca_cmd->parsed()) {
            return cmd_rca(input, time, cfg, out, err);
        }
        if (run_cmd->parsed()) {
            return cmd_run(input, cfg, out, err);
        }
        if (eval_cmd->parsed()) {
            return cmd_eval(input, mode, o.scorer, cfg, out, err);
        }
        if (gen->parsed()) {
            return cmd_gen(spec_path, out_dir, seeds, cfg, out);
        }
        err << app.help();
        return 1;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace baro::cli
