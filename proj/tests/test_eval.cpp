#include "baro/errors.hpp"
#include "baro/eval.hpp"
#include "baro/serialize.hpp"

#include "oracles.hpp"
#include "suites.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

using namespace baro;
using namespace baro::eval;

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("baro_test_eval_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

}  // namespace

TEST_CASE("ac_at_k examples") {
    CHECK(ac_at_k({{"A", "B", "C"}}, {{"A"}}, 1) == 1.0);
    CHECK(ac_at_k({{"B", "A", "C"}}, {{"A"}}, 1) == 0.0);
    CHECK(ac_at_k({{"B", "A", "C"}}, {{"A"}}, 2) == 1.0);
    CHECK(ac_at_k({{"B", "A", "C"}}, {{"A"}}, 3) == 1.0);
    CHECK(ac_at_k({{"A", "X"}, {"C", "X"}}, {{"A"}, {"B"}}, 1) == 0.5);
    // two roots, k = 1: one hit over min(1, 2)
    CHECK(ac_at_k({{"A", "B"}}, {{"A", "B"}}, 1) == 1.0);
    CHECK(ac_at_k({{"A", "C", "B"}}, {{"A", "B"}}, 2) == 0.5);
    // ranking shorter than k
    CHECK(ac_at_k({{"B"}}, {{"A"}}, 5) == 0.0);
}

TEST_CASE("avg_at_k examples") {
    CHECK(avg_at_k({{"B", "A", "C"}}, {{"A"}}, 3) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(avg_at_k({{"A", "B"}, {"C", "D"}}, {{"A"}, {"C"}}, 5) == 1.0);
    CHECK(avg_at_k({{"B", "C", "D"}}, {{"A"}}, 5) == 0.0);
}

TEST_CASE("ac_at_k input errors") {
    CHECK_THROWS_AS(ac_at_k({{"A"}}, {}, 1), ShapeError);
    CHECK_THROWS_AS(ac_at_k({}, {}, 1), DataError);
    CHECK_THROWS_AS(ac_at_k({{"A"}}, {{}}, 1), DataError);
    CHECK_THROWS_AS(ac_at_k({{"A"}}, {{"A"}}, 0), RangeError);
    CHECK_THROWS_AS(avg_at_k({{"A"}}, {{"A"}, {"B"}}, 2), ShapeError);
}

TEST_CASE("AC@k and Avg@k agree with the brute-force evaluator") {
    std::mt19937_64 rng(42);
    const std::vector<std::string> pool{"a", "b", "c", "d", "e", "f", "g", "h"};
    std::uniform_int_distribution<int> cases_dist(1, 6);
    std::uniform_int_distribution<int> len_dist(0, 8);
    std::uniform_int_distribution<int> truth_dist(1, 3);
    std::uniform_int_distribution<int> k_dist(1, 10);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = cases_dist(rng);
        std::vector<Ranking> rankings;
        std::vector<Truth> truths;
        for (int a = 0; a < n; ++a) {
            auto shuffled = pool;
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            rankings.emplace_back(shuffled.begin(), shuffled.begin() + len_dist(rng));
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            truths.emplace_back(shuffled.begin(), shuffled.begin() + truth_dist(rng));
        }
        const int k = k_dist(rng);
        CHECK(ac_at_k(rankings, truths, k) == oracle::ac_at_k(rankings, truths, k));
        CHECK(avg_at_k(rankings, truths, k) == oracle::avg_at_k(rankings, truths, k));
        double mean = 0.0;
        for (int j = 1; j <= k; ++j) {
            mean += ac_at_k(rankings, truths, j);
        }
        CHECK(std::abs(avg_at_k(rankings, truths, k) - mean / k) <= 1e-12);
    }
}

TEST_CASE("AC@k is monotone in k for single-root cases") {
    std::mt19937_64 rng(43);
    const std::vector<std::string> pool{"a", "b", "c", "d", "e", "f"};
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<Ranking> rankings;
        std::vector<Truth> truths;
        for (int a = 0; a < 4; ++a) {
            auto s = pool;
            std::shuffle(s.begin(), s.end(), rng);
            rankings.emplace_back(s.begin(), s.begin() + 1 + trial % 6);
            truths.push_back({pool[static_cast<std::size_t>((trial + a) % 6)]});
        }
        double prev = 0.0;
        for (int k = 1; k <= 8; ++k) {
            const double v = ac_at_k(rankings, truths, k);
            CHECK(v >= prev);
            CHECK(v <= 1.0);
            prev = v;
        }
    }
}

TEST_CASE("aggregates are invariant under case permutation") {
    std::mt19937_64 rng(44);
    std::vector<Ranking> rankings{{"a", "b"}, {"b", "c", "a"}, {"c"}, {"d", "a"}, {"a"}};
    std::vector<Truth> truths{{"a"}, {"a"}, {"b"}, {"a", "d"}, {"e"}};
    const double base = avg_at_k(rankings, truths, 5);
    std::vector<std::size_t> idx{0, 1, 2, 3, 4};
    for (int trial = 0; trial < 50; ++trial) {
        std::shuffle(idx.begin(), idx.end(), rng);
        std::vector<Ranking> r;
        std::vector<Truth> t;
        for (auto i : idx) {
            r.push_back(rankings[i]);
            t.push_back(truths[i]);
        }
        CHECK(avg_at_k(r, t, 5) == doctest::Approx(base).epsilon(1e-15));
        CHECK(ac_at_k(r, t, 3) == doctest::Approx(ac_at_k(rankings, truths, 3)).epsilon(1e-15));
    }
}

TEST_CASE("detection_prf examples") {
    std::vector<bool> pred;
    std::vector<CaseLabel> labels;
    for (int i = 0; i < 20; ++i) {
        pred.push_back(i < 10);
        labels.push_back(i < 10 ? CaseLabel::Abnormal : CaseLabel::Normal);
    }
    auto s = detection_prf(pred, labels);
    CHECK(s.precision == 1.0);
    CHECK(s.recall == 1.0);
    CHECK(s.f1 == 1.0);

    std::vector<bool> all_abnormal(20, true);
    s = detection_prf(all_abnormal, labels);
    CHECK(s.precision == 0.5);
    CHECK(s.recall == 1.0);
    CHECK(s.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

    std::vector<bool> all_normal(20, false);
    s = detection_prf(all_normal, labels);
    CHECK(s.precision == 0.0);
    CHECK(s.recall == 0.0);
    CHECK(s.f1 == 0.0);

    CHECK_THROWS_AS(detection_prf({true}, {}), ShapeError);
}

TEST_CASE("detection_prf is invariant under consistent reordering") {
    std::mt19937_64 rng(45);
    std::bernoulli_distribution coin(0.5);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<bool> pred;
        std::vector<CaseLabel> labels;
        for (int i = 0; i < 15; ++i) {
            pred.push_back(coin(rng));
            labels.push_back(coin(rng) ? CaseLabel::Abnormal : CaseLabel::Normal);
        }
        const auto base = detection_prf(pred, labels);
        std::vector<std::size_t> idx(15);
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        std::vector<bool> p2;
        std::vector<CaseLabel> l2;
        for (auto i : idx) {
            p2.push_back(pred[i]);
            l2.push_back(labels[i]);
        }
        const auto s = detection_prf(p2, l2);
        CHECK(s.precision == base.precision);
        CHECK(s.recall == base.recall);
        CHECK(s.f1 == base.f1);
    }
}

TEST_CASE("synthetic generator") {
    SyntheticSpec spec;
    const auto a = generate_synthetic_case(spec, 7);
    const auto b = generate_synthetic_case(spec, 7);
    CHECK(a.window.values() == b.window.values());
    CHECK(a.window.columns() == b.window.columns());
    CHECK(a.id == b.id);
    CHECK(a.inject_time == Index{150});
    CHECK(a.true_root_services == std::vector<std::string>{"svc0"});
    CHECK(a.true_root_metrics == std::vector<std::string>{"svc0_cpu"});
    CHECK(a.window.rows() == 300);
    CHECK(a.window.cols() == 20);
    CHECK(generate_synthetic_case(spec, 8).window.values() != a.window.values());

    auto bad = spec;
    bad.magnitude = 0.0;
    CHECK_THROWS_AS(generate_synthetic_case(bad, 1), ConfigError);
    bad = spec;
    bad.shift_time = 300;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = spec;
    bad.root_service = "svc9";
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = spec;
    bad.root_metric = "gpu";
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = spec;
    bad.propagation = {{"nope", 1, 0.5}};
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    auto normal = spec;
    normal.label = CaseLabel::Normal;
    const auto n = generate_synthetic_case(normal, 3);
    CHECK_FALSE(n.inject_time.has_value());
    CHECK(n.true_root_services.empty());
    CHECK_NOTHROW(n.validate());

    CHECK(parse_fault_shape("spike-train") == FaultShape::SpikeTrain);
    CHECK(to_string(FaultShape::Ramp) == "ramp");
    CHECK_THROWS_AS(parse_fault_shape("square"), ConfigError);
}

TEST_CASE("ramp and propagation shapes") {
    SyntheticSpec spec;
    spec.fault_shape = FaultShape::Ramp;
    spec.ramp_length = 10;
    spec.propagation = {{"svc2", 20, 0.5}};
    const auto c = generate_synthetic_case(spec, 5);
    auto base = spec;
    base.label = CaseLabel::Normal;
    const auto clean = generate_synthetic_case(base, 5);
    const Index root = *c.window.find("svc0", "cpu");
    const Index prop = *c.window.find("svc2", "latency");
    const Eigen::VectorXd delta = c.window.column(root) - clean.window.column(root);
    CHECK(delta.head(150).isZero());
    CHECK(delta(159) == doctest::Approx(delta(200)));
    CHECK(delta(154) == doctest::Approx(delta(200) / 2.0));
    const Eigen::VectorXd pdelta = c.window.column(prop) - clean.window.column(prop);
    CHECK(pdelta.head(170).isZero());
    CHECK(pdelta(170) > 0.0);
    CHECK(pdelta(170) == doctest::Approx(pdelta(299)));
}

TEST_CASE("robust ranking at the injection time on 8 sigma steps") {
    int top1 = 0;
    SyntheticSpec spec;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto c = generate_synthetic_case(spec, seed);
        const auto r = run_with_fixed_time(c.window, *c.inject_time);
        top1 += r.metrics.front().metric.name() == "svc0_cpu";
    }
    CHECK(top1 >= 48);
}

TEST_CASE("case directory round trip and errors") {
    const auto dir = scratch("cases");
    const auto c = generate_synthetic_case(SyntheticSpec{}, 11);
    write_case_dir(c, dir / "c1");
    const auto back = load_case_dir(dir / "c1");
    CHECK(back.id == "c1");
    CHECK(back.inject_time == c.inject_time);
    CHECK(back.true_root_services == c.true_root_services);
    CHECK(back.true_root_metrics == c.true_root_metrics);
    CHECK(back.window.values() == c.window.values());

    fs::create_directories(dir / "nometa");
    write_file(dir / "nometa" / "data.csv", "time,a_b\n0,1\n");
    CHECK_THROWS_AS(load_case_dir(dir / "nometa"), FormatError);

    fs::create_directories(dir / "nodata");
    write_file(dir / "nodata" / "case.json", "{\"inject_time\": 1, \"root_services\": [\"a\"]}");
    CHECK_THROWS_AS(load_case_dir(dir / "nodata"), FormatError);

    fs::create_directories(dir / "badjson");
    write_file(dir / "badjson" / "data.csv", "time,a_b\n0,1\n1,2\n");
    write_file(dir / "badjson" / "case.json", "{ not json");
    CHECK_THROWS_AS(load_case_dir(dir / "badjson"), FormatError);

    fs::create_directories(dir / "noroot");
    write_file(dir / "noroot" / "data.csv", "time,a_b\n0,1\n1,2\n");
    write_file(dir / "noroot" / "case.json", "{\"inject_time\": 1, \"root_services\": [], \"label\": \"abnormal\"}");
    CHECK_THROWS_AS(load_case_dir(dir / "noroot"), DataError);

    fs::create_directories(dir / "stamp");
    write_file(dir / "stamp" / "data.csv", "time,a_b\n100,1\n110,2\n120,,\n");
    write_file(dir / "stamp" / "case.json", "{\"inject_time\": 105, \"root_services\": [\"a\"]}");
    CHECK_THROWS(load_case_dir(dir / "stamp"));  // ragged row
    write_file(dir / "stamp" / "data.csv", "time,a_b\n100,1\n110,2\n120,\n");
    const auto st = load_case_dir(dir / "stamp");
    CHECK(st.inject_time == Index{1});
    CHECK(st.window.values()(2, 0) == 2.0);

    const auto suite = load_suite(dir);
    CHECK(suite.cases.size() == 2);
    CHECK(suite.errors.size() == 3);
    CHECK_THROWS_AS(load_suite(dir / "missing"), FormatError);
    fs::remove_all(dir);
}

TEST_CASE("evaluate in inject and auto modes") {
    auto cases = testing_support::step_suite(10);
    SyntheticSpec normal_spec;
    normal_spec.label = CaseLabel::Normal;
    for (std::uint64_t s = 0; s < 4; ++s) {
        cases.push_back(generate_synthetic_case(normal_spec, 900 + s));
    }
    BaroConfig cfg;
    const auto inject = evaluate(cases, EvalMode::Inject, cfg, 3);
    CHECK(inject.ac_at.at(1) == 1.0);
    CHECK(inject.avg_at.at(5) == 1.0);
    CHECK_FALSE(inject.detection.has_value());
    CHECK(inject.per_case.size() == cases.size());
    CHECK(inject.per_case.front().first_hit_rank == std::size_t{1});

    const auto autorun = evaluate(cases, EvalMode::Auto, cfg, 2);
    REQUIRE(autorun.detection.has_value());
    for (const auto& [k, v] : autorun.ac_at) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    for (int k : kReportKs) {
        double mean = 0.0;
        for (int j = 1; j <= k; ++j) {
            std::vector<Ranking> r;
            std::vector<Truth> t;
            for (const auto& pc : autorun.per_case) {
                if (pc.label == CaseLabel::Abnormal && !pc.error) {
                    r.push_back(pc.services);
                    t.push_back(pc.truth);
                }
            }
            mean += ac_at_k(r, t, j);
        }
        CHECK(std::abs(autorun.avg_at.at(k) - mean / k) <= 1e-12);
    }

    const auto serial = evaluate(cases, EvalMode::Auto, cfg, 1);
    CHECK(serial.ac_at == autorun.ac_at);
    CHECK(serial.avg_at == autorun.avg_at);

    auto broken = cases;
    broken[0].inject_time.reset();
    const auto with_error = evaluate(broken, EvalMode::Inject, cfg, 1);
    CHECK(with_error.per_case[0].error.has_value());
    CHECK_FALSE(with_error.warnings.empty());
}

TEST_CASE("sensitivity sweep") {
    const auto cases = testing_support::step_suite(20);
    const auto empty = sensitivity_sweep(cases, rca::Scorer::Robust, {});
    CHECK(empty.points.empty());

    const auto r = sensitivity_sweep(cases, rca::Scorer::Robust, {0, -40, 40}, {}, 4);
    REQUIRE(r.points.size() == 3);
    CHECK(r.points.at(0).avg5 == doctest::Approx(1.0).epsilon(0.05));
    CHECK(r.points.at(0).evaluated == 20);

    const auto out = sensitivity_sweep(cases, rca::Scorer::Robust, {-150, 150});
    CHECK(out.points.at(-150).skipped == 20);
    CHECK(out.points.at(150).evaluated == 0);
    CHECK(out.warnings.size() == 40);
}

TEST_CASE("robust sweep degrades no more than N-Sigma on spike trains") {
    const auto cases = testing_support::spike_suite(30);
    const std::vector<int> biases{-40, -20, 0, 20, 40};
    const auto robust = sensitivity_sweep(cases, rca::Scorer::Robust, biases, {}, 4);
    const auto nsigma = sensitivity_sweep(cases, rca::Scorer::NSigma, biases, {}, 4);
    auto max_drop = [&](const SweepReport& r) {
        double d = 0.0;
        for (const auto& [b, p] : r.points) {
            d = std::max(d, r.points.at(0).avg5 - p.avg5);
        }
        return d;
    };
    CHECK(max_drop(robust) <= max_drop(nsigma));
}

TEST_CASE("report serialization") {
    const auto cases = testing_support::step_suite(5);
    const auto rep = evaluate(cases, EvalMode::Inject, BaroConfig{}, 1);
    const auto j = to_json(rep);
    CHECK(j.at("ac_at").at("1").get<double>() == rep.ac_at.at(1));
    CHECK(j.at("per_case").size() == 5);
    CHECK(j.at("detection").is_null());
    const auto table = format_table({rep});
    CHECK(table.find("AC@1") != std::string::npos);
    CHECK(table.find("inject/robust") != std::string::npos);

    const auto sweep = sensitivity_sweep(cases, rca::Scorer::Robust, {-10, 0, 10});
    CHECK(to_json(sweep).at("points").size() == 3);
    CHECK(format_sweep_table({sweep}).find("-10") != std::string::npos);

    SyntheticSpec spec;
    spec.propagation = {{"svc1", 4, 0.25}};
    const auto back = synthetic_spec_from_json(to_json(spec));
    CHECK(back.propagation.size() == 1);
    CHECK(back.propagation[0].lag == 4);
    CHECK(back.propagation[0].gain == 0.25);
    CHECK(back.root_metric == spec.root_metric);
    CHECK_THROWS_AS(synthetic_spec_from_json(Json::parse(R"({"magnitude": 0})")), ConfigError);
    CHECK_THROWS_AS(synthetic_spec_from_json(Json::parse(R"({"root": 5})")), ConfigError);
    const auto arr = synthetic_spec_from_json(Json::parse(R"({"root": ["svc1", "mem"], "propagation": [["svc2", 3]]})"));
    CHECK(arr.root_service == "svc1");
    CHECK(arr.propagation[0].service == "svc2");
}
