#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "pfdkit/report.hpp"

using namespace pfdkit;
using Catch::Approx;

TEST_CASE("run_method attaches method-specific metadata") {
    const Scenario s = builtin_case(CaseId::ii);
    RunOptions options;
    options.histories = 1000;

    const MethodCell eq = run_method(s, MethodId::equations, options);
    REQUIRE(eq.ok);
    CHECK_THAT(eq.metadata, Catch::Matchers::ContainsSubstring("valid_dut=true"));
    CHECK_THAT(eq.metadata, Catch::Matchers::ContainsSubstring("valid_duu=false"));
    CHECK_THAT(eq.metadata, Catch::Matchers::ContainsSubstring("lambda_duu_t0=0.213"));

    const MethodCell ft = run_method(s, MethodId::fault_tree, options);
    REQUIRE(ft.ok);
    CHECK_THAT(ft.metadata,
               Catch::Matchers::ContainsSubstring("grid_points_per_interval=201"));

    const MethodCell mk = run_method(s, MethodId::markov, options);
    REQUIRE(mk.ok);
    CHECK_THAT(mk.metadata, Catch::Matchers::ContainsSubstring("solver_tol="));
    CHECK_THAT(mk.metadata, Catch::Matchers::ContainsSubstring("phases=8"));

    const MethodCell pe = run_method(s, MethodId::petri, options);
    REQUIRE(pe.ok);
    CHECK_THAT(pe.metadata, Catch::Matchers::ContainsSubstring("histories=1000"));
    CHECK_THAT(pe.metadata, Catch::Matchers::ContainsSubstring("half_width="));
}

TEST_CASE("the markov channel cap is an error cell, not a crash") {
    Scenario s = builtin_case(CaseId::v);
    s.n = 9;
    s.m = 2;
    RunOptions options;
    const MethodCell cell = run_method(s, MethodId::markov, options);
    CHECK_FALSE(cell.ok);
    CHECK_THAT(cell.error, Catch::Matchers::ContainsSubstring("cap"));
    options.markov_max_channels = 9;  // the cap is configurable
    CHECK(run_method(s, MethodId::markov, options).ok);
}

TEST_CASE("table2 is deterministic for a fixed seed and histories") {
    RunOptions options;
    options.histories = 20000;
    options.seed = 99;
    const ComparisonReport a = table2(options);
    const ComparisonReport b = table2(options);
    REQUIRE(a.rows.size() == 6);
    for (std::size_t i = 0; i < a.rows.size(); ++i)
        for (MethodId m : ComparisonReport::kOrder) {
            const auto& ca = a.cell(a.rows[i], m);
            const auto& cb = b.cell(b.rows[i], m);
            REQUIRE(ca.ok);
            CHECK(ca.value == cb.value);
            CHECK(ca.metadata == cb.metadata);
        }
}

TEST_CASE("table2 cells preserve the deterministic cross-method ordering") {
    RunOptions options;
    options.histories = 5000;
    const ComparisonReport report = table2(options);
    for (const auto& row : report.rows) {
        const double ft = report.cell(row, MethodId::fault_tree).value;
        const double mk = report.cell(row, MethodId::markov).value;
        INFO("case " << to_string(row.case_id));
        CHECK(ft >= mk - 1e-6);
    }
}

TEST_CASE("report CSV round-trips exactly") {
    RunOptions options;
    options.histories = 2000;
    options.seed = 424242;
    const ComparisonReport report = table2(options);
    std::ostringstream os;
    write_report_csv(os, report);
    std::istringstream in(os.str());
    const ComparisonReport parsed = parse_report_csv(in);
    REQUIRE(parsed.rows.size() == report.rows.size());
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        CHECK(parsed.rows[i].case_id == report.rows[i].case_id);
        for (MethodId m : ComparisonReport::kOrder) {
            const auto& expect = report.cell(report.rows[i], m);
            const auto& got = parsed.cell(parsed.rows[i], m);
            CHECK(got.ok == expect.ok);
            CHECK(got.value == expect.value);  // bitwise, via 17 digits
            CHECK(got.metadata == expect.metadata);
            CHECK(got.error == expect.error);
        }
    }
}

TEST_CASE("report CSV parser rejects malformed input") {
    std::istringstream missing_header("nope\n");
    CHECK_THROWS_AS(parse_report_csv(missing_header), ParseError);
    std::istringstream short_row(
        "case,method,value,deviation_vs_petri_pct,metadata,error\ni,markov\n");
    CHECK_THROWS_AS(parse_report_csv(short_row), ParseError);
}

TEST_CASE("deviations are measured against the petri cell") {
    ComparisonReport report;
    ComparisonReport::Row row;
    row.case_id = CaseId::i;
    row.cells[ComparisonReport::slot(MethodId::petri)] = {true, 2.0, "", ""};
    row.cells[ComparisonReport::slot(MethodId::equations)] = {true, 2.5, "", ""};
    row.cells[ComparisonReport::slot(MethodId::markov)] = {false, 0.0, "", "boom"};
    row.cells[ComparisonReport::slot(MethodId::fault_tree)] = {true, 1.9, "", ""};
    report.rows.push_back(row);
    CHECK(*report.deviation_vs_petri(report.rows[0], MethodId::equations) ==
          Approx(25.0));
    CHECK(*report.deviation_vs_petri(report.rows[0], MethodId::fault_tree) ==
          Approx(-5.0));
    CHECK(*report.deviation_vs_petri(report.rows[0], MethodId::petri) == Approx(0.0));
    CHECK_FALSE(report.deviation_vs_petri(report.rows[0], MethodId::markov));
}

TEST_CASE("text rendering lists all methods and flags errors") {
    RunOptions options;
    options.histories = 1000;
    options.markov_max_channels = 0;  // force markov error cells
    const ComparisonReport report = table2(options);
    std::ostringstream os;
    render_report_text(os, report);
    const std::string text = os.str();
    CHECK_THAT(text, Catch::Matchers::ContainsSubstring("fault_tree"));
    CHECK_THAT(text, Catch::Matchers::ContainsSubstring("equations"));
    CHECK_THAT(text, Catch::Matchers::ContainsSubstring("case iv"));
    CHECK_THAT(text, Catch::Matchers::ContainsSubstring("ERROR"));
    CHECK_THAT(text, Catch::Matchers::ContainsSubstring("deviation vs petri"));
}

TEST_CASE("fault tree export shows the proof-test sawtooth") {
    const Scenario s = builtin_case(CaseId::i);
    RunOptions options;
    options.grid_points_per_interval = 51;
    const TimeCurve curve = export_timeseries(s, MethodId::fault_tree, options);
    REQUIRE_FALSE(curve.samples.empty());
    CHECK(curve.samples.front().t == 0.0);
    CHECK(curve.samples.front().p == 0.0);
    auto value_at = [&](double t) {
        for (const auto& sample : curve.samples)
            if (sample.t == Approx(t).margin(1e-9)) return sample.p;
        FAIL("missing grid point");
        return 0.0;
    };
    for (int k = 1; k <= 15; ++k) {
        const double before = value_at(4383.0 * k);
        const double after = value_at(4383.0 * k + 4383.0 / 50.0 * 3);  // ~263 h later
        CHECK(after < before);  // repairs drain the detected backlog
    }
}

TEST_CASE("markov export starts at zero and matches the fault-tree shape") {
    const Scenario s = builtin_case(CaseId::iii);
    RunOptions options;
    options.grid_points_per_interval = 21;
    const TimeCurve curve = export_timeseries(s, MethodId::markov, options);
    REQUIRE(curve.samples.size() ==
            static_cast<std::size_t>(s.phases()) * 20 + 1);
    CHECK(curve.samples.front().t == 0.0);
    CHECK(curve.samples.front().p == 0.0);
    for (const auto& sample : curve.samples) {
        CHECK(sample.p >= 0.0);
        CHECK(sample.p <= 1.0);
    }
}

TEST_CASE("only grid-based methods export a curve") {
    RunOptions options;
    CHECK_THROWS_WITH(export_timeseries(builtin_case(CaseId::i), MethodId::petri, options),
                      Catch::Matchers::ContainsSubstring("no time curve"));
    CHECK_THROWS_WITH(
        export_timeseries(builtin_case(CaseId::i), MethodId::equations, options),
        Catch::Matchers::ContainsSubstring("no time curve"));
}

TEST_CASE("timeseries CSV uses the documented header") {
    TimeCurve curve;
    curve.samples = {{0.0, 0.0}, {10.0, 0.25}};
    std::ostringstream os;
    write_timeseries_csv(os, curve);
    CHECK(os.str().rfind("t_hours,unavailability\n", 0) == 0);
}

TEST_CASE("per-case seeds derive deterministically from the master seed") {
    CHECK(seed_for_case(1, 0) == seed_for_case(1, 0));
    CHECK(seed_for_case(1, 0) != seed_for_case(1, 1));
    CHECK(seed_for_case(1, 0) != seed_for_case(2, 0));
}
