#include <doctest.h>

#include <cmath>

#include "errors.hpp"
#include "measurement.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace bayesperf;

TEST_CASE("linux scaling extrapolates enabled time") {
    CHECK(linux_scale(100.0, 5.0, 20.0) == doctest::Approx(400.0));
    CHECK(linux_scale(7.0, 2.0, 2.0) == doctest::Approx(7.0));
    Sample s;
    s.value = 100.0;
    s.t_enabled = 5.0;
    s.t_running = 20.0;
    CHECK(linux_scale(s) == doctest::Approx(400.0));
    CHECK_THROWS_AS(linux_scale(1.0, 0.0, 1.0), DegenerateTimingError);
    CHECK_THROWS_AS(linux_scale(1.0, 1.0, -2.0), DegenerateTimingError);
}

TEST_CASE("sample batches index by slice and event") {
    auto batch = testutil::make_batch({
        {0, "A", 1.0, 1.0, 1.0},
        {0, "A", 2.0, 1.0, 1.0},
        {1, "B", 3.0, 1.0, 1.0},
    });
    CHECK_FALSE(batch.empty());
    CHECK(batch.max_slice() == 1);
    REQUIRE(batch.indices(0, "A") != nullptr);
    CHECK(batch.indices(0, "A")->size() == 2);
    CHECK(batch.indices(1, "A") == nullptr);
    CHECK(batch.indices(5, "B") == nullptr);

    batch.samples.push_back(batch.samples[2]);
    batch.rebuild_index();
    CHECK(batch.indices(1, "B")->size() == 2);

    CHECK(SampleBatch{}.max_slice() == -1);
}

TEST_CASE("trace csv round trips byte for byte") {
    auto batch = testutil::make_batch({
        {0, "A", 1.5, 0.25, 1.0},
        {2, "B", -3.0, 1.0, 1.0},
    });
    batch.samples[1].counter = CounterId{EventKind::kProgrammable, 2};
    const std::string csv = trace_to_csv(batch);
    CHECK(csv.rfind("slice,event,counter,value,t_enabled,t_running\n", 0) == 0);
    CHECK(csv.find("2,B,c2,-3,1,1\n") != std::string::npos);

    const auto parsed = trace_from_csv(csv);
    REQUIRE(parsed.samples.size() == 2);
    CHECK(parsed.samples[1].counter.index == 2);
    CHECK(parsed.samples[0].t_enabled == doctest::Approx(0.25));
    CHECK(trace_to_csv(parsed) == csv);

    testutil::TempDir tmp;
    save_trace(batch, tmp.file("t.csv"));
    CHECK(trace_to_csv(load_trace(tmp.file("t.csv"))) == csv);
}

TEST_CASE("trace csv rejects malformed content") {
    CHECK_THROWS_AS(trace_from_csv("nope\n"), ParseError);
    CHECK_THROWS_AS(trace_from_csv("slice,event,counter,value,t_enabled,t_running\n1,A,c0,1\n"),
                    ParseError);
    CHECK_THROWS_AS(
        trace_from_csv("slice,event,counter,value,t_enabled,t_running\nx,A,c0,1,1,1\n"),
        ParseError);
}

TEST_CASE("batch validation against the schedule") {
    const auto catalog = testutil::make_catalog({"A", "B"}, 2, {"CLK"});
    const auto schedule = testutil::make_schedule({{"A"}, {"B"}}, catalog);

    auto ok = testutil::make_batch({{0, "A", 1, 1, 1}, {1, "B", 1, 1, 1}, {1, "CLK", 5, 1, 1}});
    CHECK_NOTHROW(check_batch(catalog, schedule, ok));

    auto wrong_slice = testutil::make_batch({{1, "A", 1, 1, 1}});
    CHECK_THROWS_AS(check_batch(catalog, schedule, wrong_slice), SchemaError);

    auto out_of_range = testutil::make_batch({{2, "A", 1, 1, 1}});
    CHECK_THROWS_AS(check_batch(catalog, schedule, out_of_range), SchemaError);

    auto unknown = testutil::make_batch({{0, "Z", 1, 1, 1}});
    CHECK_THROWS_AS(check_batch(catalog, schedule, unknown), UnknownEventError);
}

TEST_CASE("summaries use linux scaling and sample standard deviation") {
    std::vector<Sample> samples;
    for (double v : {10.0, 20.0}) {
        Sample s;
        s.value = v;
        s.t_enabled = v / 20.0;  // scales both to 20
        s.t_running = 1.0;
        samples.push_back(s);
    }
    const auto m = summarize(samples);
    CHECK(m.n == 2);
    CHECK(m.mu == doctest::Approx(20.0));
    CHECK(m.s == doctest::Approx(0.0));

    const auto v = summarize_values({9.0, 10.0, 11.0});
    CHECK(v.mu == doctest::Approx(10.0));
    CHECK(v.s == doctest::Approx(1.0));

    const auto single = summarize_values({4.0});
    CHECK(single.n == 1);
    CHECK(single.s == 0.0);
    CHECK(summarize_values({}).n == 0);
}

TEST_CASE("student t posterior matches the classic form") {
    MeasurementSummary m;
    m.n = 9;
    m.mu = 100.0;
    m.s = 6.0;
    const auto post = student_t_posterior(m);
    CHECK(post.location == doctest::Approx(100.0));
    CHECK(post.scale == doctest::Approx(2.0));
    CHECK(post.dof == doctest::Approx(8.0));
    CHECK_FALSE(post.point_mass);

    const auto [lo, hi] = post.credible_interval(0.95);
    CHECK(lo == doctest::Approx(95.388).epsilon(1e-4));
    CHECK(hi == doctest::Approx(104.612).epsilon(1e-4));

    MeasurementSummary tight = m;
    tight.s = 0.0;
    const auto point = student_t_posterior(tight);
    CHECK(point.point_mass);
    CHECK(point.credible_interval(0.95) == std::pair<double, double>{100.0, 100.0});

    MeasurementSummary thin;
    thin.n = 1;
    CHECK_THROWS_AS(student_t_posterior(thin), InsufficientSamplesError);
    CHECK_THROWS_AS(post.credible_interval(0.0), NumericError);
    CHECK_THROWS_AS(post.credible_interval(1.0), NumericError);
}

TEST_CASE("student t quantiles agree with the quadrature oracle") {
    for (const double dof : {1.0, 4.0, 8.0, 30.0}) {
        for (const double p : {0.6, 0.9, 0.975}) {
            CHECK(student_t_quantile(dof, p) ==
                  doctest::Approx(testoracle::t_quantile(dof, p)).epsilon(1e-6));
        }
    }
    CHECK(student_t_quantile(8.0, 0.5) == doctest::Approx(0.0));
}

TEST_CASE("credible intervals from scaled samples cover the spec example") {
    // Nine samples whose linux-scaled values have mean 100 and sd 6.
    std::vector<double> scaled{94, 94, 94, 100, 100, 100, 106, 106, 106};
    auto m = summarize_values(scaled);
    CHECK(m.mu == doctest::Approx(100.0));
    m.s = 6.0;  // pin sd exactly for the frozen interval
    const auto [lo, hi] = student_t_posterior(m).credible_interval(0.95);
    CHECK(hi - lo == doctest::Approx(2 * 2.306004 * 2.0).epsilon(1e-5));
}
