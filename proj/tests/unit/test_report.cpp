#include <doctest.h>

#include <cmath>

#include "divcong/error.hpp"
#include "divcong/report.hpp"

using namespace divcong;

namespace {

template <class T>
T round_trip(const T& v) {
    const json j = v;
    return json::parse(j.dump()).get<T>();
}

const CongruenceParams kParams = CongruenceParams::make(1, 3, 2, 5);

}  // namespace

TEST_CASE("params") {
    const json j = kParams;
    CHECK(j == json{{"r1", 1}, {"q1", 3}, {"r2", 2}, {"q2", 5}});
    CHECK(round_trip(kParams) == kParams);
    const json bad{{"r1", 2}, {"q1", 4}, {"r2", 1}, {"q2", 1}};
    CHECK_THROWS_AS(bad.get<CongruenceParams>(), InvalidArgument);
}

TEST_CASE("statistics reports round-trip") {
    CHECK(round_trip(QuadratureStats{1.5e-9, 3e-12, 1234, 2}) == QuadratureStats{1.5e-9, 3e-12, 1234, 2});

    MeanValueResult mv{1e6, -123.25, -1.2325e-4, 1.0 / 12, 0.3, 1e-9};
    CHECK(round_trip(mv) == mv);

    MomentReport m;
    m.k = 3;
    m.params = kParams;
    m.grid = {1e3, 1e4, 1e5};
    m.integrals = {0.1, -2.0, 3.0 / 7};
    m.ck_hat = {1e-3, std::nextafter(1e-3, 1.0), 0.1};
    m.fitted_Ck = 0.001;
    m.fitted_exponent = 1.75;
    m.residuals = {0.0, 1e-19, -0.0};
    m.sign_consistent = false;
    m.error_estimate = 2e-10;
    m.warnings = {"integrals change sign"};
    CHECK(round_trip(m) == m);

    ShortIntervalResult s{1e5, 16.0, 1e9, 2e12, 5e-4, true, 1e-8};
    CHECK(round_trip(s) == s);
    DyadicDifference d{1.5, 2.0, 3.0};
    CHECK(round_trip(d) == d);
    SignedPartMoments sp{1e4, 1, 2, 3, 4, 5, 6, 7};
    CHECK(round_trip(sp) == sp);

    ExcursionReport e;
    e.k = 3;
    e.T = 1e5;
    e.X_star = 1.5e5;
    e.F_k_value = -1e7;
    e.normalized = 4.2;
    e.ck_used = 0.004;
    e.grid_points = 3;
    e.X_grid = {1e5, 1.5e5, 2e5};
    e.F_values = {1.0, -1e7, 2.0};
    e.warnings = {"Ck is an empirical estimate"};
    CHECK(round_trip(e) == e);
}

TEST_CASE("sign reports round-trip with optional fields") {
    WindowResult w;
    w.window_start = 1e5;
    w.window_end = 1e5 + 30 * std::sqrt(1e5);
    w.found_positive_extreme = true;
    w.crossing_count = 7;
    w.first_crossing = 100001.25;
    w.t1 = 100002.0;
    const json j = w;
    CHECK(j.at("t2").is_null());
    CHECK(round_trip(w) == w);

    SignRunReport r;
    r.T = 1e4;
    r.threshold_c = 0.2;
    r.runs_plus = {{1e4, 1e4 + 1}, {1.5e4, 1.6e4}};
    r.runs_minus = {{1.2e4, 1.21e4}};
    r.measure_plus = 1001;
    r.measure_minus = 100;
    r.longest_plus = 1000;
    r.longest_minus = 100;
    r.window_results = {w, WindowResult{}};
    CHECK(round_trip(r) == r);
}

TEST_CASE("voronoi reports round-trip") {
    KernelIntegral k{0.25, 0.5, -0.25, 1e-9, 4000, 0};
    CHECK(round_trip(k) == k);

    KernelExperiment e;
    e.params = kParams;
    e.alpha = 10;
    e.y = 448;
    e.samples = {KernelSample{316.5, 1, 0.4, 0.45, 0.41, 1e-10}, KernelSample{316.5, -1, -0.4, -0.45, -0.41, 1e-10}};
    e.correlation_plus = 0.91;
    e.correlation_minus = 0.93;
    e.max_abs_residual = 0.2;
    e.A = 3;
    e.B = 0.01;
    CHECK(round_trip(e) == e);

    ResidualMeanSquare rm{1e4, 100, 5.5, 80, 0.07, 1e-9, true};
    CHECK(round_trip(rm) == rm);
    SeriesComparison sc{1e4, 100, 0.1, 0.0, 6.0, 5.0, 0.9, rm};
    CHECK(round_trip(sc) == sc);
}

TEST_CASE("missing fields are rejected") {
    json j = MeanValueResult{};
    j.erase("slope_target");
    CHECK_THROWS(j.get<MeanValueResult>());
}
