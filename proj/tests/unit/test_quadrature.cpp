#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <numbers>

#include "divcong/quadrature.hpp"
#include "oracles.hpp"

using namespace divcong;

TEST_CASE("Gauss-Legendre tables match Newton-iterated nodes") {
    std::vector<long double> x, w;
    oracle::gauss_legendre(8, x, w);
    REQUIRE(x.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(std::abs(gauss::kNodes8[i] - static_cast<double>(x[i])) < 1e-15);
        CHECK(std::abs(gauss::kWeights8[i] - static_cast<double>(w[i])) < 1e-15);
    }
    oracle::gauss_legendre(4, x, w);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(std::abs(gauss::kNodes4[i] - static_cast<double>(x[i])) < 1e-15);
        CHECK(std::abs(gauss::kWeights4[i] - static_cast<double>(w[i])) < 1e-15);
    }
}

TEST_CASE("order-8 rule integrates degree-15 polynomials exactly") {
    for (int deg = 0; deg <= 15; ++deg) {
        Accumulator<1> acc;
        auto f = [deg](double t) { return Values<1>{std::pow(t, deg)}; };
        integrate_piece<1>(f, 0.5, 2.0, 1.0, acc);
        const double exact = (std::pow(2.0, deg + 1) - std::pow(0.5, deg + 1)) / (deg + 1);
        CHECK(acc.values()[0] == doctest::Approx(exact).epsilon(1e-14));
        CHECK(acc.stats.pieces == 1);
    }
}

TEST_CASE("adaptive bisection reaches the tolerance") {
    Accumulator<2> acc;
    auto f = [](double t) { return Values<2>{std::sin(t), std::exp(-t) * std::cos(7 * t)}; };
    integrate_piece<2>(f, 0.0, 20.0, 1e-12, acc);
    CHECK(acc.values()[0] == doctest::Approx(1.0 - std::cos(20.0)).epsilon(1e-11));
    const double exact2 = (1.0 - std::exp(-20.0) * (std::cos(140.0) - 7 * std::sin(140.0))) / 50.0;
    CHECK(acc.values()[1] == doctest::Approx(exact2).epsilon(1e-10));
    CHECK(acc.stats.pieces > 1);
    CHECK(acc.stats.unresolved == 0);
    CHECK(acc.stats.max_relative <= 1e-12);
}

TEST_CASE("compensated summation") {
    CompensatedSum s;
    for (double v : {1.0, 1e100, 1.0, -1e100}) s.add(v);
    CHECK(s.value() == 2.0);
    CompensatedSum t;
    for (int i = 0; i < 10000000; ++i) t.add(0.1);
    CHECK(std::abs(t.value() - 1e6) < 1e-8);
}

TEST_CASE("local Taylor form of Delta matches the direct formula") {
    const double A = -0.7;
    for (double c : {1.5, 30.0, 1e4, 1e7})
        for (double rel : {1e-7, 1e-4, 0.005, 0.0119, 0.1}) {
            const double a = c * (1 - rel), b = c * (1 + rel);
            const double d = std::round(c * std::log(c));
            const LocalDelta local(d, A, a, b);
            for (double s : {0.0, 0.2, 0.5, 0.9, 1.0}) {
                const double t = a + s * (b - a);
                const double direct = d - t * std::log(t) + A * t;
                CHECK(std::abs(local(t) - direct) <= 1e-13 * std::max(1.0, t * std::log(t)));
            }
        }
}

TEST_CASE("tasks split at multiples of the width") {
    const std::vector<double> bp{1.0, 2.5, 2.6, 7.0};
    const auto tasks = make_tasks(bp, 1.0);
    double prev = 1.0;
    std::size_t interval = 0;
    for (const auto& t : tasks) {
        CHECK(t.a == prev);
        CHECK(t.b > t.a);
        CHECK(t.interval >= interval);
        interval = t.interval;
        prev = t.b;
        // no task crosses an integer
        CHECK(std::floor(t.a) == std::floor(std::nextafter(t.b, t.a)));
    }
    CHECK(prev == 7.0);
}

TEST_CASE("chunked integration is bit-identical across thread counts") {
    const std::vector<double> bp{0.0, 3.0, 50.0, 123.4};
    auto run = [&] {
        return integrate_intervals<2>(bp, 0.37, [](double a, double b) {
            Accumulator<2> acc;
            auto f = [](double t) { return Values<2>{std::sin(t * t), std::sqrt(1 + t)}; };
            integrate_piece<2>(f, a, b, 1e-10, acc);
            return acc;
        });
    };
    omp_set_num_threads(1);
    const auto ref = run();
    for (int threads : {2, 5, 8}) {
        omp_set_num_threads(threads);
        const auto other = run();
        REQUIRE(other.values.size() == ref.values.size());
        for (std::size_t i = 0; i < ref.values.size(); ++i) CHECK(other.values[i] == ref.values[i]);
        CHECK(other.stats == ref.stats);
    }
    omp_set_num_threads(1);
    CHECK(ref.values[2][1] ==
          doctest::Approx((2.0 / 3) * (std::pow(124.4, 1.5) - std::pow(51.0, 1.5))).epsilon(1e-12));
}

TEST_CASE("exceptions inside chunks reach the caller") {
    const std::vector<double> bp{0.0, 10.0};
    omp_set_num_threads(4);
    CHECK_THROWS_AS(integrate_intervals<1>(bp, 1.0,
                                           [](double a, double) -> Accumulator<1> {
                                               if (a >= 5.0) throw std::runtime_error("boom");
                                               return {};
                                           }),
                    std::runtime_error);
    omp_set_num_threads(1);
}
