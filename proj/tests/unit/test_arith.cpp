#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

#include "divcong/arith.hpp"
#include "divcong/error.hpp"
#include "oracles.hpp"

using namespace divcong;

TEST_CASE("count_in_class examples") {
    CHECK(count_in_class(10.0, CongruenceClass::make(3, 4)) == 2);
    CHECK(count_in_class(0.5, CongruenceClass::make(1, 2)) == 0);
    CHECK(count_in_class(1e6, CongruenceClass::make(1, 1)) == 1000000);
    CHECK(count_in_class(2.999, CongruenceClass::make(3, 4)) == 0);
    CHECK(count_in_class(3.0, CongruenceClass::make(3, 4)) == 1);
}

TEST_CASE("count_in_class steps by one at members of the class") {
    for (std::uint64_t q = 1; q <= 7; ++q)
        for (std::uint64_t r = 1; r <= q; ++r) {
            if (std::gcd(r, q) != 1) continue;
            const CongruenceClass c{r, q};
            std::uint64_t prev = 0;
            for (std::uint64_t n = 1; n <= 200; ++n) {
                const std::uint64_t now = count_in_class(static_cast<double>(n), c);
                CHECK(now - prev == (n % q == r % q ? 1u : 0u));
                CHECK(count_in_class(n + 0.5, c) == now);
                prev = now;
            }
        }
}

TEST_CASE("full residue system counts every integer") {
    for (std::uint64_t q = 1; q <= 9; ++q)
        for (double y : {0.3, 1.0, 17.5, 1000.0, 12345.9}) {
            std::uint64_t total = 0;
            for (std::uint64_t r = 1; r <= q; ++r) total += count_in_class(y, CongruenceClass{r, q});
            CHECK(total == static_cast<std::uint64_t>(std::floor(y)));
        }
}

TEST_CASE("class validation names the violated invariant") {
    CHECK_THROWS_AS(CongruenceClass::make(0, 3), InvalidArgument);
    CHECK_THROWS_AS(CongruenceClass::make(4, 3), InvalidArgument);
    CHECK_THROWS_AS(CongruenceClass::make(1, 0), InvalidArgument);
    try {
        CongruenceParams::make(2, 2, 1, 2);
        FAIL("expected rejection");
    } catch (const InvalidArgument& e) {
        CHECK(std::string(e.what()).find("coprimality") != std::string::npos);
    }
    CHECK_NOTHROW(CongruenceParams::make(1, 3, 2, 3));
    CHECK(CongruenceParams::make(1, 3, 2, 3).modulus_product() == 9);
}

TEST_CASE("divisor_count examples") {
    CHECK(divisor_count(15, CongruenceParams::make(1, 2, 1, 4)) == 2);
    CHECK(divisor_count(1, CongruenceParams::unrestricted()) == 1);
    CHECK(divisor_count(6, CongruenceParams::unrestricted()) == 4);
}

TEST_CASE("divisor_count reduces to d(n) and matches enumeration") {
    const auto d = oracle::classical_divisor_counts(10000);
    for (std::uint64_t n = 1; n <= 10000; ++n) REQUIRE(divisor_count(n, CongruenceParams::unrestricted()) == d[n]);
    for (auto [r1, q1, r2, q2] : {std::array<int, 4>{1, 2, 1, 3}, {2, 5, 3, 4}, {1, 6, 5, 6}})
        for (std::uint64_t n = 1; n <= 600; ++n)
            REQUIRE(divisor_count(n, CongruenceParams::make(r1, q1, r2, q2)) ==
                    oracle::divisor_count(n, r1, q1, r2, q2));
}

TEST_CASE("digamma closed forms") {
    const double g = kEulerGamma;
    CHECK(digamma_rational(1, 1) == doctest::Approx(-g).epsilon(1e-15));
    CHECK(std::abs(digamma_rational(1, 2) - (-1.9635100260214235)) < 1e-12);
    const double psi13 = -g - 1.5 * std::log(3.0) - std::numbers::pi / (2.0 * std::sqrt(3.0));
    CHECK(std::abs(digamma_rational(1, 3) - psi13) < 1e-12);
    CHECK(std::abs(digamma_rational(1, 3) - static_cast<double>(oracle::digamma(1.0L / 3))) < 1e-12);
    CHECK(std::abs(digamma_rational(1, 4) - (-g - std::numbers::pi / 2 - 3 * std::log(2.0))) < 1e-12);
    CHECK_THROWS_AS(digamma_rational(0, 3), InvalidArgument);
    CHECK_THROWS_AS(digamma_rational(4, 3), InvalidArgument);
}

TEST_CASE("digamma against the series oracle for every r/q with q <= 12") {
    for (int q = 1; q <= 12; ++q)
        for (int r = 1; r <= q; ++r) {
            const long double x = static_cast<long double>(r) / q;
            CHECK(std::abs(digamma_rational(r, q) - static_cast<double>(oracle::digamma(x))) < 1e-12);
        }
}

TEST_CASE("digamma reflection and recurrence") {
    for (int q = 2; q <= 12; ++q)
        for (int r = 1; r < q; ++r) {
            const double x = static_cast<double>(r) / q;
            const double reflection = digamma_rational(q - r, q) - digamma_rational(r, q);
            CHECK(std::abs(reflection - std::numbers::pi / std::tan(std::numbers::pi * x)) < 1e-10);
            // psi(x + 1) = psi(x) + 1/x, the left side from the oracle at the shifted point
            const double shifted = static_cast<double>(oracle::digamma(1.0L + static_cast<long double>(r) / q));
            CHECK(std::abs(digamma_rational(r, q) + 1.0 / x - shifted) < 1e-10);
        }
}

TEST_CASE("main term reduces to the classical Dirichlet term") {
    const auto p = CongruenceParams::unrestricted();
    for (double x = 1.0; x <= 1e9; x *= 1.7) {
        const double expected = x * std::log(x) + (2 * kEulerGamma - 1) * x;
        if (expected == 0.0) continue;
        CHECK(std::abs(main_term(x, p) - expected) <= 1e-12 * std::abs(expected));
    }
}

TEST_CASE("main term examples") {
    const double m4 = main_term(4.0, CongruenceParams::make(1, 2, 1, 2));
    const double expected = 2 * kEulerGamma + 4 * std::log(2.0) - 1;
    CHECK(std::abs(m4 - expected) < 1e-12);
    const double oracle_val = -(2 * static_cast<double>(oracle::digamma(0.5L)) + 1);
    CHECK(std::abs(m4 - oracle_val) < 1e-12);

    for (auto [r1, q1, r2, q2] : {std::array<int, 4>{1, 3, 2, 3}, {1, 2, 1, 5}, {3, 4, 5, 6}}) {
        const auto p = CongruenceParams::make(r1, q1, r2, q2);
        const double q = static_cast<double>(p.modulus_product());
        CHECK(main_term(q, p) == doctest::Approx(-main_term_coefficient(p)).epsilon(1e-14));
        CHECK(main_term_in_range(q, p));
        CHECK_FALSE(main_term_in_range(q - 0.5, p));
    }
    CHECK_THROWS_AS(main_term(0.0, CongruenceParams::unrestricted()), InvalidArgument);
    CHECK_THROWS_AS(main_term(-3.0, CongruenceParams::unrestricted()), InvalidArgument);
}
