#include <doctest.h>

#include <omp.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "divcong/error.hpp"
#include "divcong/sieve.hpp"
#include "oracles.hpp"

using namespace divcong;
namespace fs = std::filesystem;

namespace {

CongruenceParams random_params(std::mt19937_64& rng, int max_q = 6) {
    std::uniform_int_distribution<int> qd(1, max_q);
    for (;;) {
        const int q1 = qd(rng), q2 = qd(rng);
        const int r1 = std::uniform_int_distribution<int>(1, q1)(rng);
        const int r2 = std::uniform_int_distribution<int>(1, q2)(rng);
        if (std::gcd(r1, q1) == 1 && std::gcd(r2, q2) == 1) return CongruenceParams::make(r1, q1, r2, q2);
    }
}

const std::vector<CongruenceParams>& param_grid() {
    static const std::vector<CongruenceParams> grid{
        CongruenceParams::unrestricted(),   CongruenceParams::make(1, 2, 1, 2), CongruenceParams::make(1, 2, 1, 3),
        CongruenceParams::make(1, 3, 2, 3), CongruenceParams::make(1, 3, 1, 4), CongruenceParams::make(5, 6, 1, 5),
        CongruenceParams::make(2, 5, 3, 4)};
    return grid;
}

}  // namespace

TEST_CASE("summatory examples") {
    CHECK(summatory_bruteforce(10.0, CongruenceParams::make(1, 2, 1, 2)) == 10);
    CHECK(summatory_hyperbola(10.0, CongruenceParams::make(1, 2, 1, 2)) == 10);
    CHECK(oracle::summatory(10.0, 1, 2, 1, 2) == 10);
    CHECK(summatory_bruteforce(0.9, CongruenceParams::make(1, 3, 2, 3)) == 0);
    CHECK(summatory_hyperbola(0.9, CongruenceParams::make(1, 3, 2, 3)) == 0);
    CHECK(summatory_bruteforce(100.0, CongruenceParams::unrestricted()) == 482);
    CHECK(oracle::summatory(100.0, 1, 1, 1, 1) == 482);
    CHECK(summatory_hyperbola(1.0, CongruenceParams::unrestricted()) == 1);
}

TEST_CASE("hyperbola method equals brute force on random inputs") {
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> xd(1.0, 1e4);
    for (int i = 0; i < 200; ++i) {
        const auto p = random_params(rng);
        const double x = xd(rng);
        REQUIRE(summatory_hyperbola(x, p) == summatory_bruteforce(x, p));
    }
    const auto p = CongruenceParams::make(1, 3, 2, 3);
    CHECK(summatory_hyperbola(1e6, p) == summatory_bruteforce(1e6, p));
}

TEST_CASE("brute force agrees with the double-loop oracle") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 40; ++i) {
        const auto p = random_params(rng);
        const double x = std::uniform_real_distribution<double>(1.0, 3000.0)(rng);
        REQUIRE(summatory_bruteforce(x, p) == oracle::summatory(x, p.first.r, p.first.q, p.second.r, p.second.q));
    }
}

TEST_CASE("sieve examples") {
    const auto s = sieve_divisor_counts(20, CongruenceParams::make(1, 2, 1, 4));
    CHECK(s.at(15) == 2);
    CHECK(s.at(15) == divisor_count(15, s.params));
    const auto c = sieve_divisor_counts(20, CongruenceParams::unrestricted());
    const auto d = oracle::classical_divisor_counts(20);
    for (std::uint64_t n = 1; n <= 20; ++n) CHECK(c.at(n) == d[n]);
}

TEST_CASE("sieve totals equal the hyperbola method at 10^6") {
    for (const auto& p : param_grid()) {
        const auto s = sieve_divisor_counts(1000000, p);
        const std::uint64_t total = std::accumulate(s.counts.begin(), s.counts.end(), std::uint64_t{0});
        CHECK(total == summatory_hyperbola_upto(1000000, p));
    }
}

TEST_CASE("prefix sums and jump law at every n <= 10^4") {
    for (const auto& p : param_grid()) {
        const auto s = sieve_divisor_counts(10000, p);
        std::uint64_t prefix = 0;
        for (std::uint64_t n = 1; n <= 10000; ++n) {
            prefix += s.at(n);
            REQUIRE(prefix == summatory_hyperbola_upto(n, p));
            REQUIRE(summatory_hyperbola_upto(n, p) - summatory_hyperbola_upto(n - 1, p) == s.at(n));
            if (n <= 2000) REQUIRE(s.at(n) == divisor_count(n, p));
        }
    }
}

TEST_CASE("parallel sieve is bit-identical to the serial reference") {
    for (const auto& p : param_grid()) {
        const auto serial = sieve_divisor_counts_serial(300000, p);
        for (std::size_t block : {std::size_t{1} << 10, std::size_t{77777}, std::size_t{1} << 22}) {
            for (int threads : {1, 3, 8}) {
                omp_set_num_threads(threads);
                SieveOptions o;
                o.block_size = block;
                REQUIRE(sieve_divisor_counts(300000, p, o) == serial);
            }
        }
    }
    omp_set_num_threads(1);
}

TEST_CASE("sieve_block matches the full sieve on arbitrary windows") {
    const auto p = CongruenceParams::make(1, 3, 1, 4);
    const auto full = sieve_divisor_counts_serial(50000, p);
    std::vector<std::uint32_t> buf(1234);
    for (std::uint64_t lo : {1ull, 2ull, 999ull, 40000ull}) {
        sieve_block(lo, buf, p);
        for (std::size_t i = 0; i < buf.size(); ++i) REQUIRE(buf[i] == full.at(lo + i));
    }
    CHECK_THROWS_AS(sieve_block(0, buf, p), InvalidArgument);
}

TEST_CASE("budget errors carry the requested and allowed sizes") {
    SieveOptions o;
    o.memory_budget = 1000;
    try {
        sieve_divisor_counts(1000, CongruenceParams::unrestricted(), o);
        FAIL("expected BudgetExceeded");
    } catch (const BudgetExceeded& e) {
        CHECK(e.requested() == 4000);
        CHECK(e.allowed() == 1000);
    }
    CHECK_THROWS_AS(sieve_divisor_counts(0, CongruenceParams::unrestricted()), InvalidArgument);
}

TEST_CASE("sieve files round-trip and reject corruption") {
    const fs::path dir = fs::temp_directory_path() / "divcong_test_sieve";
    fs::remove_all(dir);
    const auto p = CongruenceParams::make(2, 5, 3, 4);
    const auto s = sieve_divisor_counts(12345, p);
    const fs::path file = dir / "nested" / "s.dcsv";
    save_sieve(s, file);
    CHECK(load_sieve(file) == s);
    CHECK_FALSE(fs::exists(file.string() + ".tmp"));

    {
        std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XXXX", 4);
    }
    CHECK_THROWS_AS(load_sieve(file), FormatError);

    save_sieve(s, file);
    fs::resize_file(file, fs::file_size(file) - 3);
    CHECK_THROWS_AS(load_sieve(file), FormatError);

    save_sieve(s, file);
    {
        std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
        // r1 = 2, q1 = 4 violates coprimality
        const char r[8] = {2, 0, 0, 0, 0, 0, 0, 0};
        const char q[8] = {4, 0, 0, 0, 0, 0, 0, 0};
        f.seekp(8);
        f.write(r, 8);
        f.write(q, 8);
    }
    CHECK_THROWS_AS(load_sieve(file), FormatError);
    fs::remove_all(dir);
}
