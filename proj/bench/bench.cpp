// Serial reference vs OpenMP kernel timings for the sieve and the moment integrals.

#include <chrono>
#include <cstdio>
#include <omp.h>

#include <CLI11.hpp>

#include "divcong/delta.hpp"
#include "divcong/sieve.hpp"
#include "divcong/statistics.hpp"

using namespace divcong;

namespace {

template <class F>
double seconds(F&& f) {
    const auto start = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"divcong kernel benchmark"};
    double n_max = 5e7;
    double T = 1e6;
    int threads = omp_get_max_threads();
    app.add_option("--N", n_max, "sieve length");
    app.add_option("--T", T, "upper limit of the moment integral");
    app.add_option("--threads", threads, "threads for the parallel kernels");
    CLI11_PARSE(app, argc, argv);
    omp_set_num_threads(threads);

    const auto p = CongruenceParams::make(1, 3, 1, 4);
    const auto n = static_cast<std::uint64_t>(n_max);
    std::printf("params %s, %d thread(s)\n", p.to_string().c_str(), threads);

    DivisorSieve serial, parallel;
    const double s_serial = seconds([&] { serial = sieve_divisor_counts_serial(n, p); });
    const double s_parallel = seconds([&] { parallel = sieve_divisor_counts(n, p); });
    std::printf("sieve N=%.3g      serial %8.3fs  parallel %8.3fs  speedup %.2f  identical %s\n", n_max, s_serial,
                s_parallel, s_serial / s_parallel, serial == parallel ? "yes" : "no");

    const DeltaEvaluator ev(p, static_cast<std::uint64_t>(T * static_cast<double>(p.modulus_product())) + 1);
    double v_serial = 0.0, v_parallel = 0.0;
    const double i_serial = seconds([&] { v_serial = integrate_delta_power_serial(T, 2, ev); });
    const double i_parallel = seconds([&] { v_parallel = integrate_delta_power(T, 2, ev); });
    std::printf("int Delta^2 T=%.3g serial %8.3fs  parallel %8.3fs  speedup %.2f  rel diff %.2e\n", T, i_serial,
                i_parallel, i_serial / i_parallel, std::abs(v_serial - v_parallel) / std::abs(v_serial));
    return 0;
}
