#pragma once

// Bulk evaluation of d(n; r1, q1, r2, q2) and exact summatory values
// D(x; r1, q1, r2, q2).
//
// sieve_divisor_counts is the production kernel: the range is cut into
// fixed-size blocks that are sieved independently under OpenMP.
// sieve_divisor_counts_serial is the plain marking loop kept as a reference.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "divcong/arith.hpp"

namespace divcong {

struct SieveOptions {
    std::size_t block_size = std::size_t{1} << 22;         // entries per block
    std::uint64_t memory_budget = std::uint64_t{1} << 31;  // bytes for the count array
};

// counts[i] = d(range_start + i; params); range_end is inclusive.
struct DivisorSieve {
    CongruenceParams params;
    std::uint64_t range_start = 1;
    std::uint64_t range_end = 0;
    std::vector<std::uint32_t> counts;

    std::uint32_t at(std::uint64_t n) const { return counts[n - range_start]; }
    std::size_t size() const noexcept { return counts.size(); }
    friend bool operator==(const DivisorSieve&, const DivisorSieve&) = default;
};

// Direct loop over n1 in the first class; oracle for moderate x.
std::uint64_t summatory_bruteforce(double x, const CongruenceParams& p);

// Dirichlet hyperbola method, O(sqrt(x)) progression steps.
std::uint64_t summatory_hyperbola(double x, const CongruenceParams& p);
std::uint64_t summatory_hyperbola_upto(std::uint64_t n, const CongruenceParams& p);

// Writes d(n; p) for n in [lo, lo + out.size()) into out (overwrites).
void sieve_block(std::uint64_t lo, std::span<std::uint32_t> out, const CongruenceParams& p);

DivisorSieve sieve_divisor_counts(std::uint64_t n_max, const CongruenceParams& p,
                                  const SieveOptions& options = {});
DivisorSieve sieve_divisor_counts_serial(std::uint64_t n_max, const CongruenceParams& p);

// Binary cache format (little-endian):
//   magic "DCSV" | u32 version | u64 r1 q1 r2 q2 | u64 range_start | u64 range_end | u32 counts[]
inline constexpr std::uint32_t kSieveFileVersion = 1;

void save_sieve(const DivisorSieve& sieve, const std::filesystem::path& path);
DivisorSieve load_sieve(const std::filesystem::path& path);

}  // namespace divcong
