#include "divcong/sieve.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <omp.h>

#include "divcong/error.hpp"

namespace divcong {
namespace {

std::uint64_t isqrt(std::uint64_t n) {
    auto s = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
    while (s * s > n) --s;
    while ((s + 1) * (s + 1) <= n) ++s;
    return s;
}

std::uint64_t floor_to_u64(double x) {
    return x < 1.0 ? 0 : static_cast<std::uint64_t>(std::floor(x));
}

// Smallest m >= lower with m = r (mod q).
std::uint64_t first_in_class(std::uint64_t lower, const CongruenceClass& cls) {
    const std::uint64_t rem = lower % cls.q;
    const std::uint64_t target = cls.r % cls.q;
    return lower + (target + cls.q - rem) % cls.q;
}

// Marks n = a * b in [lo, hi) for b in cls, b >= b_min.
void mark_products(std::uint64_t a, std::uint64_t b_min, const CongruenceClass& cls, std::uint64_t lo,
                   std::uint64_t hi, std::uint32_t* out) {
    b_min = std::max(b_min, (lo + a - 1) / a);
    const std::uint64_t b = first_in_class(b_min, cls);
    const std::uint64_t step = a * cls.q;
    for (std::uint64_t n = a * b; n < hi; n += step) ++out[n - lo];
}

void put_u32(std::ostream& os, std::uint32_t v) {
    std::array<char, 4> b{};
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b.data(), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b.data(), 8);
}

std::uint64_t get_le(std::istream& is, int bytes) {
    std::array<unsigned char, 8> b{};
    is.read(reinterpret_cast<char*>(b.data()), bytes);
    if (!is) throw FormatError("sieve file truncated");
    std::uint64_t v = 0;
    for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

}  // namespace

std::uint64_t summatory_bruteforce(double x, const CongruenceParams& p) {
    const std::uint64_t n = floor_to_u64(x);
    std::uint64_t total = 0;
    for (std::uint64_t a = p.first.r; a <= n; a += p.first.q)
        total += count_in_class_upto(n / a, p.second);
    return total;
}

std::uint64_t summatory_hyperbola_upto(std::uint64_t n, const CongruenceParams& p) {
    if (n == 0) return 0;
    const std::uint64_t s = isqrt(n);
    std::uint64_t total = 0;
    for (std::uint64_t a = p.first.r; a <= s; a += p.first.q) total += count_in_class_upto(n / a, p.second);
    for (std::uint64_t b = p.second.r; b <= s; b += p.second.q) total += count_in_class_upto(n / b, p.first);
    return total - count_in_class_upto(s, p.first) * count_in_class_upto(s, p.second);
}

std::uint64_t summatory_hyperbola(double x, const CongruenceParams& p) {
    return summatory_hyperbola_upto(floor_to_u64(x), p);
}

void sieve_block(std::uint64_t lo, std::span<std::uint32_t> out, const CongruenceParams& p) {
    if (lo == 0) throw InvalidArgument("lo", "sieve blocks start at n >= 1");
    std::fill(out.begin(), out.end(), 0u);
    if (out.empty()) return;
    const std::uint64_t hi = lo + out.size();
    const std::uint64_t s = isqrt(hi - 1);
    // n1 <= n2: the smaller factor n1 is at most sqrt(n).
    for (std::uint64_t a = p.first.r; a <= s; a += p.first.q) mark_products(a, a, p.second, lo, hi, out.data());
    // n2 < n1: the smaller factor n2 is at most sqrt(n).
    for (std::uint64_t b = p.second.r; b <= s; b += p.second.q)
        mark_products(b, b + 1, p.first, lo, hi, out.data());
}

DivisorSieve sieve_divisor_counts(std::uint64_t n_max, const CongruenceParams& p, const SieveOptions& options) {
    if (n_max == 0) throw InvalidArgument("N", "must be positive");
    const std::uint64_t bytes = n_max * sizeof(std::uint32_t);
    if (bytes > options.memory_budget) throw BudgetExceeded(bytes, options.memory_budget);
    const std::uint64_t block = std::max<std::uint64_t>(options.block_size, 1);

    DivisorSieve sieve{p, 1, n_max, std::vector<std::uint32_t>(n_max)};
    const auto blocks = static_cast<std::int64_t>((n_max + block - 1) / block);
    std::uint32_t* data = sieve.counts.data();
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < blocks; ++i) {
        const std::uint64_t begin = static_cast<std::uint64_t>(i) * block;
        const std::uint64_t len = std::min(block, n_max - begin);
        sieve_block(begin + 1, {data + begin, len}, p);
    }
    return sieve;
}

DivisorSieve sieve_divisor_counts_serial(std::uint64_t n_max, const CongruenceParams& p) {
    if (n_max == 0) throw InvalidArgument("N", "must be positive");
    DivisorSieve sieve{p, 1, n_max, std::vector<std::uint32_t>(n_max, 0)};
    for (std::uint64_t a = p.first.r; a <= n_max; a += p.first.q)
        for (std::uint64_t b = p.second.r; a * b <= n_max; b += p.second.q) ++sieve.counts[a * b - 1];
    return sieve;
}

void save_sieve(const DivisorSieve& sieve, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        os.write("DCSV", 4);
        put_u32(os, kSieveFileVersion);
        put_u64(os, sieve.params.first.r);
        put_u64(os, sieve.params.first.q);
        put_u64(os, sieve.params.second.r);
        put_u64(os, sieve.params.second.q);
        put_u64(os, sieve.range_start);
        put_u64(os, sieve.range_end);
        std::vector<char> buf(sieve.counts.size() * 4);
        for (std::size_t i = 0; i < sieve.counts.size(); ++i)
            for (int j = 0; j < 4; ++j) buf[4 * i + j] = static_cast<char>((sieve.counts[i] >> (8 * j)) & 0xff);
        os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (!os) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

DivisorSieve load_sieve(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    std::array<char, 4> magic{};
    is.read(magic.data(), 4);
    if (!is || std::string(magic.data(), 4) != "DCSV") throw FormatError("not a sieve file: " + path.string());
    const auto version = static_cast<std::uint32_t>(get_le(is, 4));
    if (version != kSieveFileVersion) throw FormatError("unsupported sieve file version " + std::to_string(version));
    std::array<std::int64_t, 4> raw{};
    for (auto& v : raw) v = static_cast<std::int64_t>(get_le(is, 8));
    DivisorSieve sieve;
    try {
        sieve.params = CongruenceParams::make(raw[0], raw[1], raw[2], raw[3]);
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("invalid parameters in sieve file: ") + e.what());
    }
    sieve.range_start = get_le(is, 8);
    sieve.range_end = get_le(is, 8);
    if (sieve.range_start < 1 || sieve.range_end < sieve.range_start) throw FormatError("invalid sieve range");
    const std::uint64_t n = sieve.range_end - sieve.range_start + 1;
    constexpr std::uint64_t kHeaderBytes = 4 + 4 + 4 * 8 + 2 * 8;
    if (std::filesystem::file_size(path) != kHeaderBytes + 4 * n)
        throw FormatError("sieve file size does not match its header");
    std::vector<unsigned char> buf(n * 4);
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!is) throw FormatError("sieve file truncated");
    sieve.counts.resize(n);
    for (std::uint64_t i = 0; i < n; ++i)
        sieve.counts[i] = static_cast<std::uint32_t>(buf[4 * i]) | (static_cast<std::uint32_t>(buf[4 * i + 1]) << 8) |
                          (static_cast<std::uint32_t>(buf[4 * i + 2]) << 16) |
                          (static_cast<std::uint32_t>(buf[4 * i + 3]) << 24);
    return sieve;
}

}  // namespace divcong
