#include "divcong/arith.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "divcong/error.hpp"

namespace divcong {

CongruenceClass CongruenceClass::make(std::int64_t r, std::int64_t q, const std::string& name) {
    if (q < 1) throw InvalidArgument(name + ".q", "modulus must be positive");
    if (r < 1 || r > q) throw InvalidArgument(name + ".r", "residue must satisfy 1 <= r <= q");
    if (std::gcd(r, q) != 1)
        throw InvalidArgument(name + ".r", "coprimality invariant gcd(r, q) = 1 violated");
    return {static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(q)};
}

CongruenceParams CongruenceParams::make(std::int64_t r1, std::int64_t q1, std::int64_t r2,
                                        std::int64_t q2) {
    return {CongruenceClass::make(r1, q1, "first"), CongruenceClass::make(r2, q2, "second")};
}

std::string CongruenceParams::to_string() const {
    return "(" + std::to_string(first.r) + "," + std::to_string(first.q) + "," +
           std::to_string(second.r) + "," + std::to_string(second.q) + ")";
}

std::uint64_t count_in_class_upto(std::uint64_t n, const CongruenceClass& cls) noexcept {
    if (n < cls.r) return 0;
    return (n - cls.r) / cls.q + 1;
}

std::uint64_t count_in_class(double y, const CongruenceClass& cls) noexcept {
    if (!(y >= 1.0)) return 0;
    return count_in_class_upto(static_cast<std::uint64_t>(std::floor(y)), cls);
}

std::uint64_t divisor_count(std::uint64_t n, const CongruenceParams& p) {
    if (n == 0) throw InvalidArgument("n", "must be positive");
    std::uint64_t count = 0;
    for (std::uint64_t a = 1; a * a <= n; ++a) {
        if (n % a != 0) continue;
        const std::uint64_t b = n / a;
        if (p.first.contains(a) && p.second.contains(b)) ++count;
        if (a != b && p.first.contains(b) && p.second.contains(a)) ++count;
    }
    return count;
}

double digamma_rational(std::int64_t r, std::int64_t q) {
    if (q < 1) throw InvalidArgument("q", "must be positive");
    if (r < 1 || r > q) throw InvalidArgument("r", "must satisfy 1 <= r <= q");
    if (r == q) return -kEulerGamma;

    using std::numbers::pi;
    const double qd = static_cast<double>(q);
    const double x = static_cast<double>(r) / qd;
    double sum = 0.0;
    for (std::int64_t n = 1; 2 * n < q; ++n) {
        // cos(2 pi n r / q) with the argument reduced mod q exactly
        const double c = std::cos(2.0 * pi * static_cast<double>((n * r) % q) / qd);
        sum += c * std::log(std::sin(pi * static_cast<double>(n) / qd));
    }
    return -kEulerGamma - std::log(2.0 * qd) - 0.5 * pi / std::tan(pi * x) + 2.0 * sum;
}

double main_term_coefficient(const CongruenceParams& p) {
    return digamma_rational(static_cast<std::int64_t>(p.first.r), static_cast<std::int64_t>(p.first.q)) +
           digamma_rational(static_cast<std::int64_t>(p.second.r), static_cast<std::int64_t>(p.second.q)) +
           1.0;
}

double main_term(double x, const CongruenceParams& p) {
    if (!(x > 0.0)) throw InvalidArgument("x", "must be positive");
    const double u = x / static_cast<double>(p.modulus_product());
    return u * std::log(u) - main_term_coefficient(p) * u;
}

}  // namespace divcong
