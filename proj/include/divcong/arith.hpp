#pragma once

// Counting in arithmetic progressions, the digamma function at rational
// arguments, and the smooth main term of D(x; r1, q1, r2, q2).

#include <cstdint>
#include <string>

namespace divcong {

inline constexpr double kEulerGamma = 0.57721566490153286;

// Residue class n = r (mod q) with 1 <= r <= q and gcd(r, q) = 1.
struct CongruenceClass {
    std::uint64_t r = 1;
    std::uint64_t q = 1;

    // Validating constructor; throws InvalidArgument naming the violated invariant.
    static CongruenceClass make(std::int64_t r, std::int64_t q, const std::string& name = "class");

    bool contains(std::uint64_t n) const noexcept { return n % q == r % q; }
    friend bool operator==(const CongruenceClass&, const CongruenceClass&) = default;
};

struct CongruenceParams {
    CongruenceClass first;   // condition on n1
    CongruenceClass second;  // condition on n2

    static CongruenceParams make(std::int64_t r1, std::int64_t q1, std::int64_t r2, std::int64_t q2);
    static CongruenceParams unrestricted() { return {}; }

    std::uint64_t modulus_product() const noexcept { return first.q * second.q; }
    std::string to_string() const;
    friend bool operator==(const CongruenceParams&, const CongruenceParams&) = default;
};

// #{1 <= n <= y : n = r (mod q)}.
std::uint64_t count_in_class(double y, const CongruenceClass& cls) noexcept;
std::uint64_t count_in_class_upto(std::uint64_t n, const CongruenceClass& cls) noexcept;

// Ordered factorizations n = n1 * n2 with n1 in p.first and n2 in p.second.
std::uint64_t divisor_count(std::uint64_t n, const CongruenceParams& p);

// psi(r/q) for 1 <= r <= q via Gauss's finite formula.
double digamma_rational(std::int64_t r, std::int64_t q);

// psi(r1/q1) + psi(r2/q2) + 1, the coefficient of x/(q1 q2) in the main term.
double main_term_coefficient(const CongruenceParams& p);

// M(x) = u log u - (psi(r1/q1) + psi(r2/q2) + 1) u with u = x / (q1 q2).
// Only asymptotically meaningful for x >= q1 q2; see main_term_in_range.
double main_term(double x, const CongruenceParams& p);

inline bool main_term_in_range(double x, const CongruenceParams& p) noexcept {
    return x >= static_cast<double>(p.modulus_product());
}

}  // namespace divcong
