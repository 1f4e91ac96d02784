#pragma once

#include <cmath>

#include "divcong/error.hpp"

namespace divcong {

template <class Fn>
void for_each_segment(const DeltaEvaluator& ev, double t_lo, double t_hi, std::vector<std::uint32_t>& scratch,
                      Fn&& fn) {
    if (!(t_lo < t_hi)) throw InvalidArgument("t_lo", "must be less than t_hi");
    if (!(t_lo > 0.0)) throw InvalidArgument("t_lo", "must be positive");
    ev.require_scaled(t_hi);
    const double q = static_cast<double>(ev.modulus_product());
    const auto n_lo = static_cast<std::uint64_t>(std::floor(q * t_lo));
    const auto n_hi = static_cast<std::uint64_t>(std::floor(q * t_hi));
    std::uint64_t d = ev.summatory(n_lo);
    double left = t_lo;
    if (n_hi > n_lo) {
        const auto c = ev.counts(n_lo + 1, n_hi + 1, scratch);
        for (std::uint64_t i = 0; i < c.size(); ++i) {
            if (c[i] == 0) continue;
            const double jump = static_cast<double>(n_lo + 1 + i) / q;
            if (jump > left) {
                fn(left, jump, d);
                left = jump;
            }
            d += c[i];
        }
    }
    if (t_hi > left) fn(left, t_hi, d);
}

}  // namespace divcong
