#pragma once

// Exact evaluation of Delta(x; r1, q1, r2, q2) = D(x) - M(x).
//
// All integration works in the scaled variable t, x = q1 q2 t. On the scaled
// axis D(q1 q2 t) jumps at t = n / (q1 q2) by d(n; p), and the main term is
// simply t log t - A t with A = psi(r1/q1) + psi(r2/q2) + 1.

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "divcong/arith.hpp"
#include "divcong/sieve.hpp"

namespace divcong {

// Constant piece of D(q1 q2 t) on (t_lo, t_hi).
struct Segment {
    double t_lo = 0.0;
    double t_hi = 0.0;
    std::uint64_t d_value = 0;
};

// A function of t given piecewise as smooth functions between breakpoints.
// The sign and run scanners work against this interface so they can be
// driven by synthetic functions in tests.
class PiecewiseFunction {
public:
    virtual ~PiecewiseFunction() = default;
    virtual std::vector<Segment> segments(double t_lo, double t_hi) const = 0;
    // Value at t in the closure of seg, using seg's constant (left limit at t_hi).
    virtual double value(const Segment& seg, double t) const = 0;
    // Value at t itself (right-continuous at breakpoints).
    virtual double at(double t) const = 0;
};

struct EvaluatorOptions {
    SieveOptions sieve;
    // Bytes allowed for the cached count table plus prefix sums.
    std::uint64_t memory_budget = std::uint64_t{3} << 29;
    // Never cache; sieve blocks on demand.
    bool force_streaming = false;
};

// Caches d(n; p) and D(n; p) for n <= max_n when they fit the budget,
// otherwise serves blocks by sieving them on demand (streaming mode).
// Immutable after construction and safe to share across threads.
class DeltaEvaluator final : public PiecewiseFunction {
public:
    DeltaEvaluator(const CongruenceParams& p, std::uint64_t max_n, const EvaluatorOptions& options = {});
    // Adopts a precomputed sieve (must start at n = 1).
    explicit DeltaEvaluator(DivisorSieve sieve, const EvaluatorOptions& options = {});

    const CongruenceParams& params() const noexcept { return params_; }
    std::uint64_t modulus_product() const noexcept { return modulus_; }
    std::uint64_t max_n() const noexcept { return max_n_; }
    double max_t() const noexcept { return static_cast<double>(max_n_) / static_cast<double>(modulus_); }
    bool cached() const noexcept { return sieve_ != nullptr; }
    const DivisorSieve* sieve() const noexcept { return sieve_.get(); }
    double coefficient() const noexcept { return coefficient_; }
    const EvaluatorOptions& options() const noexcept { return options_; }

    // D(n; p), exact. Falls back to the hyperbola method outside the cache.
    std::uint64_t summatory(std::uint64_t n) const;

    // d(n; p) for n in [lo, hi); hi - 1 <= max_n. The span aliases either
    // the cache or scratch.
    std::span<const std::uint32_t> counts(std::uint64_t lo, std::uint64_t hi,
                                          std::vector<std::uint32_t>& scratch) const;

    // t log t - A t, i.e. M(q1 q2 t).
    double main_term_scaled(double t) const;

    // Throws RangeError unless q1 q2 t_hi <= max_n.
    void require_scaled(double t_hi) const;

    std::vector<Segment> segments(double t_lo, double t_hi) const override;
    double value(const Segment& seg, double t) const override;
    double at(double t) const override;

private:
    CongruenceParams params_;
    std::uint64_t modulus_ = 1;
    std::uint64_t max_n_ = 0;
    double coefficient_ = 0.0;
    EvaluatorOptions options_;
    std::shared_ptr<const DivisorSieve> sieve_;
    std::shared_ptr<const std::vector<std::uint64_t>> prefix_;  // prefix_[n] = D(n)
};

// D(x) - M(x) with D exact and a single floating-point subtraction.
// Sound for x <= 1e12 in double precision.
double delta(double x, const DeltaEvaluator& ev);

// delta(q1 q2 t); bit-identical to calling delta on the product.
double delta_scaled(double t, const DeltaEvaluator& ev);

inline std::vector<Segment> segments(double t_lo, double t_hi, const DeltaEvaluator& ev) {
    return ev.segments(t_lo, t_hi);
}

// Streams the segments of [t_lo, t_hi] without materializing them. Jump points
// with d(n; p) = 0 do not split segments. fn(t_lo, t_hi, d_value).
template <class Fn>
void for_each_segment(const DeltaEvaluator& ev, double t_lo, double t_hi, std::vector<std::uint32_t>& scratch,
                      Fn&& fn);

}  // namespace divcong

#include "divcong/detail/delta_impl.hpp"
