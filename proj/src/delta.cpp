#include "divcong/delta.hpp"

#include <cmath>
#include <limits>

#include "divcong/error.hpp"

namespace divcong {
namespace {

constexpr std::uint64_t kExactDoubleLimit = std::uint64_t{1} << 53;

void check_exact_range(std::uint64_t max_n, std::uint64_t modulus) {
    if (max_n >= kExactDoubleLimit / modulus)
        throw InvalidArgument("max_n", "q1*q2*max_n exceeds the exact integer range of double");
}

}  // namespace

DeltaEvaluator::DeltaEvaluator(const CongruenceParams& p, std::uint64_t max_n, const EvaluatorOptions& options)
    : params_(p), modulus_(p.modulus_product()), max_n_(max_n), coefficient_(main_term_coefficient(p)),
      options_(options) {
    if (max_n == 0) throw InvalidArgument("max_n", "must be positive");
    check_exact_range(max_n, modulus_);
    const std::uint64_t bytes = max_n * (sizeof(std::uint32_t) + sizeof(std::uint64_t));
    if (options.force_streaming || bytes > options.memory_budget) return;

    SieveOptions so = options.sieve;
    so.memory_budget = options.memory_budget;
    auto sieve = std::make_shared<DivisorSieve>(sieve_divisor_counts(max_n, p, so));
    auto prefix = std::make_shared<std::vector<std::uint64_t>>(max_n + 1);
    (*prefix)[0] = 0;
    for (std::uint64_t n = 1; n <= max_n; ++n) (*prefix)[n] = (*prefix)[n - 1] + sieve->counts[n - 1];
    sieve_ = std::move(sieve);
    prefix_ = std::move(prefix);
}

DeltaEvaluator::DeltaEvaluator(DivisorSieve sieve, const EvaluatorOptions& options)
    : params_(sieve.params), modulus_(sieve.params.modulus_product()), max_n_(sieve.range_end),
      coefficient_(main_term_coefficient(sieve.params)), options_(options) {
    if (sieve.range_start != 1) throw InvalidArgument("sieve.range_start", "evaluator needs a sieve starting at 1");
    check_exact_range(max_n_, modulus_);
    auto prefix = std::make_shared<std::vector<std::uint64_t>>(max_n_ + 1);
    (*prefix)[0] = 0;
    for (std::uint64_t n = 1; n <= max_n_; ++n) (*prefix)[n] = (*prefix)[n - 1] + sieve.counts[n - 1];
    sieve_ = std::make_shared<const DivisorSieve>(std::move(sieve));
    prefix_ = std::move(prefix);
}

std::uint64_t DeltaEvaluator::summatory(std::uint64_t n) const {
    if (prefix_ && n <= max_n_) return (*prefix_)[n];
    return summatory_hyperbola_upto(n, params_);
}

std::span<const std::uint32_t> DeltaEvaluator::counts(std::uint64_t lo, std::uint64_t hi,
                                                      std::vector<std::uint32_t>& scratch) const {
    if (lo < 1 || hi < lo) throw InvalidArgument("lo", "need 1 <= lo <= hi");
    if (hi - 1 > max_n_)
        throw RangeError("n = " + std::to_string(hi - 1) + " beyond evaluator range " + std::to_string(max_n_));
    if (sieve_) return {sieve_->counts.data() + (lo - 1), hi - lo};
    scratch.resize(hi - lo);
    sieve_block(lo, scratch, params_);
    return scratch;
}

double DeltaEvaluator::main_term_scaled(double t) const { return t * std::log(t) - coefficient_ * t; }

void DeltaEvaluator::require_scaled(double t_hi) const {
    const double x = t_hi * static_cast<double>(modulus_);
    if (!(x <= static_cast<double>(max_n_)))
        throw RangeError("scaled argument " + std::to_string(x) + " beyond evaluator range " +
                         std::to_string(max_n_));
}

std::vector<Segment> DeltaEvaluator::segments(double t_lo, double t_hi) const {
    std::vector<Segment> out;
    std::vector<std::uint32_t> scratch;
    for_each_segment(*this, t_lo, t_hi, scratch,
                     [&](double a, double b, std::uint64_t d) { out.push_back({a, b, d}); });
    return out;
}

double DeltaEvaluator::value(const Segment& seg, double t) const {
    return static_cast<double>(seg.d_value) - main_term_scaled(t);
}

double DeltaEvaluator::at(double t) const { return delta_scaled(t, *this); }

double delta(double x, const DeltaEvaluator& ev) {
    if (!(x > 0.0)) throw InvalidArgument("x", "must be positive");
    const std::uint64_t n = x < 1.0 ? 0 : static_cast<std::uint64_t>(std::floor(x));
    const double u = x / static_cast<double>(ev.modulus_product());
    return static_cast<double>(ev.summatory(n)) - (u * std::log(u) - ev.coefficient() * u);
}

double delta_scaled(double t, const DeltaEvaluator& ev) {
    return delta(static_cast<double>(ev.modulus_product()) * t, ev);
}

}  // namespace divcong
