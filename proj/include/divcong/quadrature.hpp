#pragma once

// Piecewise Gauss-Legendre quadrature and the deterministic chunked driver
// used by every integral over Delta.
//
// Integrals are cut into chunks whose boundaries depend only on the
// breakpoints and the chunk width, never on the thread count. Chunks are
// integrated in parallel and their compensated partial sums are combined
// in chunk order, so results are bit-identical for any number of threads.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "divcong/parallel.hpp"

namespace divcong {

// Neumaier's variant of Kahan summation.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

namespace gauss {

// Positive nodes and weights on [-1, 1]; the rules are symmetric.
inline constexpr std::array<double, 4> kNodes8{0.18343464249564980494, 0.52553240991632898582,
                                               0.79666647741362673959, 0.96028985649753623168};
inline constexpr std::array<double, 4> kWeights8{0.36268378337836198297, 0.31370664587788728734,
                                                 0.22238103445337447054, 0.10122853629037625915};
inline constexpr std::array<double, 2> kNodes4{0.33998104358485626480, 0.86113631159405257522};
inline constexpr std::array<double, 2> kWeights4{0.65214515486254614263, 0.34785484513745385737};

}  // namespace gauss

struct QuadratureStats {
    double max_error = 0.0;     // largest per-piece absolute error estimate accepted
    double max_relative = 0.0;  // same, relative to (b - a) * max(1, mean |f|)
    std::uint64_t pieces = 0;
    std::uint64_t unresolved = 0;  // pieces that hit the bisection limit

    void merge(const QuadratureStats& o) noexcept {
        max_error = std::max(max_error, o.max_error);
        max_relative = std::max(max_relative, o.max_relative);
        pieces += o.pieces;
        unresolved += o.unresolved;
    }

    friend bool operator==(const QuadratureStats&, const QuadratureStats&) = default;
};

template <std::size_t M>
using Values = std::array<double, M>;

template <std::size_t M>
struct Accumulator {
    std::array<CompensatedSum, M> sums{};
    QuadratureStats stats;

    Values<M> values() const {
        Values<M> v{};
        for (std::size_t j = 0; j < M; ++j) v[j] = sums[j].value();
        return v;
    }
};

inline constexpr int kMaxBisection = 16;

// Order-8 Gauss-Legendre on [a, b] with an order-4 rule on the same piece as
// the error estimate; bisects while the estimate exceeds
// tol * (b - a) * max(1, mean |f|). f(t) returns Values<M>.
template <std::size_t M, class F>
void integrate_piece(F& f, double a, double b, double tol, Accumulator<M>& acc, int depth = 0) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    Values<M> g8{}, g4{};
    for (std::size_t i = 0; i < gauss::kNodes8.size(); ++i) {
        const double dx = h * gauss::kNodes8[i];
        const Values<M> lo = f(c - dx);
        const Values<M> hi = f(c + dx);
        for (std::size_t j = 0; j < M; ++j) g8[j] += gauss::kWeights8[i] * (lo[j] + hi[j]);
    }
    for (std::size_t i = 0; i < gauss::kNodes4.size(); ++i) {
        const double dx = h * gauss::kNodes4[i];
        const Values<M> lo = f(c - dx);
        const Values<M> hi = f(c + dx);
        for (std::size_t j = 0; j < M; ++j) g4[j] += gauss::kWeights4[i] * (lo[j] + hi[j]);
    }
    double err = 0.0;
    double scale = 1.0;
    for (std::size_t j = 0; j < M; ++j) {
        g8[j] *= h;
        g4[j] *= h;
        err = std::max(err, std::abs(g8[j] - g4[j]));
        if (b > a) scale = std::max(scale, std::abs(g8[j]) / (b - a));
    }
    if (err > tol * (b - a) * scale && depth < kMaxBisection) {
        integrate_piece<M>(f, a, c, tol, acc, depth + 1);
        integrate_piece<M>(f, c, b, tol, acc, depth + 1);
        return;
    }
    if (err > tol * (b - a) * scale) ++acc.stats.unresolved;
    acc.stats.max_error = std::max(acc.stats.max_error, err);
    if (b > a) acc.stats.max_relative = std::max(acc.stats.max_relative, err / ((b - a) * scale));
    ++acc.stats.pieces;
    for (std::size_t j = 0; j < M; ++j) acc.sums[j].add(g8[j]);
}

// Delta(q1 q2 t) = d - t log t + A t on one segment, expanded around the
// segment centre when the expansion is exact to rounding; one log per segment.
class LocalDelta {
public:
    LocalDelta(double d, double coefficient, double a, double b)
        : d_(d), coef_(coefficient), c_(0.5 * (a + b)) {
        const double u = 0.5 * (b - a) / c_;
        taylor_ = c_ > 0.0 && u < 0.012;
        if (taylor_) lin_ = std::log(c_) - coef_;
    }

    double operator()(double t) const {
        if (!taylor_) return d_ - t * std::log(t) + coef_ * t;
        const double s = t - c_;
        const double u = s / c_;
        // (c + s) log(1 + u) = s + c * sum_{j>=2} (-1)^j u^j / (j (j - 1))
        const double tail =
            u * u * (1.0 / 2 - u * (1.0 / 6 - u * (1.0 / 12 - u * (1.0 / 20 - u * (1.0 / 30 - u / 42)))));
        return d_ - t * lin_ - s - c_ * tail;
    }

private:
    double d_;
    double coef_;
    double c_;
    double lin_ = 0.0;
    bool taylor_ = false;
};

struct IntervalTask {
    std::size_t interval = 0;
    double a = 0.0;
    double b = 0.0;
};

// Splits each [breakpoints[i], breakpoints[i+1]] at the multiples of width.
std::vector<IntervalTask> make_tasks(std::span<const double> breakpoints, double width);

template <std::size_t M>
struct IntervalIntegrals {
    std::vector<Values<M>> values;  // one entry per consecutive breakpoint pair
    QuadratureStats stats;
};

// chunk(a, b) -> Accumulator<M> integrates over [a, b].
template <std::size_t M, class ChunkFn>
IntervalIntegrals<M> integrate_intervals(std::span<const double> breakpoints, double width, ChunkFn&& chunk) {
    const std::vector<IntervalTask> tasks = make_tasks(breakpoints, width);
    std::vector<Accumulator<M>> partial(tasks.size());
    const auto count = static_cast<std::int64_t>(tasks.size());
    FirstError errors;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < count; ++i) errors.run([&] { partial[i] = chunk(tasks[i].a, tasks[i].b); });
    errors.rethrow();

    IntervalIntegrals<M> out;
    const std::size_t intervals = breakpoints.size() < 2 ? 0 : breakpoints.size() - 1;
    std::vector<std::array<CompensatedSum, M>> sums(intervals);
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const Values<M> v = partial[i].values();
        for (std::size_t j = 0; j < M; ++j) sums[tasks[i].interval][j].add(v[j]);
        out.stats.merge(partial[i].stats);
    }
    out.values.resize(intervals);
    for (std::size_t i = 0; i < intervals; ++i)
        for (std::size_t j = 0; j < M; ++j) out.values[i][j] = sums[i][j].value();
    return out;
}

}  // namespace divcong
