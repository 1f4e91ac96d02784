#pragma once

namespace divcong {

template <std::size_t M, class G>
IntervalIntegrals<M> integrate_delta_functional(std::span<const double> breakpoints, const DeltaEvaluator& ev,
                                                double tol, G g) {
    if (!breakpoints.empty()) ev.require_scaled(breakpoints.back());
    const double coef = ev.coefficient();
    return integrate_intervals<M>(breakpoints, chunk_width(ev), [&](double a, double b) {
        Accumulator<M> acc;
        std::vector<std::uint32_t> scratch;
        for_each_segment(ev, a, b, scratch, [&](double lo, double hi, std::uint64_t d) {
            const LocalDelta local(static_cast<double>(d), coef, lo, hi);
            auto f = [&](double t) { return g(t, local(t)); };
            integrate_piece<M>(f, lo, hi, tol, acc);
        });
        return acc;
    });
}

}  // namespace divcong
