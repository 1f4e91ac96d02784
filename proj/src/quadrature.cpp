#include "divcong/quadrature.hpp"

#include "divcong/error.hpp"

namespace divcong {

std::vector<IntervalTask> make_tasks(std::span<const double> breakpoints, double width) {
    if (!(width > 0.0)) throw InvalidArgument("width", "chunk width must be positive");
    std::vector<IntervalTask> tasks;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        const double lo = breakpoints[i];
        const double hi = breakpoints[i + 1];
        if (!(hi >= lo)) throw InvalidArgument("breakpoints", "must be nondecreasing");
        if (hi == lo) continue;
        double a = lo;
        auto j = static_cast<std::int64_t>(std::floor(lo / width)) + 1;
        while (a < hi) {
            const double b = std::min(hi, static_cast<double>(j) * width);
            if (b > a) tasks.push_back({i, a, b});
            a = std::max(a, b);
            ++j;
        }
    }
    return tasks;
}

}  // namespace divcong
